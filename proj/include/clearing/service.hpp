#pragma once

#include <memory>
#include <string>

#include "clearing/datastore.hpp"

namespace clearing {

/// HTTP/JSON front end of a Datastore.
///
///   GET  /health
///   GET  /images                      image records
///   GET  /images/{id}                 original bytes
///   GET  /images/{id}/mask            {width, height, confidence_u8, strokes}; 204 when unannotated
///   PUT  /images/{id}/mask            same body; strokes alone are replayed server-side
///   GET  /images/{id}/instances       annotation record; 204 when none
///   PUT  /images/{id}/instances
///   POST /enhance/clahe               {id, params?: {tiles_x, tiles_y, clip_limit, bins}} -> PNM bytes
///   GET  /review-queue[?status=...]
///   POST /review-queue/{id}           {decision: confirm|reject, reviewer}
///
/// Errors are {"error": kind, "message": text} with status 400, 404 or 409.
class DatastoreService {
public:
    explicit DatastoreService(Datastore& store);
    ~DatastoreService();
    DatastoreService(const DatastoreService&) = delete;
    DatastoreService& operator=(const DatastoreService&) = delete;

    /// Binds to an ephemeral port and returns it, or -1 on failure.
    int bind_any_port(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace clearing
