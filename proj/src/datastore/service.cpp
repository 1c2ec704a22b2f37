#include "clearing/service.hpp"

#include "clearing/enhance.hpp"
#include "clearing/errors.hpp"
#include "clearing/imaging_io.hpp"
#include "clearing/pnm.hpp"
#include "httplib.h"

namespace clearing {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
    send_json(res, {{"error", kind}, {"message", message}}, status);
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("request body is not JSON: ") + e.what());
    }
}

// Runs a handler, translating exceptions into JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const NotFoundError& e) {
            send_error(res, 404, "not-found", e.what());
        } catch (const ConflictError& e) {
            send_error(res, 409, "conflict", e.what());
        } catch (const FormatError& e) {
            send_error(res, 400, "bad-request", e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "invalid-argument", e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "bad-request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

ClaheParams clahe_params_from_json(const json& j) {
    ClaheParams p;
    if (!j.is_object()) throw FormatError("params must be an object");
    for (const auto& [k, v] : j.items()) {
        if (k == "tiles_x") p.tiles_x = v.get<int>();
        else if (k == "tiles_y") p.tiles_y = v.get<int>();
        else if (k == "clip_limit") p.clip_limit = v.get<double>();
        else if (k == "bins") p.bins = v.get<int>();
        else throw FormatError("unknown CLAHE parameter '" + k + "'");
    }
    validate(p);
    return p;
}

const char* pnm_mime(const ImageRecord& r) {
    return r.channels == 1 ? "image/x-portable-graymap" : "image/x-portable-pixmap";
}

}  // namespace

struct DatastoreService::Impl {
    Datastore& store;
    httplib::Server server;

    explicit Impl(Datastore& s) : store(s) { routes(); }

    void routes() {
        server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) {
                       send_json(res, {{"status", "ok"},
                                       {"dataset_id", store.dataset_id()},
                                       {"images", store.images().size()},
                                       {"pending_reviews", store.review_queue(ReviewStatus::pending).size()}});
                   }));

        server.Get("/images", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json out = json::array();
                       for (const auto& r : store.images()) out.push_back(to_json(r));
                       send_json(res, out);
                   }));

        server.Get(R"(/images/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto rec = store.image(req.matches[1]);
                       const auto bytes = store.image_bytes(rec.id);
                       res.set_content(std::string(bytes.begin(), bytes.end()), pnm_mime(rec));
                   }));

        server.Get(R"(/images/([0-9a-f]+)/mask)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto m = store.load_mask(req.matches[1]);
                       if (!m) {
                           res.status = 204;
                           return;
                       }
                       send_json(res, mask_to_json(*m));
                   }));

        server.Put(R"(/images/([0-9a-f]+)/mask)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto rec = store.image(req.matches[1]);
                       const auto m = mask_from_json(parse_body(req), rec.width, rec.height);
                       store.save_mask(rec.id, m.mask, m.strokes);
                       send_json(res, {{"id", rec.id}, {"saved", true}});
                   }));

        server.Get(R"(/images/([0-9a-f]+)/instances)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto r = store.load_instances(req.matches[1]);
                       if (!r) {
                           res.status = 204;
                           return;
                       }
                       send_json(res, to_json(*r));
                   }));

        server.Put(R"(/images/([0-9a-f]+)/instances)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       auto body = parse_body(req);
                       const std::string id = req.matches[1];
                       if (!body.contains("image_id")) body["image_id"] = id;
                       store.save_instances(id, annotation_from_json(body));
                       send_json(res, {{"id", id}, {"saved", true}});
                   }));

        server.Post("/enhance/clahe", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto rec = store.image(body.at("id").get<std::string>());
                        const auto params = body.contains("params") ? clahe_params_from_json(body["params"])
                                                                    : ClaheParams{};
                        const auto image = decode_pnm(store.image_bytes(rec.id));
                        std::vector<std::uint8_t> out;
                        std::optional<std::string> warning;
                        if (const auto* g = std::get_if<Gray8Image>(&image)) {
                            auto r = clahe(*g, params);
                            out = encode_pgm(r.image);
                            warning = r.warning;
                        } else {
                            auto r = clahe(std::get<Rgb8Image>(image), params);
                            out = encode_ppm(r.image);
                            warning = r.warning;
                        }
                        if (warning) res.set_header("X-Clahe-Warning", *warning);
                        res.set_content(std::string(out.begin(), out.end()), pnm_mime(rec));
                    }));

        server.Get("/review-queue", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       std::optional<ReviewStatus> status;
                       if (req.has_param("status")) {
                           const auto s = req.get_param_value("status");
                           if (s == "pending") status = ReviewStatus::pending;
                           else if (s == "confirmed") status = ReviewStatus::confirmed;
                           else if (s == "rejected") status = ReviewStatus::rejected;
                           else throw FormatError("unknown status '" + s + "'");
                       }
                       json out = json::array();
                       for (const auto& e : store.review_queue(status)) {
                           auto j = to_json(e);
                           if (auto d = store.detection(e.detection_ref)) j["detection"] = to_json(*d);
                           out.push_back(std::move(j));
                       }
                       send_json(res, out);
                   }));

        server.Post(R"(/review-queue/([A-Za-z0-9-]+))",
                    guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto decision = parse_review_decision(body.at("decision").get<std::string>());
                        if (!decision) throw FormatError("decision must be 'confirm' or 'reject'");
                        const auto reviewer = body.value("reviewer", std::string("anonymous"));
                        const std::string id = req.matches[1];
                        try {
                            send_json(res, to_json(store.review(id, *decision, reviewer)));
                        } catch (const ConflictError& e) {
                            // the current entry lets a retrying client tell its own earlier decision apart
                            send_json(res, {{"error", "conflict"}, {"message", e.what()},
                                            {"entry", to_json(store.review_entry(id))}}, 409);
                        }
                    }));
    }
};

DatastoreService::DatastoreService(Datastore& store) : impl_(std::make_unique<Impl>(store)) {}
DatastoreService::~DatastoreService() { stop(); }

int DatastoreService::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool DatastoreService::bind(const std::string& host, int port) { return impl_->server.bind_to_port(host, port); }
bool DatastoreService::serve() { return impl_->server.listen_after_bind(); }
void DatastoreService::stop() {
    if (impl_) impl_->server.stop();
}
void DatastoreService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace clearing
