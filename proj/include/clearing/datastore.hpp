#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "clearing/detection_log.hpp"
#include "clearing/imaging.hpp"
#include "clearing/stabilize.hpp"
#include "json.hpp"

namespace clearing {

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);
std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws FormatError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

struct CaptureMetadata {
    std::string species;
    std::string season;
    std::string weather;
    bool operator==(const CaptureMetadata&) const = default;
};

enum class AnnotationStatus { unannotated, annotated };

struct ImageRecord {
    std::string id;    // content hash
    std::string file;  // relative to the dataset root
    std::string original_name;
    int width = 0;
    int height = 0;
    int channels = 1;
    CaptureMetadata metadata;
    AnnotationStatus status = AnnotationStatus::unannotated;
    bool operator==(const ImageRecord&) const = default;
};

/// A detection the review queue can point at.
struct DetectionRecord {
    std::string ref;  // content hash of the fields below
    long frame_id = 0;
    std::optional<double> t_seconds;
    std::optional<BBox> bbox;
    double score = 0;
    std::optional<std::string> image_id;
    std::optional<double> x_world_m;
    bool operator==(const DetectionRecord&) const = default;
};

DetectionRecord make_detection_record(const LoggedDetection& d, std::optional<double> x_world_m = {});

enum class ReviewStatus { pending, confirmed, rejected };
enum class ReviewDecision { confirm, reject };

std::string_view to_string(ReviewStatus s);
std::string_view to_string(ReviewDecision d);
std::optional<ReviewDecision> parse_review_decision(std::string_view s);

struct ReviewEntry {
    std::string id;
    std::string detection_ref;
    std::string reason;  // "single-frame-detection", "unconfirmed-track", "operator-flag", ...
    ReviewStatus status = ReviewStatus::pending;
    std::string created_at;
    std::optional<std::string> decided_by;
    std::optional<std::string> decided_at;
    bool operator==(const ReviewEntry&) const = default;
};

struct ReviewRequest {
    DetectionRecord detection;
    std::string reason;
};

/// One request per candidate, pointing at its highest-scoring observation.
std::vector<ReviewRequest> review_requests(std::span<const ReviewCandidate> candidates);

struct IngestError {
    std::string path;
    std::string message;
};

struct IngestResult {
    std::vector<std::string> added;
    std::vector<std::string> existing;
    std::vector<IngestError> errors;
};

struct StoredMask {
    FuzzyMask mask;
    std::vector<Stroke> strokes;
};

/// Flat-file dataset:
///   index.json                 images, detections and the review queue
///   images/<id>.<pgm|ppm>      original bytes
///   masks/<id>.pgm             8-bit fuzzy mask
///   strokes/<id>.json          stroke log saved with the mask
///   annotations/<id>.json      instance records
/// Every file is replaced atomically. Safe for concurrent use.
class Datastore {
public:
    using Clock = std::function<std::string()>;

    explicit Datastore(std::filesystem::path root, Clock clock = {});

    const std::filesystem::path& root() const noexcept { return root_; }
    std::string dataset_id() const;

    /// Registers images by content hash; unreadable or undecodable files become
    /// error entries and the batch continues. Re-ingesting leaves the index untouched.
    IngestResult ingest(std::span<const std::filesystem::path> files, const CaptureMetadata& metadata = {});
    /// Registers every detection of a log; returns their refs.
    std::vector<std::string> ingest_detections(std::span<const LoggedDetection> log);

    std::vector<ImageRecord> images() const;
    /// Throws NotFoundError.
    ImageRecord image(const std::string& id) const;
    std::vector<std::uint8_t> image_bytes(const std::string& id) const;

    /// Throws std::invalid_argument if dimensions differ from the image.
    void save_mask(const std::string& image_id, const FuzzyMask& mask, std::span<const Stroke> strokes = {});
    /// nullopt when the image has no mask yet.
    std::optional<StoredMask> load_mask(const std::string& image_id) const;

    void save_instances(const std::string& image_id, const AnnotationRecord& record);
    std::optional<AnnotationRecord> load_instances(const std::string& image_id) const;

    std::optional<DetectionRecord> detection(const std::string& ref) const;

    /// Dedupes on detection ref; returns the entries (new or existing) in request order.
    std::vector<ReviewEntry> enqueue_reviews(std::span<const ReviewRequest> requests);
    std::vector<ReviewEntry> review_queue(std::optional<ReviewStatus> status = {}) const;
    ReviewEntry review_entry(const std::string& id) const;
    /// Terminal decision. Throws NotFoundError or ConflictError (already decided).
    /// Confirming a detection tied to a known image appends an instance stub.
    ReviewEntry review(const std::string& entry_id, ReviewDecision decision, const std::string& reviewer);

private:
    struct Index {
        std::string dataset_id;
        std::map<std::string, ImageRecord> images;
        std::map<std::string, DetectionRecord> detections;
        std::vector<ReviewEntry> queue;
    };

    void load_index();
    void write_index_locked() const;
    std::mutex& image_mutex(const std::string& id) const;
    std::string now() const;

    std::filesystem::path root_;
    Clock clock_;
    mutable std::shared_mutex index_mutex_;
    Index index_;
    mutable std::mutex image_mutexes_guard_;
    mutable std::map<std::string, std::unique_ptr<std::mutex>> image_mutexes_;
};

nlohmann::json to_json(const ImageRecord& r);
nlohmann::json to_json(const DetectionRecord& r);
DetectionRecord detection_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReviewEntry& e);
nlohmann::json to_json(const IngestResult& r);

/// Mask transport: {width, height, confidence_u8: base64 of row-major bytes, strokes?}.
nlohmann::json mask_to_json(const StoredMask& m);
/// A body with strokes but no confidence_u8 replays the strokes on a
/// width x height canvas.
StoredMask mask_from_json(const nlohmann::json& j, int width, int height);

}  // namespace clearing
