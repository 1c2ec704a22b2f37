#include <algorithm>
#include <chrono>
#include <ctime>

#include "clearing/datastore.hpp"
#include "clearing/errors.hpp"
#include "clearing/imaging_io.hpp"
#include "clearing/pnm.hpp"

namespace clearing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json parse_file(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

ImageRecord image_from_json(const json& j) {
    ImageRecord r;
    r.id = j.at("id").get<std::string>();
    r.file = j.at("file").get<std::string>();
    r.original_name = j.value("original_name", std::string{});
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.channels = j.value("channels", 1);
    const auto& m = j.value("metadata", json::object());
    r.metadata = {m.value("species", std::string{}), m.value("season", std::string{}),
                  m.value("weather", std::string{})};
    r.status = j.value("annotation_status", std::string{}) == "annotated" ? AnnotationStatus::annotated
                                                                           : AnnotationStatus::unannotated;
    return r;
}

ReviewEntry entry_from_json(const json& j) {
    ReviewEntry e;
    e.id = j.at("id").get<std::string>();
    e.detection_ref = j.at("detection_ref").get<std::string>();
    e.reason = j.at("reason").get<std::string>();
    const auto status = j.at("status").get<std::string>();
    e.status = status == "confirmed"  ? ReviewStatus::confirmed
               : status == "rejected" ? ReviewStatus::rejected
                                      : ReviewStatus::pending;
    e.created_at = j.value("created_at", std::string{});
    if (j.contains("decided_by") && !j["decided_by"].is_null()) e.decided_by = j["decided_by"].get<std::string>();
    if (j.contains("decided_at") && !j["decided_at"].is_null()) e.decided_at = j["decided_at"].get<std::string>();
    return e;
}

std::string detection_ref(const DetectionRecord& r) {
    auto j = to_json(r);
    j.erase("ref");
    return "det-" + sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace

DetectionRecord make_detection_record(const LoggedDetection& d, std::optional<double> x_world_m) {
    DetectionRecord r;
    r.frame_id = d.detection.frame_id;
    r.t_seconds = d.t_seconds;
    r.bbox = d.detection.bbox;
    r.score = d.detection.score;
    r.image_id = d.image_id;
    r.x_world_m = x_world_m;
    r.ref = detection_ref(r);
    return r;
}

std::vector<ReviewRequest> review_requests(std::span<const ReviewCandidate> candidates) {
    std::vector<ReviewRequest> out;
    for (const auto& c : candidates) {
        if (c.observations.empty()) continue;
        const auto best = std::max_element(c.observations.begin(), c.observations.end(),
                                           [](const TrackObservation& a, const TrackObservation& b) {
                                               return a.score < b.score;
                                           });
        DetectionRecord r;
        if (best->source) {
            r = make_detection_record(*best->source, best->x_world_m);
        } else {
            r.frame_id = best->frame_id;
            r.score = best->score;
            r.x_world_m = best->x_world_m;
            r.ref = detection_ref(r);
        }
        out.push_back({r, c.reason});
    }
    return out;
}

Datastore::Datastore(fs::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {
    for (const char* sub : {"images", "masks", "strokes", "annotations"}) fs::create_directories(root_ / sub);
    if (fs::exists(root_ / "index.json")) {
        load_index();
    } else {
        index_.dataset_id = "ds-" + sha256_hex(fs::absolute(root_).lexically_normal().string()).substr(0, 12);
        write_index_locked();
    }
}

std::string Datastore::now() const { return clock_ ? clock_() : utc_now(); }

void Datastore::load_index() {
    const auto j = parse_file(root_ / "index.json");
    try {
        index_.dataset_id = j.at("dataset_id").get<std::string>();
        for (const auto& r : j.at("images")) {
            auto rec = image_from_json(r);
            index_.images.emplace(rec.id, std::move(rec));
        }
        for (const auto& d : j.value("detections", json::array())) {
            auto rec = detection_record_from_json(d);
            index_.detections.emplace(rec.ref, std::move(rec));
        }
        for (const auto& e : j.value("review_queue", json::array())) index_.queue.push_back(entry_from_json(e));
    } catch (const json::exception& e) {
        throw FormatError("corrupt index.json: " + std::string(e.what()));
    }
}

void Datastore::write_index_locked() const {
    json images = json::array(), detections = json::array(), queue = json::array();
    for (const auto& [id, r] : index_.images) images.push_back(to_json(r));
    for (const auto& [ref, r] : index_.detections) detections.push_back(to_json(r));
    for (const auto& e : index_.queue) queue.push_back(to_json(e));
    const json j{{"dataset_id", index_.dataset_id}, {"images", images}, {"detections", detections},
                 {"review_queue", queue}};
    write_file_atomic(root_ / "index.json", j.dump(2) + "\n");
}

std::mutex& Datastore::image_mutex(const std::string& id) const {
    std::lock_guard lock(image_mutexes_guard_);
    auto& m = image_mutexes_[id];
    if (!m) m = std::make_unique<std::mutex>();
    return *m;
}

std::string Datastore::dataset_id() const {
    std::shared_lock lock(index_mutex_);
    return index_.dataset_id;
}

IngestResult Datastore::ingest(std::span<const fs::path> files, const CaptureMetadata& metadata) {
    IngestResult result;
    std::unique_lock lock(index_mutex_);
    bool changed = false;
    for (const auto& path : files) {
        try {
            const auto bytes = read_file_bytes(path);
            const auto image = decode_pnm(bytes);
            const auto id = sha256_hex(bytes);
            if (index_.images.count(id)) {
                result.existing.push_back(id);
                continue;
            }
            const bool gray = std::holds_alternative<Gray8Image>(image);
            ImageRecord rec;
            rec.id = id;
            rec.file = "images/" + id + (gray ? ".pgm" : ".ppm");
            rec.original_name = path.filename().string();
            rec.width = image_width(image);
            rec.height = image_height(image);
            rec.channels = gray ? 1 : 3;
            rec.metadata = metadata;
            write_file_atomic(root_ / rec.file, bytes);
            index_.images.emplace(id, rec);
            result.added.push_back(id);
            changed = true;
        } catch (const std::exception& e) {
            result.errors.push_back({path.string(), e.what()});
        }
    }
    if (changed) write_index_locked();
    return result;
}

std::vector<std::string> Datastore::ingest_detections(std::span<const LoggedDetection> log) {
    std::vector<std::string> refs;
    std::unique_lock lock(index_mutex_);
    bool changed = false;
    for (const auto& d : log) {
        auto rec = make_detection_record(d);
        refs.push_back(rec.ref);
        changed |= index_.detections.emplace(rec.ref, std::move(rec)).second;
    }
    if (changed) write_index_locked();
    return refs;
}

std::vector<ImageRecord> Datastore::images() const {
    std::shared_lock lock(index_mutex_);
    std::vector<ImageRecord> out;
    for (const auto& [id, r] : index_.images) out.push_back(r);
    return out;
}

ImageRecord Datastore::image(const std::string& id) const {
    std::shared_lock lock(index_mutex_);
    auto it = index_.images.find(id);
    if (it == index_.images.end()) throw NotFoundError("no image with id '" + id + "'");
    return it->second;
}

std::vector<std::uint8_t> Datastore::image_bytes(const std::string& id) const {
    return read_file_bytes(root_ / image(id).file);
}

void Datastore::save_mask(const std::string& image_id, const FuzzyMask& mask, std::span<const Stroke> strokes) {
    const auto rec = image(image_id);
    if (mask.width() != rec.width || mask.height() != rec.height) {
        throw std::invalid_argument("mask is " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                                    ", image is " + std::to_string(rec.width) + "x" + std::to_string(rec.height));
    }
    {
        std::lock_guard lock(image_mutex(image_id));
        json log = json::array();
        for (const auto& s : strokes) log.push_back(to_json(s));
        write_file_atomic(root_ / "strokes" / (image_id + ".json"), log.dump() + "\n");
        write_mask(root_ / "masks" / (image_id + ".pgm"), mask);
    }
    std::unique_lock lock(index_mutex_);
    auto& r = index_.images.at(image_id);
    if (r.status != AnnotationStatus::annotated) {
        r.status = AnnotationStatus::annotated;
        write_index_locked();
    }
}

std::optional<StoredMask> Datastore::load_mask(const std::string& image_id) const {
    image(image_id);
    std::lock_guard lock(image_mutex(image_id));
    const auto path = root_ / "masks" / (image_id + ".pgm");
    if (!fs::exists(path)) return std::nullopt;
    StoredMask out{read_mask(path), {}};
    const auto strokes = root_ / "strokes" / (image_id + ".json");
    if (fs::exists(strokes)) {
        for (const auto& s : parse_file(strokes)) out.strokes.push_back(stroke_from_json(s));
    }
    return out;
}

void Datastore::save_instances(const std::string& image_id, const AnnotationRecord& record) {
    const auto rec = image(image_id);
    auto stored = record;
    stored.image_id = image_id;
    for (const auto& inst : stored.instances) {
        if (!is_valid(inst.bbox)) throw std::invalid_argument("instance bbox is malformed");
        if (inst.instance_confidence && (*inst.instance_confidence < 0 || *inst.instance_confidence > 1)) {
            throw std::invalid_argument("instance confidence must be in [0, 1]");
        }
    }
    {
        std::lock_guard lock(image_mutex(image_id));
        write_file_atomic(root_ / "annotations" / (image_id + ".json"), to_json(stored).dump(2) + "\n");
    }
    std::unique_lock lock(index_mutex_);
    auto& r = index_.images.at(image_id);
    if (r.status != AnnotationStatus::annotated) {
        r.status = AnnotationStatus::annotated;
        write_index_locked();
    }
}

std::optional<AnnotationRecord> Datastore::load_instances(const std::string& image_id) const {
    image(image_id);
    std::lock_guard lock(image_mutex(image_id));
    const auto path = root_ / "annotations" / (image_id + ".json");
    if (!fs::exists(path)) return std::nullopt;
    return annotation_from_json(parse_file(path));
}

std::optional<DetectionRecord> Datastore::detection(const std::string& ref) const {
    std::shared_lock lock(index_mutex_);
    auto it = index_.detections.find(ref);
    if (it == index_.detections.end()) return std::nullopt;
    return it->second;
}

std::vector<ReviewEntry> Datastore::enqueue_reviews(std::span<const ReviewRequest> requests) {
    std::vector<ReviewEntry> out;
    std::unique_lock lock(index_mutex_);
    bool changed = false;
    for (const auto& req : requests) {
        auto det = req.detection;
        if (det.ref.empty()) det.ref = detection_ref(det);
        if (!index_.detections.count(det.ref)) {
            index_.detections.emplace(det.ref, det);
            changed = true;
        }
        auto it = std::find_if(index_.queue.begin(), index_.queue.end(),
                               [&](const ReviewEntry& e) { return e.detection_ref == det.ref; });
        if (it != index_.queue.end()) {
            out.push_back(*it);
            continue;
        }
        ReviewEntry e;
        e.id = "rev-" + sha256_hex(det.ref).substr(0, 16);
        e.detection_ref = det.ref;
        e.reason = req.reason.empty() ? "operator-flag" : req.reason;
        e.created_at = now();
        index_.queue.push_back(e);
        out.push_back(e);
        changed = true;
    }
    if (changed) write_index_locked();
    return out;
}

std::vector<ReviewEntry> Datastore::review_queue(std::optional<ReviewStatus> status) const {
    std::shared_lock lock(index_mutex_);
    std::vector<ReviewEntry> out;
    for (const auto& e : index_.queue) {
        if (!status || e.status == *status) out.push_back(e);
    }
    return out;
}

ReviewEntry Datastore::review_entry(const std::string& id) const {
    std::shared_lock lock(index_mutex_);
    for (const auto& e : index_.queue) {
        if (e.id == id) return e;
    }
    throw NotFoundError("no review entry '" + id + "'");
}

ReviewEntry Datastore::review(const std::string& entry_id, ReviewDecision decision, const std::string& reviewer) {
    ReviewEntry decided;
    std::optional<DetectionRecord> det;
    {
        std::unique_lock lock(index_mutex_);
        auto it = std::find_if(index_.queue.begin(), index_.queue.end(),
                               [&](const ReviewEntry& e) { return e.id == entry_id; });
        if (it == index_.queue.end()) throw NotFoundError("no review entry '" + entry_id + "'");
        if (it->status != ReviewStatus::pending) {
            throw ConflictError("review entry '" + entry_id + "' is already " + std::string(to_string(it->status)));
        }
        it->status = decision == ReviewDecision::confirm ? ReviewStatus::confirmed : ReviewStatus::rejected;
        it->decided_by = reviewer;
        it->decided_at = now();
        decided = *it;
        auto d = index_.detections.find(it->detection_ref);
        if (decision == ReviewDecision::confirm && d != index_.detections.end() && d->second.image_id &&
            d->second.bbox && index_.images.count(*d->second.image_id)) {
            det = d->second;
        }
        write_index_locked();
    }
    if (det) {
        auto record = load_instances(*det->image_id).value_or(AnnotationRecord{*det->image_id, {}, reviewer, {}});
        record.instances.push_back({*det->bbox, det->score});
        record.annotator = reviewer;
        record.timestamp = *decided.decided_at;
        save_instances(*det->image_id, record);
    }
    return decided;
}

}  // namespace clearing
