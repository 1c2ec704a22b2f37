#include "clearing/datastore.hpp"
#include "clearing/errors.hpp"
#include "clearing/imaging_io.hpp"

namespace clearing {

using nlohmann::json;

std::string_view to_string(ReviewStatus s) {
    switch (s) {
        case ReviewStatus::pending: return "pending";
        case ReviewStatus::confirmed: return "confirmed";
        case ReviewStatus::rejected: return "rejected";
    }
    return "pending";
}

std::string_view to_string(ReviewDecision d) { return d == ReviewDecision::confirm ? "confirm" : "reject"; }

std::optional<ReviewDecision> parse_review_decision(std::string_view s) {
    if (s == "confirm" || s == "CONFIRM") return ReviewDecision::confirm;
    if (s == "reject" || s == "REJECT") return ReviewDecision::reject;
    return std::nullopt;
}

json to_json(const ImageRecord& r) {
    return {{"id", r.id},
            {"file", r.file},
            {"original_name", r.original_name},
            {"width", r.width},
            {"height", r.height},
            {"channels", r.channels},
            {"metadata", {{"species", r.metadata.species}, {"season", r.metadata.season}, {"weather", r.metadata.weather}}},
            {"annotation_status", r.status == AnnotationStatus::annotated ? "annotated" : "unannotated"}};
}

json to_json(const DetectionRecord& r) {
    json j{{"ref", r.ref}, {"frame_id", r.frame_id}, {"score", r.score}};
    if (r.t_seconds) j["t_seconds"] = *r.t_seconds;
    if (r.bbox) j["bbox"] = bbox_to_json(*r.bbox);
    if (r.image_id) j["image_id"] = *r.image_id;
    if (r.x_world_m) j["x_world_m"] = *r.x_world_m;
    return j;
}

DetectionRecord detection_record_from_json(const json& j) {
    DetectionRecord r;
    r.ref = j.value("ref", std::string{});
    r.frame_id = j.at("frame_id").get<long>();
    r.score = j.at("score").get<double>();
    if (j.contains("t_seconds")) r.t_seconds = j["t_seconds"].get<double>();
    if (j.contains("bbox")) r.bbox = bbox_from_json(j["bbox"]);
    if (j.contains("image_id")) r.image_id = j["image_id"].get<std::string>();
    if (j.contains("x_world_m")) r.x_world_m = j["x_world_m"].get<double>();
    return r;
}

json to_json(const ReviewEntry& e) {
    json j{{"id", e.id},
           {"detection_ref", e.detection_ref},
           {"reason", e.reason},
           {"status", to_string(e.status)},
           {"created_at", e.created_at}};
    j["decided_by"] = e.decided_by ? json(*e.decided_by) : json(nullptr);
    j["decided_at"] = e.decided_at ? json(*e.decided_at) : json(nullptr);
    return j;
}

json to_json(const IngestResult& r) {
    json errors = json::array();
    for (const auto& e : r.errors) errors.push_back({{"path", e.path}, {"message", e.message}});
    return {{"added", r.added}, {"existing", r.existing}, {"errors", errors}};
}

json mask_to_json(const StoredMask& m) {
    const auto q = quantize(m.mask);
    json strokes = json::array();
    for (const auto& s : m.strokes) strokes.push_back(to_json(s));
    return {{"width", m.mask.width()},
            {"height", m.mask.height()},
            {"confidence_u8", base64_encode(q.values())},
            {"strokes", strokes}};
}

StoredMask mask_from_json(const json& j, int width, int height) {
    if (!j.is_object()) throw FormatError("mask body must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (k != "width" && k != "height" && k != "confidence_u8" && k != "strokes") {
            throw FormatError("unknown mask key '" + k + "'");
        }
    }
    const int w = j.value("width", width), h = j.value("height", height);
    if (w != width || h != height) {
        throw std::invalid_argument("mask is " + std::to_string(w) + "x" + std::to_string(h) + ", image is " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    StoredMask out;
    if (j.contains("strokes")) {
        for (const auto& s : j["strokes"]) out.strokes.push_back(stroke_from_json(s));
    }
    if (j.contains("confidence_u8")) {
        const auto bytes = base64_decode(j["confidence_u8"].get<std::string>());
        if (bytes.size() != static_cast<std::size_t>(w) * h) {
            throw std::invalid_argument("confidence_u8 holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                        std::to_string(static_cast<std::size_t>(w) * h));
        }
        out.mask = dequantize(Gray8Image(w, h, bytes));
    } else if (!out.strokes.empty()) {
        out.mask = replay_strokes(w, h, out.strokes);
    } else {
        out.mask = FuzzyMask(w, h);
    }
    return out;
}

}  // namespace clearing
