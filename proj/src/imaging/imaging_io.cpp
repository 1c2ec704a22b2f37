#include "clearing/imaging_io.hpp"

#include "clearing/errors.hpp"
#include "clearing/pnm.hpp"

namespace clearing {

using nlohmann::json;

FuzzyMask read_mask(const std::filesystem::path& path) { return dequantize(read_pgm(path)); }

void write_mask(const std::filesystem::path& path, const FuzzyMask& mask) { write_pnm(path, quantize(mask)); }

json bbox_to_json(const BBox& box) { return json::array({box.x_min, box.y_min, box.x_max, box.y_max}); }

BBox bbox_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw FormatError("bbox must be [x_min, y_min, x_max, y_max]");
    BBox box{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!is_valid(box)) throw FormatError("bbox is not well-formed");
    return box;
}

json to_json(const AnnotationRecord& record) {
    json instances = json::array();
    for (const auto& inst : record.instances) {
        instances.push_back({{"bbox", bbox_to_json(inst.bbox)},
                             {"instance_confidence", inst.instance_confidence ? json(*inst.instance_confidence)
                                                                              : json(nullptr)}});
    }
    return {{"image_id", record.image_id},
            {"instances", instances},
            {"annotator", record.annotator},
            {"timestamp", record.timestamp}};
}

AnnotationRecord annotation_from_json(const json& j) {
    AnnotationRecord r;
    r.image_id = j.value("image_id", "");
    r.annotator = j.value("annotator", "");
    r.timestamp = j.value("timestamp", "");
    for (const auto& inst : j.value("instances", json::array())) {
        AnnotatedInstance a{bbox_from_json(inst.at("bbox")), std::nullopt};
        if (inst.contains("instance_confidence") && !inst["instance_confidence"].is_null()) {
            const double c = inst["instance_confidence"].get<double>();
            if (!(c >= 0.0 && c <= 1.0)) throw FormatError("instance_confidence outside [0,1]");
            a.instance_confidence = c;
        }
        r.instances.push_back(a);
    }
    return r;
}

json to_json(const Stroke& stroke) {
    json path = json::array();
    for (const auto& p : stroke.path) path.push_back({p.x, p.y});
    return {{"path", path},
            {"radius", stroke.radius},
            {"intensity", stroke.intensity},
            {"falloff", std::string(to_string(stroke.falloff))}};
}

Stroke stroke_from_json(const json& j) {
    Stroke s;
    for (const auto& p : j.at("path")) {
        if (!p.is_array() || p.size() != 2) throw FormatError("stroke path points must be [x, y]");
        s.path.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    s.radius = j.at("radius").get<double>();
    s.intensity = j.at("intensity").get<double>();
    const auto name = j.value("falloff", std::string("hard"));
    auto f = parse_falloff(name);
    if (!f) throw FormatError("unknown falloff '" + name + "'");
    s.falloff = *f;
    return s;
}

}  // namespace clearing
