#include "clearing/detection_log.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "clearing/errors.hpp"
#include "clearing/imaging_io.hpp"
#include "clearing/pnm.hpp"

namespace clearing {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const LoggedDetection& d) {
    json j = {{"frame_id", d.detection.frame_id},
              {"t_seconds", d.t_seconds},
              {"bbox", bbox_to_json(d.detection.bbox)},
              {"score", d.detection.score}};
    if (d.detection.instance_confidence) j["instance_confidence"] = *d.detection.instance_confidence;
    if (d.image_id) j["image_id"] = *d.image_id;
    return j;
}

LoggedDetection logged_detection_from_json(const json& j) {
    LoggedDetection d;
    d.detection.frame_id = j.at("frame_id").get<long>();
    d.t_seconds = j.value("t_seconds", 0.0);
    d.detection.bbox = bbox_from_json(j.at("bbox"));
    d.detection.score = j.at("score").get<double>();
    if (j.contains("instance_confidence") && !j["instance_confidence"].is_null()) {
        d.detection.instance_confidence = j["instance_confidence"].get<double>();
    }
    if (j.contains("image_id") && !j["image_id"].is_null()) d.image_id = j["image_id"].get<std::string>();
    try {
        validate(d.detection);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
    return d;
}

std::vector<json> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<json>& records) {
    std::string text;
    for (const auto& r : records) text += r.dump() + "\n";
    write_file_atomic(path, text);
}

std::vector<LoggedDetection> read_detection_log(const std::filesystem::path& path) {
    std::vector<LoggedDetection> out;
    int n = 0;
    for (const auto& j : read_json_lines(path)) {
        ++n;
        try {
            out.push_back(logged_detection_from_json(j));
        } catch (const std::exception& e) {
            throw FormatError(path.string() + ": record " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

void write_detection_log(const std::filesystem::path& path, const std::vector<LoggedDetection>& log) {
    std::vector<json> records;
    records.reserve(log.size());
    for (const auto& d : log) records.push_back(to_json(d));
    write_json_lines(path, records);
}

GroundTruthSet read_ground_truth(const std::filesystem::path& path) {
    GroundTruthSet gt;
    for (const auto& j : read_json_lines(path)) {
        std::vector<BBox> boxes;
        for (const auto& b : j.value("boxes", json::array())) boxes.push_back(bbox_from_json(b));
        gt.add_frame(j.at("frame_id").get<long>(), std::move(boxes));
    }
    return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruthSet& gt) {
    std::vector<json> records;
    for (const auto& [id, boxes] : gt.frames()) {
        json arr = json::array();
        for (const auto& b : boxes) arr.push_back(bbox_to_json(b));
        records.push_back({{"frame_id", id}, {"boxes", arr}});
    }
    write_json_lines(path, records);
}

std::vector<Detection> detections_of(const std::vector<LoggedDetection>& log) {
    std::vector<Detection> out;
    out.reserve(log.size());
    for (const auto& d : log) out.push_back(d.detection);
    return out;
}

json evaluation_report(std::span<const Detection> predictions, const GroundTruthSet& gt, const EvalOptions& options) {
    const auto curve = roc_curve(predictions, gt, options.iou_threshold);
    const double prior =
        options.positive_fraction.value_or(1.0 - static_cast<double>(curve.negative_frames) / curve.frames);

    json points = json::array();
    for (const auto& p : curve.points) {
        points.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", finite_or_null(p.threshold)}});
    }
    json wps = json::array();
    for (double target : options.target_specificities) {
        const auto wp = working_point(curve, target);
        wps.push_back({{"target_specificity", target},
                       {"threshold", finite_or_null(wp.threshold)},
                       {"sensitivity", wp.sensitivity},
                       {"specificity", wp.specificity},
                       {"unreachable", wp.unreachable}});
    }
    json report = {{"auroc", auroc(curve)},
                   {"max_accuracy", max_accuracy(curve, prior)},
                   {"positive_fraction", prior},
                   {"iou_threshold", options.iou_threshold},
                   {"fpr_definition", "negative frames with at least one surviving detection"},
                   {"ground_truth_instances", curve.ground_truth_instances},
                   {"negative_frames", curve.negative_frames},
                   {"frames", curve.frames},
                   {"ignored_predictions", curve.ignored_predictions},
                   {"curve", points},
                   {"working_points", wps}};
    if (options.include_fp_per_frame) {
        json alt = json::array();
        for (const auto& p : fp_per_frame_curve(predictions, gt, options.iou_threshold)) {
            alt.push_back({{"fp_per_frame", p.fp_per_frame}, {"tpr", p.tpr}, {"threshold", finite_or_null(p.threshold)}});
        }
        report["fp_per_frame_curve"] = alt;
    }
    return report;
}

std::string roc_svg(const RocCurve& curve, const std::string& title) {
    constexpr double size = 400, pad = 50;
    auto px = [&](double fpr) { return pad + fpr * size; };
    auto py = [&](double tpr) { return pad + (1.0 - tpr) * size; };
    std::ostringstream s;
    s.precision(6);
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 2 * pad << "\" height=\"" << size + 2 * pad
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << size << "\" height=\"" << size
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 1; i < 10; ++i) {
        const double t = i / 10.0;
        s << "<line x1=\"" << px(t) << "\" y1=\"" << py(0) << "\" x2=\"" << px(t) << "\" y2=\"" << py(1)
          << "\" stroke=\"#ddd\"/>\n";
        s << "<line x1=\"" << px(0) << "\" y1=\"" << py(t) << "\" x2=\"" << px(1) << "\" y2=\"" << py(t)
          << "\" stroke=\"#ddd\"/>\n";
    }
    s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    s << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve.points) s << px(p.fpr) << "," << py(p.tpr) << " ";
    s << "\"/>\n";
    s << "<text x=\"" << pad + size / 2 << "\" y=\"" << size + pad + 35
      << "\" text-anchor=\"middle\">false positive rate</text>\n";
    s << "<text x=\"15\" y=\"" << pad + size / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << pad + size / 2 << ")\">true positive rate</text>\n";
    s << "<text x=\"" << pad + size / 2 << "\" y=\"30\" text-anchor=\"middle\">" << title
      << " (AUROC " << auroc(curve) << ")</text>\n";
    s << "</svg>\n";
    return s.str();
}

}  // namespace clearing
