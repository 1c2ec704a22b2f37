#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "clearing/imaging.hpp"

namespace clearing {

bool is_valid(const BBox& box) noexcept {
    return std::isfinite(box.x_min) && std::isfinite(box.y_min) && std::isfinite(box.x_max) &&
           std::isfinite(box.y_max) && box.x_min <= box.x_max && box.y_min <= box.y_max;
}

double iou(const BBox& a, const BBox& b) noexcept {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return a == b ? 1.0 : 0.0;
    return inter / uni;
}

void validate(const Detection& det, std::optional<int> image_width, std::optional<int> image_height) {
    if (!is_valid(det.bbox)) throw std::invalid_argument("detection bbox is not well-formed");
    if (!(det.score >= 0.0 && det.score <= 1.0)) throw std::invalid_argument("detection score outside [0,1]");
    if (det.instance_confidence && !(*det.instance_confidence >= 0.0 && *det.instance_confidence <= 1.0)) {
        throw std::invalid_argument("instance confidence outside [0,1]");
    }
    if (image_width && (det.bbox.x_min < 0 || det.bbox.x_max > *image_width)) {
        throw std::invalid_argument("detection bbox outside image width");
    }
    if (image_height && (det.bbox.y_min < 0 || det.bbox.y_max > *image_height)) {
        throw std::invalid_argument("detection bbox outside image height");
    }
}

std::vector<Component> threshold_components(const FuzzyMask& mask, double threshold, int min_area,
                                            Connectivity connectivity) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold outside [0,1]");
    if (min_area < 1) throw std::invalid_argument("min_area must be >= 1");

    const int w = mask.width();
    const int h = mask.height();
    std::vector<char> visited(static_cast<std::size_t>(w) * h, 0);
    const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };

    static constexpr int kOffsets8[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}};
    const int n_offsets = connectivity == Connectivity::eight ? 8 : 4;

    std::vector<Component> out;
    std::vector<Pixel> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (visited[idx(x, y)] || mask.at(x, y) < threshold) continue;
            Component comp;
            visited[idx(x, y)] = 1;
            stack.push_back({x, y});
            while (!stack.empty()) {
                const Pixel p = stack.back();
                stack.pop_back();
                comp.pixels.push_back(p);
                for (int k = 0; k < n_offsets; ++k) {
                    const int nx = p.x + kOffsets8[k][0];
                    const int ny = p.y + kOffsets8[k][1];
                    if (!mask.contains(nx, ny) || visited[idx(nx, ny)] || mask.at(nx, ny) < threshold) continue;
                    visited[idx(nx, ny)] = 1;
                    stack.push_back({nx, ny});
                }
            }
            comp.area = static_cast<int>(comp.pixels.size());
            if (comp.area < min_area) continue;

            std::sort(comp.pixels.begin(), comp.pixels.end(),
                      [](const Pixel& a, const Pixel& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
            int x_min = comp.pixels.front().x, x_max = x_min;
            const int y_min = comp.pixels.front().y, y_max = comp.pixels.back().y;
            double sum = 0.0;
            for (const auto& p : comp.pixels) {
                x_min = std::min(x_min, p.x);
                x_max = std::max(x_max, p.x);
                const double v = mask.at(p.x, p.y);
                sum += v;
                comp.peak_confidence = std::max(comp.peak_confidence, v);
            }
            comp.mean_confidence = std::min(sum / comp.area, comp.peak_confidence);
            comp.bbox = {static_cast<double>(x_min), static_cast<double>(y_min), static_cast<double>(x_max),
                         static_cast<double>(y_max)};
            out.push_back(std::move(comp));
        }
    }
    // Discovery order is row-major by first pixel; stable sort keeps it as the final tie-break.
    std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
        if (a.bbox.y_min != b.bbox.y_min) return a.bbox.y_min < b.bbox.y_min;
        return a.bbox.x_min < b.bbox.x_min;
    });
    return out;
}

std::vector<Detection> mask_to_detections(const FuzzyMask& mask, long frame_id, double threshold, int min_area,
                                          Connectivity connectivity) {
    std::vector<Detection> out;
    for (const auto& comp : threshold_components(mask, threshold, min_area, connectivity)) {
        out.push_back(Detection{frame_id, comp.bbox, comp.peak_confidence, std::nullopt});
    }
    return out;
}

AnnotationRecord export_bboxes(const FuzzyMask& mask, const std::string& image_id, double threshold, int min_area,
                               const std::string& annotator, const std::string& timestamp) {
    AnnotationRecord record{image_id, {}, annotator, timestamp};
    for (const auto& comp : threshold_components(mask, threshold, min_area, Connectivity::eight)) {
        record.instances.push_back({comp.bbox, comp.peak_confidence});
    }
    return record;
}

std::vector<std::string> to_yolo_lines(const AnnotationRecord& record, int image_width, int image_height,
                                       int class_id) {
    if (image_width <= 0 || image_height <= 0) throw std::invalid_argument("image size must be positive");
    std::vector<std::string> lines;
    for (const auto& inst : record.instances) {
        // Inclusive pixel boxes cover [x_min, x_max + 1) in continuous coordinates.
        const double w = inst.bbox.x_max - inst.bbox.x_min + 1.0;
        const double h = inst.bbox.y_max - inst.bbox.y_min + 1.0;
        const double cx = inst.bbox.x_min + 0.5 * w;
        const double cy = inst.bbox.y_min + 0.5 * h;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d %.6f %.6f %.6f %.6f", class_id, cx / image_width, cy / image_height,
                      w / image_width, h / image_height);
        lines.emplace_back(buf);
    }
    return lines;
}

}  // namespace clearing
