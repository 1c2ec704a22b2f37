#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clearing/grid.hpp"

namespace clearing {

/// Per-pixel confidence in [0,1]. Every mutation path enforces the range.
class FuzzyMask {
public:
    FuzzyMask() = default;
    FuzzyMask(int width, int height) : grid_(width, height, 0.0) {}
    /// Throws std::invalid_argument on values outside [0,1] or NaN.
    FuzzyMask(int width, int height, std::vector<double> confidence);

    int width() const noexcept { return grid_.width(); }
    int height() const noexcept { return grid_.height(); }
    bool contains(int x, int y) const noexcept { return grid_.contains(x, y); }

    double at(int x, int y) const { return grid_(x, y); }
    void set(int x, int y, double value);

    std::span<const double> values() const noexcept { return grid_.values(); }

    bool operator==(const FuzzyMask&) const = default;

private:
    Grid<double> grid_;
};

/// Axis-aligned box in pixel coordinates. Boxes derived from masks use
/// inclusive pixel indices, so a one-pixel-wide component has x_min == x_max.
struct BBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double width() const noexcept { return x_max - x_min; }
    double height() const noexcept { return y_max - y_min; }
    double area() const noexcept { return width() * height(); }
    double center_x() const noexcept { return 0.5 * (x_min + x_max); }
    double center_y() const noexcept { return 0.5 * (y_min + y_max); }

    bool operator==(const BBox&) const = default;
    auto operator<=>(const BBox&) const = default;
};

bool is_valid(const BBox& box) noexcept;
double iou(const BBox& a, const BBox& b) noexcept;

struct Detection {
    long frame_id = 0;
    BBox bbox;
    double score = 0;
    std::optional<double> instance_confidence;

    bool operator==(const Detection&) const = default;
};

/// Throws std::invalid_argument when bbox or score break the invariants;
/// when width/height are given the box must also lie inside the image.
void validate(const Detection& det, std::optional<int> image_width = {}, std::optional<int> image_height = {});

struct Pixel {
    int x = 0, y = 0;
    bool operator==(const Pixel&) const = default;
    auto operator<=>(const Pixel&) const = default;
};

struct Component {
    std::vector<Pixel> pixels;  // sorted by (y, x)
    BBox bbox;
    int area = 0;
    double mean_confidence = 0;
    double peak_confidence = 0;
};

enum class Falloff { hard, linear, gaussian };
enum class Connectivity { four = 4, eight = 8 };

struct StrokePoint {
    double x = 0, y = 0;
};

struct Stroke {
    std::vector<StrokePoint> path;
    double radius = 1;
    double intensity = 1;
    Falloff falloff = Falloff::hard;
};

inline constexpr int kDefaultMinArea = 16;

/// Weight of a pixel at distance d from the stroke centerline. Zero outside the radius.
double falloff_weight(Falloff falloff, double distance, double radius) noexcept;

/// Max-composites a spray stroke onto a copy of the mask. The footprint is every
/// pixel centre within `radius` of the polyline through `path`.
FuzzyMask spray_stroke(const FuzzyMask& mask, const Stroke& stroke);

/// Replays strokes in order onto a zero mask of the given size.
FuzzyMask replay_strokes(int width, int height, std::span<const Stroke> strokes);

/// Connected components of {confidence >= threshold}, area >= min_area,
/// ordered by (y_min, x_min).
std::vector<Component> threshold_components(const FuzzyMask& mask, double threshold,
                                            int min_area = kDefaultMinArea,
                                            Connectivity connectivity = Connectivity::eight);

/// One detection per surviving component; score is the component's peak confidence.
std::vector<Detection> mask_to_detections(const FuzzyMask& mask, long frame_id, double threshold,
                                          int min_area = kDefaultMinArea,
                                          Connectivity connectivity = Connectivity::eight);

struct AnnotatedInstance {
    BBox bbox;
    std::optional<double> instance_confidence;
    bool operator==(const AnnotatedInstance&) const = default;
};

/// Sidecar record stored next to each mask.
struct AnnotationRecord {
    std::string image_id;
    std::vector<AnnotatedInstance> instances;
    std::string annotator;
    std::string timestamp;
    bool operator==(const AnnotationRecord&) const = default;
};

/// Bounding boxes for training export, derived from a fuzzy annotation. Instance
/// confidence is the component's peak value.
AnnotationRecord export_bboxes(const FuzzyMask& mask, const std::string& image_id, double threshold,
                               int min_area = kDefaultMinArea, const std::string& annotator = {},
                               const std::string& timestamp = {});

/// YOLO-style lines "class cx cy w h", normalized to the image size.
std::vector<std::string> to_yolo_lines(const AnnotationRecord& record, int image_width, int image_height,
                                       int class_id = 0);

/// 8-bit quantization used for on-disk masks: round(v * 255).
Gray8Image quantize(const FuzzyMask& mask);
FuzzyMask dequantize(const Gray8Image& image);

std::optional<Falloff> parse_falloff(std::string_view name);
std::string_view to_string(Falloff falloff);

}  // namespace clearing
