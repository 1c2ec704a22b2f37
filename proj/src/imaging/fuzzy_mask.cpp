#include "clearing/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clearing {

namespace {

bool in_unit_range(double v) noexcept { return v >= 0.0 && v <= 1.0; }

double segment_distance(double px, double py, const StrokePoint& a, const StrokePoint& b) noexcept {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((px - a.x) * dx + (py - a.y) * dy) / len2, 0.0, 1.0);
    }
    return std::hypot(px - (a.x + t * dx), py - (a.y + t * dy));
}

}  // namespace

FuzzyMask::FuzzyMask(int width, int height, std::vector<double> confidence)
    : grid_(width, height, std::move(confidence)) {
    for (double v : grid_.values()) {
        if (!in_unit_range(v)) {
            throw std::invalid_argument("mask confidence outside [0,1]");
        }
    }
}

void FuzzyMask::set(int x, int y, double value) {
    if (!contains(x, y)) throw std::out_of_range("mask pixel out of bounds");
    if (!in_unit_range(value)) throw std::invalid_argument("mask confidence outside [0,1]");
    grid_(x, y) = value;
}

double falloff_weight(Falloff falloff, double distance, double radius) noexcept {
    if (distance > radius) return 0.0;
    switch (falloff) {
        case Falloff::hard:
            return 1.0;
        case Falloff::linear:
            return std::clamp(1.0 - distance / radius, 0.0, 1.0);
        case Falloff::gaussian: {
            const double sigma = 0.5 * radius;
            return std::exp(-(distance * distance) / (2.0 * sigma * sigma));
        }
    }
    return 0.0;
}

FuzzyMask spray_stroke(const FuzzyMask& mask, const Stroke& stroke) {
    if (stroke.path.empty()) throw std::invalid_argument("spray stroke path is empty");
    if (!(stroke.radius >= 1.0)) throw std::invalid_argument("spray radius must be >= 1");
    if (!in_unit_range(stroke.intensity)) throw std::invalid_argument("spray intensity outside [0,1]");

    double lo_x = stroke.path.front().x, hi_x = lo_x;
    double lo_y = stroke.path.front().y, hi_y = lo_y;
    for (const auto& p : stroke.path) {
        if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= mask.width() - 1 && p.y <= mask.height() - 1)) {
            throw std::invalid_argument("spray stroke point outside the mask");
        }
        lo_x = std::min(lo_x, p.x);
        hi_x = std::max(hi_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_y = std::max(hi_y, p.y);
    }

    FuzzyMask out = mask;
    if (stroke.intensity == 0.0) return out;

    const int x0 = std::max(0, static_cast<int>(std::floor(lo_x - stroke.radius)));
    const int x1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(hi_x + stroke.radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(lo_y - stroke.radius)));
    const int y1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(hi_y + stroke.radius)));

    const auto& path = stroke.path;
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double d = segment_distance(x, y, path.front(), path.front());
            for (std::size_t i = 1; i < path.size(); ++i) {
                d = std::min(d, segment_distance(x, y, path[i - 1], path[i]));
            }
            const double w = falloff_weight(stroke.falloff, d, stroke.radius);
            if (w <= 0.0) continue;
            const double v = std::clamp(stroke.intensity * w, 0.0, 1.0);
            if (v > out.at(x, y)) out.set(x, y, v);
        }
    }
    return out;
}

FuzzyMask replay_strokes(int width, int height, std::span<const Stroke> strokes) {
    FuzzyMask mask(width, height);
    for (const auto& s : strokes) mask = spray_stroke(mask, s);
    return mask;
}

Gray8Image quantize(const FuzzyMask& mask) {
    Gray8Image out(mask.width(), mask.height());
    auto dst = out.values();
    auto src = mask.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = static_cast<std::uint8_t>(std::lround(src[i] * 255.0));
    }
    return out;
}

FuzzyMask dequantize(const Gray8Image& image) {
    std::vector<double> values(image.size());
    auto src = image.values();
    for (std::size_t i = 0; i < src.size(); ++i) values[i] = src[i] / 255.0;
    return FuzzyMask(image.width(), image.height(), std::move(values));
}

std::optional<Falloff> parse_falloff(std::string_view name) {
    if (name == "hard") return Falloff::hard;
    if (name == "linear") return Falloff::linear;
    if (name == "gaussian") return Falloff::gaussian;
    return std::nullopt;
}

std::string_view to_string(Falloff falloff) {
    switch (falloff) {
        case Falloff::hard: return "hard";
        case Falloff::linear: return "linear";
        case Falloff::gaussian: return "gaussian";
    }
    return "hard";
}

}  // namespace clearing
