#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "clearing/errors.hpp"
#include "clearing/spectral.hpp"

namespace clearing {

namespace {

void check_samples(std::span<const double> values) {
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("spectral samples must be finite and >= 0");
    }
}

double norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

Spectrum::Spectrum(std::vector<double> values, std::vector<double> band_centers_nm)
    : values_(std::move(values)), band_centers_(std::move(band_centers_nm)) {
    if (values_.empty()) throw std::invalid_argument("spectrum needs at least one channel");
    if (!band_centers_.empty() && band_centers_.size() != values_.size()) {
        throw std::invalid_argument("band centre count does not match channel count");
    }
    check_samples(values_);
}

Spectrum Spectrum::scaled(double k) const {
    std::vector<double> v(values_);
    for (auto& x : v) x *= k;
    return Spectrum(std::move(v), band_centers_);
}

void ReferenceLibrary::add(const std::string& label, Spectrum reference) {
    if (entries_.empty()) {
        channels_ = reference.channels();
    } else if (reference.channels() != channels_) {
        throw std::invalid_argument("reference '" + label + "' has " + std::to_string(reference.channels()) +
                                    " channels, library has " + std::to_string(channels_));
    }
    if (norm(reference.values()) == 0.0) throw DegenerateSpectrumError("reference '" + label + "' is all zero");
    entries_[label].push_back(std::move(reference));
}

std::vector<std::string> ReferenceLibrary::labels() const {
    std::vector<std::string> out;
    for (const auto& [label, refs] : entries_) out.push_back(label);
    return out;
}

double spectral_angle(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("spectral channel mismatch: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    }
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw DegenerateSpectrumError("spectral angle of an all-zero spectrum");
    // Computed as 2*atan2(|a^ - b^|, |a^ + b^|) on unit vectors rather than
    // acos(cos): same angle, without acos losing ~1e-8 near parallel spectra.
    double diff = 0, sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double u = a[i] / na;
        const double v = b[i] / nb;
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    const double angle = 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
    return std::clamp(angle, 0.0, M_PI / 2);
}

double spectral_angle(const Spectrum& a, const Spectrum& b) { return spectral_angle(a.values(), b.values()); }

SamResult sam_classify(std::span<const double> pixel, const ReferenceLibrary& lib, double reject_angle,
                       SamScoring scoring) {
    if (lib.empty()) throw std::invalid_argument("reference library is empty");
    if (pixel.size() != lib.channels()) {
        throw std::invalid_argument("pixel has " + std::to_string(pixel.size()) + " channels, library has " +
                                    std::to_string(lib.channels()));
    }
    check_samples(pixel);
    if (norm(pixel) == 0.0) throw DegenerateSpectrumError("cannot classify an all-zero pixel");

    SamResult best;
    bool first = true;
    // std::map iteration is lexicographic, so strict comparisons keep the smallest label on ties.
    for (const auto& [label, refs] : lib.entries()) {
        for (const auto& ref : refs) {
            const double angle = spectral_angle(pixel, ref.values());
            if (scoring == SamScoring::cosine) {
                if (first || angle < best.best_angle) {
                    best.best_label = label;
                    best.best_angle = angle;
                    best.best_score = std::cos(angle);
                }
            } else {
                const double d = dot(pixel, ref.values());
                if (first || d > best.best_score) {
                    best.best_label = label;
                    best.best_angle = angle;
                    best.best_score = d;
                }
            }
            first = false;
        }
    }
    if (scoring == SamScoring::dot || best.best_angle <= reject_angle) best.label = best.best_label;
    return best;
}

SamResult sam_classify(const Spectrum& pixel, const ReferenceLibrary& lib, double reject_angle,
                       SamScoring scoring) {
    return sam_classify(pixel.values(), lib, reject_angle, scoring);
}

SpectralCube::SpectralCube(int width, int height, int channels, std::vector<double> samples,
                           std::vector<double> band_centers_nm)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)),
      band_centers_(std::move(band_centers_nm)) {
    if (width <= 0 || height <= 0 || channels <= 0) throw std::invalid_argument("cube dimensions must be positive");
    if (samples_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw std::invalid_argument("cube sample count does not match width*height*channels");
    }
    if (!band_centers_.empty() && band_centers_.size() != static_cast<std::size_t>(channels)) {
        throw std::invalid_argument("band centre count does not match channel count");
    }
    for (double v : samples_) {
        if (!std::isfinite(v)) throw std::invalid_argument("cube samples must be finite");
    }
}

std::span<const double> SpectralCube::pixel(int x, int y) const {
    const auto offset = (static_cast<std::size_t>(y) * width_ + x) * channels_;
    return std::span(samples_).subspan(offset, channels_);
}

LabelMap classify_cube(const SpectralCube& cube, const ReferenceLibrary& lib, double reject_angle,
                       SamScoring scoring, unsigned threads) {
    if (static_cast<std::size_t>(cube.channels()) != lib.channels()) {
        throw std::invalid_argument("cube channel count does not match library");
    }
    LabelMap out;
    out.width = cube.width();
    out.height = cube.height();
    out.labels = lib.labels();
    const auto n = static_cast<std::size_t>(cube.width()) * cube.height();
    out.indices.assign(n, LabelMap::kReject);
    out.angles.assign(n, 0.0);

    auto classify_rows = [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < cube.width(); ++x) {
                const auto i = static_cast<std::size_t>(y) * cube.width() + x;
                const auto r = sam_classify(cube.pixel(x, y), lib, reject_angle, scoring);
                out.angles[i] = r.best_angle;
                if (r.label) {
                    out.indices[i] = static_cast<int>(
                        std::lower_bound(out.labels.begin(), out.labels.end(), *r.label) - out.labels.begin());
                }
            }
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cube.height()));
    if (threads <= 1) {
        classify_rows(0, cube.height());
        return out;
    }
    // Disjoint row bands; each worker writes only its own slice.
    std::vector<std::jthread> workers;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
        const int y0 = static_cast<int>(static_cast<long>(t) * cube.height() / threads);
        const int y1 = static_cast<int>(static_cast<long>(t + 1) * cube.height() / threads);
        workers.emplace_back([&, t, y0, y1] {
            try {
                classify_rows(y0, y1);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    workers.clear();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace clearing
