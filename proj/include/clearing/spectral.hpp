#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clearing {

/// Non-negative samples over C >= 1 channels, with optional band centres (nm).
class Spectrum {
public:
    Spectrum() = default;
    explicit Spectrum(std::vector<double> values, std::vector<double> band_centers_nm = {});

    std::size_t channels() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& band_centers_nm() const noexcept { return band_centers_; }

    Spectrum scaled(double k) const;

private:
    std::vector<double> values_;
    std::vector<double> band_centers_;
};

/// Label -> reference spectra of a uniform channel count. Ordered by label.
class ReferenceLibrary {
public:
    void add(const std::string& label, Spectrum reference);

    std::size_t channels() const noexcept { return channels_; }
    bool empty() const noexcept { return entries_.empty(); }
    const std::map<std::string, std::vector<Spectrum>>& entries() const noexcept { return entries_; }

    /// Labels in lexicographic order; their index is the value used in label maps.
    std::vector<std::string> labels() const;

private:
    std::map<std::string, std::vector<Spectrum>> entries_;
    std::size_t channels_ = 0;
};

/// Angle between two spectra in [0, pi/2]. Channel mismatch throws
/// std::invalid_argument; an all-zero input throws DegenerateSpectrumError.
double spectral_angle(std::span<const double> a, std::span<const double> b);
double spectral_angle(const Spectrum& a, const Spectrum& b);

enum class SamScoring { cosine, dot };

inline constexpr double kDefaultRejectAngle = 0.3;

struct SamResult {
    std::optional<std::string> label;  // nullopt is REJECT
    std::string best_label;            // nearest class even when rejected
    double best_angle = 0;
    /// cosine mode: cos(best_angle); dot mode: the maximal dot product.
    double best_score = 0;
};

/// Cosine mode picks the minimal angle and rejects above `reject_angle`;
/// dot mode picks the maximal dot product and never rejects. Ties go to the
/// lexicographically smallest label.
SamResult sam_classify(std::span<const double> pixel, const ReferenceLibrary& lib,
                       double reject_angle = kDefaultRejectAngle, SamScoring scoring = SamScoring::cosine);
SamResult sam_classify(const Spectrum& pixel, const ReferenceLibrary& lib,
                       double reject_angle = kDefaultRejectAngle, SamScoring scoring = SamScoring::cosine);

/// Band-interleaved-by-pixel cube.
class SpectralCube {
public:
    SpectralCube(int width, int height, int channels, std::vector<double> samples,
                 std::vector<double> band_centers_nm = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::span<const double> pixel(int x, int y) const;
    std::span<const double> samples() const noexcept { return samples_; }
    const std::vector<double>& band_centers_nm() const noexcept { return band_centers_; }

private:
    int width_, height_, channels_;
    std::vector<double> samples_;
    std::vector<double> band_centers_;
};

struct LabelMap {
    static constexpr int kReject = -1;
    int width = 0, height = 0;
    std::vector<std::string> labels;
    std::vector<int> indices;  // row-major, kReject or an index into labels
    std::vector<double> angles;
};

/// Pixelwise sam_classify. Rows are processed on up to `threads` workers; the
/// result does not depend on the thread count.
LabelMap classify_cube(const SpectralCube& cube, const ReferenceLibrary& lib,
                       double reject_angle = kDefaultRejectAngle, SamScoring scoring = SamScoring::cosine,
                       unsigned threads = 0);

}  // namespace clearing
