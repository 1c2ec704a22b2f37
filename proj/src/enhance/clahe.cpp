#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "clearing/enhance.hpp"

namespace clearing {

void validate(const ClaheParams& params) {
    if (params.tiles_x < 1 || params.tiles_y < 1) throw std::invalid_argument("CLAHE tile counts must be >= 1");
    if (!(params.clip_limit > 0.0)) throw std::invalid_argument("CLAHE clip_limit must be > 0");
    if (params.bins < 2 || params.bins > 256) throw std::invalid_argument("CLAHE bins must be in [2, 256]");
}

std::vector<std::uint8_t> clahe_tile_mapping(const std::vector<long>& histogram, long tile_pixels,
                                             double clip_limit) {
    const long bins = static_cast<long>(histogram.size());
    std::vector<long> h = histogram;

    const double clip_real = clip_limit * static_cast<double>(tile_pixels) / static_cast<double>(bins);
    const long clip = std::max(1L, static_cast<long>(std::min(clip_real, 1e15)));
    long excess = 0;
    for (auto& v : h) {
        if (v > clip) {
            excess += v - clip;
            v = clip;
        }
    }
    const long per_bin = excess / bins;
    const long remainder = excess % bins;
    for (long b = 0; b < bins; ++b) h[b] += per_bin + (b < remainder ? 1 : 0);

    std::vector<std::uint8_t> map(bins);
    long cdf = 0;
    for (long b = 0; b < bins; ++b) {
        cdf += h[b];
        // round(255 * cdf / n) in integer arithmetic
        map[b] = static_cast<std::uint8_t>(std::min(255L, (2 * 255 * cdf + tile_pixels) / (2 * tile_pixels)));
    }
    return map;
}

namespace {

struct AxisLookup {
    std::vector<int> lo, hi;  // tile indices bracketing each coordinate
    std::vector<float> w_hi;  // weight of the hi tile
};

// Tile i covers [i*n/t, (i+1)*n/t). Coordinates before the first centre or after
// the last mirror onto the edge tile.
AxisLookup axis_lookup(int n, int tiles) {
    std::vector<double> centers(tiles);
    for (int i = 0; i < tiles; ++i) {
        const long a = static_cast<long>(i) * n / tiles;
        const long b = static_cast<long>(i + 1) * n / tiles;
        centers[i] = 0.5 * static_cast<double>(a + b - 1);
    }
    AxisLookup lut{std::vector<int>(n), std::vector<int>(n), std::vector<float>(n)};
    int i = 0;
    for (int p = 0; p < n; ++p) {
        while (i + 1 < tiles && centers[i + 1] <= p) ++i;
        if (p <= centers.front()) {
            lut.lo[p] = lut.hi[p] = 0;
            lut.w_hi[p] = 0.0f;
        } else if (i + 1 >= tiles) {
            lut.lo[p] = lut.hi[p] = tiles - 1;
            lut.w_hi[p] = 0.0f;
        } else {
            lut.lo[p] = i;
            lut.hi[p] = i + 1;
            lut.w_hi[p] = static_cast<float>((p - centers[i]) / (centers[i + 1] - centers[i]));
        }
    }
    return lut;
}

}  // namespace

ClaheResult<Gray8Image> clahe(const Gray8Image& image, const ClaheParams& params) {
    validate(params);
    if (image.empty()) throw std::invalid_argument("CLAHE input image is empty");

    const int w = image.width();
    const int h = image.height();
    int tx = params.tiles_x;
    int ty = params.tiles_y;
    std::optional<std::string> warning;
    if (tx > w || ty > h) {
        warning = "tile grid " + std::to_string(tx) + "x" + std::to_string(ty) + " exceeds image " +
                  std::to_string(w) + "x" + std::to_string(h) + "; using 1x1";
        tx = ty = 1;
    }
    const int bins = params.bins;

    // Bin lookup: level v -> bin floor(v * bins / 256).
    std::uint8_t bin_of[256];
    for (int v = 0; v < 256; ++v) bin_of[v] = static_cast<std::uint8_t>(v * bins / 256);

    // maps[t][v] is the output level for input level v in tile t.
    std::vector<std::array<std::uint8_t, 256>> maps(static_cast<std::size_t>(tx) * ty);
    for (int j = 0; j < ty; ++j) {
        const int y0 = static_cast<int>(static_cast<long>(j) * h / ty);
        const int y1 = static_cast<int>(static_cast<long>(j + 1) * h / ty);
        for (int i = 0; i < tx; ++i) {
            const int x0 = static_cast<int>(static_cast<long>(i) * w / tx);
            const int x1 = static_cast<int>(static_cast<long>(i + 1) * w / tx);
            std::vector<long> hist(bins, 0);
            for (int y = y0; y < y1; ++y) {
                const auto row = image.row(y);
                for (int x = x0; x < x1; ++x) ++hist[bin_of[row[x]]];
            }
            const long npix = static_cast<long>(x1 - x0) * (y1 - y0);
            const auto bin_map = clahe_tile_mapping(hist, npix, params.clip_limit);
            auto& m = maps[static_cast<std::size_t>(j) * tx + i];
            for (int v = 0; v < 256; ++v) m[v] = bin_map[bin_of[v]];
        }
    }

    const auto xs = axis_lookup(w, tx);
    const auto ys = axis_lookup(h, ty);
    Gray8Image out(w, h);
    for (int y = 0; y < h; ++y) {
        const auto src = image.row(y);
        auto dst = out.row(y);
        const float wy = ys.w_hi[y];
        const auto* row_lo = &maps[static_cast<std::size_t>(ys.lo[y]) * tx];
        const auto* row_hi = &maps[static_cast<std::size_t>(ys.hi[y]) * tx];
        for (int x = 0; x < w; ++x) {
            const std::uint8_t v = src[x];
            const float wx = xs.w_hi[x];
            const float top = (1.0f - wx) * row_lo[xs.lo[x]][v] + wx * row_lo[xs.hi[x]][v];
            const float bottom = (1.0f - wx) * row_hi[xs.lo[x]][v] + wx * row_hi[xs.hi[x]][v];
            const float value = (1.0f - wy) * top + wy * bottom;
            dst[x] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
        }
    }
    return {std::move(out), std::move(warning)};
}

ClaheResult<Rgb8Image> clahe(const Rgb8Image& image, const ClaheParams& params) {
    const int w = image.width();
    const int h = image.height();
    Gray8Image luma(w, h);
    std::vector<float> cb(image.size()), cr(image.size());
    const auto src = image.values();
    auto ly = luma.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const float r = src[i].r, g = src[i].g, b = src[i].b;
        const float y = 0.299f * r + 0.587f * g + 0.114f * b;
        ly[i] = static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
        cb[i] = -0.168736f * r - 0.331264f * g + 0.5f * b;
        cr[i] = 0.5f * r - 0.418688f * g - 0.081312f * b;
    }
    auto eq = clahe(luma, params);
    Rgb8Image out(w, h);
    auto dst = out.values();
    const auto ey = eq.image.values();
    auto to8 = [](float v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const float y = ey[i];
        dst[i] = {to8(y + 1.402f * cr[i]), to8(y - 0.344136f * cb[i] - 0.714136f * cr[i]), to8(y + 1.772f * cb[i])};
    }
    return {std::move(out), std::move(eq.warning)};
}

}  // namespace clearing
