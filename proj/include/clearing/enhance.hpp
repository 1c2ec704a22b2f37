#pragma once

#include <optional>
#include <string>
#include <vector>

#include "clearing/grid.hpp"

namespace clearing {

struct ClaheParams {
    int tiles_x = 8;
    int tiles_y = 8;
    /// Multiple of the uniform bin height (tile_pixels / bins).
    double clip_limit = 4.0;
    int bins = 256;
};

/// Throws std::invalid_argument when a parameter is out of range.
void validate(const ClaheParams& params);

template <typename Image>
struct ClaheResult {
    Image image;
    /// Set when the tile grid was larger than the image and fell back to 1x1.
    std::optional<std::string> warning;
};

/// Per-tile transfer function: bin index -> output level. Exposed for tests.
std::vector<std::uint8_t> clahe_tile_mapping(const std::vector<long>& histogram, long tile_pixels,
                                             double clip_limit);

ClaheResult<Gray8Image> clahe(const Gray8Image& image, const ClaheParams& params = {});

/// Equalizes luminance only (full-range YCbCr), keeping chroma.
ClaheResult<Rgb8Image> clahe(const Rgb8Image& image, const ClaheParams& params = {});

}  // namespace clearing
