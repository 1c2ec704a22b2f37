#pragma once

#include <filesystem>

#include "clearing/spectral.hpp"
#include "json.hpp"

namespace clearing {

/// Library file: {"label": [[s0, s1, ...], ...], ...}
ReferenceLibrary library_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReferenceLibrary& lib);
ReferenceLibrary read_library(const std::filesystem::path& path);

/// Cube header: {"width", "height", "channels", "dtype", "band_centers"} plus
/// optional "data_file" (relative to the header) and "byte_order"
/// ("little" default). Samples are band-interleaved by pixel. Without
/// "data_file" the data sits next to the header with a ".raw" extension.
/// dtype is one of uint8, uint16, float32, float64.
SpectralCube read_cube(const std::filesystem::path& header_path);
void write_cube(const std::filesystem::path& header_path, const SpectralCube& cube, const std::string& dtype = "float32");

nlohmann::json to_json(const LabelMap& map);

}  // namespace clearing
