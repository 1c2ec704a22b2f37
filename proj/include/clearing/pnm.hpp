#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "clearing/grid.hpp"

namespace clearing {

using AnyImage = std::variant<Gray8Image, Rgb8Image>;

/// Decodes P2/P5 (graymap) and P3/P6 (pixmap) with maxval up to 255.
/// Throws FormatError on malformed or unsupported input.
AnyImage decode_pnm(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_pgm(const Gray8Image& image);
std::vector<std::uint8_t> encode_ppm(const Rgb8Image& image);
std::vector<std::uint8_t> encode_pnm(const AnyImage& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

AnyImage read_pnm(const std::filesystem::path& path);
Gray8Image read_pgm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const AnyImage& image);

int image_width(const AnyImage& image);
int image_height(const AnyImage& image);

}  // namespace clearing
