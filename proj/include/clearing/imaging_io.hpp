#pragma once

#include <filesystem>

#include "clearing/imaging.hpp"
#include "json.hpp"

namespace clearing {

/// Mask files are 8-bit PGM; value v encodes confidence v/255.
FuzzyMask read_mask(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const FuzzyMask& mask);

nlohmann::json bbox_to_json(const BBox& box);
BBox bbox_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Stroke& stroke);
Stroke stroke_from_json(const nlohmann::json& j);

}  // namespace clearing
