#pragma once

#include "dp/types.hpp"

#include <filesystem>

namespace dp {

/// ASCII PLY writer: element vertex with float x/y/z (cm), 9 significant
/// digits per coordinate.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);

/// ASCII PLY reader. Requires an `element vertex` with x/y/z properties;
/// extra vertex properties and trailing elements (faces etc.) are ignored.
/// Throws ParseError with a line number on malformed input, empty vertex
/// elements, or non-finite coordinates.
PointCloud read_ply(const std::filesystem::path& path);

}  // namespace dp
