#pragma once

#include "wearcnn/image.hpp"

#include <filesystem>

namespace wearcnn {

/// Decodes an 8-bit PNG into RGB (palette, gray, and alpha variants are
/// expanded/stripped). Throws std::runtime_error on malformed files.
Image read_png(const std::filesystem::path& path);

/// Writes 8-bit RGB with fixed encoder settings, so identical pixels yield
/// identical files.
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace wearcnn
