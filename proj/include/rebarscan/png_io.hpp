#pragma once

#include <filesystem>

#include "rebarscan/raster.hpp"

namespace rebarscan {

/// Reads any PNG as 8-bit RGB (palette/gray expanded, alpha and 16-bit stripped).
RasterImage read_png_rgb(const std::filesystem::path& path);
void write_png_rgb(const std::filesystem::path& path, const RasterImage& image);

/// Single-channel mask: nonzero -> 1. Written as 8-bit gray, 0 / 255.
BinaryMask read_png_mask(const std::filesystem::path& path);
void write_png_mask(const std::filesystem::path& path, const BinaryMask& mask);

/// 16-bit single-channel PNG, confidence = value / 65535. Any other
/// format is rejected with IoError.
ConfidenceMap read_png_confidence16(const std::filesystem::path& path);
void write_png_confidence16(const std::filesystem::path& path, const ConfidenceMap& conf);

}  // namespace rebarscan
