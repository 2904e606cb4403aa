#pragma once

#include <filesystem>

#include "manta/image.hpp"

namespace manta {

// Decodes a PNG or JPEG file (by extension) into an RGB image in [0, 1].
Image read_image(const std::filesystem::path& path);

// 8-bit RGB PNG. Values are clamped to [0, 1] and rounded at export.
void write_png(const std::filesystem::path& path, const Image& im);

// Depth input: 16-bit grayscale PNG scaled by depth_scale / 65535, or a
// 32-bit float PFM taken verbatim (by extension).
DepthMap read_depth(const std::filesystem::path& path, double depth_scale);

// 16-bit grayscale PNG; values are divided by depth_scale and quantized.
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth,
                     double depth_scale);

DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace manta
