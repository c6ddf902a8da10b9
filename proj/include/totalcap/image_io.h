#pragma once

#include <filesystem>

#include "totalcap/image.h"

namespace totalcap {

// 8-bit color images (any format OpenCV decodes) to/from 3-channel RGB in [0, 1].
Image LoadRgb(const std::filesystem::path& path);
void SaveRgb(const Image& image, const std::filesystem::path& path);

// Area-averaged resampling, for photos.
Image ResizeArea(const Image& image, uint32_t width, uint32_t height);

// Single-channel 8-bit PNG of class indices.
LabelMap LoadLabelMap(const std::filesystem::path& path);
void SaveLabelMap(const LabelMap& labels, const std::filesystem::path& path);
LabelMap ResizeNearest(const LabelMap& labels, uint32_t width, uint32_t height);

}  // namespace totalcap
