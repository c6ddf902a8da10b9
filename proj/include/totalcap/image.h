#pragma once

#include <cstdint>
#include <vector>

namespace totalcap {

// Planar (channel-major) double raster: data[(c * height + y) * width + x].
// RGB images hold values in [0, 1]; feature maps hold arbitrary values.
struct Image {
  uint32_t channels = 0;
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<double> data;

  Image() = default;
  Image(uint32_t c, uint32_t h, uint32_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(size_t{c} * h * w, fill) {}

  size_t plane_size() const { return size_t{height} * width; }
  bool empty() const { return data.empty(); }

  double& at(uint32_t c, uint32_t y, uint32_t x) {
    return data[(size_t{c} * height + y) * width + x];
  }
  double at(uint32_t c, uint32_t y, uint32_t x) const {
    return data[(size_t{c} * height + y) * width + x];
  }

  bool SameShape(const Image& other) const {
    return channels == other.channels && height == other.height && width == other.width;
  }

  bool operator==(const Image&) const = default;
};

// Per-pixel class indices in [0, 149], or 255 for unlabeled.
struct LabelMap {
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<uint8_t> classes;

  LabelMap() = default;
  LabelMap(uint32_t h, uint32_t w, uint8_t fill = 0) : height(h), width(w), classes(size_t{h} * w, fill) {}

  uint8_t& at(uint32_t y, uint32_t x) { return classes[size_t{y} * width + x]; }
  uint8_t at(uint32_t y, uint32_t x) const { return classes[size_t{y} * width + x]; }

  bool operator==(const LabelMap&) const = default;
};

}  // namespace totalcap
