#pragma once

// Z-buffered point splatting into a deferred-shading deep buffer, and the
// NRDB container the buffers are stored in:
//
//   "NRDB" | u32 version (1) | u32 height | u32 width | u32 channel_count
//   | channel_count x (u32 byte length, UTF-8 name)
//   | channel_count x (height * width little-endian f32, row-major)

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "totalcap/camera.h"
#include "totalcap/reconstruction.h"

namespace totalcap {

namespace channels {
inline constexpr std::string_view kAlbedoR = "albedo_r";
inline constexpr std::string_view kAlbedoG = "albedo_g";
inline constexpr std::string_view kAlbedoB = "albedo_b";
inline constexpr std::string_view kDepth = "depth";
inline constexpr std::string_view kValidity = "validity";
inline constexpr std::string_view kSemanticR = "semantic_r";
inline constexpr std::string_view kSemanticG = "semantic_g";
inline constexpr std::string_view kSemanticB = "semantic_b";
}  // namespace channels

// Planar float raster with named channels. Empty pixels hold
// albedo = 0, depth = 0, validity = 0.
class DeepBuffer {
 public:
  DeepBuffer() = default;
  DeepBuffer(uint32_t width, uint32_t height, std::vector<std::string> channel_names);

  uint32_t width() const { return width_; }
  uint32_t height() const { return height_; }
  size_t num_pixels() const { return size_t{width_} * height_; }
  size_t num_channels() const { return names_.size(); }
  const std::vector<std::string>& channel_names() const { return names_; }

  // Index of a named channel, or -1.
  int ChannelIndex(std::string_view name) const;

  std::span<float> channel(size_t c) {
    return {data_.data() + c * num_pixels(), num_pixels()};
  }
  std::span<const float> channel(size_t c) const {
    return {data_.data() + c * num_pixels(), num_pixels()};
  }
  std::span<const float> channel(std::string_view name) const;

  float at(size_t c, uint32_t y, uint32_t x) const {
    return data_[c * num_pixels() + size_t{y} * width_ + x];
  }

  void AppendChannel(std::string name, std::span<const float> plane);

  bool operator==(const DeepBuffer&) const = default;

 private:
  uint32_t width_ = 0;
  uint32_t height_ = 0;
  std::vector<std::string> names_;
  std::vector<float> data_;
};

// The five channels produced by Render, in order.
std::vector<std::string> RenderChannelNames();

struct SplatPoint {
  std::array<double, 3> xyz{};
  std::array<uint8_t, 3> rgb{};
  uint64_t id = 0;
};

// Points in ascending id order.
std::vector<SplatPoint> PointCloudFromReconstruction(const Reconstruction& recon);

enum class Footprint {
  kDisk,    // pixels within Euclidean distance <= radius (radius 1 -> 5-pixel cross)
  kSquare,  // pixels within Chebyshev distance <= radius (radius 1 -> 3x3)
};

struct RenderOptions {
  double radius = 1.0;
  Footprint footprint = Footprint::kDisk;
  // 0 means std::thread::hardware_concurrency().
  unsigned num_threads = 1;
};

// Integer pixel offsets covered by a splat centered on its projected pixel.
std::vector<std::array<int, 2>> FootprintOffsets(double radius, Footprint footprint);

// Each pixel takes the point with the smallest camera depth whose footprint
// covers it; exact depth ties go to the smaller point id. The projected
// point's pixel is floor(u), floor(v). Output is identical for any thread count.
DeepBuffer Render(std::span<const SplatPoint> points, const Viewpoint& view,
                  const RenderOptions& options = {});

// Fraction of pixels with validity == 0.
double EmptyFraction(const DeepBuffer& buffer);

void WriteNrdb(const DeepBuffer& buffer, const std::filesystem::path& path);
DeepBuffer ReadNrdb(const std::filesystem::path& path);

}  // namespace totalcap
