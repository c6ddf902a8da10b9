#include "totalcap/splat.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace totalcap {

namespace fs = std::filesystem;

DeepBuffer::DeepBuffer(uint32_t width, uint32_t height, std::vector<std::string> channel_names)
    : width_(width), height_(height), names_(std::move(channel_names)) {
  data_.assign(names_.size() * num_pixels(), 0.0f);
}

int DeepBuffer::ChannelIndex(std::string_view name) const {
  for (size_t c = 0; c < names_.size(); ++c) {
    if (names_[c] == name) return static_cast<int>(c);
  }
  return -1;
}

std::span<const float> DeepBuffer::channel(std::string_view name) const {
  const int c = ChannelIndex(name);
  if (c < 0) {
    throw std::out_of_range("deep buffer has no channel '" + std::string(name) + "'");
  }
  return channel(static_cast<size_t>(c));
}

void DeepBuffer::AppendChannel(std::string name, std::span<const float> plane) {
  if (plane.size() != num_pixels()) {
    throw std::invalid_argument("channel size does not match buffer");
  }
  names_.push_back(std::move(name));
  data_.insert(data_.end(), plane.begin(), plane.end());
}

std::vector<std::string> RenderChannelNames() {
  return {std::string(channels::kAlbedoR), std::string(channels::kAlbedoG),
          std::string(channels::kAlbedoB), std::string(channels::kDepth),
          std::string(channels::kValidity)};
}

std::vector<SplatPoint> PointCloudFromReconstruction(const Reconstruction& recon) {
  std::vector<SplatPoint> points;
  points.reserve(recon.points.size());
  for (const auto& [id, point] : recon.points) {
    points.push_back({point.xyz, point.rgb, id});
  }
  return points;
}

std::vector<std::array<int, 2>> FootprintOffsets(double radius, Footprint footprint) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("splat radius must be finite and >= 0");
  }
  const int reach = static_cast<int>(std::floor(radius));
  std::vector<std::array<int, 2>> offsets;
  for (int dy = -reach; dy <= reach; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const bool inside = footprint == Footprint::kSquare
                              ? true
                              : static_cast<double>(dx * dx + dy * dy) <= radius * radius;
      if (inside) offsets.push_back({dx, dy});
    }
  }
  return offsets;
}

namespace {

constexpr uint64_t kNoPoint = std::numeric_limits<uint64_t>::max();

struct ZEntry {
  double depth = std::numeric_limits<double>::infinity();
  uint64_t index = kNoPoint;
};

// Total order over candidates: depth, then point id, then position in the input.
inline bool Closer(double depth, uint64_t index, const ZEntry& current,
                   std::span<const SplatPoint> points) {
  if (depth != current.depth) return depth < current.depth;
  if (current.index == kNoPoint) return true;
  const uint64_t id = points[index].id;
  const uint64_t current_id = points[current.index].id;
  if (id != current_id) return id < current_id;
  return index < current.index;
}

void SplatRange(std::span<const SplatPoint> points, size_t begin, size_t end,
                const Projector& project, std::span<const std::array<int, 2>> offsets,
                int reach, uint32_t width, uint32_t height, std::vector<ZEntry>& zbuffer) {
  const double lo_u = -1.0 - reach;
  const double hi_u = static_cast<double>(width) + reach;
  const double lo_v = -1.0 - reach;
  const double hi_v = static_cast<double>(height) + reach;

  for (size_t i = begin; i < end; ++i) {
    const auto& p = points[i].xyz;
    const auto proj = project(Eigen::Vector3d(p[0], p[1], p[2]));
    if (!proj) continue;
    const double fu = std::floor(proj->u);
    const double fv = std::floor(proj->v);
    // Also rejects NaN.
    if (!(fu > lo_u && fu < hi_u && fv > lo_v && fv < hi_v)) continue;
    const int64_t cu = static_cast<int64_t>(fu);
    const int64_t cv = static_cast<int64_t>(fv);
    for (const auto& [dx, dy] : offsets) {
      const int64_t x = cu + dx;
      const int64_t y = cv + dy;
      if (x < 0 || y < 0 || x >= width || y >= height) continue;
      ZEntry& slot = zbuffer[static_cast<size_t>(y) * width + static_cast<size_t>(x)];
      if (Closer(proj->depth, i, slot, points)) {
        slot.depth = proj->depth;
        slot.index = i;
      }
    }
  }
}

template <typename Fn>
void ParallelFor(unsigned workers, Fn&& fn) {
  if (workers <= 1) {
    fn(0u);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers - 1);
  for (unsigned w = 1; w < workers; ++w) {
    threads.emplace_back([&fn, w] { fn(w); });
  }
  fn(0u);
}

}  // namespace

DeepBuffer Render(std::span<const SplatPoint> points, const Viewpoint& view,
                  const RenderOptions& options) {
  const uint64_t width64 = view.camera.width;
  const uint64_t height64 = view.camera.height;
  if (width64 == 0 || height64 == 0) {
    throw std::invalid_argument("zero-sized viewport");
  }
  if (width64 > std::numeric_limits<uint32_t>::max() ||
      height64 > std::numeric_limits<uint32_t>::max()) {
    throw std::invalid_argument("viewport too large");
  }
  const auto width = static_cast<uint32_t>(width64);
  const auto height = static_cast<uint32_t>(height64);
  const size_t num_pixels = size_t{width} * height;

  const auto offsets = FootprintOffsets(options.radius, options.footprint);
  const int reach = static_cast<int>(std::floor(options.radius));
  const Projector project(view);

  unsigned workers = options.num_threads == 0 ? std::thread::hardware_concurrency()
                                              : options.num_threads;
  workers = std::max(1u, workers);
  // Small inputs are not worth a per-worker z-buffer.
  const size_t min_points_per_worker = 1 << 15;
  workers = static_cast<unsigned>(
      std::clamp<size_t>(points.size() / min_points_per_worker, 1, workers));

  std::vector<std::vector<ZEntry>> zbuffers(workers);
  ParallelFor(workers, [&](unsigned w) {
    zbuffers[w].assign(num_pixels, ZEntry{});
    const size_t begin = points.size() * w / workers;
    const size_t end = points.size() * (w + 1) / workers;
    SplatRange(points, begin, end, project, offsets, reach, width, height, zbuffers[w]);
  });

  DeepBuffer buffer(width, height, RenderChannelNames());
  auto r = buffer.channel(0);
  auto g = buffer.channel(1);
  auto b = buffer.channel(2);
  auto depth = buffer.channel(3);
  auto validity = buffer.channel(4);

  // Merge rows in parallel; per pixel the minimum under the same total order
  // the workers use, so the result does not depend on the partition.
  ParallelFor(workers, [&](unsigned w) {
    const size_t row_begin = size_t{height} * w / workers;
    const size_t row_end = size_t{height} * (w + 1) / workers;
    for (size_t px = row_begin * width; px < row_end * width; ++px) {
      ZEntry best = zbuffers[0][px];
      for (unsigned k = 1; k < workers; ++k) {
        const ZEntry& other = zbuffers[k][px];
        if (other.index != kNoPoint && Closer(other.depth, other.index, best, points)) {
          best = other;
        }
      }
      if (best.index == kNoPoint) continue;
      const auto& point = points[best.index];
      r[px] = static_cast<float>(point.rgb[0]) / 255.0f;
      g[px] = static_cast<float>(point.rgb[1]) / 255.0f;
      b[px] = static_cast<float>(point.rgb[2]) / 255.0f;
      depth[px] = static_cast<float>(best.depth);
      validity[px] = 1.0f;
    }
  });
  return buffer;
}

double EmptyFraction(const DeepBuffer& buffer) {
  if (buffer.num_pixels() == 0) return 1.0;
  const auto validity = buffer.channel(channels::kValidity);
  const auto empty = std::count(validity.begin(), validity.end(), 0.0f);
  return static_cast<double>(empty) / static_cast<double>(buffer.num_pixels());
}

namespace {

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(std::string_view bytes, size_t& pos, const fs::path& path) {
  if (bytes.size() - pos < 4) {
    throw std::runtime_error("truncated NRDB file " + path.string());
  }
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

}  // namespace

void WriteNrdb(const DeepBuffer& buffer, const fs::path& path) {
  std::string out = "NRDB";
  PutU32(out, 1);
  PutU32(out, buffer.height());
  PutU32(out, buffer.width());
  PutU32(out, static_cast<uint32_t>(buffer.num_channels()));
  for (const auto& name : buffer.channel_names()) {
    PutU32(out, static_cast<uint32_t>(name.size()));
    out.append(name);
  }
  out.reserve(out.size() + buffer.num_channels() * buffer.num_pixels() * 4);
  for (size_t c = 0; c < buffer.num_channels(); ++c) {
    for (float v : buffer.channel(c)) PutU32(out, std::bit_cast<uint32_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw std::runtime_error("cannot write " + path.string());
  }
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

DeepBuffer ReadNrdb(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << file.rdbuf();
  const std::string bytes = std::move(ss).str();
  if (bytes.size() < 4 || bytes.compare(0, 4, "NRDB") != 0) {
    throw std::runtime_error("not an NRDB file: " + path.string());
  }
  size_t pos = 4;
  const uint32_t version = GetU32(bytes, pos, path);
  if (version != 1) {
    throw std::runtime_error("unsupported NRDB version " + std::to_string(version));
  }
  const uint32_t height = GetU32(bytes, pos, path);
  const uint32_t width = GetU32(bytes, pos, path);
  const uint32_t count = GetU32(bytes, pos, path);
  std::vector<std::string> names;
  for (uint32_t c = 0; c < count; ++c) {
    const uint32_t len = GetU32(bytes, pos, path);
    if (bytes.size() - pos < len) {
      throw std::runtime_error("truncated NRDB file " + path.string());
    }
    names.emplace_back(bytes.substr(pos, len));
    pos += len;
  }
  const size_t num_pixels = size_t{width} * height;
  if ((bytes.size() - pos) / 4 / std::max<size_t>(num_pixels, 1) < count && num_pixels > 0) {
    throw std::runtime_error("truncated NRDB file " + path.string());
  }
  DeepBuffer buffer(width, height, std::move(names));
  for (size_t c = 0; c < count; ++c) {
    auto plane = buffer.channel(c);
    for (float& v : plane) v = std::bit_cast<float>(GetU32(bytes, pos, path));
  }
  return buffer;
}

}  // namespace totalcap
