#include "totalcap/dataset.h"

#include <atomic>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>
#include <variant>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "totalcap/image_io.h"
#include "totalcap/random.h"

namespace totalcap {

namespace fs = std::filesystem;
using nlohmann::json;

bool PassesSizeFilter(uint64_t width, uint64_t height, uint64_t min_image_dim) {
  return std::min(width, height) >= min_image_dim;
}

bool PassesEmptyFilter(double empty_fraction, double empty_threshold) {
  return !(empty_fraction > empty_threshold);
}

void SplitValidation(std::span<AlignedSample> samples, size_t val_count, uint64_t seed) {
  const size_t n = samples.size();
  const size_t chosen = std::min(val_count, n);
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first `chosen` slots end up a uniform subset.
  for (size_t i = 0; i < chosen; ++i) {
    const size_t j = i + rng.UniformIndex(n - i);
    std::swap(order[i], order[j]);
  }
  for (auto& sample : samples) sample.split = Split::kTrain;
  for (size_t i = 0; i < chosen; ++i) samples[order[i]].split = Split::kVal;
}

namespace {

enum class SkipReason { kMissingPhoto, kTooSmall, kTooSparse, kMissingLabel, kInvalidLabel };

using Outcome = std::variant<AlignedSample, SkipReason>;

void Count(SkipCounts& counts, SkipReason reason) {
  switch (reason) {
    case SkipReason::kMissingPhoto:
      ++counts.missing_photo;
      break;
    case SkipReason::kTooSmall:
      ++counts.too_small;
      break;
    case SkipReason::kTooSparse:
      ++counts.too_sparse;
      break;
    case SkipReason::kMissingLabel:
      ++counts.missing_label;
      break;
    case SkipReason::kInvalidLabel:
      ++counts.invalid_label;
      break;
  }
}

struct BuildContext {
  const Reconstruction& recon;
  const std::vector<SplatPoint>& points;
  fs::path photos_dir;
  fs::path labels_dir;
  fs::path out_dir;
  const DatasetConfig& config;
  const Palette& palette;
};

Outcome ProcessImage(const BuildContext& ctx, const RegisteredImage& image) {
  const fs::path photo_path = ctx.photos_dir / image.name;
  if (!fs::exists(photo_path)) {
    spdlog::warn("image {}: missing photo {}", image.image_id, photo_path.string());
    return SkipReason::kMissingPhoto;
  }
  Image photo;
  try {
    photo = LoadRgb(photo_path);
  } catch (const std::exception& e) {
    spdlog::warn("image {}: {}", image.image_id, e.what());
    return SkipReason::kMissingPhoto;
  }
  if (!PassesSizeFilter(photo.width, photo.height, ctx.config.min_image_dim)) {
    return SkipReason::kTooSmall;
  }

  const Viewpoint view = ScaleToMinDim(
      Viewpoint::FromImage(image, ctx.recon.cameras.at(image.camera_id)), ctx.config.min_dim);
  RenderOptions options;
  options.radius = ctx.config.radius;
  options.footprint = ctx.config.footprint;
  options.num_threads = 1;
  DeepBuffer buffer = Render(ctx.points, view, options);
  const double empty = EmptyFraction(buffer);
  if (!PassesEmptyFilter(empty, ctx.config.empty_threshold)) {
    return SkipReason::kTooSparse;
  }

  const fs::path label_path = (ctx.labels_dir / image.name).replace_extension(".png");
  if (!fs::exists(label_path)) {
    spdlog::warn("image {}: missing label map {}", image.image_id, label_path.string());
    return SkipReason::kMissingLabel;
  }
  LabelMap labels;
  Image encoded;
  try {
    labels = ResizeNearest(LoadLabelMap(label_path), buffer.width(), buffer.height());
    encoded = EncodeLabels(labels, ctx.palette);
  } catch (const std::exception& e) {
    spdlog::warn("image {}: {}", image.image_id, e.what());
    return SkipReason::kInvalidLabel;
  }

  std::vector<float> plane(buffer.num_pixels());
  const std::string_view semantic_names[3] = {channels::kSemanticR, channels::kSemanticG,
                                              channels::kSemanticB};
  for (uint32_t c = 0; c < 3; ++c) {
    for (size_t i = 0; i < plane.size(); ++i) {
      plane[i] = static_cast<float>(encoded.data[c * plane.size() + i]);
    }
    buffer.AppendChannel(std::string(semantic_names[c]), plane);
  }

  const std::string stem = std::to_string(image.image_id);
  AlignedSample sample;
  sample.image_id = image.image_id;
  sample.name = image.name;
  sample.deep_buffer_path = "buffers/" + stem + ".nrdb";
  sample.photo_path = "photos/" + stem + ".png";
  sample.label_map_path = "labels/" + stem + ".png";
  sample.viewpoint = view;
  sample.empty_fraction = empty;

  WriteNrdb(buffer, ctx.out_dir / sample.deep_buffer_path);
  SaveRgb(ResizeArea(photo, buffer.width(), buffer.height()), ctx.out_dir / sample.photo_path);
  SaveLabelMap(labels, ctx.out_dir / sample.label_map_path);
  return sample;
}

const char* FootprintName(Footprint f) { return f == Footprint::kDisk ? "disk" : "square"; }

Footprint FootprintFromName(const std::string& name) {
  if (name == "disk") return Footprint::kDisk;
  if (name == "square") return Footprint::kSquare;
  throw std::runtime_error("unknown footprint '" + name + "'");
}

json ViewpointToJson(const Viewpoint& view) {
  const auto& q = view.rotation;
  const auto& t = view.translation;
  const auto& cam = view.camera;
  return {{"qvec", {q.w(), q.x(), q.y(), q.z()}},
          {"tvec", {t.x(), t.y(), t.z()}},
          {"camera",
           {{"camera_id", cam.camera_id},
            {"model", std::string(ModelName(cam.model))},
            {"width", cam.width},
            {"height", cam.height},
            {"params", cam.params}}}};
}

Viewpoint ViewpointFromJson(const json& j) {
  Viewpoint view;
  const auto q = j.at("qvec").get<std::array<double, 4>>();
  const auto t = j.at("tvec").get<std::array<double, 3>>();
  view.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
  view.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  const auto& cam = j.at("camera");
  view.camera.camera_id = cam.at("camera_id").get<uint32_t>();
  view.camera.model = ModelFromName(cam.at("model").get<std::string>());
  view.camera.width = cam.at("width").get<uint64_t>();
  view.camera.height = cam.at("height").get<uint64_t>();
  view.camera.params = cam.at("params").get<std::vector<double>>();
  return view;
}

}  // namespace

Manifest BuildDataset(const Reconstruction& recon, const fs::path& photos_dir,
                      const fs::path& labels_dir, const fs::path& out_dir,
                      const DatasetConfig& config, const Palette& palette) {
  for (const char* sub : {"buffers", "photos", "labels"}) {
    fs::create_directories(out_dir / sub);
  }
  const std::vector<SplatPoint> points = PointCloudFromReconstruction(recon);
  const BuildContext ctx{recon, points, photos_dir, labels_dir, out_dir, config, palette};

  std::vector<const RegisteredImage*> images;
  for (const auto& [id, image] : recon.images) images.push_back(&image);

  std::vector<std::optional<Outcome>> outcomes(images.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (size_t i = next++; i < images.size() && !failed; i = next++) {
      try {
        outcomes[i] = ProcessImage(ctx, *images[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  const unsigned workers = std::max(1u, config.num_workers);
  {
    std::vector<std::jthread> threads;
    for (unsigned w = 1; w < workers; ++w) threads.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  Manifest manifest;
  manifest.config = config;
  manifest.registered_images = images.size();
  for (auto& outcome : outcomes) {
    if (auto* sample = std::get_if<AlignedSample>(&*outcome)) {
      manifest.samples.push_back(std::move(*sample));
    } else {
      Count(manifest.skipped, std::get<SkipReason>(*outcome));
    }
  }
  SplitValidation(manifest.samples, config.val_count, config.seed);
  spdlog::info("dataset '{}': kept {} of {} images ({} skipped)", config.name,
               manifest.samples.size(), manifest.registered_images, manifest.skipped.total());
  WriteManifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

std::string ManifestToJsonLines(const Manifest& manifest) {
  const auto& cfg = manifest.config;
  const auto& s = manifest.skipped;
  const json header = {
      {"type", "header"},
      {"dataset", cfg.name},
      {"config",
       {{"min_dim", cfg.min_dim},
        {"empty_threshold", cfg.empty_threshold},
        {"min_image_dim", cfg.min_image_dim},
        {"val_count", cfg.val_count},
        {"seed", cfg.seed},
        {"radius", cfg.radius},
        {"footprint", FootprintName(cfg.footprint)}}},
      {"registered_images", manifest.registered_images},
      {"kept", manifest.samples.size()},
      {"skipped",
       {{"missing_photo", s.missing_photo},
        {"too_small", s.too_small},
        {"too_sparse", s.too_sparse},
        {"missing_label", s.missing_label},
        {"invalid_label", s.invalid_label}}}};
  std::string out = header.dump() + "\n";
  for (const auto& sample : manifest.samples) {
    const json line = {{"type", "sample"},
                       {"image_id", sample.image_id},
                       {"name", sample.name},
                       {"split", sample.split == Split::kVal ? "val" : "train"},
                       {"deep_buffer", sample.deep_buffer_path},
                       {"photo", sample.photo_path},
                       {"label_map", sample.label_map_path},
                       {"empty_fraction", sample.empty_fraction},
                       {"viewpoint", ViewpointToJson(sample.viewpoint)}};
    out += line.dump() + "\n";
  }
  return out;
}

void WriteManifest(const Manifest& manifest, const fs::path& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw std::runtime_error("cannot write " + path.string());
  }
  file << ManifestToJsonLines(manifest);
  if (!file) {
    throw std::runtime_error("write failed for " + path.string());
  }
}

Manifest ReadManifest(const fs::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open " + path.string());
  }
  Manifest manifest;
  std::string line;
  bool have_header = false;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const auto type = j.value("type", std::string("sample"));
    if (type == "header") {
      have_header = true;
      auto& cfg = manifest.config;
      const auto& c = j.at("config");
      cfg.name = j.at("dataset").get<std::string>();
      cfg.min_dim = c.at("min_dim").get<uint64_t>();
      cfg.empty_threshold = c.at("empty_threshold").get<double>();
      cfg.min_image_dim = c.at("min_image_dim").get<uint64_t>();
      cfg.val_count = c.at("val_count").get<size_t>();
      cfg.seed = c.at("seed").get<uint64_t>();
      cfg.radius = c.at("radius").get<double>();
      cfg.footprint = FootprintFromName(c.at("footprint").get<std::string>());
      manifest.registered_images = j.at("registered_images").get<size_t>();
      const auto& s = j.at("skipped");
      manifest.skipped.missing_photo = s.at("missing_photo").get<size_t>();
      manifest.skipped.too_small = s.at("too_small").get<size_t>();
      manifest.skipped.too_sparse = s.at("too_sparse").get<size_t>();
      manifest.skipped.missing_label = s.at("missing_label").get<size_t>();
      manifest.skipped.invalid_label = s.at("invalid_label").get<size_t>();
      continue;
    }
    AlignedSample sample;
    sample.image_id = j.at("image_id").get<uint32_t>();
    sample.name = j.at("name").get<std::string>();
    sample.split = j.at("split").get<std::string>() == "val" ? Split::kVal : Split::kTrain;
    sample.deep_buffer_path = j.at("deep_buffer").get<std::string>();
    sample.photo_path = j.at("photo").get<std::string>();
    sample.label_map_path = j.at("label_map").get<std::string>();
    sample.empty_fraction = j.at("empty_fraction").get<double>();
    sample.viewpoint = ViewpointFromJson(j.at("viewpoint"));
    manifest.samples.push_back(std::move(sample));
  }
  if (!have_header) {
    throw std::runtime_error("manifest has no header line: " + path.string());
  }
  return manifest;
}

std::vector<NamedViewpoint> ReadViewpoints(const fs::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<NamedViewpoint> out;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (!j.contains("viewpoint")) continue;
    NamedViewpoint v;
    v.name = j.contains("image_id") ? std::to_string(j.at("image_id").get<uint32_t>())
                                    : j.at("name").get<std::string>();
    v.viewpoint = ViewpointFromJson(j.at("viewpoint"));
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace totalcap
