#pragma once

// Aligned dataset construction: one deep buffer per registered image, paired
// with its (rescaled) photo and semantic label map, filtered and split.
//
// Output layout under the dataset directory:
//   manifest.jsonl          header line + one line per kept sample
//   buffers/<image_id>.nrdb albedo, depth, validity + 3 semantic channels
//   photos/<image_id>.png   photo resampled to the buffer resolution
//   labels/<image_id>.png   class-index map resampled (nearest) likewise

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "totalcap/camera.h"
#include "totalcap/reconstruction.h"
#include "totalcap/semantics.h"
#include "totalcap/splat.h"

namespace totalcap {

struct DatasetConfig {
  std::string name = "dataset";
  uint64_t min_dim = 600;
  double empty_threshold = 0.85;
  uint64_t min_image_dim = 450;
  size_t val_count = 100;
  uint64_t seed = 0;
  double radius = 1.0;
  Footprint footprint = Footprint::kDisk;
  unsigned num_workers = 1;  // not echoed; output does not depend on it
};

enum class Split { kTrain, kVal };

struct AlignedSample {
  uint32_t image_id = 0;
  std::string name;
  // Relative to the dataset directory.
  std::string deep_buffer_path;
  std::string photo_path;
  std::string label_map_path;
  Viewpoint viewpoint;
  double empty_fraction = 0.0;
  Split split = Split::kTrain;
};

struct SkipCounts {
  size_t missing_photo = 0;
  size_t too_small = 0;
  size_t too_sparse = 0;
  size_t missing_label = 0;
  size_t invalid_label = 0;

  size_t total() const {
    return missing_photo + too_small + too_sparse + missing_label + invalid_label;
  }
  bool operator==(const SkipCounts&) const = default;
};

struct Manifest {
  DatasetConfig config;
  size_t registered_images = 0;
  SkipCounts skipped;
  std::vector<AlignedSample> samples;  // ascending image_id
};

// Filters; both discard strictly (short side < min, fraction > threshold).
bool PassesSizeFilter(uint64_t width, uint64_t height, uint64_t min_image_dim);
bool PassesEmptyFilter(double empty_fraction, double empty_threshold);

// Tags a seeded uniformly random subset of min(val_count, N) samples as
// validation and the rest as training.
void SplitValidation(std::span<AlignedSample> samples, size_t val_count, uint64_t seed);

// Photos are looked up as photos_dir / image.name, label maps as
// labels_dir / image.name with a .png extension. Missing or unusable inputs
// skip the image and bump a counter.
Manifest BuildDataset(const Reconstruction& recon, const std::filesystem::path& photos_dir,
                      const std::filesystem::path& labels_dir,
                      const std::filesystem::path& out_dir, const DatasetConfig& config,
                      const Palette& palette = Ade20kPalette());

std::string ManifestToJsonLines(const Manifest& manifest);
void WriteManifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest ReadManifest(const std::filesystem::path& path);

struct NamedViewpoint {
  std::string name;
  Viewpoint viewpoint;
};

// Viewpoints from a JSON-lines file whose lines carry a "viewpoint" object in
// the manifest schema. Lines without one (such as a manifest header) are
// skipped. The name is the line's "image_id" if present, else its "name".
std::vector<NamedViewpoint> ReadViewpoints(const std::filesystem::path& path);

}  // namespace totalcap
