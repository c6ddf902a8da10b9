#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "totalcap/image.h"
#include "totalcap/style.h"

namespace totalcap {

inline constexpr double kPsnrCap = 99.0;

// Mean absolute difference on the 0-255 scale, over pixels and channels.
double L1(const Image& a, const Image& b);

// Mean squared difference on the 0-255 scale.
double MeanSquaredError255(const Image& a, const Image& b);

// 10 log10(255^2 / MSE); identical images give kPsnrCap.
double Psnr(const Image& a, const Image& b);

// Features labelled with the extractor that produced them, e.g.
// "filterbank:seed=0" or "nrft".
struct TaggedFeatures {
  std::string extractor;
  FeaturePyramid layers;
};

// Sum over layers of the mean squared feature difference.
// Throws std::invalid_argument if the extractors or layer shapes differ.
double Perceptual(const TaggedFeatures& a, const TaggedFeatures& b);

TaggedFeatures FilterbankTagged(const Image& image, uint64_t seed);

inline constexpr size_t kEmbeddingDim = 8;
using Embedding = std::array<double, kEmbeddingDim>;

// Appearance embeddings as JSON-lines {"image_id": N, "embedding": [8 numbers]}.
// Throws on duplicate ids or a wrong embedding length.
std::map<uint32_t, Embedding> ReadEmbeddings(const std::filesystem::path& path);

struct ImageMetrics {
  std::string name;
  double l1 = 0.0;
  double psnr = 0.0;
  double perceptual = 0.0;
  std::optional<Embedding> embedding;
};

struct MetricReport {
  std::string extractor;
  std::vector<ImageMetrics> images;
  double mean_l1 = 0.0;
  double mean_psnr = 0.0;
  double mean_perceptual = 0.0;
};

// Fills the means from `images`.
void Summarize(MetricReport& report);

// {"extractor", "mean": {"l1", "psnr", "perceptual"}, "images": [{"name", "l1",
// "psnr", "perceptual", optional "embedding"}]}
std::string MetricReportToJson(const MetricReport& report);

}  // namespace totalcap
