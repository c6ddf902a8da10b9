#pragma once

// Gram-matrix style statistics and triplet mining for appearance pretraining.
//
// NRFT feature container (precomputed network activations):
//   "NRFT" | u32 version (1) | u32 J | J x (u32 C, u32 H, u32 W, C*H*W f32)
// All little-endian, planes channel-major.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "totalcap/image.h"

namespace totalcap {

// Layer j is a C_j x H_j x W_j feature map.
using FeaturePyramid = std::vector<Image>;
using GramSet = std::vector<Eigen::MatrixXd>;

void ValidatePyramid(const FeaturePyramid& pyramid);

// G = F F^T / (C H W), F the C x (H W) flattening.
Eigen::MatrixXd Gram(const Image& features);
GramSet Grams(const FeaturePyramid& pyramid);

// Squared Frobenius norm of the difference of two same-shaped matrices,
// summed in row-major order.
double SquaredFrobeniusDistance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// Sum over layers of ||a_j - b_j||_F^2. Throws std::invalid_argument on shape mismatch.
double StyleDistance(const GramSet& a, const GramSet& b);

// sum_j max(||g_i - g_p||^2 - ||g_i - g_n||^2 + alpha, 0), the hinge taken per layer.
double TripletLoss(const GramSet& anchor, const GramSet& positive, const GramSet& negative,
                   double alpha);

struct TripletConfig {
  size_t k = 10;
  double alpha = 0.3;
  uint64_t seed = 0;
  size_t n_per_anchor = 4;
};

// Indices into the list of images the triplets were mined from.
struct Triplet {
  size_t anchor = 0;
  size_t positive = 0;
  size_t negative = 0;

  bool operator==(const Triplet&) const = default;
};

struct TripletSet {
  std::vector<Triplet> triplets;
  TripletConfig config;
};

// Triplets JSON-lines: a header line
//   {"type":"header","k":..,"alpha":..,"seed":..,"n_per_anchor":..,"features":".."}
// then one {"anchor":id,"positive":id,"negative":id} line per triplet, the
// indices mapped through `image_ids`.
std::string TripletsToJsonLines(const TripletSet& set, std::span<const uint32_t> image_ids,
                                std::string_view features);

struct TripletFile {
  TripletConfig config;
  std::string features;
  std::vector<std::array<uint32_t, 3>> triplets;  // anchor, positive, negative image ids
};

TripletFile ReadTripletsJsonLines(const std::filesystem::path& path);

// Symmetric N x N matrix of StyleDistance. Each entry is computed by a single
// thread in a fixed order, so the result does not depend on `num_threads`.
Eigen::MatrixXd StyleDistanceMatrix(std::span<const GramSet> grams, unsigned num_threads = 1);

struct NeighborPools {
  std::vector<size_t> closest;   // k nearest, ascending by (distance, index)
  std::vector<size_t> furthest;  // k furthest, ascending by (distance, index)
};

// Per-anchor pools over all other images. Requires N >= k + 1.
std::vector<NeighborPools> ComputeNeighborPools(const Eigen::MatrixXd& distances, size_t k);

// For each anchor, draws n_per_anchor (positive, negative) pairs: the positive
// uniformly from the k closest, the negative uniformly from the k furthest
// minus the chosen positive.
TripletSet MineTriplets(const Eigen::MatrixXd& distances, const TripletConfig& config);
TripletSet MineTriplets(std::span<const GramSet> grams, const TripletConfig& config,
                        unsigned num_threads = 1);

struct FilterbankOptions {
  int levels = 4;
  int base_channels = 16;  // level j has base_channels * 2^(j-1) kernels
  bool nonnegative = false;
};

// Deterministic random-filterbank stand-in for a pretrained feature network.
// Level 1 convolves the image with unit-norm 3x3 kernels (zero padding, no
// bias) and rectifies; level j > 1 does the same on a 2x average pool of level j-1.
FeaturePyramid FilterbankFeatures(const Image& image, uint64_t seed,
                                  const FilterbankOptions& options = {});

void WriteNrft(const FeaturePyramid& pyramid, const std::filesystem::path& path);
FeaturePyramid ReadNrft(const std::filesystem::path& path);

}  // namespace totalcap
