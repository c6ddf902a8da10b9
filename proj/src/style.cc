#include "totalcap/style.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "totalcap/random.h"

namespace totalcap {

void ValidatePyramid(const FeaturePyramid& pyramid) {
  if (pyramid.empty()) {
    throw std::invalid_argument("feature pyramid has no layers");
  }
  for (const auto& layer : pyramid) {
    if (layer.channels == 0 || layer.height == 0 || layer.width == 0 ||
        layer.data.size() != size_t{layer.channels} * layer.plane_size()) {
      throw std::invalid_argument("feature layer has an empty or inconsistent shape");
    }
    for (double v : layer.data) {
      if (!std::isfinite(v)) throw std::invalid_argument("feature layer has non-finite values");
    }
  }
}

Eigen::MatrixXd Gram(const Image& features) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto c = static_cast<Eigen::Index>(features.channels);
  const auto n = static_cast<Eigen::Index>(features.plane_size());
  const Eigen::Map<const RowMajor> flat(features.data.data(), c, n);
  Eigen::MatrixXd gram = flat * flat.transpose();
  gram /= static_cast<double>(c) * static_cast<double>(n);
  // Exact symmetry regardless of how the product was blocked.
  return (gram + gram.transpose()) * 0.5;
}

GramSet Grams(const FeaturePyramid& pyramid) {
  GramSet grams;
  grams.reserve(pyramid.size());
  for (const auto& layer : pyramid) grams.push_back(Gram(layer));
  return grams;
}

double SquaredFrobeniusDistance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("gram shape mismatch");
  }
  double sum = 0.0;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      const double d = a(r, c) - b(r, c);
      sum += d * d;
    }
  }
  return sum;
}

namespace {

void CheckLayerCount(const GramSet& a, const GramSet& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("gram sets have different layer counts");
  }
}

}  // namespace

double StyleDistance(const GramSet& a, const GramSet& b) {
  CheckLayerCount(a, b);
  double sum = 0.0;
  for (size_t j = 0; j < a.size(); ++j) sum += SquaredFrobeniusDistance(a[j], b[j]);
  return sum;
}

double TripletLoss(const GramSet& anchor, const GramSet& positive, const GramSet& negative,
                   double alpha) {
  if (!(alpha >= 0.0)) {
    throw std::invalid_argument("triplet margin must be >= 0");
  }
  CheckLayerCount(anchor, positive);
  CheckLayerCount(anchor, negative);
  double loss = 0.0;
  for (size_t j = 0; j < anchor.size(); ++j) {
    const double to_positive = SquaredFrobeniusDistance(anchor[j], positive[j]);
    const double to_negative = SquaredFrobeniusDistance(anchor[j], negative[j]);
    loss += std::max(to_positive - to_negative + alpha, 0.0);
  }
  return loss;
}

Eigen::MatrixXd StyleDistanceMatrix(std::span<const GramSet> grams, unsigned num_threads) {
  const size_t n = grams.size();
  Eigen::MatrixXd distances = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                                    static_cast<Eigen::Index>(n));
  const unsigned workers = std::max(1u, std::min<unsigned>(num_threads, static_cast<unsigned>(std::max<size_t>(n, 1))));
  auto work = [&](unsigned w) {
    // Rows are dealt round-robin so the triangular workload stays balanced.
    for (size_t i = w; i < n; i += workers) {
      for (size_t j = i + 1; j < n; ++j) {
        const double d = StyleDistance(grams[i], grams[j]);
        distances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        distances(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
  }
  return distances;
}

std::vector<NeighborPools> ComputeNeighborPools(const Eigen::MatrixXd& distances, size_t k) {
  const auto n = static_cast<size_t>(distances.rows());
  if (static_cast<size_t>(distances.cols()) != n) {
    throw std::invalid_argument("distance matrix must be square");
  }
  if (k < 1) {
    throw std::invalid_argument("k must be >= 1");
  }
  if (n < k + 1) {
    throw std::invalid_argument("triplet mining needs at least k+1 = " + std::to_string(k + 1) +
                                " images but got " + std::to_string(n) + "; lower k");
  }
  std::vector<NeighborPools> pools(n);
  std::vector<size_t> others;
  for (size_t a = 0; a < n; ++a) {
    others.clear();
    for (size_t b = 0; b < n; ++b) {
      if (b != a) others.push_back(b);
    }
    const auto row = distances.row(static_cast<Eigen::Index>(a));
    auto less = [&](size_t x, size_t y) {
      const double dx = row(static_cast<Eigen::Index>(x));
      const double dy = row(static_cast<Eigen::Index>(y));
      return dx != dy ? dx < dy : x < y;
    };
    std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k),
                      others.end(), less);
    pools[a].closest.assign(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k));
    std::partial_sort(others.rbegin(), others.rbegin() + static_cast<std::ptrdiff_t>(k),
                      others.rend(), [&](size_t x, size_t y) { return less(y, x); });
    pools[a].furthest.assign(others.end() - static_cast<std::ptrdiff_t>(k), others.end());
  }
  return pools;
}

TripletSet MineTriplets(const Eigen::MatrixXd& distances, const TripletConfig& config) {
  if (!(config.alpha >= 0.0)) {
    throw std::invalid_argument("triplet margin must be >= 0");
  }
  const auto pools = ComputeNeighborPools(distances, config.k);
  Rng rng(config.seed);
  TripletSet out;
  out.config = config;
  out.triplets.reserve(pools.size() * config.n_per_anchor);
  std::vector<size_t> negatives;
  for (size_t a = 0; a < pools.size(); ++a) {
    for (size_t t = 0; t < config.n_per_anchor; ++t) {
      const auto& closest = pools[a].closest;
      const size_t positive = closest[rng.UniformIndex(closest.size())];
      negatives.clear();
      for (size_t candidate : pools[a].furthest) {
        if (candidate != positive) negatives.push_back(candidate);
      }
      if (negatives.empty()) {
        throw std::invalid_argument("no negative distinct from the positive; need at least 3 images");
      }
      const size_t negative = negatives[rng.UniformIndex(negatives.size())];
      out.triplets.push_back({a, positive, negative});
    }
  }
  return out;
}

TripletSet MineTriplets(std::span<const GramSet> grams, const TripletConfig& config,
                        unsigned num_threads) {
  return MineTriplets(StyleDistanceMatrix(grams, num_threads), config);
}

std::string TripletsToJsonLines(const TripletSet& set, std::span<const uint32_t> image_ids,
                                std::string_view features) {
  using nlohmann::json;
  const auto& c = set.config;
  std::string out = json{{"type", "header"},
                         {"k", c.k},
                         {"alpha", c.alpha},
                         {"seed", c.seed},
                         {"n_per_anchor", c.n_per_anchor},
                         {"features", std::string(features)}}
                        .dump() +
                    "\n";
  for (const auto& t : set.triplets) {
    if (t.anchor >= image_ids.size() || t.positive >= image_ids.size() ||
        t.negative >= image_ids.size()) {
      throw std::out_of_range("triplet index outside the image id list");
    }
    out += json{{"anchor", image_ids[t.anchor]},
                {"positive", image_ids[t.positive]},
                {"negative", image_ids[t.negative]}}
               .dump() +
           "\n";
  }
  return out;
}

TripletFile ReadTripletsJsonLines(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open " + path.string());
  }
  TripletFile out;
  bool have_header = false;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.value("type", "") == "header") {
      out.config.k = j.at("k").get<size_t>();
      out.config.alpha = j.at("alpha").get<double>();
      out.config.seed = j.at("seed").get<uint64_t>();
      out.config.n_per_anchor = j.at("n_per_anchor").get<size_t>();
      out.features = j.at("features").get<std::string>();
      have_header = true;
      continue;
    }
    out.triplets.push_back({j.at("anchor").get<uint32_t>(), j.at("positive").get<uint32_t>(),
                            j.at("negative").get<uint32_t>()});
  }
  if (!have_header) {
    throw std::runtime_error("triplet file has no header line: " + path.string());
  }
  return out;
}

namespace {

// out[o] = relu(sum_i conv3x3(in[i], kernel[o][i])), zero padding.
Image ConvRelu(const Image& in, const std::vector<double>& kernels, uint32_t out_channels) {
  const uint32_t h = in.height;
  const uint32_t w = in.width;
  Image out(out_channels, h, w);
  std::vector<double> acc(in.plane_size());
  for (uint32_t o = 0; o < out_channels; ++o) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (uint32_t i = 0; i < in.channels; ++i) {
      const double* src = in.data.data() + size_t{i} * in.plane_size();
      const double* k = kernels.data() + (size_t{o} * in.channels + i) * 9;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double weight = k[(dy + 1) * 3 + (dx + 1)];
          const uint32_t y0 = dy < 0 ? 1 : 0;
          const uint32_t y1 = dy > 0 ? h - 1 : h;
          const uint32_t x0 = dx < 0 ? 1 : 0;
          const uint32_t x1 = dx > 0 ? w - 1 : w;
          for (uint32_t y = y0; y < y1; ++y) {
            double* dst_row = acc.data() + size_t{y} * w;
            const double* src_row = src + static_cast<size_t>(static_cast<int64_t>(y) + dy) * w;
            for (uint32_t x = x0; x < x1; ++x) {
              dst_row[x] += weight * src_row[static_cast<int64_t>(x) + dx];
            }
          }
        }
      }
    }
    double* dst = out.data.data() + size_t{o} * out.plane_size();
    for (size_t p = 0; p < acc.size(); ++p) dst[p] = std::max(acc[p], 0.0);
  }
  return out;
}

// 2x2 average pool; odd trailing rows/columns are dropped, dimensions floor at 1.
Image AvgPool2(const Image& in) {
  const uint32_t h = std::max(1u, in.height / 2);
  const uint32_t w = std::max(1u, in.width / 2);
  Image out(in.channels, h, w);
  for (uint32_t c = 0; c < in.channels; ++c) {
    for (uint32_t y = 0; y < h; ++y) {
      for (uint32_t x = 0; x < w; ++x) {
        double sum = 0.0;
        int count = 0;
        for (uint32_t sy = 2 * y; sy < std::min(2 * y + 2, in.height); ++sy) {
          for (uint32_t sx = 2 * x; sx < std::min(2 * x + 2, in.width); ++sx) {
            sum += in.at(c, sy, sx);
            ++count;
          }
        }
        out.at(c, y, x) = sum / static_cast<double>(count);
      }
    }
  }
  return out;
}

}  // namespace

FeaturePyramid FilterbankFeatures(const Image& image, uint64_t seed,
                                  const FilterbankOptions& options) {
  if (image.empty() || image.channels == 0) {
    throw std::invalid_argument("filterbank input image is empty");
  }
  if (options.levels < 1 || options.base_channels < 1) {
    throw std::invalid_argument("filterbank needs >= 1 level and >= 1 channel");
  }
  Rng rng(seed);
  FeaturePyramid pyramid;
  uint32_t in_channels = image.channels;
  for (int level = 0; level < options.levels; ++level) {
    const auto out_channels = static_cast<uint32_t>(options.base_channels) << level;
    const size_t fan = size_t{in_channels} * 9;
    std::vector<double> kernels(size_t{out_channels} * fan);
    for (uint32_t o = 0; o < out_channels; ++o) {
      double norm2 = 0.0;
      std::vector<double> w(fan);
      for (double& v : w) {
        v = rng.Normal();
        if (options.nonnegative) v = std::abs(v);
        norm2 += v * v;
      }
      const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
      for (size_t i = 0; i < fan; ++i) kernels[o * fan + i] = w[i] * inv;
    }
    const Image& input = level == 0 ? image : pyramid.back();
    if (level == 0) {
      pyramid.push_back(ConvRelu(input, kernels, out_channels));
    } else {
      pyramid.push_back(ConvRelu(AvgPool2(input), kernels, out_channels));
    }
    in_channels = out_channels;
  }
  return pyramid;
}

namespace {

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t GetU32(std::string_view bytes, size_t& pos) {
  if (bytes.size() - pos < 4) {
    throw std::runtime_error("truncated NRFT file");
  }
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

}  // namespace

void WriteNrft(const FeaturePyramid& pyramid, const std::filesystem::path& path) {
  std::string out = "NRFT";
  PutU32(out, 1);
  PutU32(out, static_cast<uint32_t>(pyramid.size()));
  for (const auto& layer : pyramid) {
    PutU32(out, layer.channels);
    PutU32(out, layer.height);
    PutU32(out, layer.width);
    for (double v : layer.data) PutU32(out, std::bit_cast<uint32_t>(static_cast<float>(v)));
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

FeaturePyramid ReadNrft(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << file.rdbuf();
  const std::string bytes = std::move(ss).str();
  if (bytes.size() < 4 || bytes.compare(0, 4, "NRFT") != 0) {
    throw std::runtime_error("not an NRFT file: " + path.string());
  }
  size_t pos = 4;
  const uint32_t version = GetU32(bytes, pos);
  if (version != 1) {
    throw std::runtime_error("unsupported NRFT version " + std::to_string(version));
  }
  const uint32_t layers = GetU32(bytes, pos);
  FeaturePyramid pyramid;
  for (uint32_t j = 0; j < layers; ++j) {
    const uint32_t c = GetU32(bytes, pos);
    const uint32_t h = GetU32(bytes, pos);
    const uint32_t w = GetU32(bytes, pos);
    const uint64_t count = uint64_t{c} * h * w;
    if ((bytes.size() - pos) / 4 < count) {
      throw std::runtime_error("truncated NRFT file " + path.string());
    }
    Image layer(c, h, w);
    for (double& v : layer.data) v = std::bit_cast<float>(GetU32(bytes, pos));
    pyramid.push_back(std::move(layer));
  }
  ValidatePyramid(pyramid);
  return pyramid;
}

}  // namespace totalcap
