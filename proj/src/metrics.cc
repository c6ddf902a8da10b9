#include "totalcap/metrics.h"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace totalcap {

namespace {

void CheckSameShape(const Image& a, const Image& b) {
  if (!a.SameShape(b)) {
    throw std::invalid_argument("images differ in size");
  }
  if (a.data.empty()) {
    throw std::invalid_argument("images are empty");
  }
}

}  // namespace

double L1(const Image& a, const Image& b) {
  CheckSameShape(a, b);
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    sum += std::abs(a.data[i] - b.data[i]);
  }
  return 255.0 * sum / static_cast<double>(a.data.size());
}

double MeanSquaredError255(const Image& a, const Image& b) {
  CheckSameShape(a, b);
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = 255.0 * (a.data[i] - b.data[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

double Psnr(const Image& a, const Image& b) {
  const double mse = MeanSquaredError255(a, b);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double Perceptual(const TaggedFeatures& a, const TaggedFeatures& b) {
  if (a.extractor != b.extractor) {
    throw std::invalid_argument("features come from different extractors: '" + a.extractor +
                                "' vs '" + b.extractor + "'");
  }
  if (a.layers.size() != b.layers.size()) {
    throw std::invalid_argument("feature pyramids differ in depth");
  }
  double total = 0.0;
  for (size_t j = 0; j < a.layers.size(); ++j) {
    const auto& fa = a.layers[j];
    const auto& fb = b.layers[j];
    if (!fa.SameShape(fb) || fa.data.empty()) {
      throw std::invalid_argument("feature layer shapes differ");
    }
    double sum = 0.0;
    for (size_t i = 0; i < fa.data.size(); ++i) {
      const double d = fa.data[i] - fb.data[i];
      sum += d * d;
    }
    total += sum / static_cast<double>(fa.data.size());
  }
  return total;
}

TaggedFeatures FilterbankTagged(const Image& image, uint64_t seed) {
  return {"filterbank:seed=" + std::to_string(seed), FilterbankFeatures(image, seed)};
}

void Summarize(MetricReport& report) {
  report.mean_l1 = report.mean_psnr = report.mean_perceptual = 0.0;
  if (report.images.empty()) return;
  for (const auto& m : report.images) {
    report.mean_l1 += m.l1;
    report.mean_psnr += m.psnr;
    report.mean_perceptual += m.perceptual;
  }
  const auto n = static_cast<double>(report.images.size());
  report.mean_l1 /= n;
  report.mean_psnr /= n;
  report.mean_perceptual /= n;
}

std::map<uint32_t, Embedding> ReadEmbeddings(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::map<uint32_t, Embedding> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto id = j.at("image_id").get<uint32_t>();
    const auto values = j.at("embedding").get<std::vector<double>>();
    if (values.size() != kEmbeddingDim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": embedding has " +
                               std::to_string(values.size()) + " values, expected " +
                               std::to_string(kEmbeddingDim));
    }
    Embedding e;
    std::copy(values.begin(), values.end(), e.begin());
    if (!out.emplace(id, e).second) {
      throw std::runtime_error(path.string() + ": duplicate image_id " + std::to_string(id));
    }
  }
  return out;
}

std::string MetricReportToJson(const MetricReport& report) {
  using nlohmann::json;
  json images = json::array();
  for (const auto& m : report.images) {
    json entry = {{"name", m.name}, {"l1", m.l1}, {"psnr", m.psnr}, {"perceptual", m.perceptual}};
    if (m.embedding) entry["embedding"] = *m.embedding;
    images.push_back(std::move(entry));
  }
  const json out = {{"extractor", report.extractor},
                    {"mean",
                     {{"l1", report.mean_l1},
                      {"psnr", report.mean_psnr},
                      {"perceptual", report.mean_perceptual}}},
                    {"images", std::move(images)}};
  return out.dump(2) + "\n";
}

}  // namespace totalcap
