#include <cmath>
#include <fstream>

#include "doctest.h"
#include "test_support.h"
#include "totalcap/metrics.h"

using namespace totalcap;

namespace {

Image RandomImage(Rng& rng, uint32_t c, uint32_t h, uint32_t w) {
  Image img(c, h, w);
  for (double& v : img.data) v = rng.Uniform();
  return img;
}

Image Offset(const Image& img, double delta) {
  Image out = img;
  for (double& v : out.data) v += delta;
  return out;
}

double NaiveL1(const Image& a, const Image& b) {
  double s = 0.0;
  for (uint32_t c = 0; c < a.channels; ++c)
    for (uint32_t y = 0; y < a.height; ++y)
      for (uint32_t x = 0; x < a.width; ++x) s += std::abs(255.0 * a.at(c, y, x) - 255.0 * b.at(c, y, x));
  return s / (double(a.channels) * a.height * a.width);
}

double NaivePsnr(const Image& a, const Image& b) {
  double s = 0.0;
  for (uint32_t c = 0; c < a.channels; ++c)
    for (uint32_t y = 0; y < a.height; ++y)
      for (uint32_t x = 0; x < a.width; ++x) {
        const double d = 255.0 * a.at(c, y, x) - 255.0 * b.at(c, y, x);
        s += d * d;
      }
  const double mse = s / (double(a.channels) * a.height * a.width);
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace

TEST_CASE("identity gives zero loss and capped PSNR") {
  Rng rng(1);
  const auto a = RandomImage(rng, 3, 8, 9);
  CHECK(L1(a, a) == 0.0);
  CHECK(Psnr(a, a) == kPsnrCap);
  CHECK(kPsnrCap == 99.0);
  const auto fa = FilterbankTagged(a, 0);
  CHECK(Perceptual(fa, fa) == 0.0);
}

TEST_CASE("metric anchors") {
  Image black(3, 10, 10, 0.0);
  Image white(3, 10, 10, 1.0);
  CHECK(Psnr(black, white) == 0.0);

  Image one = Offset(black, 1.0 / 255.0);
  CHECK(std::abs(Psnr(black, one) - 48.1308036086791) <= 1e-3);
  CHECK(std::abs(Psnr(black, one) - 48.1308036086791) <= 1e-9);

  Image two = Offset(black, 2.0 / 255.0);
  CHECK(std::abs(Psnr(black, two) - 42.11020369539948) <= 1e-9);

  Rng rng(2);
  Image interior(3, 16, 16);
  for (double& v : interior.data) v = 0.1 + 0.5 * rng.Uniform();
  CHECK(std::abs(L1(interior, Offset(interior, 10.0 / 255.0)) - 10.0) <= 1e-6);
  CHECK(std::abs(L1(Offset(interior, 10.0 / 255.0), interior) - 10.0) <= 1e-6);
}

TEST_CASE("L1 and PSNR match the naive loops") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const uint32_t h = 1 + static_cast<uint32_t>(rng.UniformIndex(20));
    const uint32_t w = 1 + static_cast<uint32_t>(rng.UniformIndex(20));
    const auto a = RandomImage(rng, 3, h, w);
    const auto b = RandomImage(rng, 3, h, w);
    CHECK(std::abs(L1(a, b) - NaiveL1(a, b)) <= 1e-9);
    CHECK(std::abs(Psnr(a, b) - NaivePsnr(a, b)) <= 1e-9);
    CHECK(L1(a, b) == L1(b, a));
    CHECK(L1(a, b) >= 0.0);
  }
}

TEST_CASE("PSNR strictly decreases with MSE") {
  Image base(3, 4, 4, 0.2);
  double previous = Psnr(base, base);
  for (int step = 1; step <= 50; ++step) {
    const double p = Psnr(base, Offset(base, step / 255.0 / 10.0));
    CHECK(p < previous);
    CHECK(std::isfinite(p));
    previous = p;
  }
}

TEST_CASE("size mismatches are errors") {
  Image a(3, 4, 4), b(3, 4, 5);
  CHECK_THROWS_AS(L1(a, b), std::invalid_argument);
  CHECK_THROWS_AS(Psnr(a, b), std::invalid_argument);
}

TEST_CASE("perceptual equals the per-layer MSE sum") {
  Rng rng(4);
  const auto a = RandomImage(rng, 3, 17, 13);
  const auto b = RandomImage(rng, 3, 17, 13);
  const auto fa = FilterbankTagged(a, 9);
  const auto fb = FilterbankTagged(b, 9);
  CHECK(fa.extractor == "filterbank:seed=9");
  double expected = 0.0;
  for (size_t j = 0; j < fa.layers.size(); ++j) {
    const Image& la = fa.layers[j];
    const Image& lb = fb.layers[j];
    double s = 0.0;
    for (uint32_t c = 0; c < la.channels; ++c)
      for (uint32_t y = 0; y < la.height; ++y)
        for (uint32_t x = 0; x < la.width; ++x) s += std::pow(la.at(c, y, x) - lb.at(c, y, x), 2);
    expected += s / (double(la.channels) * la.height * la.width);
  }
  CHECK(std::abs(Perceptual(fa, fb) - expected) <= 1e-12 * std::max(1.0, expected));
  CHECK(Perceptual(fa, fb) == Perceptual(fb, fa));
}

TEST_CASE("perceptual grows with noise amplitude") {
  Rng rng(5);
  const auto a = RandomImage(rng, 3, 24, 24);
  Image noise(3, 24, 24);
  for (double& v : noise.data) v = rng.Normal();
  const auto fa = FilterbankTagged(a, 0);
  double previous = 0.0;
  for (double eps : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    Image noisy = a;
    for (size_t i = 0; i < noisy.data.size(); ++i) noisy.data[i] += eps * noise.data[i];
    const double p = Perceptual(fa, FilterbankTagged(noisy, 0));
    CHECK(p > previous);
    previous = p;
  }
}

TEST_CASE("perceptual rejects mismatched extractors and shapes") {
  Rng rng(6);
  const auto a = RandomImage(rng, 3, 8, 8);
  CHECK_THROWS_AS(Perceptual(FilterbankTagged(a, 0), FilterbankTagged(a, 1)), std::invalid_argument);
  TaggedFeatures nrft{"nrft", FilterbankFeatures(a, 0)};
  CHECK_THROWS_AS(Perceptual(FilterbankTagged(a, 0), nrft), std::invalid_argument);
  CHECK_THROWS_AS(Perceptual(FilterbankTagged(a, 0), FilterbankTagged(RandomImage(rng, 3, 16, 16), 0)),
                  std::invalid_argument);
}

TEST_CASE("report means") {
  MetricReport report;
  report.extractor = "filterbank:seed=0";
  report.images = {{"a", 2.0, 30.0, 1.0, std::nullopt}, {"b", 4.0, 40.0, 3.0, std::nullopt}};
  Summarize(report);
  CHECK(report.mean_l1 == 3.0);
  CHECK(report.mean_psnr == 35.0);
  CHECK(report.mean_perceptual == 2.0);
}

TEST_CASE("embeddings JSON-lines") {
  totalcap::testing::TempDir tmp;
  std::ofstream(tmp / "e.jsonl") << R"({"image_id": 3, "embedding": [0,1,2,3,4,5,6,7.5]})" << "\n\n"
                                 << R"({"image_id": 1, "embedding": [1,1,1,1,1,1,1,1]})" << "\n";
  const auto e = ReadEmbeddings(tmp / "e.jsonl");
  REQUIRE(e.size() == 2);
  CHECK(e.at(3)[7] == 7.5);
  CHECK(e.at(1)[0] == 1.0);

  std::ofstream(tmp / "short.jsonl") << R"({"image_id": 3, "embedding": [0,1]})" << "\n";
  CHECK_THROWS(ReadEmbeddings(tmp / "short.jsonl"));
  std::ofstream(tmp / "dup.jsonl") << R"({"image_id": 3, "embedding": [0,1,2,3,4,5,6,7]})" << "\n"
                                   << R"({"image_id": 3, "embedding": [0,1,2,3,4,5,6,7]})" << "\n";
  CHECK_THROWS(ReadEmbeddings(tmp / "dup.jsonl"));
}

TEST_CASE("report JSON") {
  MetricReport report;
  report.extractor = "nrft";
  report.images = {{"a.png", 1.0, 2.0, 3.0, std::nullopt}};
  report.images.push_back({"4.png", 2.0, 4.0, 5.0, Embedding{1, 2, 3, 4, 5, 6, 7, 8}});
  Summarize(report);
  const std::string text = MetricReportToJson(report);
  CHECK(text.find("\"extractor\": \"nrft\"") != std::string::npos);
  CHECK(text.find("\"embedding\"") != std::string::npos);
  CHECK(text.find("\"l1\": 1.5") != std::string::npos);
}
