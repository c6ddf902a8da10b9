// Acceptance suite. Each criterion prints one PASS/FAIL line; with
// --criterion NAME only that one runs. Exit status is nonzero if any failed.

#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <thread>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.h"
#include "totalcap/dataset.h"
#include "totalcap/image_io.h"
#include "totalcap/metrics.h"
#include "totalcap/reconstruction.h"
#include "totalcap/splat.h"
#include "totalcap/style.h"

namespace fs = std::filesystem;
using namespace totalcap;
using namespace totalcap::testing;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

struct Result {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed check; keeps the first few messages.
  void Expect(bool ok, const std::string& what) {
    if (ok) return;
    if (pass || failures < 5) detail << " [failed: " << what << "]";
    pass = false;
    ++failures;
  }
  int failures = 0;
};

// ---------------------------------------------------------------------------

Result ParserRoundtrip() {
  Result r;
  const auto start = Clock::now();
  Rng rng(20240601);
  size_t files = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto recon = RandomReconstruction(rng, 1 + rng.UniformIndex(30), rng.UniformIndex(60),
                                            rng.UniformIndex(3000));
    for (auto format : {FileFormat::kBinary, FileFormat::kText}) {
      TempDir a, b;
      SerializeReconstruction(recon, a.path(), format);
      const auto parsed = ParseReconstruction(a.path(), format);
      r.Expect(parsed == recon, "parse(serialize(r)) != r at trial " + std::to_string(trial));
      SerializeReconstruction(parsed, b.path(), format);
      for (const auto& entry : fs::directory_iterator(a.path())) {
        ++files;
        r.Expect(ReadBytes(entry.path()) == ReadBytes(b / entry.path().filename().string()),
                 "bytes differ: " + entry.path().filename().string());
      }
    }
  }
  const double elapsed = Seconds(start);
  r.Expect(elapsed < 30.0, "runtime >= 30 s");
  r.detail << " 200 reconstructions, " << files << " files byte-compared, " << elapsed << " s";
  return r;
}

Result SplatOracle() {
  Result r;
  const auto start = Clock::now();
  Rng rng(77);
  size_t pixels_valid = 0, max_points = 0, scenes_with_ties = 0;
  const double fixed_radii[] = {0.0, 1.0, 2.0};
  for (int trial = 0; trial < 500; ++trial) {
    const auto scene = MakeRandomScene(rng, 1000, 64);
    const double radius = trial % 4 < 3 ? fixed_radii[trial % 4] : 2.0 * rng.Uniform();
    const auto footprint = trial % 5 == 4 ? Footprint::kSquare : Footprint::kDisk;
    const auto fast = Render(scene.points, scene.view, {radius, footprint, 1});
    const auto slow = BruteForceRender(scene.points, scene.view, radius, footprint);
    r.Expect(fast == slow, "mismatch at scene " + std::to_string(trial));
    pixels_valid += static_cast<size_t>((1.0 - EmptyFraction(fast)) * fast.num_pixels() + 0.5);
    max_points = std::max(max_points, scene.points.size());
    std::set<std::array<double, 3>> seen;
    for (const auto& p : scene.points) {
      if (!seen.insert(p.xyz).second) {
        ++scenes_with_ties;
        break;
      }
    }
  }
  const double elapsed = Seconds(start);
  r.Expect(elapsed < 60.0, "runtime >= 60 s");
  r.Expect(scenes_with_ties > 100, "too few scenes with depth ties");
  r.detail << " 500 scenes (max " << max_points << " points, " << scenes_with_ties
           << " with exact depth ties), " << pixels_valid << " covered pixels compared, "
           << elapsed << " s";
  return r;
}

// A 20x20 view of `covered` points, each alone on its own pixel at radius 0.
struct CountedScene {
  Reconstruction recon;
  fs::path photos, labels;
};

CountedScene SceneWithCoveredPixels(const fs::path& root, size_t covered) {
  CountedScene s;
  s.photos = root / "photos";
  s.labels = root / "labels";
  fs::create_directories(s.photos);
  fs::create_directories(s.labels);
  s.recon.cameras[1] = Camera{1, CameraModel::kPinhole, 20, 20, {20, 20, 0, 0}};
  RegisteredImage image;
  image.image_id = 1;
  image.camera_id = 1;
  image.name = "view.png";
  s.recon.images[1] = image;
  for (size_t i = 0; i < covered; ++i) {
    // Pixel (x, y) center at depth 1 is ((x + 0.5) / 20, (y + 0.5) / 20, 1).
    const double x = static_cast<double>(i % 20) + 0.5;
    const double y = static_cast<double>(i / 20) + 0.5;
    Point3D p;
    p.point3d_id = i + 1;
    p.xyz = {x / 20.0, y / 20.0, 1.0};
    p.rgb = {100, 100, 100};
    s.recon.points[p.point3d_id] = p;
  }
  SaveRgb(Image(3, 20, 20, 0.5), s.photos / "view.png");
  SaveLabelMap(LabelMap(20, 20, 2), s.labels / "view.png");
  return s;
}

Result FilteringBoundaries() {
  Result r;
  // Pure predicates.
  r.Expect(!PassesSizeFilter(449, 800, 450), "449 px kept");
  r.Expect(PassesSizeFilter(450, 800, 450), "450 px discarded");
  r.Expect(PassesEmptyFilter(340.0 / 400.0, 0.85), "0.85 discarded");
  r.Expect(!PassesEmptyFilter(341.0 / 400.0, 0.85), "0.85 + 1 px kept");

  // Through the builder: 60 of 400 pixels covered is exactly 0.85 empty.
  DatasetConfig config;
  config.min_dim = 20;
  config.min_image_dim = 20;
  config.radius = 0.0;
  for (size_t covered : {size_t{60}, size_t{59}}) {
    TempDir tmp;
    const auto s = SceneWithCoveredPixels(tmp.path(), covered);
    const auto m = BuildDataset(s.recon, s.photos, s.labels, tmp / "out", config);
    if (covered == 60) {
      r.Expect(m.samples.size() == 1 && m.samples[0].empty_fraction == 0.85,
               "render at exactly 0.85 empty not kept");
    } else {
      r.Expect(m.samples.empty() && m.skipped.too_sparse == 1, "render at 0.85 + 1 px kept");
    }
  }

  // Photo size boundary through the builder.
  {
    TempDir tmp;
    auto scene = WriteSyntheticScene(tmp / "in", 2, 4);
    const auto& images = scene.recon.images;
    const uint32_t narrow = images.begin()->first;
    const uint32_t wide = std::next(images.begin())->first;
    SaveRgb(Image(3, 800, 449, 0.5), scene.photos / images.at(narrow).name);
    SaveRgb(Image(3, 800, 450, 0.5), scene.photos / images.at(wide).name);
    auto c = SyntheticSceneConfig();
    c.min_image_dim = 450;
    const auto m = BuildDataset(scene.recon, scene.photos, scene.labels, tmp / "out", c);
    bool has_narrow = false, has_wide = false;
    for (const auto& sample : m.samples) {
      has_narrow |= sample.image_id == narrow;
      has_wide |= sample.image_id == wide;
    }
    r.Expect(!has_narrow, "449 px photo kept by the builder");
    r.Expect(has_wide, "450 px photo discarded by the builder");
  }

  // Manifest determinism over three runs.
  {
    TempDir tmp;
    const auto scene = WriteSyntheticScene(tmp / "in", 12, 8);
    std::vector<std::string> manifests;
    for (unsigned run = 0; run < 3; ++run) {
      auto c = SyntheticSceneConfig();
      c.val_count = 4;
      c.num_workers = 1 + run;
      const fs::path out = tmp / ("out" + std::to_string(run));
      BuildDataset(scene.recon, scene.photos, scene.labels, out, c);
      manifests.push_back(ReadBytes(out / "manifest.jsonl"));
    }
    r.Expect(manifests[0] == manifests[1] && manifests[1] == manifests[2],
             "manifests differ between runs");
    r.detail << " manifest " << manifests[0].size() << " bytes identical across 3 runs;";
  }
  r.detail << " 0.85 kept, 0.85+1px discarded, 449 discarded, 450 kept";
  return r;
}

Result TripletLossCriterion() {
  Result r;
  Rng rng(5);
  auto random_image = [&](uint32_t h, uint32_t w) {
    Image img(3, h, w);
    for (double& v : img.data) v = rng.Uniform();
    return img;
  };

  // g_p = g_n gives J * alpha.
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GramSet gi = Grams(FilterbankFeatures(random_image(16, 16), 1));
    const GramSet gp = Grams(FilterbankFeatures(random_image(16, 16), 1));
    const double alpha = rng.Uniform();
    const double loss = TripletLoss(gi, gp, gp, alpha);
    worst = std::max(worst, std::abs(loss - static_cast<double>(gi.size()) * alpha));
  }
  r.Expect(worst <= 1e-9, "g_p = g_n loss differs from J*alpha");

  // Hand case: |gi-gp|^2 = 4, |gi-gn|^2 = 1, alpha = 0.5.
  const GramSet gi = {Eigen::MatrixXd::Constant(1, 1, 0.0)};
  const GramSet gp = {Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const GramSet gn = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  r.Expect(TripletLoss(gi, gp, gn, 0.5) == 3.5, "hand case != 3.5");

  // Pools against a full sort, every N in [2, 50], with and without ties.
  size_t instances = 0;
  for (size_t n = 2; n <= 50; ++n) {
    for (bool ties : {false, true}) {
      Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < d.cols(); ++j) {
          d(i, j) = d(j, i) = ties ? static_cast<double>(rng.UniformIndex(3)) : rng.Uniform();
        }
      }
      for (size_t k = 1; k < n; ++k) {
        const auto fast = ComputeNeighborPools(d, k);
        const auto slow = BruteForcePools(d, k);
        for (size_t i = 0; i < n; ++i) {
          r.Expect(fast[i].closest == slow[i].closest && fast[i].furthest == slow[i].furthest,
                   "pool mismatch N=" + std::to_string(n) + " k=" + std::to_string(k));
        }
        ++instances;
      }
    }
  }
  r.detail << " J*alpha max error " << worst << ", hand case 3.5, " << instances
           << " pool instances (N <= 50) match brute force";
  return r;
}

Result MetricAnchors() {
  Result r;
  Image base(3, 32, 32, 0.0);
  Image one = base;
  for (double& v : one.data) v += 1.0 / 255.0;
  const double psnr = Psnr(base, one);
  r.Expect(std::abs(psnr - 48.1308) <= 1e-3, "PSNR anchor");

  Rng rng(3);
  Image interior(3, 32, 32);
  for (double& v : interior.data) v = 0.1 + 0.6 * rng.Uniform();
  Image shifted = interior;
  for (double& v : shifted.data) v += 10.0 / 255.0;
  const double l1 = L1(interior, shifted);
  r.Expect(std::abs(l1 - 10.0) <= 1e-6, "L1 anchor");

  Image ones(1, 2, 2, 1.0);
  Image rows(2, 1, 2);
  rows.data = {1, 0, 0, 2};
  const auto g1 = Gram(ones);
  const auto g2 = Gram(rows);
  r.Expect(std::abs(g1(0, 0) - 1.0) <= 1e-12, "Gram all-ones");
  r.Expect(std::abs(g2(0, 0) - 0.25) <= 1e-12 && std::abs(g2(1, 1) - 1.0) <= 1e-12 &&
               std::abs(g2(0, 1)) <= 1e-12 && std::abs(g2(1, 0)) <= 1e-12,
           "Gram two-row case");
  char buf[128];
  std::snprintf(buf, sizeof buf, " PSNR %.6f dB, L1 %.9f, Gram cases exact", psnr, l1);
  r.detail << buf;
  return r;
}

// ---------------------------------------------------------------------------
// Performance: 10M points in front of an 800x600 pinhole camera.

struct PerfScene {
  std::vector<SplatPoint> points;
  Viewpoint view;
};

const PerfScene& GetPerfScene() {
  static const PerfScene scene = [] {
    PerfScene s;
    s.view.camera = Camera{1, CameraModel::kPinhole, 800, 600, {600, 600, 400, 300}};
    Rng rng(10);
    s.points.resize(10'000'000);
    for (size_t i = 0; i < s.points.size(); ++i) {
      // Depths on a 0.5 grid, so many pixels are decided by the id tie-break.
      const double z = 2.0 + 0.5 * static_cast<double>(rng.UniformIndex(97));
      // Slightly wider than the frustum so some points fall outside.
      const double x = (rng.Uniform() - 0.5) * 1.5 * z * 800.0 / 600.0;
      const double y = (rng.Uniform() - 0.5) * 1.5 * z * 600.0 / 600.0;
      s.points[i].xyz = {x, y, z};
      s.points[i].rgb = {static_cast<uint8_t>(i), static_cast<uint8_t>(i >> 8), static_cast<uint8_t>(i >> 16)};
      // 7919 is prime and coprime to 10M: a permutation unrelated to input order.
      s.points[i].id = (i * 7919) % s.points.size();
    }
    return s;
  }();
  return scene;
}

double TimeRender(unsigned threads, int repeats, DeepBuffer* out = nullptr) {
  const auto& s = GetPerfScene();
  double best = 1e30;
  for (int i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    auto buffer = Render(s.points, s.view, {1.0, Footprint::kDisk, threads});
    best = std::min(best, Seconds(start));
    if (out) *out = std::move(buffer);
  }
  return best;
}

Result PerformanceSingleThread() {
  Result r;
  const double t = TimeRender(1, 3);
  r.Expect(t <= 2.0, "single-thread render > 2 s");
  r.detail << " 10M points to 800x600 on 1 thread: best of 3 = " << t << " s (budget 2 s)";
  return r;
}

Result PerformanceSpeedup() {
  Result r;
  const double t1 = TimeRender(1, 3);
  const double t8 = TimeRender(8, 3);
  const double speedup = t1 / t8;
  r.Expect(speedup >= 4.0, "speedup at 8 threads < 4x");
  r.detail << " 1 thread " << t1 << " s, 8 threads " << t8 << " s, speedup " << speedup
           << "x (need >= 4x; hardware threads available: " << std::thread::hardware_concurrency()
           << ")";
  return r;
}

Result PerformanceDeterminism() {
  Result r;
  DeepBuffer reference;
  TimeRender(1, 1, &reference);
  for (unsigned threads : {2u, 3u, 4u, 8u}) {
    DeepBuffer other;
    TimeRender(threads, 1, &other);
    r.Expect(other == reference, "output differs at " + std::to_string(threads) + " threads");
  }
  r.detail << " 10M-point render bit-identical for 1, 2, 3, 4, 8 threads ("
           << 100.0 * (1.0 - EmptyFraction(reference)) << "% covered)";
  return r;
}

struct Criterion {
  const char* name;
  std::function<Result()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"parser_roundtrip", ParserRoundtrip},
      {"splat_oracle", SplatOracle},
      {"filtering_boundaries", FilteringBoundaries},
      {"triplet_loss", TripletLossCriterion},
      {"metric_anchors", MetricAnchors},
      {"performance_single_thread", PerformanceSingleThread},
      {"performance_speedup", PerformanceSpeedup},
      {"performance_determinism", PerformanceDeterminism},
  };
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = argv[++i];
    } else if (arg == "--list") {
      for (const auto& c : criteria) std::cout << c.name << "\n";
      return 0;
    } else {
      std::cerr << "usage: acceptance [--list] [--criterion NAME]\n";
      return 2;
    }
  }

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    Result result;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail << " exception: " << e.what();
    }
    std::cout << (result.pass ? "PASS " : "FAIL ") << c.name << ":" << result.detail.str()
              << std::endl;
    failed += result.pass ? 0 : 1;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
