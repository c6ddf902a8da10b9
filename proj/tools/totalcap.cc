// Command-line front end: build-dataset, mine-triplets, metrics, render,
// write-palette.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "totalcap/dataset.h"
#include "totalcap/image_io.h"
#include "totalcap/metrics.h"
#include "totalcap/reconstruction.h"
#include "totalcap/semantics.h"
#include "totalcap/splat.h"
#include "totalcap/style.h"

namespace fs = std::filesystem;
using namespace totalcap;

namespace {

const std::map<std::string, Footprint> kFootprints = {{"disk", Footprint::kDisk},
                                                      {"square", Footprint::kSquare}};

FileFormat DetectFormat(const fs::path& dir, const std::string& requested) {
  if (requested == "binary") return FileFormat::kBinary;
  if (requested == "text") return FileFormat::kText;
  if (fs::exists(dir / "cameras.bin")) return FileFormat::kBinary;
  if (fs::exists(dir / "cameras.txt")) return FileFormat::kText;
  throw std::runtime_error("no cameras.bin or cameras.txt in " + dir.string());
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file << text;
  if (!file) throw std::runtime_error("cannot write " + path.string());
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first error.
template <typename Fn>
void ParallelIndices(size_t n, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < std::min<size_t>(threads, n); ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
}

Image ResizeShortSide(const Image& image, uint32_t short_side) {
  if (short_side == 0) return image;
  const double scale = static_cast<double>(short_side) / std::min(image.width, image.height);
  const auto w = static_cast<uint32_t>(std::max(1.0, std::round(image.width * scale)));
  const auto h = static_cast<uint32_t>(std::max(1.0, std::round(image.height * scale)));
  return ResizeArea(image, w, h);
}

// ---------------------------------------------------------------------------

struct BuildArgs {
  fs::path recon, photos, labels, out, palette;
  std::string format = "auto";
  DatasetConfig config;
};

int RunBuild(const BuildArgs& args) {
  const auto recon = ParseReconstruction(args.recon, DetectFormat(args.recon, args.format));
  const Palette palette = args.palette.empty() ? Ade20kPalette() : LoadPalette(args.palette);
  const auto manifest =
      BuildDataset(recon, args.photos, args.labels, args.out, args.config, palette);
  const auto& s = manifest.skipped;
  spdlog::info(
      "kept {} / {}; skipped: missing_photo {}, too_small {}, too_sparse {}, missing_label {}, "
      "invalid_label {}",
      manifest.samples.size(), manifest.registered_images, s.missing_photo, s.too_small,
      s.too_sparse, s.missing_label, s.invalid_label);
  return 0;
}

struct MineArgs {
  fs::path manifest, out;
  std::string features = "filterbank";
  TripletConfig config;
  uint64_t extractor_seed = 0;
  uint32_t feature_dim = 256;
  unsigned threads = 0;
};

int RunMine(const MineArgs& args) {
  const Manifest manifest = ReadManifest(args.manifest);
  const fs::path root = args.manifest.parent_path();
  const size_t n = manifest.samples.size();

  std::string tag;
  fs::path nrft_dir;
  if (args.features == "filterbank") {
    tag = "filterbank:seed=" + std::to_string(args.extractor_seed);
  } else if (args.features.starts_with("nrft:")) {
    nrft_dir = args.features.substr(5);
    tag = "nrft";
  } else {
    throw CLI::ValidationError("--features", "expected 'filterbank' or 'nrft:DIR'");
  }

  std::vector<GramSet> grams(n);
  ParallelIndices(n, args.threads, [&](size_t i) {
    const auto& sample = manifest.samples[i];
    FeaturePyramid features;
    if (nrft_dir.empty()) {
      const Image photo = ResizeShortSide(LoadRgb(root / sample.photo_path), args.feature_dim);
      features = FilterbankFeatures(photo, args.extractor_seed);
    } else {
      features = ReadNrft(nrft_dir / (std::to_string(sample.image_id) + ".nrft"));
    }
    ValidatePyramid(features);
    grams[i] = Grams(features);
  });

  const unsigned threads =
      args.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : args.threads;
  const TripletSet set = MineTriplets(grams, args.config, threads);
  std::vector<uint32_t> ids;
  for (const auto& s : manifest.samples) ids.push_back(s.image_id);
  WriteText(args.out, TripletsToJsonLines(set, ids, tag));
  spdlog::info("wrote {} triplets over {} images to {}", set.triplets.size(), n,
               args.out.string());
  return 0;
}

struct MetricsArgs {
  fs::path pred, truth, out, embeddings, pred_features, truth_features;
  std::string features = "filterbank";
  uint64_t extractor_seed = 0;
  unsigned threads = 0;
};

bool IsImageFile(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::optional<uint32_t> IdFromStem(const fs::path& p) {
  const std::string stem = p.stem().string();
  if (stem.empty() || stem.size() > 9 ||
      !std::all_of(stem.begin(), stem.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  return static_cast<uint32_t>(std::stoul(stem));
}

int RunMetrics(const MetricsArgs& args) {
  if (args.features != "filterbank" && args.features != "nrft") {
    throw CLI::ValidationError("--features", "expected 'filterbank' or 'nrft'");
  }
  if (args.features == "nrft" && (args.pred_features.empty() || args.truth_features.empty())) {
    throw CLI::ValidationError("--features nrft needs --pred-features and --truth-features");
  }
  std::vector<fs::path> names;
  for (const auto& entry : fs::directory_iterator(args.truth)) {
    if (entry.is_regular_file() && IsImageFile(entry.path())) {
      names.push_back(entry.path().filename());
    }
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error("no images in " + args.truth.string());
  for (const auto& name : names) {
    if (!fs::exists(args.pred / name)) {
      throw std::runtime_error("no prediction for " + name.string() + " in " + args.pred.string());
    }
  }
  std::map<uint32_t, Embedding> embeddings;
  if (!args.embeddings.empty()) embeddings = ReadEmbeddings(args.embeddings);

  MetricReport report;
  report.extractor = args.features == "nrft"
                         ? "nrft"
                         : "filterbank:seed=" + std::to_string(args.extractor_seed);
  report.images.resize(names.size());
  ParallelIndices(names.size(), args.threads, [&](size_t i) {
    const fs::path& name = names[i];
    const Image pred = LoadRgb(args.pred / name);
    const Image truth = LoadRgb(args.truth / name);
    ImageMetrics& m = report.images[i];
    m.name = name.string();
    m.l1 = L1(pred, truth);
    m.psnr = Psnr(pred, truth);
    if (args.features == "nrft") {
      const std::string file = name.stem().string() + ".nrft";
      m.perceptual = Perceptual({"nrft", ReadNrft(args.pred_features / file)},
                                {"nrft", ReadNrft(args.truth_features / file)});
    } else {
      m.perceptual = Perceptual(FilterbankTagged(pred, args.extractor_seed),
                                FilterbankTagged(truth, args.extractor_seed));
    }
    if (const auto id = IdFromStem(name)) {
      if (auto it = embeddings.find(*id); it != embeddings.end()) m.embedding = it->second;
    }
  });
  Summarize(report);
  WriteText(args.out, MetricReportToJson(report));
  spdlog::info("{} images: L1 {:.4f}, PSNR {:.4f} dB, perceptual {:.6g} ({})", names.size(),
               report.mean_l1, report.mean_psnr, report.mean_perceptual, report.extractor);
  return 0;
}

struct RenderArgs {
  fs::path recon, out, viewpoints;
  std::string format = "auto";
  std::vector<uint32_t> image_ids;
  bool all = false;
  uint64_t min_dim = 0;
  double radius = 1.0;
  Footprint footprint = Footprint::kDisk;
  unsigned threads = 0;
};

int RunRender(const RenderArgs& args) {
  const auto recon = ParseReconstruction(args.recon, DetectFormat(args.recon, args.format));
  std::vector<NamedViewpoint> views;
  if (!args.viewpoints.empty()) {
    views = ReadViewpoints(args.viewpoints);
  } else {
    std::vector<uint32_t> ids = args.image_ids;
    if (args.all) {
      for (const auto& [id, image] : recon.images) ids.push_back(id);
    }
    if (ids.empty()) throw CLI::ValidationError("give --image-id, --all or --viewpoints");
    for (uint32_t id : ids) {
      const auto it = recon.images.find(id);
      if (it == recon.images.end()) throw std::runtime_error("no image " + std::to_string(id));
      views.push_back({std::to_string(id),
                       Viewpoint::FromImage(it->second, recon.cameras.at(it->second.camera_id))});
    }
  }
  const auto points = PointCloudFromReconstruction(recon);
  fs::create_directories(args.out);
  for (const auto& [name, view] : views) {
    const Viewpoint scaled = args.min_dim > 0 ? ScaleToMinDim(view, args.min_dim) : view;
    const DeepBuffer buffer = Render(points, scaled, {args.radius, args.footprint, args.threads});
    WriteNrdb(buffer, args.out / (name + ".nrdb"));
    spdlog::info("{}: {}x{}, {:.1f}% empty", name, buffer.width(), buffer.height(),
                 100.0 * EmptyFraction(buffer));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("totalcap"));

  CLI::App app{"Aligned-dataset tooling for neural rerendering of SfM scenes"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  BuildArgs build;
  auto* build_cmd = app.add_subcommand("build-dataset", "Render, filter and split an aligned dataset");
  build_cmd->add_option("--recon", build.recon, "Sparse model directory")->required()->check(CLI::ExistingDirectory);
  build_cmd->add_option("--photos", build.photos, "Photo directory (image names from the model)")->required()->check(CLI::ExistingDirectory);
  build_cmd->add_option("--labels", build.labels, "Class-index PNG directory")->required()->check(CLI::ExistingDirectory);
  build_cmd->add_option("--out", build.out, "Output dataset directory")->required();
  build_cmd->add_option("--format", build.format, "Model format")->check(CLI::IsMember({"auto", "binary", "text"}))->capture_default_str();
  build_cmd->add_option("--name", build.config.name, "Dataset name")->capture_default_str();
  build_cmd->add_option("--min-dim", build.config.min_dim, "Render short side")->check(CLI::PositiveNumber)->capture_default_str();
  build_cmd->add_option("--empty-threshold", build.config.empty_threshold, "Discard renders with a larger empty fraction")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  build_cmd->add_option("--min-image-dim", build.config.min_image_dim, "Discard photos with a smaller short side")->capture_default_str();
  build_cmd->add_option("--val-count", build.config.val_count, "Validation samples")->capture_default_str();
  build_cmd->add_option("--seed", build.config.seed, "Split seed")->capture_default_str();
  build_cmd->add_option("--radius", build.config.radius, "Splat radius in pixels")->check(CLI::NonNegativeNumber)->capture_default_str();
  build_cmd->add_option("--footprint", build.config.footprint, "Splat shape")->transform(CLI::CheckedTransformer(kFootprints))->capture_default_str();
  build_cmd->add_option("--workers", build.config.num_workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  build_cmd->add_option("--palette", build.palette, "Palette JSON (default: built-in ADE20K)")->check(CLI::ExistingFile);

  MineArgs mine;
  auto* mine_cmd = app.add_subcommand("mine-triplets", "Mine style triplets over a dataset manifest");
  mine_cmd->add_option("--manifest", mine.manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
  mine_cmd->add_option("--features", mine.features, "filterbank or nrft:DIR (DIR/<image_id>.nrft)")->capture_default_str();
  mine_cmd->add_option("--k", mine.config.k, "Neighbor pool size")->check(CLI::PositiveNumber)->capture_default_str();
  mine_cmd->add_option("--alpha", mine.config.alpha, "Margin, echoed in the header")->check(CLI::NonNegativeNumber)->capture_default_str();
  mine_cmd->add_option("--seed", mine.config.seed, "Sampling seed")->capture_default_str();
  mine_cmd->add_option("--n-per-anchor", mine.config.n_per_anchor, "Triplets per anchor")->capture_default_str();
  mine_cmd->add_option("--extractor-seed", mine.extractor_seed, "Filterbank seed")->capture_default_str();
  mine_cmd->add_option("--feature-dim", mine.feature_dim, "Photo short side for filterbank features; 0 keeps the size")->capture_default_str();
  mine_cmd->add_option("--threads", mine.threads, "0 = all cores")->capture_default_str();
  mine_cmd->add_option("--out", mine.out, "triplets.jsonl")->required();

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "L1 / PSNR / perceptual between two image directories");
  metrics_cmd->add_option("--pred", metrics.pred, "Predicted images")->required()->check(CLI::ExistingDirectory);
  metrics_cmd->add_option("--truth", metrics.truth, "Ground-truth images, paired by file name")->required()->check(CLI::ExistingDirectory);
  metrics_cmd->add_option("--out", metrics.out, "report.json")->required();
  metrics_cmd->add_option("--features", metrics.features, "filterbank or nrft")->capture_default_str();
  metrics_cmd->add_option("--extractor-seed", metrics.extractor_seed, "Filterbank seed")->capture_default_str();
  metrics_cmd->add_option("--pred-features", metrics.pred_features, "NRFT files <stem>.nrft for predictions")->check(CLI::ExistingDirectory);
  metrics_cmd->add_option("--truth-features", metrics.truth_features, "NRFT files <stem>.nrft for ground truth")->check(CLI::ExistingDirectory);
  metrics_cmd->add_option("--embeddings", metrics.embeddings, "Embeddings JSONL, attached to images named <image_id>.*")->check(CLI::ExistingFile);
  metrics_cmd->add_option("--threads", metrics.threads, "0 = all cores")->capture_default_str();

  RenderArgs render;
  auto* render_cmd = app.add_subcommand("render", "Render deep buffers (NRDB) for registered images or given viewpoints");
  render_cmd->add_option("--recon", render.recon, "Sparse model directory")->required()->check(CLI::ExistingDirectory);
  render_cmd->add_option("--out", render.out, "Output directory")->required();
  render_cmd->add_option("--format", render.format, "Model format")->check(CLI::IsMember({"auto", "binary", "text"}))->capture_default_str();
  auto* ids_opt = render_cmd->add_option("--image-id", render.image_ids, "Registered image ids");
  auto* all_opt = render_cmd->add_flag("--all", render.all, "Every registered image");
  render_cmd->add_option("--viewpoints", render.viewpoints, "JSONL with manifest-style viewpoints")->check(CLI::ExistingFile)->excludes(ids_opt)->excludes(all_opt);
  render_cmd->add_option("--min-dim", render.min_dim, "Rescale to this short side; 0 keeps the camera size")->capture_default_str();
  render_cmd->add_option("--radius", render.radius, "Splat radius in pixels")->check(CLI::NonNegativeNumber)->capture_default_str();
  render_cmd->add_option("--footprint", render.footprint, "Splat shape")->transform(CLI::CheckedTransformer(kFootprints))->capture_default_str();
  render_cmd->add_option("--threads", render.threads, "0 = all cores")->capture_default_str();

  fs::path palette_out;
  auto* palette_cmd = app.add_subcommand("write-palette", "Write the built-in ADE20K palette as JSON");
  palette_cmd->add_option("--out", palette_out, "palette.json")->required();

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (*build_cmd) return RunBuild(build);
    if (*mine_cmd) return RunMine(mine);
    if (*metrics_cmd) return RunMetrics(metrics);
    if (*render_cmd) return RunRender(render);
    if (*palette_cmd) {
      SavePalette(Ade20kPalette(), palette_out);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
