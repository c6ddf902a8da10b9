#pragma once

// SfM reconstruction model (cameras, registered images, 3D points) and its
// interchange files, using the COLMAP sparse-model layout:
//
//   cameras.bin    u64 count, then per camera
//                  u32 id, i32 model, u64 width, u64 height, f64 params[n]
//   images.bin     u64 count, then per image
//                  u32 id, f64 qw qx qy qz, f64 tx ty tz, u32 camera_id,
//                  NUL-terminated name, u64 num_obs,
//                  per obs: f64 x, f64 y, u64 point3d_id (all-ones = none)
//   points3D.bin   u64 count, then per point
//                  u64 id, f64 xyz[3], u8 rgb[3], f64 error, u64 track_len,
//                  per entry: u32 image_id, u32 obs_idx
//
// Everything little-endian. Bytes after the declared records are ignored.
// The .txt variants follow COLMAP's text export.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace totalcap {

enum class CameraModel : int32_t {
  kSimplePinhole = 0,  // f, cx, cy
  kPinhole = 1,        // fx, fy, cx, cy
  kSimpleRadial = 2,   // f, cx, cy, k
};

// Number of intrinsic parameters for a model.
size_t NumParams(CameraModel model);
std::string_view ModelName(CameraModel model);
// Accepts the numeric id; throws ReconstructionError(kUnknownCameraModel).
CameraModel ModelFromId(int32_t id);
CameraModel ModelFromName(std::string_view name);

struct Camera {
  uint32_t camera_id = 0;
  CameraModel model = CameraModel::kPinhole;
  uint64_t width = 0;
  uint64_t height = 0;
  std::vector<double> params;

  bool operator==(const Camera&) const = default;
};

inline constexpr uint64_t kInvalidPoint3DId = ~uint64_t{0};

struct Observation {
  double x = 0.0;
  double y = 0.0;
  uint64_t point3d_id = kInvalidPoint3DId;

  bool operator==(const Observation&) const = default;
};

struct RegisteredImage {
  uint32_t image_id = 0;
  std::array<double, 4> qvec{1.0, 0.0, 0.0, 0.0};  // w, x, y, z; world -> camera
  std::array<double, 3> tvec{0.0, 0.0, 0.0};
  uint32_t camera_id = 0;
  std::string name;
  std::vector<Observation> observations;

  bool operator==(const RegisteredImage&) const = default;
};

struct TrackElement {
  uint32_t image_id = 0;
  uint32_t obs_idx = 0;

  bool operator==(const TrackElement&) const = default;
};

struct Point3D {
  uint64_t point3d_id = 0;
  std::array<double, 3> xyz{};
  std::array<uint8_t, 3> rgb{};
  double error = 0.0;
  std::vector<TrackElement> track;

  bool operator==(const Point3D&) const = default;
};

// Maps are ordered, so iteration (and serialization) is canonical by id.
struct Reconstruction {
  std::map<uint32_t, Camera> cameras;
  std::map<uint32_t, RegisteredImage> images;
  std::map<uint64_t, Point3D> points;

  bool operator==(const Reconstruction&) const = default;
};

enum class FileFormat { kBinary, kText };

class ReconstructionError : public std::runtime_error {
 public:
  enum class Kind {
    kIo,
    kTruncated,
    kUnknownCameraModel,
    kDuplicateId,
    kDanglingCameraReference,
    kDanglingImageReference,
    kInvalidCamera,
    kInvalidImage,
    kMalformedText,
    kUnrepresentable,
  };

  ReconstructionError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Checks per-record invariants and referential integrity between the maps.
void ValidateReconstruction(const Reconstruction& recon);

Reconstruction ParseReconstruction(const std::filesystem::path& dir, FileFormat format);
void SerializeReconstruction(const Reconstruction& recon, const std::filesystem::path& dir,
                             FileFormat format);

// Single-file entry points. The parsers validate each record in isolation;
// cross-file references are checked by ParseReconstruction.
std::map<uint32_t, Camera> ReadCamerasBinary(const std::filesystem::path& path);
std::map<uint32_t, RegisteredImage> ReadImagesBinary(const std::filesystem::path& path);
std::map<uint64_t, Point3D> ReadPoints3DBinary(const std::filesystem::path& path);
std::map<uint32_t, Camera> ReadCamerasText(const std::filesystem::path& path);
std::map<uint32_t, RegisteredImage> ReadImagesText(const std::filesystem::path& path);
std::map<uint64_t, Point3D> ReadPoints3DText(const std::filesystem::path& path);

void WriteCamerasBinary(const Reconstruction& recon, const std::filesystem::path& path);
void WriteImagesBinary(const Reconstruction& recon, const std::filesystem::path& path);
void WritePoints3DBinary(const Reconstruction& recon, const std::filesystem::path& path);
void WriteCamerasText(const Reconstruction& recon, const std::filesystem::path& path);
void WriteImagesText(const Reconstruction& recon, const std::filesystem::path& path);
void WritePoints3DText(const Reconstruction& recon, const std::filesystem::path& path);

}  // namespace totalcap
