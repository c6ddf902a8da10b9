#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "totalcap/reconstruction.h"

namespace totalcap {

// Points at or in front of this camera-space depth are dropped.
inline constexpr double kZNear = 1e-6;

// Extrinsics (world -> camera) plus the intrinsics they are rendered with.
struct Viewpoint {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Camera camera;

  static Viewpoint FromImage(const RegisteredImage& image, const Camera& camera);

  Eigen::Matrix3d RotationMatrix() const { return rotation.toRotationMatrix(); }
};

struct Projection {
  double u = 0.0;  // continuous pixel coordinates; pixel (i, j) covers [i, i+1) x [j, j+1)
  double v = 0.0;
  double depth = 0.0;  // camera-space z
};

// Maps normalized image-plane coordinates to pixels, applying radial
// distortion for SIMPLE_RADIAL.
inline Eigen::Vector2d ImageFromNormalized(const Camera& camera, double x, double y) {
  const auto& p = camera.params;
  switch (camera.model) {
    case CameraModel::kSimplePinhole:
      return {p[0] * x + p[1], p[0] * y + p[2]};
    case CameraModel::kPinhole:
      return {p[0] * x + p[2], p[1] * y + p[3]};
    case CameraModel::kSimpleRadial: {
      const double radial = 1.0 + p[3] * (x * x + y * y);
      return {p[0] * x * radial + p[1], p[0] * y * radial + p[2]};
    }
  }
  return {0.0, 0.0};
}

// Caches the rotation matrix of a viewpoint. Every projection in the library
// goes through this type so that renderers and reference checks agree bit for bit.
class Projector {
 public:
  explicit Projector(const Viewpoint& view)
      : rotation_(view.RotationMatrix()), translation_(view.translation), camera_(view.camera) {}

  std::optional<Projection> operator()(const Eigen::Vector3d& world) const {
    const Eigen::Vector3d cam = rotation_ * world + translation_;
    if (!(cam.z() > kZNear)) {
      return std::nullopt;
    }
    const Eigen::Vector2d px = ImageFromNormalized(camera_, cam.x() / cam.z(), cam.y() / cam.z());
    return Projection{px.x(), px.y(), cam.z()};
  }

  const Camera& camera() const { return camera_; }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
  Camera camera_;
};

std::optional<Projection> Project(const Eigen::Vector3d& world, const Viewpoint& view);

// Uniformly rescales the viewpoint's camera so min(width, height) == min_dim.
// The other dimension is rounded to the nearest pixel; focal lengths and
// principal point are multiplied by min_dim / min(width, height).
Viewpoint ScaleToMinDim(const Viewpoint& view, uint64_t min_dim);
Camera ScaleToMinDim(const Camera& camera, uint64_t min_dim);

}  // namespace totalcap
