#include "totalcap/camera.h"

#include <cmath>
#include <stdexcept>

namespace totalcap {

Viewpoint Viewpoint::FromImage(const RegisteredImage& image, const Camera& camera) {
  Viewpoint view;
  view.rotation = Eigen::Quaterniond(image.qvec[0], image.qvec[1], image.qvec[2], image.qvec[3]);
  view.translation = Eigen::Vector3d(image.tvec[0], image.tvec[1], image.tvec[2]);
  view.camera = camera;
  return view;
}

std::optional<Projection> Project(const Eigen::Vector3d& world, const Viewpoint& view) {
  return Projector(view)(world);
}

Camera ScaleToMinDim(const Camera& camera, uint64_t min_dim) {
  if (min_dim < 1) {
    throw std::invalid_argument("min_dim must be >= 1");
  }
  const uint64_t short_side = std::min(camera.width, camera.height);
  const double scale = static_cast<double>(min_dim) / static_cast<double>(short_side);

  Camera out = camera;
  if (camera.width <= camera.height) {
    out.width = min_dim;
    out.height = static_cast<uint64_t>(std::llround(static_cast<double>(camera.height) * scale));
  } else {
    out.height = min_dim;
    out.width = static_cast<uint64_t>(std::llround(static_cast<double>(camera.width) * scale));
  }
  // Every parameter except SIMPLE_RADIAL's distortion coefficient is in pixels.
  const size_t pixel_params = camera.model == CameraModel::kSimpleRadial ? 3 : camera.params.size();
  for (size_t i = 0; i < pixel_params; ++i) {
    out.params[i] *= scale;
  }
  return out;
}

Viewpoint ScaleToMinDim(const Viewpoint& view, uint64_t min_dim) {
  Viewpoint out = view;
  out.camera = ScaleToMinDim(view.camera, min_dim);
  return out;
}

}  // namespace totalcap
