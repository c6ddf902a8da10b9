#include <cmath>

#include "doctest.h"
#include "test_support.h"
#include "totalcap/camera.h"

using namespace totalcap;
using doctest::Approx;

namespace {

Camera Pinhole(uint64_t w, uint64_t h, double fx, double fy, double cx, double cy) {
  return Camera{1, CameraModel::kPinhole, w, h, {fx, fy, cx, cy}};
}

Viewpoint At(const Camera& cam, Eigen::Vector3d t = Eigen::Vector3d::Zero()) {
  Viewpoint v;
  v.camera = cam;
  v.translation = t;
  return v;
}

// Rotation matrix written out from the quaternion components.
Eigen::Matrix3d MatrixFromQuaternion(double w, double x, double y, double z) {
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

}  // namespace

TEST_CASE("point on the optical axis lands on the principal point") {
  const auto p = Project({0, 0, 1}, At(Pinhole(640, 480, 100, 100, 320, 240)));
  REQUIRE(p);
  CHECK(p->u == 320.0);
  CHECK(p->v == 240.0);
  CHECK(p->depth == 1.0);
}

TEST_CASE("points at or behind the near plane are dropped") {
  const auto view = At(Pinhole(640, 480, 100, 100, 320, 240));
  CHECK_FALSE(Project({0, 0, -1}, view));
  CHECK_FALSE(Project({0, 0, 0}, view));
  CHECK_FALSE(Project({0, 0, kZNear}, view));
  CHECK(Project({0, 0, 2 * kZNear}, view));
}

TEST_CASE("translated pinhole example") {
  const auto p = Project({1, 2, 4}, At(Pinhole(640, 480, 100, 200, 10, 20), {0, 0, 1}));
  REQUIRE(p);
  CHECK(p->u == Approx(30.0).epsilon(1e-12));
  CHECK(p->v == Approx(100.0).epsilon(1e-12));
  CHECK(p->depth == 5.0);
}

TEST_CASE("simple pinhole and simple radial intrinsics") {
  Viewpoint v = At(Camera{1, CameraModel::kSimplePinhole, 100, 100, {50, 10, 20}});
  auto p = Project({1, -1, 2}, v);
  REQUIRE(p);
  CHECK(p->u == Approx(35.0));
  CHECK(p->v == Approx(-5.0));

  // r^2 = 0.25 + 0.25 = 0.5, radial factor 1 + 0.1 * 0.5 = 1.05.
  v.camera = Camera{1, CameraModel::kSimpleRadial, 100, 100, {50, 10, 20, 0.1}};
  p = Project({1, -1, 2}, v);
  REQUIRE(p);
  CHECK(p->u == Approx(50 * 0.5 * 1.05 + 10));
  CHECK(p->v == Approx(-50 * 0.5 * 1.05 + 20));
}

TEST_CASE("FromImage carries the registered pose") {
  RegisteredImage image;
  image.qvec = {std::cos(0.25), 0.0, std::sin(0.25), 0.0};
  image.tvec = {1, 2, 3};
  const Camera cam = Pinhole(64, 48, 10, 10, 32, 24);
  const auto v = Viewpoint::FromImage(image, cam);
  CHECK(v.rotation.w() == image.qvec[0]);
  CHECK(v.rotation.y() == image.qvec[2]);
  CHECK(v.translation == Eigen::Vector3d(1, 2, 3));
  CHECK(v.camera == cam);
}

TEST_CASE("ScaleToMinDim examples") {
  auto scaled = ScaleToMinDim(Pinhole(640, 480, 500, 500, 320, 240), 600);
  CHECK(scaled.width == 800);
  CHECK(scaled.height == 600);
  CHECK(scaled.params == std::vector<double>{625, 625, 400, 300});

  const Camera portrait = Pinhole(600, 800, 500, 400, 300, 400);
  CHECK(ScaleToMinDim(portrait, 600) == portrait);

  scaled = ScaleToMinDim(Pinhole(1200, 900, 900, 900, 600, 450), 600);
  CHECK(scaled.width == 800);
  CHECK(scaled.height == 600);
  for (size_t i = 0; i < 4; ++i) {
    CHECK(scaled.params[i] == Approx(std::vector<double>{600, 600, 400, 300}[i]).epsilon(1e-12));
  }
}

TEST_CASE("ScaleToMinDim rounds the long side and keeps distortion") {
  const Camera radial{3, CameraModel::kSimpleRadial, 1001, 667, {700, 500, 333, -0.05}};
  const auto scaled = ScaleToMinDim(radial, 600);
  CHECK(scaled.height == 600);
  CHECK(scaled.width == static_cast<uint64_t>(std::llround(1001.0 * 600.0 / 667.0)));
  CHECK(scaled.params[3] == -0.05);
  CHECK(scaled.camera_id == 3);

  Viewpoint v = At(radial, {1, 2, 3});
  const auto sv = ScaleToMinDim(v, 600);
  CHECK(sv.camera == scaled);
  CHECK(sv.translation == v.translation);
}

TEST_CASE("projection is scale-equivariant") {
  totalcap::Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Viewpoint v;
    v.camera = totalcap::testing::RandomCamera(rng, 1);
    const auto q = totalcap::testing::RandomUnitQuaternion(rng);
    v.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    v.translation = {rng.Normal(), rng.Normal(), rng.Normal() + 5};
    const Eigen::Vector3d p(rng.Normal(), rng.Normal(), rng.Normal());
    const double s = 0.1 + 4 * rng.Uniform();

    Viewpoint sv = v;
    for (size_t i = 0; i < sv.camera.params.size(); ++i) {
      if (!(sv.camera.model == CameraModel::kSimpleRadial && i == 3)) sv.camera.params[i] *= s;
    }
    const auto a = Project(p, v);
    const auto b = Project(p, sv);
    REQUIRE(a.has_value() == b.has_value());
    if (!a) continue;
    CHECK(b->u == Approx(s * a->u).epsilon(1e-9));
    CHECK(b->v == Approx(s * a->v).epsilon(1e-9));
    CHECK(b->depth == a->depth);
  }
}

TEST_CASE("quaternion rotation matches the equivalent matrix") {
  totalcap::Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto q = totalcap::testing::RandomUnitQuaternion(rng);
    Viewpoint v;
    v.rotation = Eigen::Quaterniond(q[0], q[1], q[2], q[3]);
    const Eigen::Matrix3d m = MatrixFromQuaternion(q[0], q[1], q[2], q[3]);
    CHECK((v.RotationMatrix() - m).cwiseAbs().maxCoeff() < 1e-9);
    const Eigen::Vector3d p(rng.Normal(), rng.Normal(), rng.Normal());
    CHECK((v.rotation * p - m * p).cwiseAbs().maxCoeff() < 1e-9);
  }
}
