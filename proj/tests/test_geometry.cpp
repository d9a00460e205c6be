#include <doctest.h>

#include <random>

#include "labelfuse/geometry.hpp"

using namespace labelfuse;

namespace {

const Intrinsics kVga{500, 500, 320, 240, 640, 480};

RigidPose random_pose(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
  q.normalize();
  return RigidPose(q.toRotationMatrix(), Vec3(u(rng), u(rng), u(rng)) * 3.0);
}

}  // namespace

TEST_SUITE_BEGIN("geometry");

TEST_CASE("backproject principal ray") {
  const Vec3 p = backproject_pixel(kVga.cx, kVga.cy, 1.0, kVga);
  CHECK(p.isApprox(Vec3(0, 0, 1), 1e-15));
}

TEST_CASE("backproject off-axis pixel") {
  const Vec3 p = backproject_pixel(820, 240, 2.0, kVga);
  CHECK(p.isApprox(Vec3(2, 0, 2), 1e-15));
}

TEST_CASE("backproject rejects non-positive depth") {
  CHECK_THROWS_AS(backproject_pixel(10, 10, 0.0, kVga), InvalidInputError);
  CHECK_THROWS_AS(backproject_pixel(10, 10, -1.0, kVga), InvalidInputError);
}

TEST_CASE("project principal point and off-axis point") {
  const PixelDepth a = project_point(Vec3(0, 0, 1), kVga);
  CHECK(a.u == doctest::Approx(kVga.cx).epsilon(1e-12));
  CHECK(a.v == doctest::Approx(kVga.cy).epsilon(1e-12));
  CHECK(a.depth == doctest::Approx(1.0));
  const PixelDepth b = project_point(Vec3(2, 0, 2), kVga);
  CHECK(b.u == doctest::Approx(820.0).epsilon(1e-12));
  CHECK(b.v == doctest::Approx(240.0).epsilon(1e-12));
}

TEST_CASE("project rejects points behind the camera") {
  CHECK_THROWS_AS(project_point(Vec3(0, 0, 0), kVga), BehindCameraError);
  CHECK_THROWS_AS(project_point(Vec3(1, 1, -2), kVga), BehindCameraError);
}

TEST_CASE("backproject and project are exact inverses") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> du(0, 639), dv(0, 479),
      dd(0.05, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double u = du(rng), v = dv(rng), d = dd(rng);
    const PixelDepth back = project_point(backproject_pixel(u, v, d, kVga),
                                          kVga);
    CHECK(std::abs(back.u - u) < 1e-9);
    CHECK(std::abs(back.v - v) < 1e-9);
    CHECK(std::abs(back.depth - d) < 1e-9);
  }
}

TEST_CASE("transform identity and pure translation") {
  const RigidPose identity;
  CHECK(transform_point(identity, Vec3(1, 2, 3),
                        TransformDirection::kWorldToCamera)
            .isApprox(Vec3(1, 2, 3)));
  const RigidPose shift(Mat3::Identity(), Vec3(1, 0, 0));
  CHECK(transform_point(shift, Vec3::Zero(),
                        TransformDirection::kWorldToCamera)
            .isApprox(Vec3(1, 0, 0)));
}

TEST_CASE("transform both directions composes to identity") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-5, 5);
  const RigidPose pose = random_pose(rng);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const Vec3 q = transform_point(
        pose, transform_point(pose, p, TransformDirection::kWorldToCamera),
        TransformDirection::kCameraToWorld);
    CHECK((q - p).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("transform preserves pairwise distances") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(-5, 5);
  const RigidPose pose = random_pose(rng);
  for (int i = 0; i < 200; ++i) {
    const Vec3 p(u(rng), u(rng), u(rng)), q(u(rng), u(rng), u(rng));
    const double before = (p - q).norm();
    const double after = (pose.apply(p) - pose.apply(q)).norm();
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("pose constructor re-orthonormalizes small defects") {
  std::mt19937 rng(17);
  Mat3 r = random_pose(rng).rotation();
  r(0, 1) += 5e-7;  // below the 1e-6 gate
  const RigidPose pose(r, Vec3::Zero());
  const Mat3 gram = pose.rotation().transpose() * pose.rotation();
  CHECK((gram - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(pose.rotation().determinant() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pose constructor rejects large defects and reflections") {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = 1.01;
  CHECK_THROWS_AS(RigidPose(bad, Vec3::Zero()), InvalidInputError);
  Mat3 mirror = Mat3::Identity();
  mirror(2, 2) = -1;
  CHECK_THROWS_AS(RigidPose(mirror, Vec3::Zero()), InvalidInputError);
}

TEST_CASE("depth_to_cloud on all-zero depth is empty") {
  const DepthImage depth(8, 6, 0.0);
  const auto cloud = depth_to_cloud(depth, kVga, RigidPose());
  CHECK(cloud.size() == 0);
}

TEST_CASE("depth_to_cloud matches per-pixel formula on a constant plane") {
  Intrinsics k{100, 100, 16, 12, 32, 24};
  DepthImage depth(k.width, k.height, 1.0);
  const auto cloud = depth_to_cloud(depth, k, RigidPose());
  REQUIRE(cloud.size() == size_t(k.width) * k.height);
  size_t i = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x, ++i) {
      const Vec3 expect((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      CHECK((cloud.positions[i] - expect).norm() < 1e-15);
      CHECK(cloud.labels[i] == 0);
    }
  }
  // Extent equals the backprojected image corners.
  CHECK(cloud.positions.front().isApprox(backproject_pixel(0, 0, 1.0, k)));
  CHECK(cloud.positions.back().isApprox(
      backproject_pixel(k.width - 1, k.height - 1, 1.0, k)));
}

TEST_CASE("depth_to_cloud point count equals valid pixel count") {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  DepthImage depth(20, 15, 0.0);
  size_t valid = 0;
  for (double& v : depth.data) {
    const double x = d(rng);
    v = x < 0.7 ? 0.0 : x;
    valid += v > 0;
  }
  const auto cloud = depth_to_cloud(depth, kVga, RigidPose());
  CHECK(cloud.size() == valid);
}

TEST_CASE("depth_to_cloud rejects mismatched attribute dimensions") {
  const DepthImage depth(8, 6, 1.0);
  const ColorImage color(7, 6);
  CHECK_THROWS_AS(depth_to_cloud(depth, kVga, RigidPose(), &color),
                  InvalidInputError);
  const LabelImage labels(8, 5);
  CHECK_THROWS_AS(depth_to_cloud(depth, kVga, RigidPose(), nullptr, &labels),
                  InvalidInputError);
}

TEST_CASE("intrinsics invariants") {
  CHECK_NOTHROW(kVga.validate());
  Intrinsics bad = kVga;
  bad.fx = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
  bad = kVga;
  bad.cx = 700;
  CHECK_THROWS_AS(bad.validate(), InvalidInputError);
}

TEST_SUITE_END();
