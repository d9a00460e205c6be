#include <doctest.h>

#include <random>

#include "labelfuse/cloud.hpp"
#include "labelfuse/features.hpp"

using namespace labelfuse;

namespace {
// Smooth random heightfield: curvature varies everywhere, so every
// neighborhood has a distinctive histogram. Sub-millimeter jitter keeps
// pair angles off exact bin boundaries.
LabeledPointCloud structured_cloud() {
  LabeledPointCloud cloud;
  const double step = 0.02;
  const auto height = [](double x, double y) {
    return 0.050 * std::sin(9.1 * x + 0.7) * std::cos(8.3 * y - 0.4) +
           0.030 * std::sin(12.5 * x - 7.9 * y) +
           0.020 * std::cos(15.3 * x * y + 1.1);
  };
  for (double x = -0.6; x <= 1.1; x += step) {
    for (double y = -0.5; y <= 0.8; y += step) {
      cloud.positions.emplace_back(x, y, height(x, y));
    }
  }
  std::mt19937 rng(977);
  std::uniform_real_distribution<double> jitter(-0.0008, 0.0008);
  for (Vec3& p : cloud.positions) {
    p += Vec3(jitter(rng), jitter(rng), jitter(rng));
  }
  cloud.labels.assign(cloud.positions.size(), 1);
  return cloud;
}

}  // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("fpfh histograms sum to 100 when neighbors exist") {
  LabeledPointCloud cloud = structured_cloud();
  cloud.normals = estimate_normals(cloud, 20, Vec3(0, 0, 5));
  const auto features =
      compute_fpfh(cloud.positions, cloud.normals, 0.06);
  REQUIRE(features.size() == cloud.size());
  size_t nonzero = 0;
  for (const FpfhFeature& f : features) {
    double sum = 0;
    for (double v : f) {
      CHECK(std::isfinite(v));
      sum += v;
    }
    if (sum > 0) {
      ++nonzero;
      CHECK(sum == doctest::Approx(100.0).epsilon(1e-8));
    }
  }
  CHECK(nonzero == cloud.size());  // dense sampling: everyone has neighbors
}

TEST_CASE("fpfh is rotation invariant within 1e-3 per bin") {
  LabeledPointCloud cloud = structured_cloud();
  cloud.normals = estimate_normals(cloud, 20, Vec3(0, 0, 5));
  const double radius = 0.06;
  const auto base = compute_fpfh(cloud.positions, cloud.normals, radius);

  const Mat3 rot =
      Eigen::AngleAxisd(0.83, Vec3(1, 2, -1).normalized()).toRotationMatrix();
  const Vec3 shift(0.4, -0.7, 1.2);
  std::vector<Vec3> rot_points(cloud.size()), rot_normals(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    rot_points[i] = rot * cloud.positions[i] + shift;
    rot_normals[i] = rot * cloud.normals[i];
  }
  const auto rotated = compute_fpfh(rot_points, rot_normals, radius);
  for (size_t i = 0; i < base.size(); ++i) {
    for (int b = 0; b < 33; ++b) {
      CHECK(std::abs(base[i][b] - rotated[i][b]) <= 1e-3);
    }
  }
}

TEST_CASE("isolated points get empty histograms") {
  std::vector<Vec3> points{Vec3(0, 0, 0), Vec3(10, 0, 0)};
  std::vector<Vec3> normals{Vec3(0, 0, 1), Vec3(0, 0, 1)};
  const auto features = compute_fpfh(points, normals, 0.5);
  for (const FpfhFeature& f : features) {
    for (double v : f) {
      CHECK(v == 0.0);
    }
  }
}

TEST_CASE("reciprocal matching is a subset of forward matching") {
  LabeledPointCloud cloud = structured_cloud();
  cloud.normals = estimate_normals(cloud, 20, Vec3(0, 0, 5));
  const auto features = compute_fpfh(cloud.positions, cloud.normals, 0.06);
  const auto forward = match_features(features, features);
  const auto reciprocal = match_features_reciprocal(features, features);
  CHECK(forward.size() == features.size());
  CHECK(reciprocal.size() <= forward.size());
  // Self-matching must be the identity map.
  for (const auto& [i, j] : forward) {
    CHECK(i == j);
  }
}

TEST_SUITE_END();
