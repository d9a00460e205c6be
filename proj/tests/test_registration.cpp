#include <doctest.h>

#include <random>

#include "labelfuse/cloud.hpp"
#include "labelfuse/registration.hpp"

using namespace labelfuse;

namespace {

constexpr double kVoxel = 0.025;
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

struct Prepared {
  LabeledPointCloud cloud;
  std::vector<FpfhFeature> features;
};

// The normal-orientation viewpoint must be the same physical point in each
// cloud's own frame, as it is for real sensor fragments.
Prepared prepare(const LabeledPointCloud& raw,
                 const Vec3& viewpoint = Vec3(0, 0, 5)) {
  Prepared out;
  out.cloud = voxel_downsample(raw, kVoxel);
  out.cloud.normals = estimate_normals(out.cloud, 30, viewpoint);
  out.features =
      compute_fpfh(out.cloud.positions, out.cloud.normals, 5 * kVoxel);
  return out;
}

LabeledPointCloud transformed(const LabeledPointCloud& cloud,
                              const RigidPose& pose) {
  LabeledPointCloud out = cloud;
  for (Vec3& p : out.positions) {
    p = pose.apply(p);
  }
  for (Vec3& n : out.normals) {
    n = pose.rotation() * n;
  }
  return out;
}

// The ground-truth pair: dst is the fixture, src the inverse-transformed
// copy, so dst_from_src == truth.
const RigidPose kTruth(
    Eigen::AngleAxisd(30.0 * M_PI / 180.0, Vec3(0.2, 1, 0.3).normalized())
        .toRotationMatrix(),
    Vec3(0.3, -0.4, 0.0));

double rotation_angle(const Mat3& a, const Mat3& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace

TEST_SUITE_BEGIN("registration");

TEST_CASE("ransac on identical clouds recovers the identity") {
  const Prepared p = prepare(structured_cloud());
  RansacParams params;
  params.max_correspondence_distance = 1.5 * kVoxel;
  params.seed = 1;
  const RegistrationResult result = register_ransac(
      p.cloud.positions, p.features, p.cloud.positions, p.features, params);
  CHECK(result.fitness >= 0.99);
  CHECK(result.dst_from_src.translation().norm() < 1.5 * kVoxel);
  CHECK(rotation_angle(result.dst_from_src.rotation(), Mat3::Identity()) <
        0.1);
}

TEST_CASE("ransac recovers a known transform within 2 voxels") {
  const LabeledPointCloud dst_raw = structured_cloud();
  const LabeledPointCloud src_raw = transformed(dst_raw, kTruth.inverse());
  const Prepared dst = prepare(dst_raw);
  const Prepared src = prepare(src_raw, kTruth.inverse().apply(Vec3(0, 0, 5)));
  RansacParams params;
  params.max_correspondence_distance = 1.5 * kVoxel;
  params.seed = 7;
  const RegistrationResult result = register_ransac(
      src.cloud.positions, src.features, dst.cloud.positions, dst.features,
      params);
  CHECK((result.dst_from_src.translation() - kTruth.translation()).norm() <=
        2 * kVoxel);
}

TEST_CASE("ransac fails on unrelated scenes") {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  LabeledPointCloud a, b;
  for (int i = 0; i < 400; ++i) {
    a.positions.emplace_back(u(rng), u(rng), u(rng));
    b.positions.emplace_back(u(rng) + 5, u(rng) * 2, u(rng) * 0.2);
  }
  a.labels.assign(a.size(), 1);
  b.labels.assign(b.size(), 1);
  a.normals = estimate_normals(a, 10);
  b.normals = estimate_normals(b, 10);
  const auto fa = compute_fpfh(a.positions, a.normals, 0.2);
  const auto fb = compute_fpfh(b.positions, b.normals, 0.2);
  RansacParams params;
  params.max_correspondence_distance = 1.5 * kVoxel;
  params.max_iterations = 2000;
  params.seed = 3;
  CHECK_THROWS_AS(
      register_ransac(a.positions, fa, b.positions, fb, params),
      RegistrationFailedError);
}

TEST_CASE("fgr on identical clouds recovers the identity") {
  const Prepared p = prepare(structured_cloud());
  FgrParams params;
  params.voxel_size = kVoxel;
  const RegistrationResult result = register_fgr(
      p.cloud.positions, p.features, p.cloud.positions, p.features, params);
  CHECK(result.dst_from_src.translation().norm() < 1.5 * kVoxel);
  CHECK(rotation_angle(result.dst_from_src.rotation(), Mat3::Identity()) <
        0.1);
}

TEST_CASE("fgr recovers the known transform and agrees with ransac") {
  const LabeledPointCloud dst_raw = structured_cloud();
  const LabeledPointCloud src_raw = transformed(dst_raw, kTruth.inverse());
  const Prepared dst = prepare(dst_raw);
  const Prepared src = prepare(src_raw, kTruth.inverse().apply(Vec3(0, 0, 5)));
  FgrParams fgr_params;
  fgr_params.voxel_size = kVoxel;
  const RegistrationResult fgr = register_fgr(
      src.cloud.positions, src.features, dst.cloud.positions, dst.features,
      fgr_params);
  CHECK((fgr.dst_from_src.translation() - kTruth.translation()).norm() <=
        2 * kVoxel);
  RansacParams ransac_params;
  ransac_params.max_correspondence_distance = 1.5 * kVoxel;
  ransac_params.seed = 7;
  const RegistrationResult ransac = register_ransac(
      src.cloud.positions, src.features, dst.cloud.positions, dst.features,
      ransac_params);
  CHECK((fgr.dst_from_src.translation() - ransac.dst_from_src.translation())
            .norm() <= kVoxel);
}

TEST_CASE("fgr needs at least 10 reciprocal matches") {
  std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  std::vector<FpfhFeature> feats(3, FpfhFeature{});
  FgrParams params;
  params.voxel_size = kVoxel;
  CHECK_THROWS_AS(register_fgr(pts, feats, pts, feats, params),
                  RegistrationFailedError);
}

TEST_CASE("icp with ground-truth init does not degrade") {
  const LabeledPointCloud dst = structured_cloud();
  const LabeledPointCloud src = transformed(dst, kTruth.inverse());
  const auto scales = default_icp_scales(kVoxel);
  const RegistrationResult init_eval = evaluate_registration(
      src.positions, dst.positions, kTruth, scales.back().max_corr_dist);
  const RegistrationResult result =
      refine_multiscale_icp(src, dst, kTruth, scales);
  CHECK(result.inlier_rmse <= init_eval.inlier_rmse + 1e-6);
  CHECK(result.fitness >= init_eval.fitness - 1e-12);
  CHECK((result.dst_from_src.translation() - kTruth.translation()).norm() <
        1e-4);
}

TEST_CASE("icp refines a perturbed init to half a degree and 5 mm") {
  const LabeledPointCloud dst = structured_cloud();
  const LabeledPointCloud src = transformed(dst, kTruth.inverse());
  const RigidPose perturbation(
      Eigen::AngleAxisd(5.0 * M_PI / 180.0, Vec3(1, -1, 2).normalized())
          .toRotationMatrix(),
      Vec3(0.03, -0.02, 0.034641016151377544));  // 5 cm displacement
  REQUIRE(perturbation.translation().norm() == doctest::Approx(0.05).epsilon(1e-3));
  const RigidPose init = perturbation * kTruth;
  const RegistrationResult result =
      refine_multiscale_icp(src, dst, init, default_icp_scales(kVoxel));
  CHECK((result.dst_from_src.translation() - kTruth.translation()).norm() <=
        0.005);
  CHECK(rotation_angle(result.dst_from_src.rotation(), kTruth.rotation()) <=
        0.5 * M_PI / 180.0);
  // Monotonicity against the initialization.
  const RegistrationResult init_eval =
      evaluate_registration(src.positions, dst.positions, init,
                            default_icp_scales(kVoxel).back().max_corr_dist);
  CHECK(result.inlier_rmse <= init_eval.inlier_rmse + 1e-12);
}

TEST_CASE("icp raises on disjoint clouds") {
  LabeledPointCloud a, b;
  for (int i = 0; i < 50; ++i) {
    a.positions.emplace_back(i * 0.01, 0, 0.02 * (i % 5));
    b.positions.emplace_back(i * 0.01 + 100, 0, 0.02 * (i % 5));
  }
  a.labels.assign(a.size(), 1);
  b.labels.assign(b.size(), 1);
  CHECK_THROWS_AS(
      refine_multiscale_icp(a, b, RigidPose(), default_icp_scales(0.02)),
      InsufficientOverlapError);
}

TEST_CASE("registration results satisfy pose invariants") {
  const LabeledPointCloud dst_raw = structured_cloud();
  const LabeledPointCloud src_raw = transformed(dst_raw, kTruth.inverse());
  const Prepared dst = prepare(dst_raw);
  const Prepared src = prepare(src_raw, kTruth.inverse().apply(Vec3(0, 0, 5)));
  FgrParams params;
  params.voxel_size = kVoxel;
  const RegistrationResult result = register_fgr(
      src.cloud.positions, src.features, dst.cloud.positions, dst.features,
      params);
  const Mat3 gram = result.dst_from_src.rotation().transpose() *
                    result.dst_from_src.rotation();
  CHECK((gram - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(result.fitness >= 0.0);
  CHECK(result.fitness <= 1.0);
  CHECK(result.inlier_rmse >= 0.0);
}

TEST_SUITE_END();
