#include "labelfuse/registration.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "labelfuse/cloud.hpp"
#include "labelfuse/kdtree.hpp"

namespace labelfuse {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

RigidPose exp_update(const Vec6& delta) {
  const Vec3 omega = delta.head<3>();
  const double angle = omega.norm();
  Mat3 r = Mat3::Identity();
  if (angle > 1e-14) {
    r = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  }
  return RigidPose(r, delta.tail<3>());
}

// Closed-form weighted point-to-point alignment (Kabsch).
RigidPose weighted_kabsch(const std::vector<Vec3>& src,
                          const std::vector<Vec3>& dst,
                          const std::vector<std::pair<int, int>>& pairs,
                          const std::vector<double>& weights) {
  double wsum = 0;
  Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
  for (size_t i = 0; i < pairs.size(); ++i) {
    wsum += weights[i];
    cs += weights[i] * src[pairs[i].first];
    cd += weights[i] * dst[pairs[i].second];
  }
  if (!(wsum > 0)) {
    throw RegistrationFailedError("alignment: zero total weight");
  }
  cs /= wsum;
  cd /= wsum;
  Mat3 h = Mat3::Zero();
  for (size_t i = 0; i < pairs.size(); ++i) {
    h += weights[i] * (src[pairs[i].first] - cs) *
         (dst[pairs[i].second] - cd).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixV() * svd.matrixU().transpose();
  if (r.determinant() < 0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1;
    r = svd.matrixV() * flip * svd.matrixU().transpose();
  }
  return RigidPose(r, cd - r * cs);
}

}  // namespace

RegistrationResult evaluate_registration(const std::vector<Vec3>& src,
                                         const std::vector<Vec3>& dst,
                                         const RigidPose& dst_from_src,
                                         double max_corr_dist) {
  RegistrationResult result;
  result.dst_from_src = dst_from_src;
  if (src.empty() || dst.empty()) {
    return result;
  }
  KdTree tree(dst);
  const double max_d2 = max_corr_dist * max_corr_dist;
  size_t inliers = 0;
  double sq_sum = 0;
  for (const Vec3& p : src) {
    double d2 = 0;
    tree.nearest(dst_from_src.apply(p), &d2);
    if (d2 <= max_d2) {
      ++inliers;
      sq_sum += d2;
    }
  }
  result.fitness = static_cast<double>(inliers) / src.size();
  result.inlier_rmse = inliers ? std::sqrt(sq_sum / inliers) : 0.0;
  return result;
}

RegistrationResult register_ransac(const std::vector<Vec3>& src,
                                   const std::vector<FpfhFeature>& src_feat,
                                   const std::vector<Vec3>& dst,
                                   const std::vector<FpfhFeature>& dst_feat,
                                   const RansacParams& params) {
  if (src.size() != src_feat.size() || dst.size() != dst_feat.size()) {
    throw InvalidInputError("register_ransac: features not parallel");
  }
  if (!(params.max_correspondence_distance > 0)) {
    throw InvalidInputError("register_ransac: correspondence distance unset");
  }
  const auto matches = match_features(src_feat, dst_feat);
  if (matches.size() < 4) {
    throw RegistrationFailedError("register_ransac: fewer than 4 matches");
  }
  KdTree dst_tree(dst);
  const double max_dist = params.max_correspondence_distance;
  const double max_d2 = max_dist * max_dist;

  const auto evaluate_over_matches = [&](const RigidPose& pose) {
    size_t inliers = 0;
    double sq_sum = 0;
    for (const auto& [si, di] : matches) {
      const double d2 = (pose.apply(src[si]) - dst[di]).squaredNorm();
      if (d2 <= max_d2) {
        ++inliers;
        sq_sum += d2;
      }
    }
    RegistrationResult r;
    r.dst_from_src = pose;
    r.fitness = static_cast<double>(inliers) / matches.size();
    r.inlier_rmse = inliers ? std::sqrt(sq_sum / inliers) : 0.0;
    return r;
  };

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<size_t> pick(0, matches.size() - 1);
  RegistrationResult best;
  best.fitness = -1;
  const std::vector<double> unit_weights(4, 1.0);
  std::vector<std::pair<int, int>> sample(4);
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    for (int s = 0; s < 4; ++s) {
      sample[s] = matches[pick(rng)];
    }
    // Edge-length pruning: corresponding edges must have similar length.
    bool pruned = false;
    for (int a = 0; a < 4 && !pruned; ++a) {
      for (int b = a + 1; b < 4 && !pruned; ++b) {
        const double ls = (src[sample[a].first] - src[sample[b].first]).norm();
        const double ld =
            (dst[sample[a].second] - dst[sample[b].second]).norm();
        if (ls < 1e-12 || ld < 1e-12 ||
            std::min(ls, ld) < params.edge_length_ratio * std::max(ls, ld)) {
          pruned = true;
        }
      }
    }
    if (pruned) {
      continue;
    }
    RigidPose pose;
    try {
      pose = weighted_kabsch(src, dst, sample, unit_weights);
    } catch (const Error&) {
      continue;
    }
    // The sampled correspondences themselves must land close.
    bool sample_ok = true;
    for (const auto& [si, di] : sample) {
      if ((pose.apply(src[si]) - dst[di]).norm() > max_dist) {
        sample_ok = false;
        break;
      }
    }
    if (!sample_ok) {
      continue;
    }
    const RegistrationResult candidate = evaluate_over_matches(pose);
    if (candidate.fitness > best.fitness ||
        (candidate.fitness == best.fitness &&
         candidate.inlier_rmse < best.inlier_rmse)) {
      best = candidate;
      // 0.999-confidence early exit.
      const double w = std::clamp(best.fitness, 1e-6, 1.0 - 1e-12);
      const double needed = std::log(1.0 - params.confidence) /
                            std::log(1.0 - w * w * w * w);
      if (iter + 1 >= needed) {
        break;
      }
    }
  }
  if (best.fitness < params.fitness_floor) {
    throw RegistrationFailedError(
        "register_ransac: fitness " + std::to_string(std::max(0.0, best.fitness)) +
        " below floor " + std::to_string(params.fitness_floor));
  }
  // Report fitness/RMSE against the full target, as other methods do.
  RegistrationResult final_result =
      evaluate_registration(src, dst, best.dst_from_src, max_dist);
  return final_result;
}

RegistrationResult register_fgr(const std::vector<Vec3>& src,
                                const std::vector<FpfhFeature>& src_feat,
                                const std::vector<Vec3>& dst,
                                const std::vector<FpfhFeature>& dst_feat,
                                const FgrParams& params) {
  if (src.size() != src_feat.size() || dst.size() != dst_feat.size()) {
    throw InvalidInputError("register_fgr: features not parallel");
  }
  if (!(params.voxel_size > 0)) {
    throw InvalidInputError("register_fgr: voxel size must be positive");
  }
  const auto matches = match_features_reciprocal(src_feat, dst_feat);
  if (matches.size() < 10) {
    throw RegistrationFailedError(
        "register_fgr: only " + std::to_string(matches.size()) +
        " reciprocal matches");
  }
  const double v2 = params.voxel_size * params.voxel_size;
  double mu = 4.0 * v2;
  const double mu_floor = v2 / 4.0;
  RigidPose pose;
  std::vector<double> weights(matches.size());
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    if (iter > 0 && iter % params.mu_halving_interval == 0) {
      mu = std::max(mu / 2.0, mu_floor);
    }
    // Geman-McClure weights under the current mu.
    for (size_t i = 0; i < matches.size(); ++i) {
      const double r2 =
          (pose.apply(src[matches[i].first]) - dst[matches[i].second])
              .squaredNorm();
      const double w = mu / (mu + r2);
      weights[i] = w * w;
    }
    pose = weighted_kabsch(src, dst, matches, weights);
  }
  return evaluate_registration(src, dst, pose,
                               1.5 * params.voxel_size);
}

namespace {

struct IcpIteration {
  double fitness = 0;
  double rmse = 0;
};

// One point-to-plane Gauss-Newton step; returns the iteration metrics and
// writes the updated pose.
IcpIteration icp_step(const std::vector<Vec3>& src,
                      const std::vector<Vec3>& dst,
                      const std::vector<Vec3>& dst_normals,
                      const KdTree& dst_tree, double max_corr_dist,
                      RigidPose& pose, bool update) {
  const double max_d2 = max_corr_dist * max_corr_dist;
  Mat6 h = Mat6::Zero();
  Vec6 g = Vec6::Zero();
  size_t inliers = 0;
  double sq_sum = 0;
  for (const Vec3& p : src) {
    const Vec3 tp = pose.apply(p);
    double d2 = 0;
    const int j = dst_tree.nearest(tp, &d2);
    if (j < 0 || d2 > max_d2) {
      continue;
    }
    ++inliers;
    sq_sum += d2;
    const Vec3& n = dst_normals[j];
    if (n.isZero()) {
      continue;
    }
    const double r = (tp - dst[j]).dot(n);
    Vec6 jac;
    jac.head<3>() = tp.cross(n);
    jac.tail<3>() = n;
    h += jac * jac.transpose();
    g += jac * r;
  }
  IcpIteration it;
  if (inliers == 0) {
    return it;
  }
  it.fitness = static_cast<double>(inliers) / src.size();
  it.rmse = std::sqrt(sq_sum / inliers);
  if (update) {
    // Tikhonov damping keeps rank-deficient geometry (e.g. surfaces of
    // revolution) from drifting along their symmetry.
    const double lambda = std::max(1e-9, 1e-9 * h.diagonal().maxCoeff());
    const Vec6 delta = (h + lambda * Mat6::Identity()).ldlt().solve(-g);
    pose = exp_update(delta) * pose;
  }
  return it;
}

}  // namespace

std::vector<IcpScale> default_icp_scales(double voxel) {
  return {{4 * voxel, 8 * voxel, 50},
          {2 * voxel, 4 * voxel, 30},
          {voxel, 2 * voxel, 14}};
}

RegistrationResult refine_multiscale_icp(const LabeledPointCloud& src,
                                         const LabeledPointCloud& dst,
                                         const RigidPose& init,
                                         const std::vector<IcpScale>& scales) {
  if (scales.empty()) {
    throw InvalidInputError("refine_multiscale_icp: no scales given");
  }
  if (src.size() == 0 || dst.size() == 0) {
    throw InvalidInputError("refine_multiscale_icp: empty cloud");
  }
  RigidPose pose = init;
  for (size_t si = 0; si < scales.size(); ++si) {
    const IcpScale& scale = scales[si];
    const LabeledPointCloud src_down =
        scale.voxel > 0 ? voxel_downsample(src, scale.voxel) : src;
    const LabeledPointCloud dst_down =
        scale.voxel > 0 ? voxel_downsample(dst, scale.voxel) : dst;
    if (src_down.size() == 0 || dst_down.size() == 0) {
      continue;
    }
    const int k = std::min<int>(30, static_cast<int>(dst_down.size()));
    std::vector<Vec3> normals;
    if (k >= 3) {
      normals = estimate_normals(dst_down, k);
    } else {
      normals.assign(dst_down.size(), Vec3::Zero());
    }
    KdTree tree(dst_down.positions);
    IcpIteration prev;
    bool any = false;
    for (int iter = 0; iter < scale.max_iters; ++iter) {
      const IcpIteration it = icp_step(src_down.positions, dst_down.positions,
                                       normals, tree, scale.max_corr_dist,
                                       pose, /*update=*/true);
      if (it.fitness == 0) {
        break;
      }
      any = true;
      if (iter > 0 &&
          std::abs(it.fitness - prev.fitness) < 1e-6 &&
          std::abs(it.rmse - prev.rmse) < 1e-6 * std::max(1.0, prev.rmse)) {
        prev = it;
        break;
      }
      prev = it;
    }
    if (!any && si == 0) {
      throw InsufficientOverlapError(
          "refine_multiscale_icp: no correspondences at the coarsest scale");
    }
  }
  // Final score at the finest scale. The contract is monotone: fall back
  // to the initialization if refinement degraded either metric.
  const double final_dist = scales.back().max_corr_dist;
  RegistrationResult refined =
      evaluate_registration(src.positions, dst.positions, pose, final_dist);
  RegistrationResult initial =
      evaluate_registration(src.positions, dst.positions, init, final_dist);
  if (initial.fitness > 0 &&
      (refined.fitness < initial.fitness ||
       refined.inlier_rmse > initial.inlier_rmse)) {
    return initial;
  }
  return refined;
}

}  // namespace labelfuse
