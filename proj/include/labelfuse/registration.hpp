#pragma once

#include <cstdint>
#include <vector>

#include "labelfuse/features.hpp"
#include "labelfuse/geometry.hpp"

namespace labelfuse {

struct RegistrationResult {
  RigidPose dst_from_src;   // maps source coordinates into the target frame
  double fitness = 0;       // inlier fraction in [0, 1]
  double inlier_rmse = 0;   // meters, over inliers
};

// Fitness and RMSE of `pose` over the source points against the target
// within `max_corr_dist`.
RegistrationResult evaluate_registration(const std::vector<Vec3>& src,
                                         const std::vector<Vec3>& dst,
                                         const RigidPose& dst_from_src,
                                         double max_corr_dist);

struct RansacParams {
  double max_correspondence_distance = 0;  // required
  int max_iterations = 100000;
  double confidence = 0.999;
  double edge_length_ratio = 0.9;
  double fitness_floor = 0.1;
  uint64_t seed = 0;
};

// Feature-matched RANSAC over 4-point samples with edge-length and
// correspondence-distance pruning; throws RegistrationFailedError when the
// best fitness stays below the floor.
RegistrationResult register_ransac(const std::vector<Vec3>& src,
                                   const std::vector<FpfhFeature>& src_feat,
                                   const std::vector<Vec3>& dst,
                                   const std::vector<FpfhFeature>& dst_feat,
                                   const RansacParams& params);

struct FgrParams {
  double voxel_size = 0;   // sets the graduated mu schedule
  int max_iterations = 64;
  int mu_halving_interval = 4;
};

// Fast global registration: reciprocal feature matches refined by
// iteratively reweighted least squares on the Geman-McClure objective with
// mu halved from 4*voxel^2 down to voxel^2/4. Throws when fewer than 10
// reciprocal matches exist.
RegistrationResult register_fgr(const std::vector<Vec3>& src,
                                const std::vector<FpfhFeature>& src_feat,
                                const std::vector<Vec3>& dst,
                                const std::vector<FpfhFeature>& dst_feat,
                                const FgrParams& params);

struct IcpScale {
  double voxel = 0;           // 0 = no downsampling at this scale
  double max_corr_dist = 0;
  int max_iters = 30;
};

// Point-to-plane ICP over coarse-to-fine scales. The result never scores
// worse than the initialization at the finest scale; no correspondences at
// the coarsest scale raises InsufficientOverlapError.
RegistrationResult refine_multiscale_icp(const LabeledPointCloud& src,
                                         const LabeledPointCloud& dst,
                                         const RigidPose& init,
                                         const std::vector<IcpScale>& scales);

// Default coarse-to-fine schedule derived from a downsampling voxel.
std::vector<IcpScale> default_icp_scales(double voxel);

}  // namespace labelfuse
