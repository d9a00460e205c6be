#pragma once

#include "labelfuse/geometry.hpp"
#include "labelfuse/registration.hpp"

namespace labelfuse {

struct OdometryParams {
  int pyramid_levels = 3;
  int max_iterations = 20;         // per level
  double max_corr_dist = 0.07;     // meters at the finest level, doubled
                                   // per coarser level
  double normal_angle_max_deg = 45.0;
  int min_associations = 100;      // at the coarsest level
};

// Frame-to-frame motion by projective data association and point-to-plane
// minimization over a depth pyramid. The result pose maps source-frame
// coordinates into the target frame. Fewer than min_associations at the
// coarsest level raises InsufficientOverlapError.
RegistrationResult rgbd_odometry(const RGBDFrame& target,
                                 const RGBDFrame& source,
                                 const RigidPose& init,
                                 const OdometryParams& params = {});

}  // namespace labelfuse
