#pragma once

#include <vector>

#include "labelfuse/features.hpp"
#include "labelfuse/geometry.hpp"
#include "labelfuse/odometry.hpp"
#include "labelfuse/registration.hpp"

namespace labelfuse {

// A chunk of consecutive frames fused into one local point cloud. The
// fragment frame is the first frame's camera frame; `fragment_from_cam`
// holds the per-frame odometry poses within the chunk.
struct Fragment {
  int id = 0;
  RigidPose world_from_fragment;
  LabeledPointCloud cloud;  // fragment frame
  int start = 0, end = 0;   // frame range [start, end)
  std::vector<RigidPose> fragment_from_cam;  // one per frame in range
};

// Chains frame-to-frame odometry and groups frames into fragments of
// `frames_per_fragment`. Fragment poses continue the odometry chain across
// chunk boundaries. Odometry failures abort with the fragment's frame
// range in the message.
std::vector<Fragment> make_fragments(const std::vector<RGBDFrame>& frames,
                                     const std::vector<LabelImage>& labels,
                                     int frames_per_fragment,
                                     const OdometryParams& odo = {});

struct PreprocessedFragment {
  LabeledPointCloud cloud;  // downsampled, with normals
  std::vector<FpfhFeature> features;
};

// Voxel downsample + normals + FPFH. Empty downsample result raises
// DegenerateFragmentError.
PreprocessedFragment preprocess_fragment(const Fragment& frag,
                                         double voxel_down,
                                         double feature_radius);

enum class GlobalRegistrationMethod { kRansac, kFgr };

struct FragmentRegistrationParams {
  double voxel_down = 0.016;
  double feature_radius = 0.0;  // 0 = 5 * voxel_down
  double fitness_floor = 0.1;
  uint64_t seed = 0;

  double effective_feature_radius() const {
    return feature_radius > 0 ? feature_radius : 5 * voxel_down;
  }
};

// Registers adjacent fragment pairs: the odometry-chained prior competes
// with global registration, both candidates are refined by multiscale ICP
// and the higher post-ICP fitness wins. Returns one world pose per
// fragment, chained from fragment 0.
std::vector<RigidPose> register_fragments(
    const std::vector<Fragment>& fragments, GlobalRegistrationMethod method,
    const FragmentRegistrationParams& params);

}  // namespace labelfuse
