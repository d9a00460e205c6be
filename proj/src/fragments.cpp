#include "labelfuse/fragments.hpp"

#include <string>

#include "labelfuse/cloud.hpp"

namespace labelfuse {

std::vector<Fragment> make_fragments(const std::vector<RGBDFrame>& frames,
                                     const std::vector<LabelImage>& labels,
                                     int frames_per_fragment,
                                     const OdometryParams& odo) {
  if (frames.empty()) {
    throw InvalidInputError("make_fragments: no frames");
  }
  if (frames.size() != labels.size()) {
    throw InvalidInputError("make_fragments: labels not aligned to frames");
  }
  if (frames_per_fragment < 1) {
    throw InvalidInputError("make_fragments: fragment size must be >= 1");
  }
  const int n = static_cast<int>(frames.size());
  // world_from_cam per frame by chaining frame-to-frame odometry.
  std::vector<RigidPose> world_from_cam(n);
  for (int t = 1; t < n; ++t) {
    const int frag_start = (t / frames_per_fragment) * frames_per_fragment;
    RegistrationResult rel;
    try {
      rel = rgbd_odometry(frames[t - 1], frames[t], RigidPose(), odo);
    } catch (const Error& e) {
      throw PipelineError("make_fragments: fragment [" +
                          std::to_string(frag_start) + ", " +
                          std::to_string(std::min(
                              frag_start + frames_per_fragment, n)) +
                          ") aborted: " + e.what());
    }
    world_from_cam[t] = world_from_cam[t - 1] * rel.dst_from_src;
  }
  std::vector<Fragment> fragments;
  for (int start = 0; start < n; start += frames_per_fragment) {
    const int end = std::min(start + frames_per_fragment, n);
    Fragment frag;
    frag.id = static_cast<int>(fragments.size());
    frag.start = start;
    frag.end = end;
    frag.world_from_fragment = world_from_cam[start];
    const RigidPose fragment_from_world = world_from_cam[start].inverse();
    for (int t = start; t < end; ++t) {
      const RigidPose fragment_from_cam =
          fragment_from_world * world_from_cam[t];
      frag.fragment_from_cam.push_back(fragment_from_cam);
      const LabeledPointCloud part =
          depth_to_cloud(frames[t].depth, frames[t].intrinsics,
                         fragment_from_cam.inverse(), &frames[t].color,
                         &labels[t]);
      frag.cloud.positions.insert(frag.cloud.positions.end(),
                                  part.positions.begin(),
                                  part.positions.end());
      frag.cloud.colors.insert(frag.cloud.colors.end(), part.colors.begin(),
                               part.colors.end());
      frag.cloud.labels.insert(frag.cloud.labels.end(), part.labels.begin(),
                               part.labels.end());
    }
    if (frag.cloud.size() == 0) {
      throw DegenerateFragmentError(
          "make_fragments: fragment [" + std::to_string(start) + ", " +
          std::to_string(end) + ") has an empty cloud");
    }
    fragments.push_back(std::move(frag));
  }
  return fragments;
}

PreprocessedFragment preprocess_fragment(const Fragment& frag,
                                         double voxel_down,
                                         double feature_radius) {
  if (!(voxel_down > 0)) {
    throw InvalidInputError("preprocess_fragment: voxel size must be positive");
  }
  PreprocessedFragment out;
  out.cloud = voxel_downsample(frag.cloud, voxel_down);
  if (out.cloud.size() == 0) {
    throw DegenerateFragmentError("preprocess_fragment: empty after downsample");
  }
  const int k = std::min<int>(30, static_cast<int>(out.cloud.size()));
  if (k >= 3) {
    // The sensor path runs through the fragment origin (first camera).
    out.cloud.normals = estimate_normals(out.cloud, k, Vec3::Zero());
  } else {
    out.cloud.normals.assign(out.cloud.size(), Vec3::Zero());
  }
  out.features =
      compute_fpfh(out.cloud.positions, out.cloud.normals, feature_radius);
  return out;
}

std::vector<RigidPose> register_fragments(
    const std::vector<Fragment>& fragments, GlobalRegistrationMethod method,
    const FragmentRegistrationParams& params) {
  if (fragments.empty()) {
    throw InvalidInputError("register_fragments: no fragments");
  }
  std::vector<RigidPose> world_from_fragment;
  world_from_fragment.push_back(fragments[0].world_from_fragment);
  if (fragments.size() == 1) {
    return world_from_fragment;
  }
  const double voxel = params.voxel_down;
  const double radius = params.effective_feature_radius();
  std::vector<PreprocessedFragment> pre(fragments.size());
  for (size_t i = 0; i < fragments.size(); ++i) {
    pre[i] = preprocess_fragment(fragments[i], voxel, radius);
  }
  const std::vector<IcpScale> scales = default_icp_scales(voxel);
  for (size_t i = 0; i + 1 < fragments.size(); ++i) {
    const Fragment& dst = fragments[i];
    const Fragment& src = fragments[i + 1];
    // Candidate 1: odometry-chained prior.
    const RigidPose prior = dst.world_from_fragment.inverse() *
                            src.world_from_fragment;
    RegistrationResult best;
    bool have_candidate = false;
    std::string failures;
    try {
      best = refine_multiscale_icp(src.cloud, dst.cloud, prior, scales);
      have_candidate = true;
    } catch (const Error& e) {
      failures = std::string("prior: ") + e.what();
    }
    // Candidate 2: global registration, refined the same way.
    try {
      RegistrationResult global;
      if (method == GlobalRegistrationMethod::kRansac) {
        RansacParams rp;
        rp.max_correspondence_distance = 1.5 * voxel;
        rp.fitness_floor = params.fitness_floor;
        rp.seed = params.seed + i;
        global = register_ransac(pre[i + 1].cloud.positions,
                                 pre[i + 1].features, pre[i].cloud.positions,
                                 pre[i].features, rp);
      } else {
        FgrParams fp;
        fp.voxel_size = voxel;
        global = register_fgr(pre[i + 1].cloud.positions, pre[i + 1].features,
                              pre[i].cloud.positions, pre[i].features, fp);
      }
      const RegistrationResult refined = refine_multiscale_icp(
          src.cloud, dst.cloud, global.dst_from_src, scales);
      // The prior wins ties: trust odometry unless global registration is
      // clearly better after refinement.
      if (!have_candidate || refined.fitness > best.fitness + 1e-6) {
        best = refined;
        have_candidate = true;
      }
    } catch (const Error& e) {
      if (!failures.empty()) {
        failures += "; ";
      }
      failures += std::string("global: ") + e.what();
    }
    if (!have_candidate) {
      throw PipelineError("register_fragments: pair (" + std::to_string(i) +
                          ", " + std::to_string(i + 1) + ") failed: " +
                          failures);
    }
    world_from_fragment.push_back(world_from_fragment.back() *
                                  best.dst_from_src);
  }
  return world_from_fragment;
}

}  // namespace labelfuse
