#include "labelfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace labelfuse {

void FusionView::validate() const {
  intrinsics.validate();
  if (depth.width != intrinsics.width || depth.height != intrinsics.height) {
    throw InvalidInputError("fusion view: depth does not match intrinsics");
  }
  if (!depth.same_size(color) || !depth.same_size(labels)) {
    throw InvalidInputError("fusion view: raster dimensions differ");
  }
  if (!normal.empty() && !depth.same_size(normal)) {
    throw InvalidInputError("fusion view: normal dimensions differ");
  }
}

void FusionParams::validate() const {
  if (min_consistent_views < 1) {
    throw InvalidInputError("fusion params: min views must be >= 1");
  }
  if (!(depth_tolerance > 0) || !(normal_tolerance_deg > 0) ||
      !(reprojection_tolerance_px > 0)) {
    throw InvalidInputError("fusion params: tolerances must be positive");
  }
}

std::vector<int> select_reconstruction_frames(int n_frames, int stride) {
  if (stride < 1) {
    throw InvalidInputError("select_reconstruction_frames: stride must be >= 1");
  }
  std::vector<int> frames;
  for (int i = 0; i < n_frames; i += stride) {
    frames.push_back(i);
  }
  return frames;
}

namespace {

struct Support {
  int candidate;   // index into the candidate list
  int px, py;      // pixel hit in the candidate view
  Vec3 position;   // candidate's back-projection, world frame
};

// Core test shared by check_pixel_consistency and fuse_views.
bool find_support(const Vec3& world, const Vec3& ref_normal_world,
                  const FusionView& cand, const FusionParams& params,
                  Support* out) {
  const Vec3 p_cam = cand.cam_from_world.apply(world);
  if (!(p_cam.z() > 0)) {
    return false;
  }
  const PixelDepth proj = project_point(p_cam, cand.intrinsics);
  const int px = static_cast<int>(std::lround(proj.u));
  const int py = static_cast<int>(std::lround(proj.v));
  if (!cand.intrinsics.contains(px, py)) {
    return false;
  }
  if (std::abs(proj.u - px) > params.reprojection_tolerance_px ||
      std::abs(proj.v - py) > params.reprojection_tolerance_px) {
    return false;
  }
  const double d_cand = cand.depth.at(px, py);
  if (!(d_cand > 0)) {
    return false;
  }
  if (std::abs(d_cand - proj.depth) / proj.depth > params.depth_tolerance) {
    return false;
  }
  if (!ref_normal_world.isZero() && !cand.normal.empty()) {
    const Vec3 n_cand = cand.normal.at(px, py);
    if (!n_cand.isZero()) {
      const Vec3 n_world =
          cand.cam_from_world.rotation().transpose() * n_cand;
      const double limit =
          std::cos(params.normal_tolerance_deg * M_PI / 180.0);
      if (std::abs(n_world.dot(ref_normal_world)) < limit) {
        return false;
      }
    }
  }
  if (out) {
    out->px = px;
    out->py = py;
    const Vec3 back = backproject_pixel(px, py, d_cand, cand.intrinsics);
    out->position = cand.cam_from_world.apply_inverse(back);
  }
  return true;
}

Vec3 ref_normal_in_world(const FusionView& ref, int u, int v) {
  if (ref.normal.empty()) {
    return Vec3::Zero();
  }
  const Vec3 n = ref.normal.at(u, v);
  if (n.isZero()) {
    return Vec3::Zero();
  }
  return ref.cam_from_world.rotation().transpose() * n;
}

}  // namespace

ConsistencyResult check_pixel_consistency(
    const FusionView& ref, int u, int v,
    const std::vector<const FusionView*>& candidates,
    const FusionParams& params) {
  params.validate();
  if (!ref.intrinsics.contains(u, v) || !(ref.depth.at(u, v) > 0)) {
    throw InvalidInputError("check_pixel_consistency: invalid reference pixel");
  }
  const Vec3 p_cam =
      backproject_pixel(u, v, ref.depth.at(u, v), ref.intrinsics);
  const Vec3 world = ref.cam_from_world.apply_inverse(p_cam);
  const Vec3 n_world = ref_normal_in_world(ref, u, v);
  ConsistencyResult result;
  for (size_t ci = 0; ci < candidates.size(); ++ci) {
    Support support{static_cast<int>(ci), 0, 0, Vec3::Zero()};
    if (find_support(world, n_world, *candidates[ci], params, &support)) {
      result.supporters.push_back(static_cast<int>(ci));
    }
  }
  result.consistent = 1 + static_cast<int>(result.supporters.size()) >=
                      params.min_consistent_views;
  return result;
}

LabeledPointCloud fuse_views(const std::vector<FusionView>& views,
                             const FusionParams& params) {
  params.validate();
  if (views.empty()) {
    throw InvalidInputError("fuse_views: need at least one view");
  }
  for (const FusionView& view : views) {
    view.validate();
  }
  std::vector<std::vector<uint8_t>> consumed(views.size());
  for (size_t i = 0; i < views.size(); ++i) {
    consumed[i].assign(views[i].depth.data.size(), 0);
  }
  LabeledPointCloud cloud;
  std::vector<Support> supports;
  for (size_t ref_i = 0; ref_i < views.size(); ++ref_i) {
    const FusionView& ref = views[ref_i];
    for (int v = 0; v < ref.intrinsics.height; ++v) {
      for (int u = 0; u < ref.intrinsics.width; ++u) {
        const size_t flat = static_cast<size_t>(v) * ref.intrinsics.width + u;
        if (consumed[ref_i][flat]) {
          continue;
        }
        const double d = ref.depth.at(u, v);
        if (!(d > 0)) {
          continue;
        }
        const Vec3 p_cam = backproject_pixel(u, v, d, ref.intrinsics);
        const Vec3 world = ref.cam_from_world.apply_inverse(p_cam);
        const Vec3 n_world = ref_normal_in_world(ref, u, v);
        supports.clear();
        for (size_t ci = 0; ci < views.size(); ++ci) {
          if (ci == ref_i) {
            continue;
          }
          Support support{static_cast<int>(ci), 0, 0, Vec3::Zero()};
          if (find_support(world, n_world, views[ci], params, &support)) {
            supports.push_back(support);
          }
        }
        if (1 + static_cast<int>(supports.size()) <
            params.min_consistent_views) {
          continue;
        }
        // Position/color means and label vote over the same support set.
        Vec3 position = world;
        Vec3 color_sum = Vec3::Zero();
        const Rgb8 ref_color = ref.color.at(u, v);
        color_sum += Vec3(ref_color.r, ref_color.g, ref_color.b);
        std::map<uint16_t, int> votes;
        const uint16_t ref_label = ref.labels.at(u, v);
        votes[ref_label]++;
        for (const Support& s : supports) {
          position += s.position;
          const Rgb8 c = views[s.candidate].color.at(s.px, s.py);
          color_sum += Vec3(c.r, c.g, c.b);
          votes[views[s.candidate].labels.at(s.px, s.py)]++;
          const size_t sflat =
              static_cast<size_t>(s.py) * views[s.candidate].intrinsics.width +
              s.px;
          consumed[s.candidate][sflat] = 1;
        }
        consumed[ref_i][flat] = 1;
        const double n = 1.0 + supports.size();
        position /= n;
        const Vec3 mean_color = color_sum / n;
        uint16_t best_label = ref_label;
        int best_votes = votes[ref_label];
        for (const auto& [label, count] : votes) {
          if (count > best_votes) {
            best_votes = count;
            best_label = label;
          }
        }
        cloud.positions.push_back(position);
        cloud.colors.push_back(
            Rgb8{static_cast<uint8_t>(std::lround(mean_color.x())),
                 static_cast<uint8_t>(std::lround(mean_color.y())),
                 static_cast<uint8_t>(std::lround(mean_color.z()))});
        cloud.labels.push_back(best_label);
      }
    }
  }
  return cloud;
}

LabeledPointCloud filter_labeled_cloud(const LabeledPointCloud& cloud,
                                       FilterPolicy policy) {
  cloud.validate();
  if (policy == FilterPolicy::kKeepAll) {
    return cloud;
  }
  LabeledPointCloud out;
  out.reserve(cloud.size());
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.labels[i] == 0) {
      continue;
    }
    out.positions.push_back(cloud.positions[i]);
    if (cloud.has_colors()) {
      out.colors.push_back(cloud.colors[i]);
    }
    if (cloud.has_normals()) {
      out.normals.push_back(cloud.normals[i]);
    }
    out.labels.push_back(cloud.labels[i]);
  }
  if (!cloud.has_colors()) {
    out.colors.clear();
  }
  return out;
}

}  // namespace labelfuse
