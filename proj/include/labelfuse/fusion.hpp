#pragma once

#include <vector>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Per-view bundle for multi-view fusion. The normal map is optional
// (empty image); all rasters share dimensions.
struct FusionView {
  DepthImage depth;
  NormalImage normal;
  ColorImage color;
  LabelImage labels;
  RigidPose cam_from_world;
  Intrinsics intrinsics;

  void validate() const;
};

struct FusionParams {
  int min_consistent_views = 2;        // including the reference view
  double depth_tolerance = 0.01;       // relative |d_cand - d_proj| / d_proj
  double normal_tolerance_deg = 25.0;  // checked only when normals exist
  double reprojection_tolerance_px = 1.0;

  void validate() const;
};

// Indices {0, x, 2x, ...} below n_frames.
std::vector<int> select_reconstruction_frames(int n_frames, int stride);

struct ConsistencyResult {
  bool consistent = false;
  std::vector<int> supporters;  // indices into the candidate list
};

// Back-projects the reference pixel and reprojects it into each candidate
// view. A candidate supports the pixel when the reprojection lands
// in-bounds on a valid depth within the relative tolerance (and within the
// normal tolerance when both views carry normals). The pixel is consistent
// when reference + supporters reach min_consistent_views.
ConsistencyResult check_pixel_consistency(
    const FusionView& ref, int u, int v,
    const std::vector<const FusionView*>& candidates,
    const FusionParams& params);

// Single-pass dual-channel fusion: one point per consistent reference
// pixel not yet claimed by an earlier view; the position is the mean of
// the supporting back-projections, the color the mean of supporting
// colors, the label the majority over supporters with the reference as
// tie-break. Color and label are sampled from the same support set, so
// the two channels stay aligned by construction.
LabeledPointCloud fuse_views(const std::vector<FusionView>& views,
                             const FusionParams& params);

enum class FilterPolicy { kKeepLabeled, kKeepAll };

// keep-labeled drops every label-0 point; keep-all passes through.
LabeledPointCloud filter_labeled_cloud(const LabeledPointCloud& cloud,
                                       FilterPolicy policy);

}  // namespace labelfuse
