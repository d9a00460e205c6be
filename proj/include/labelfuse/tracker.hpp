#pragma once

#include <map>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

struct TrackerConfig {
  int search_radius = 8;            // pixels, per-label translation search
  double color_threshold = 0.12;    // normalized RGB distance in [0, 1]
  int min_region_area = 4;          // pixels; below this a label is lost

  void validate() const;
};

struct PropagationResult {
  LabelImage mask;
  std::vector<uint16_t> lost_labels;  // ascending
};

// Propagate every label region of `previous_mask` from `previous` to
// `current`: per label, the integer translation inside the search radius
// that maximizes color agreement, followed by one boundary refinement pass
// against the region's mean color. Regions that shrink below the minimum
// area are dropped and reported lost.
PropagationResult propagate_mask(const ColorImage& current,
                                 const ColorImage& previous,
                                 const LabelImage& previous_mask,
                                 const TrackerConfig& cfg);

// Frame 0 output is the frame-0 seed; later frames propagate from the
// previous output unless the frame has its own seed, which replaces the
// propagated mask (the correction hook).
std::vector<LabelImage> track_sequence(
    const std::vector<ColorImage>& images,
    const std::map<size_t, LabelImage>& seed_masks, const TrackerConfig& cfg);

}  // namespace labelfuse
