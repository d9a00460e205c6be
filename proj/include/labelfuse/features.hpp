#pragma once

#include <array>
#include <vector>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// 33-bin fast point feature histogram (3 angular features, 11 bins each),
// normalized to sum 100 whenever the point has any neighbor in radius.
using FpfhFeature = std::array<double, 33>;

std::vector<FpfhFeature> compute_fpfh(const std::vector<Vec3>& points,
                                      const std::vector<Vec3>& normals,
                                      double radius);

// Index of the nearest feature in `set` by L2 distance, -1 if empty.
int nearest_feature(const FpfhFeature& query,
                    const std::vector<FpfhFeature>& set);

// One match per src point: (src index, dst index of nearest feature).
std::vector<std::pair<int, int>> match_features(
    const std::vector<FpfhFeature>& src, const std::vector<FpfhFeature>& dst);

// Matches that agree in both directions.
std::vector<std::pair<int, int>> match_features_reciprocal(
    const std::vector<FpfhFeature>& src, const std::vector<FpfhFeature>& dst);

}  // namespace labelfuse
