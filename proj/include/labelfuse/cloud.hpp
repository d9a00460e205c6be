#pragma once

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Per-point unit normals from the covariance of the `neighbors` nearest
// points, oriented toward `viewpoint`. Degenerate neighborhoods (rank < 2)
// yield the zero vector. Throws InvalidInputError when the cloud has fewer
// than `neighbors` points.
std::vector<Vec3> estimate_normals(const LabeledPointCloud& cloud,
                                   int neighbors,
                                   const Vec3& viewpoint = Vec3::Zero());

// Voxel-grid downsample: centroid per occupied voxel, mean color, majority
// label (ties to the lower id), mean renormalized normal when present.
// Output is ordered by voxel coordinate, so it is deterministic.
LabeledPointCloud voxel_downsample(const LabeledPointCloud& cloud,
                                   double voxel_size);

}  // namespace labelfuse
