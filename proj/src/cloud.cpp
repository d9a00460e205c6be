#include "labelfuse/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "labelfuse/kdtree.hpp"

namespace labelfuse {

std::vector<Vec3> estimate_normals(const LabeledPointCloud& cloud,
                                   int neighbors, const Vec3& viewpoint) {
  if (neighbors < 3) {
    throw InvalidInputError("estimate_normals: need at least 3 neighbors");
  }
  if (static_cast<int>(cloud.size()) < neighbors) {
    throw InvalidInputError(
        "estimate_normals: cloud smaller than the neighborhood size");
  }
  KdTree tree(cloud.positions);
  std::vector<Vec3> normals(cloud.size(), Vec3::Zero());
  std::vector<int> idx;
  std::vector<double> d2;
  for (size_t i = 0; i < cloud.size(); ++i) {
    tree.knn(cloud.positions[i], neighbors, idx, d2);
    Vec3 mean = Vec3::Zero();
    for (int j : idx) {
      mean += cloud.positions[j];
    }
    mean /= static_cast<double>(idx.size());
    Mat3 cov = Mat3::Zero();
    for (int j : idx) {
      const Vec3 q = cloud.positions[j] - mean;
      cov += q * q.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 evals = eig.eigenvalues();  // ascending
    // Rank < 2: the points do not span a plane.
    if (!(evals[1] > evals[2] * 1e-10) || !(evals[2] > 0)) {
      continue;
    }
    Vec3 n = eig.eigenvectors().col(0);
    const double toward = n.dot(viewpoint - cloud.positions[i]);
    if (toward < 0) {
      n = -n;
    } else if (toward == 0) {
      // Normal perpendicular to the view ray: canonical sign instead.
      int c;
      n.cwiseAbs().maxCoeff(&c);
      if (n[c] < 0) {
        n = -n;
      }
    }
    normals[i] = n.normalized();
  }
  return normals;
}

namespace {

struct VoxelKey {
  int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
  bool operator<(const VoxelKey& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

struct VoxelAccum {
  Vec3 position = Vec3::Zero();
  Vec3 color = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  int count = 0;
  std::map<uint16_t, int> label_counts;
};

}  // namespace

LabeledPointCloud voxel_downsample(const LabeledPointCloud& cloud,
                                   double voxel_size) {
  if (!(voxel_size > 0)) {
    throw InvalidInputError("voxel_downsample: voxel size must be positive");
  }
  cloud.validate();
  std::map<VoxelKey, VoxelAccum> grid;
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    VoxelKey key{static_cast<int64_t>(std::floor(p.x() / voxel_size)),
                 static_cast<int64_t>(std::floor(p.y() / voxel_size)),
                 static_cast<int64_t>(std::floor(p.z() / voxel_size))};
    VoxelAccum& acc = grid[key];
    acc.position += p;
    if (cloud.has_colors()) {
      const Rgb8& c = cloud.colors[i];
      acc.color += Vec3(c.r, c.g, c.b);
    }
    if (cloud.has_normals()) {
      acc.normal += cloud.normals[i];
    }
    acc.label_counts[cloud.labels[i]]++;
    acc.count++;
  }
  LabeledPointCloud out;
  out.reserve(grid.size());
  for (const auto& [key, acc] : grid) {
    out.positions.push_back(acc.position / acc.count);
    if (cloud.has_colors()) {
      const Vec3 c = acc.color / acc.count;
      out.colors.push_back(Rgb8{static_cast<uint8_t>(std::lround(c.x())),
                                static_cast<uint8_t>(std::lround(c.y())),
                                static_cast<uint8_t>(std::lround(c.z()))});
    }
    if (cloud.has_normals()) {
      const double norm = acc.normal.norm();
      out.normals.push_back(norm > 1e-12 ? Vec3(acc.normal / norm)
                                         : Vec3::Zero());
    }
    // Majority label; std::map iteration gives the lower id on ties.
    uint16_t best_label = 0;
    int best_count = 0;
    for (const auto& [label, count] : acc.label_counts) {
      if (count > best_count) {
        best_count = count;
        best_label = label;
      }
    }
    out.labels.push_back(best_label);
  }
  if (!cloud.has_colors()) {
    out.colors.clear();
  }
  return out;
}

}  // namespace labelfuse
