#pragma once

#include <vector>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Static 3-d tree over a point set. Queries break distance ties by point
// index so results are deterministic.
class KdTree {
 public:
  explicit KdTree(std::vector<Vec3> points);

  size_t size() const { return points_.size(); }

  // Index of the nearest point, -1 if the tree is empty. Squared distance
  // written to d2 when given.
  int nearest(const Vec3& query, double* d2 = nullptr) const;

  // k nearest points, closest first.
  void knn(const Vec3& query, int k, std::vector<int>& indices,
           std::vector<double>& sq_dists) const;

  // All points within `radius`, ordered by (distance, index).
  void radius_search(const Vec3& query, double radius,
                     std::vector<int>& indices) const;

 private:
  struct Node {
    int axis = -1;        // -1 marks a leaf
    double split = 0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into order_
  };

  int build(int begin, int end, Vec3 lo, Vec3 hi);

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace labelfuse
