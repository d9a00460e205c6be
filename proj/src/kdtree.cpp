#include "labelfuse/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace labelfuse {

namespace {
constexpr int kLeafSize = 16;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (points_.empty()) {
    return;
  }
  Vec3 lo = points_[0], hi = points_[0];
  for (const Vec3& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()), lo, hi);
}

int KdTree::build(int begin, int end, Vec3 lo, Vec3 hi) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  Vec3 left_hi = hi, right_lo = lo;
  left_hi[axis] = split;
  right_lo[axis] = split;
  const int left = build(begin, mid, lo, left_hi);
  const int right = build(mid, end, right_lo, hi);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

int KdTree::nearest(const Vec3& query, double* d2) const {
  std::vector<int> idx;
  std::vector<double> dist;
  knn(query, 1, idx, dist);
  if (idx.empty()) {
    return -1;
  }
  if (d2) {
    *d2 = dist[0];
  }
  return idx[0];
}

void KdTree::knn(const Vec3& query, int k, std::vector<int>& indices,
                 std::vector<double>& sq_dists) const {
  indices.clear();
  sq_dists.clear();
  if (root_ < 0 || k <= 0) {
    return;
  }
  // Max-heap of (distance, index); worst candidate on top.
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry> heap;
  auto consider = [&](int pi) {
    const double d2 = (points_[pi] - query).squaredNorm();
    if (static_cast<int>(heap.size()) < k) {
      heap.emplace(d2, pi);
    } else if (Entry(d2, pi) < heap.top()) {
      heap.pop();
      heap.emplace(d2, pi);
    }
  };
  auto worst = [&] {
    return static_cast<int>(heap.size()) < k
               ? std::numeric_limits<double>::infinity()
               : heap.top().first;
  };
  // Iterative traversal, near child first.
  std::vector<std::pair<int, double>> stack;  // node, min squared dist
  stack.emplace_back(root_, 0.0);
  while (!stack.empty()) {
    auto [node_id, min_d2] = stack.back();
    stack.pop_back();
    if (min_d2 > worst()) {
      continue;
    }
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        consider(order_[i]);
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    const int near = delta <= 0 ? node.left : node.right;
    const int far = delta <= 0 ? node.right : node.left;
    stack.emplace_back(far, std::max(min_d2, delta * delta));
    stack.emplace_back(near, min_d2);
  }
  const size_t n = heap.size();
  indices.resize(n);
  sq_dists.resize(n);
  for (size_t i = n; i-- > 0;) {
    indices[i] = heap.top().second;
    sq_dists[i] = heap.top().first;
    heap.pop();
  }
}

void KdTree::radius_search(const Vec3& query, double radius,
                           std::vector<int>& indices) const {
  indices.clear();
  if (root_ < 0 || !(radius > 0)) {
    return;
  }
  const double r2 = radius * radius;
  std::vector<std::pair<double, int>> hits;
  std::vector<std::pair<int, double>> stack;
  stack.emplace_back(root_, 0.0);
  while (!stack.empty()) {
    auto [node_id, min_d2] = stack.back();
    stack.pop_back();
    if (min_d2 > r2) {
      continue;
    }
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int pi = order_[i];
        const double d2 = (points_[pi] - query).squaredNorm();
        if (d2 <= r2) {
          hits.emplace_back(d2, pi);
        }
      }
      continue;
    }
    const double delta = query[node.axis] - node.split;
    stack.emplace_back(node.left, delta <= 0 ? min_d2 : delta * delta);
    stack.emplace_back(node.right, delta <= 0 ? delta * delta : min_d2);
  }
  std::sort(hits.begin(), hits.end());
  indices.reserve(hits.size());
  for (const auto& [d2, pi] : hits) {
    indices.push_back(pi);
  }
}

}  // namespace labelfuse
