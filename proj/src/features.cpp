#include "labelfuse/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "labelfuse/kdtree.hpp"

namespace labelfuse {

namespace {

// Darboux-frame pair features (alpha, phi, theta) between two oriented
// points; returns false for degenerate geometry.
bool pair_features(const Vec3& p1, const Vec3& n1, const Vec3& p2,
                   const Vec3& n2, double& alpha, double& phi,
                   double& theta) {
  Vec3 dp = p2 - p1;
  const double dist = dp.norm();
  if (!(dist > 0)) {
    return false;
  }
  dp /= dist;
  // The point whose normal is closer to the connecting line is the source.
  // Near-ties (common on flat regions where normals coincide) stay
  // unswapped so the choice is stable under rigid motion of the inputs.
  Vec3 ns = n1, nt = n2;
  double angle1 = ns.dot(dp);
  const double angle2 = nt.dot(dp);
  if (std::abs(angle2) - std::abs(angle1) > 1e-8) {
    std::swap(ns, nt);
    dp = -dp;
    angle1 = -angle2;
  }
  Vec3 v = dp.cross(ns);
  const double v_norm = v.norm();
  if (!(v_norm > 1e-12)) {
    return false;
  }
  v /= v_norm;
  const Vec3 w = ns.cross(v);
  alpha = v.dot(nt);
  phi = angle1;
  theta = std::atan2(w.dot(nt), ns.dot(nt));
  return true;
}

void accumulate_spfh(const Vec3& p1, const Vec3& n1, const Vec3& p2,
                     const Vec3& n2, FpfhFeature& hist) {
  double alpha, phi, theta;
  if (!pair_features(p1, n1, p2, n2, alpha, phi, theta)) {
    return;
  }
  const auto bin = [](double value, double lo, double hi) {
    const int b = static_cast<int>(11.0 * (value - lo) / (hi - lo));
    return std::clamp(b, 0, 10);
  };
  hist[bin(alpha, -1, 1)] += 1;
  hist[11 + bin(phi, -1, 1)] += 1;
  hist[22 + bin(theta, -M_PI, M_PI)] += 1;
}

}  // namespace

std::vector<FpfhFeature> compute_fpfh(const std::vector<Vec3>& points,
                                      const std::vector<Vec3>& normals,
                                      double radius) {
  if (points.size() != normals.size()) {
    throw InvalidInputError("compute_fpfh: normals not parallel to points");
  }
  if (!(radius > 0)) {
    throw InvalidInputError("compute_fpfh: radius must be positive");
  }
  const size_t n = points.size();
  KdTree tree(points);
  std::vector<std::vector<int>> neighborhoods(n);
  std::vector<FpfhFeature> spfh(n, FpfhFeature{});
  std::vector<int> found;
  for (size_t i = 0; i < n; ++i) {
    tree.radius_search(points[i], radius, found);
    auto& nbrs = neighborhoods[i];
    nbrs.reserve(found.size());
    for (int j : found) {
      if (static_cast<size_t>(j) != i) {
        nbrs.push_back(j);
      }
    }
    if (normals[i].isZero()) {
      continue;
    }
    for (int j : nbrs) {
      if (normals[j].isZero()) {
        continue;
      }
      accumulate_spfh(points[i], normals[i], points[j], normals[j], spfh[i]);
    }
  }
  std::vector<FpfhFeature> fpfh(n, FpfhFeature{});
  for (size_t i = 0; i < n; ++i) {
    FpfhFeature acc = spfh[i];
    const auto& nbrs = neighborhoods[i];
    if (!nbrs.empty()) {
      for (int j : nbrs) {
        const double w = (points[j] - points[i]).norm();
        if (!(w > 0)) {
          continue;
        }
        for (int b = 0; b < 33; ++b) {
          acc[b] += spfh[j][b] / (w * nbrs.size());
        }
      }
    }
    double sum = 0;
    for (double v : acc) {
      sum += v;
    }
    if (sum > 0) {
      for (int b = 0; b < 33; ++b) {
        fpfh[i][b] = acc[b] * 100.0 / sum;
      }
    }
  }
  return fpfh;
}

int nearest_feature(const FpfhFeature& query,
                    const std::vector<FpfhFeature>& set) {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < set.size(); ++j) {
    double d2 = 0;
    for (int b = 0; b < 33 && d2 < best_d2; ++b) {
      const double d = query[b] - set[j][b];
      d2 += d * d;
    }
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(j);
    }
  }
  return best;
}

std::vector<std::pair<int, int>> match_features(
    const std::vector<FpfhFeature>& src,
    const std::vector<FpfhFeature>& dst) {
  std::vector<std::pair<int, int>> matches;
  matches.reserve(src.size());
  for (size_t i = 0; i < src.size(); ++i) {
    const int j = nearest_feature(src[i], dst);
    if (j >= 0) {
      matches.emplace_back(static_cast<int>(i), j);
    }
  }
  return matches;
}

std::vector<std::pair<int, int>> match_features_reciprocal(
    const std::vector<FpfhFeature>& src,
    const std::vector<FpfhFeature>& dst) {
  std::vector<int> dst_to_src(dst.size());
  for (size_t j = 0; j < dst.size(); ++j) {
    dst_to_src[j] = nearest_feature(dst[j], src);
  }
  std::vector<std::pair<int, int>> matches;
  for (size_t i = 0; i < src.size(); ++i) {
    const int j = nearest_feature(src[i], dst);
    if (j >= 0 && dst_to_src[j] == static_cast<int>(i)) {
      matches.emplace_back(static_cast<int>(i), j);
    }
  }
  return matches;
}

}  // namespace labelfuse
