#include "labelfuse/odometry.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

namespace labelfuse {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct PyramidLevel {
  DepthImage depth;
  Intrinsics intrinsics;
  NormalImage vertices;  // camera-frame points, zero = invalid
  NormalImage normals;   // camera-frame unit normals, zero = invalid

  // Sub-pixel vertex from bilinear depth across a depth-continuous patch;
  // falls back to the nearest pixel at discontinuities. Returns false when
  // no valid sample exists.
  bool sample(double u, double v, Vec3& vertex, Vec3& normal) const {
    const int px = static_cast<int>(std::lround(u));
    const int py = static_cast<int>(std::lround(v));
    if (!intrinsics.contains(px, py)) {
      return false;
    }
    const Vec3& nearest_vertex = vertices.at(px, py);
    const Vec3& nearest_normal = normals.at(px, py);
    if (nearest_vertex.isZero() || nearest_normal.isZero()) {
      return false;
    }
    const int x0 = static_cast<int>(std::floor(u));
    const int y0 = static_cast<int>(std::floor(v));
    if (x0 >= 0 && y0 >= 0 && x0 + 1 < intrinsics.width &&
        y0 + 1 < intrinsics.height) {
      const double d00 = depth.at(x0, y0), d10 = depth.at(x0 + 1, y0);
      const double d01 = depth.at(x0, y0 + 1), d11 = depth.at(x0 + 1, y0 + 1);
      if (d00 > 0 && d10 > 0 && d01 > 0 && d11 > 0) {
        const double dmin = std::min({d00, d10, d01, d11});
        const double dmax = std::max({d00, d10, d01, d11});
        if (dmax - dmin < 0.05 * dmin) {
          const double fx = u - x0, fy = v - y0;
          const double d = (d00 * (1 - fx) + d10 * fx) * (1 - fy) +
                           (d01 * (1 - fx) + d11 * fx) * fy;
          vertex = backproject_pixel(u, v, d, intrinsics);
          normal = nearest_normal;
          return true;
        }
      }
    }
    vertex = nearest_vertex;
    normal = nearest_normal;
    return true;
  }
};

PyramidLevel make_level(const DepthImage& depth, const Intrinsics& k,
                        int level) {
  PyramidLevel out;
  const int scale = 1 << level;
  out.intrinsics = Intrinsics{k.fx / scale, k.fy / scale, k.cx / scale,
                              k.cy / scale, k.width / scale,
                              k.height / scale};
  out.depth = DepthImage(out.intrinsics.width, out.intrinsics.height, 0.0);
  for (int y = 0; y < out.depth.height; ++y) {
    for (int x = 0; x < out.depth.width; ++x) {
      out.depth.at(x, y) = depth.at(x * scale, y * scale);
    }
  }
  out.vertices = NormalImage(out.depth.width, out.depth.height, Vec3::Zero());
  for (int y = 0; y < out.depth.height; ++y) {
    for (int x = 0; x < out.depth.width; ++x) {
      const double d = out.depth.at(x, y);
      if (d > 0) {
        out.vertices.at(x, y) = backproject_pixel(x, y, d, out.intrinsics);
      }
    }
  }
  // Central-difference normals with depth-continuity gating.
  out.normals = NormalImage(out.depth.width, out.depth.height, Vec3::Zero());
  for (int y = 1; y + 1 < out.depth.height; ++y) {
    for (int x = 1; x + 1 < out.depth.width; ++x) {
      const double d = out.depth.at(x, y);
      if (!(d > 0)) {
        continue;
      }
      const double dl = out.depth.at(x - 1, y), dr = out.depth.at(x + 1, y);
      const double du = out.depth.at(x, y - 1), dd = out.depth.at(x, y + 1);
      const double jump = 0.1 * d;
      if (!(dl > 0) || !(dr > 0) || !(du > 0) || !(dd > 0) ||
          std::abs(dl - d) > jump || std::abs(dr - d) > jump ||
          std::abs(du - d) > jump || std::abs(dd - d) > jump) {
        continue;
      }
      const Vec3 dx = out.vertices.at(x + 1, y) - out.vertices.at(x - 1, y);
      const Vec3 dy = out.vertices.at(x, y + 1) - out.vertices.at(x, y - 1);
      Vec3 n = dx.cross(dy);
      const double norm = n.norm();
      if (norm < 1e-12) {
        continue;
      }
      n /= norm;
      // Face the camera at the origin.
      if (n.dot(out.vertices.at(x, y)) > 0) {
        n = -n;
      }
      out.normals.at(x, y) = n;
    }
  }
  return out;
}

RigidPose exp_update(const Vec6& delta) {
  const Vec3 omega = delta.head<3>();
  const double angle = omega.norm();
  Mat3 r = Mat3::Identity();
  if (angle > 1e-14) {
    r = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  }
  return RigidPose(r, delta.tail<3>());
}

// Left-trivialized offset of `pose` from `ref` as a 6-vector [omega; t].
Vec6 pose_offset(const RigidPose& pose, const RigidPose& ref) {
  const RigidPose left = pose * ref.inverse();
  const Eigen::AngleAxisd aa(left.rotation());
  Vec6 xi;
  xi.head<3>() = aa.angle() * aa.axis();
  xi.tail<3>() = left.translation();
  return xi;
}

}  // namespace

RegistrationResult rgbd_odometry(const RGBDFrame& target,
                                 const RGBDFrame& source,
                                 const RigidPose& init,
                                 const OdometryParams& params) {
  if (target.intrinsics.width != source.intrinsics.width ||
      target.intrinsics.height != source.intrinsics.height ||
      target.intrinsics.fx != source.intrinsics.fx ||
      target.intrinsics.fy != source.intrinsics.fy) {
    throw InvalidInputError("rgbd_odometry: frames must share intrinsics");
  }
  std::vector<PyramidLevel> tgt_levels, src_levels;
  for (int l = 0; l < params.pyramid_levels; ++l) {
    tgt_levels.push_back(make_level(target.depth, target.intrinsics, l));
    src_levels.push_back(make_level(source.depth, source.intrinsics, l));
  }
  const double cos_max =
      std::cos(params.normal_angle_max_deg * M_PI / 180.0);
  RigidPose pose = init;
  double last_fitness = 0, last_rmse = 0;
  for (int l = params.pyramid_levels - 1; l >= 0; --l) {
    const PyramidLevel& tgt = tgt_levels[l];
    const PyramidLevel& src = src_levels[l];
    const double max_dist = params.max_corr_dist * (1 << l);
    const double max_d2 = max_dist * max_dist;
    double prev_rmse = -1;
    for (int iter = 0; iter < params.max_iterations; ++iter) {
      Mat6 h = Mat6::Zero();
      Vec6 g = Vec6::Zero();
      size_t associated = 0, valid_src = 0;
      double plane_sq = 0, point_sq = 0;
      for (int y = 0; y < src.depth.height; ++y) {
        for (int x = 0; x < src.depth.width; ++x) {
          const Vec3& v_s = src.vertices.at(x, y);
          if (v_s.isZero()) {
            continue;
          }
          ++valid_src;
          const Vec3 tp = pose.apply(v_s);
          if (!(tp.z() > 0)) {
            continue;
          }
          const PixelDepth proj = project_point(tp, tgt.intrinsics);
          Vec3 v_t, n_t;
          if (!tgt.sample(proj.u, proj.v, v_t, n_t)) {
            continue;
          }
          const Vec3 diff = tp - v_t;
          if (diff.squaredNorm() > max_d2) {
            continue;
          }
          const Vec3& n_s = src.normals.at(x, y);
          if (!n_s.isZero() && (pose.rotation() * n_s).dot(n_t) < cos_max) {
            continue;
          }
          ++associated;
          point_sq += diff.squaredNorm();
          const double r = diff.dot(n_t);
          plane_sq += r * r;
          Vec6 jac;
          jac.head<3>() = tp.cross(n_t);
          jac.tail<3>() = n_t;
          h += jac * jac.transpose();
          g += jac * r;
        }
      }
      if (l == params.pyramid_levels - 1 && iter == 0 &&
          associated < static_cast<size_t>(params.min_associations)) {
        throw InsufficientOverlapError(
            "rgbd_odometry: " + std::to_string(associated) +
            " associations at the coarsest level");
      }
      if (associated == 0) {
        break;
      }
      last_fitness = valid_src ? static_cast<double>(associated) / valid_src
                               : 0.0;
      last_rmse = std::sqrt(point_sq / associated);
      const double rmse = std::sqrt(plane_sq / associated);
      if (prev_rmse >= 0 &&
          std::abs(prev_rmse - rmse) < 1e-6 * std::max(1.0, prev_rmse)) {
        break;
      }
      prev_rmse = rmse;
      // A weak prior toward the initialization pins directions the data
      // does not constrain (surfaces of revolution have one).
      const double mu = 1e-3 * std::max(1.0, h.diagonal().maxCoeff());
      h += mu * Mat6::Identity();
      g += mu * pose_offset(pose, init);
      const Vec6 delta = h.ldlt().solve(-g);
      pose = exp_update(delta) * pose;
    }
  }
  RegistrationResult result;
  result.dst_from_src = pose;
  result.fitness = last_fitness;
  result.inlier_rmse = last_rmse;
  return result;
}

}  // namespace labelfuse
