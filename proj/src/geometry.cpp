#include "labelfuse/geometry.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace labelfuse {

void Intrinsics::validate() const {
  if (width < 1 || height < 1) {
    throw InvalidInputError("intrinsics: image size must be positive");
  }
  if (!(fx > 0) || !(fy > 0)) {
    throw InvalidInputError("intrinsics: focal lengths must be positive");
  }
  if (!(cx > 0 && cx < width) || !(cy > 0 && cy < height)) {
    throw InvalidInputError("intrinsics: principal point outside the image");
  }
}

namespace {

double orthonormality_defect(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

RigidPose::RigidPose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation_.allFinite() || !translation_.allFinite()) {
    throw InvalidInputError("pose: non-finite rotation or translation");
  }
  if (rotation_.determinant() < 0) {
    throw InvalidInputError("pose: rotation has negative determinant");
  }
  const double defect = orthonormality_defect(rotation_);
  if (defect > 1e-6) {
    throw InvalidInputError("pose: rotation defect above 1e-6");
  }
  if (defect > 1e-12) {
    // Nearest rotation under the Frobenius norm.
    Eigen::JacobiSVD<Mat3> svd(rotation_,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() < 0) {
      Mat3 flip = Mat3::Identity();
      flip(2, 2) = -1;
      r = svd.matrixU() * flip * svd.matrixV().transpose();
    }
    rotation_ = r;
  }
}

RigidPose RigidPose::from_quaternion(double qw, double qx, double qy,
                                     double qz, const Vec3& translation) {
  Eigen::Quaterniond q(qw, qx, qy, qz);
  const double n = q.norm();
  if (!(n > 0) || !std::isfinite(n)) {
    throw InvalidInputError("pose: degenerate quaternion");
  }
  q.normalize();
  return RigidPose(q.toRotationMatrix(), translation);
}

RigidPose RigidPose::inverse() const {
  RigidPose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(rotation_.transpose() * translation_);
  return out;
}

RigidPose RigidPose::operator*(const RigidPose& rhs) const {
  RigidPose out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

void LabeledPointCloud::reserve(size_t n) {
  positions.reserve(n);
  colors.reserve(n);
  labels.reserve(n);
}

void LabeledPointCloud::validate() const {
  const size_t n = positions.size();
  if (labels.size() != n) {
    throw InvalidInputError("cloud: labels not parallel to positions");
  }
  if (!colors.empty() && colors.size() != n) {
    throw InvalidInputError("cloud: colors not parallel to positions");
  }
  if (!normals.empty() && normals.size() != n) {
    throw InvalidInputError("cloud: normals not parallel to positions");
  }
}

void LabeledMesh::validate() const {
  const size_t n = vertices.size();
  if (labels.size() != n) {
    throw InvalidInputError("mesh: labels not parallel to vertices");
  }
  if (!colors.empty() && colors.size() != n) {
    throw InvalidInputError("mesh: colors not parallel to vertices");
  }
  for (const auto& tri : triangles) {
    for (int idx : tri) {
      if (idx < 0 || static_cast<size_t>(idx) >= n) {
        throw InvalidInputError("mesh: triangle index out of range");
      }
    }
  }
}

Vec3 backproject_pixel(double u, double v, double d, const Intrinsics& k) {
  if (!(d > 0)) {
    throw InvalidInputError("backproject_pixel: depth must be positive");
  }
  return Vec3(d * (u - k.cx) / k.fx, d * (v - k.cy) / k.fy, d);
}

PixelDepth project_point(const Vec3& p, const Intrinsics& k) {
  if (!(p.z() > 0)) {
    throw BehindCameraError("project_point: point at or behind the camera");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy, p.z()};
}

Vec3 transform_point(const RigidPose& pose, const Vec3& p,
                     TransformDirection direction) {
  return direction == TransformDirection::kWorldToCamera
             ? pose.apply(p)
             : pose.apply_inverse(p);
}

LabeledPointCloud depth_to_cloud(const DepthImage& depth, const Intrinsics& k,
                                 const RigidPose& cam_from_world,
                                 const ColorImage* color,
                                 const LabelImage* labels) {
  if (color && !depth.same_size(*color)) {
    throw InvalidInputError("depth_to_cloud: color dimensions differ");
  }
  if (labels && !depth.same_size(*labels)) {
    throw InvalidInputError("depth_to_cloud: label dimensions differ");
  }
  LabeledPointCloud cloud;
  cloud.reserve(depth.data.size());
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const double d = depth.at(x, y);
      if (!(d > 0)) {
        continue;
      }
      const Vec3 p_cam = backproject_pixel(x, y, d, k);
      cloud.positions.push_back(cam_from_world.apply_inverse(p_cam));
      if (color) {
        cloud.colors.push_back(color->at(x, y));
      }
      cloud.labels.push_back(labels ? labels->at(x, y) : 0);
    }
  }
  if (!color) {
    cloud.colors.clear();
  }
  return cloud;
}

}  // namespace labelfuse
