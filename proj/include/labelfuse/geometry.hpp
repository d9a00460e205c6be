#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "labelfuse/error.hpp"

namespace labelfuse {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Rgb8 {
  uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

// Pinhole camera. fx, fy, cx, cy in pixels; pixel (u, v) addresses the
// sample at integer coordinates, u along +x (width), v along +y (height).
struct Intrinsics {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  int width = 0, height = 0;

  // Throws InvalidInputError if the invariants do not hold
  // (fx, fy > 0; 0 < cx < width; 0 < cy < height; width, height >= 1).
  void validate() const;

  bool contains(int u, int v) const {
    return u >= 0 && v >= 0 && u < width && v < height;
  }
};

// Rigid transform p -> R p + t. Construction enforces orthonormality:
// defects below 1e-6 are projected to the nearest rotation, larger
// defects and reflections are rejected.
class RigidPose {
 public:
  RigidPose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  RigidPose(const Mat3& rotation, const Vec3& translation);

  static RigidPose identity() { return RigidPose(); }
  // Quaternion in (w, x, y, z) order; normalized before conversion.
  static RigidPose from_quaternion(double qw, double qx, double qy, double qz,
                                   const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const {
    return Eigen::Quaterniond(rotation_);
  }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation_.transpose() * (p - translation_);
  }

  RigidPose inverse() const;
  // Composition: (a * b)(p) = a(b(p)).
  RigidPose operator*(const RigidPose& rhs) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

template <typename T>
struct ImageT {
  int width = 0, height = 0;
  std::vector<T> data;

  ImageT() = default;
  ImageT(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
  const T& at(int x, int y) const {
    return data[static_cast<size_t>(y) * width + x];
  }
  bool empty() const { return data.empty(); }

  template <typename U>
  bool same_size(const ImageT<U>& other) const {
    return width == other.width && height == other.height;
  }
};

// Depth in meters; 0 marks an invalid pixel.
using DepthImage = ImageT<double>;
// Label id per pixel; 0 means unlabeled/background.
using LabelImage = ImageT<uint16_t>;
using ColorImage = ImageT<Rgb8>;
// Unit normals; the zero vector marks an invalid pixel.
using NormalImage = ImageT<Vec3>;

struct RGBDFrame {
  ColorImage color;
  DepthImage depth;
  Intrinsics intrinsics;
};

// Point cloud with parallel attribute lists. `labels` always matches
// `positions` in length; `colors` and `normals` are either empty or
// parallel too.
struct LabeledPointCloud {
  std::vector<Vec3> positions;
  std::vector<Rgb8> colors;
  std::vector<Vec3> normals;
  std::vector<uint16_t> labels;

  size_t size() const { return positions.size(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_normals() const { return !normals.empty(); }

  void reserve(size_t n);
  // Throws InvalidInputError if attribute lists are misaligned.
  void validate() const;
};

// Triangle mesh with per-vertex color and label.
struct LabeledMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Rgb8> colors;
  std::vector<uint16_t> labels;

  bool has_colors() const { return !colors.empty(); }
  // Throws InvalidInputError on out-of-range indices or misaligned lists.
  void validate() const;
};

enum class TransformDirection {
  kWorldToCamera,  // R p + t
  kCameraToWorld,  // R^T (p - t)
};

// Lift pixel (u, v) with depth d into the camera frame:
// (d (u - cx) / fx, d (v - cy) / fy, d). Throws on d <= 0.
Vec3 backproject_pixel(double u, double v, double d, const Intrinsics& k);

struct PixelDepth {
  double u = 0, v = 0, depth = 0;
};

// Forward pinhole projection; throws BehindCameraError on p.z <= 0.
PixelDepth project_point(const Vec3& p, const Intrinsics& k);

// `pose` stores world->camera; the direction selects which way to map.
Vec3 transform_point(const RigidPose& pose, const Vec3& p,
                     TransformDirection direction);

// One world-frame point per valid depth pixel. `cam_from_world` is the
// view's world->camera pose. Optional color/label images must match the
// depth dimensions; labels default to 0 when absent.
LabeledPointCloud depth_to_cloud(const DepthImage& depth, const Intrinsics& k,
                                 const RigidPose& cam_from_world,
                                 const ColorImage* color = nullptr,
                                 const LabelImage* labels = nullptr);

}  // namespace labelfuse
