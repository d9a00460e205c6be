#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Analytic scene primitive. Exactly one shape is active per entry.
struct ScenePrimitive {
  enum class Kind { kSphere, kBox, kPlane };
  Kind kind = Kind::kSphere;
  Vec3 center = Vec3::Zero();      // sphere/box center, plane point
  double radius = 0;               // sphere
  Vec3 half_extents = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();     // plane, unit length
  Rgb8 color;
  uint16_t label = 0;
  // Optional 3-d checkerboard tint for fixtures that need texture.
  bool checker = false;
  double checker_size = 0.1;
};

struct Scene {
  std::vector<ScenePrimitive> primitives;

  // Labels nonzero and distinct, radii/extents positive, unit plane normals.
  void validate() const;

  // Line-oriented config, '#' comments:
  //   sphere CX CY CZ RADIUS R G B LABEL [checker SIZE]
  //   box    CX CY CZ HX HY HZ R G B LABEL [checker SIZE]
  //   plane  PX PY PZ NX NY NZ R G B LABEL [checker SIZE]
  static Scene parse(std::istream& in);
  static Scene load(const std::string& path);
};

struct SdfResult {
  double distance = 0;   // signed, negative inside
  uint16_t label = 0;    // label of the minimizing primitive
};

// Exact signed distance to the union of primitives.
SdfResult scene_sdf(const Scene& scene, const Vec3& p);

// Camera->world poses.
struct Trajectory {
  std::vector<RigidPose> world_from_cam;
};

struct RenderedFrame {
  ColorImage color;
  DepthImage depth;   // z-depth in meters, 0 on miss
  LabelImage labels;
};

// Per-pixel analytic ray cast through integer pixel centers; nearest hit
// wins. `depth_noise_sigma` adds Gaussian noise to hit depths (off by
// default); `seed` makes it reproducible.
RenderedFrame render_frame(const Scene& scene, const Intrinsics& k,
                           const RigidPose& world_from_cam,
                           double depth_noise_sigma = 0.0, uint64_t seed = 0);

// n camera->world poses equally spaced on a horizontal circle of `radius`
// around `center`, raised by `elevation`, each looking at `center`.
Trajectory orbit_trajectory(const Vec3& center, double radius, int n,
                            double elevation);

struct EvalReport {
  double surface_rms = 0;               // RMS |sdf| over elements, meters
  std::map<uint16_t, double> label_iou; // per scene label
  double unlabeled_fraction = 0;        // predicted label 0
  size_t element_count = 0;
};

// Scores predicted elements against the scene: geometric RMS plus per-label
// IoU under nearest-label assignment.
EvalReport evaluate(const std::vector<Vec3>& positions,
                    const std::vector<uint16_t>& labels, const Scene& scene);

}  // namespace labelfuse
