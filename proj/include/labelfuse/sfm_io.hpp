#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

struct SfmView {
  RigidPose cam_from_world;
  int camera_id = 0;
  std::string name;
};

// Sparse model in the standard cameras/images/points3D text layout.
// Poses are stored world->camera, matching the source convention
// (x_cam = R x_world + t).
struct SfmModel {
  std::map<int, Intrinsics> cameras;
  std::map<int, SfmView> views;
  LabeledPointCloud sparse_points;

  // Every view must reference an existing camera id.
  void validate() const;
};

// Lines `CAMERA_ID MODEL WIDTH HEIGHT PARAMS...`; PINHOLE and
// SIMPLE_PINHOLE models supported.
std::map<int, Intrinsics> parse_sfm_cameras(std::istream& in);

// Per image: `IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME` followed by a
// 2-d point line (which may be empty and is skipped).
std::map<int, SfmView> parse_sfm_images(std::istream& in);

// Lines `POINT3D_ID X Y Z R G B ERROR [TRACK...]`; labels all 0.
LabeledPointCloud parse_sfm_points3d(std::istream& in);

// Reads cameras.txt / images.txt / points3D.txt from a directory.
// points3D.txt may be absent (empty cloud).
SfmModel read_sfm_model(const std::string& dir);

void write_sfm_cameras(const std::map<int, Intrinsics>& cameras,
                       std::ostream& out);
void write_sfm_images(const std::map<int, SfmView>& views, std::ostream& out);
void write_sfm_points3d(const LabeledPointCloud& cloud, std::ostream& out);
void write_sfm_model(const SfmModel& model, const std::string& dir);

}  // namespace labelfuse
