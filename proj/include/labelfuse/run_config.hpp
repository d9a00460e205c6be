#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace labelfuse {

// Flat `key = value` run configuration. Unknown keys are an error.
struct RunConfig {
  // Frame selection and fragments.
  int stride = 1;             // reconstruction frame every `stride` frames
  int fragment_size = 50;     // frames per fragment

  // TSDF volume.
  double voxel_size = 0.008;  // meters
  double truncation = 0.032;  // meters, >= voxel_size

  // MVS consistency thresholds.
  int min_consistent_views = 2;
  double depth_tolerance = 0.01;          // relative
  double normal_tolerance_deg = 25.0;
  double reprojection_tolerance_px = 1.0;

  // Registration.
  std::string registration_method = "ransac";  // or "fgr"
  uint64_t seed = 0;
  double voxel_down = 0.0;    // 0 = derive as 2 * voxel_size
  double fitness_floor = 0.1;

  // Paths (optional; CLI flags take precedence).
  std::string frames_dir;
  std::string masks_dir;
  std::string output_prefix;

  double effective_voxel_down() const {
    return voxel_down > 0 ? voxel_down : 2 * voxel_size;
  }

  // Throws InvalidInputError if invariants are violated.
  void validate() const;

  static RunConfig parse(std::istream& in);
  static RunConfig load(const std::string& path);
};

}  // namespace labelfuse
