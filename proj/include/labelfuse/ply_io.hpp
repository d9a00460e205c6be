#pragma once

#include <array>
#include <string>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Display color for a label id; entry label % 16 of a fixed palette,
// entry 0 reserved for unlabeled.
Rgb8 label_palette_color(uint16_t label);

// PLY 1.0 with vertex properties x,y,z (float32), red,green,blue (uint8)
// and label (uint16); the fixed palette is recorded in header comments.
// Points without colors are written white.
void write_labeled_ply(const LabeledPointCloud& cloud, const std::string& path,
                       bool binary);
// Mesh variant adds an element face with vertex index lists.
void write_labeled_ply(const LabeledMesh& mesh, const std::string& path,
                       bool binary);

struct PlyContents {
  LabeledPointCloud cloud;
  std::vector<std::array<int, 3>> triangles;  // empty for point clouds

  bool is_mesh() const { return !triangles.empty(); }
  LabeledMesh to_mesh() const;
};

// Reads ASCII or binary_little_endian PLY; unknown vertex properties are
// skipped, missing color/label properties default to white/0. Polygons
// with more than three vertices are fan-triangulated.
PlyContents read_labeled_ply(const std::string& path);

}  // namespace labelfuse
