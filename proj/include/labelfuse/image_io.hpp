#pragma once

#include <string>

#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Depth rasters are 16-bit single-channel PNG, value = millimeters,
// 0 = invalid. In-memory unit is meters.
DepthImage read_depth_image(const std::string& path);
void write_depth_image(const DepthImage& img, const std::string& path);

// Label rasters are id-valued single-channel PNG (8- or 16-bit accepted
// on read; 16-bit written).
LabelImage read_label_image(const std::string& path);
void write_label_image(const LabelImage& img, const std::string& path);

// 8-bit RGB.
ColorImage read_color_image(const std::string& path);
void write_color_image(const ColorImage& img, const std::string& path);

// Normals as 16-bit RGB with channels mapping [-1,1] -> [0,65535];
// an all-zero pixel marks an invalid normal.
NormalImage read_normal_image(const std::string& path);
void write_normal_image(const NormalImage& img, const std::string& path);

}  // namespace labelfuse
