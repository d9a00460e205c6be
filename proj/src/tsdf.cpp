#include "labelfuse/tsdf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "labelfuse/mc_tables.hpp"

namespace labelfuse {

void LabelHistogram::add(uint16_t label) {
  if (label == 0) {
    if (background < 65535) {
      ++background;
    }
    return;
  }
  int lowest = 0;
  for (int i = 0; i < kSlots; ++i) {
    if (counts[i] > 0 && ids[i] == label) {
      if (counts[i] < 65535) {
        ++counts[i];
      }
      return;
    }
    if (counts[i] == 0) {
      ids[i] = label;
      counts[i] = 1;
      return;
    }
    if (counts[i] < counts[lowest]) {
      lowest = i;
    }
  }
  // Full: evict the lowest-count slot at insertion time.
  ids[lowest] = label;
  counts[lowest] = 1;
}

uint16_t LabelHistogram::argmax() const {
  uint16_t best_id = 0;
  uint32_t best_count = background;
  for (int i = 0; i < kSlots; ++i) {
    if (counts[i] == 0) {
      continue;
    }
    if (counts[i] > best_count ||
        (counts[i] == best_count && ids[i] < best_id)) {
      best_count = counts[i];
      best_id = ids[i];
    }
  }
  return best_id;
}

TsdfVolume::TsdfVolume(double voxel_size, double truncation, int block_edge,
                       double max_weight)
    : voxel_size_(voxel_size),
      truncation_(truncation),
      block_edge_(block_edge),
      max_weight_(max_weight) {
  if (!(voxel_size_ > 0)) {
    throw InvalidInputError("tsdf: voxel size must be positive");
  }
  if (truncation_ < voxel_size_) {
    throw InvalidInputError("tsdf: truncation must be >= voxel size");
  }
  if (block_edge_ < 1) {
    throw InvalidInputError("tsdf: block edge must be >= 1");
  }
}

std::vector<BlockKey> TsdfVolume::sorted_block_keys() const {
  std::vector<BlockKey> keys;
  keys.reserve(blocks_.size());
  for (const auto& [key, block] : blocks_) {
    keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

namespace {

int floor_div(int a, int b) {
  const int q = a / b, r = a % b;
  return r != 0 && ((r < 0) != (b < 0)) ? q - 1 : q;
}

}  // namespace

const TsdfVoxel* TsdfVolume::voxel_at(int x, int y, int z) const {
  const BlockKey key{floor_div(x, block_edge_), floor_div(y, block_edge_),
                     floor_div(z, block_edge_)};
  const auto it = blocks_.find(key);
  if (it == blocks_.end()) {
    return nullptr;
  }
  const int lx = x - key.x * block_edge_;
  const int ly = y - key.y * block_edge_;
  const int lz = z - key.z * block_edge_;
  return &it->second.voxels[(lz * block_edge_ + ly) * block_edge_ + lx];
}

TsdfVoxel* TsdfVolume::voxel_at_mutable(int x, int y, int z) {
  return const_cast<TsdfVoxel*>(voxel_at(x, y, z));
}

void TsdfVolume::integrate(const DepthImage& depth, const Intrinsics& k,
                           const RigidPose& world_from_cam,
                           const ColorImage* color, const LabelImage* labels) {
  k.validate();
  if (depth.width != k.width || depth.height != k.height) {
    throw InvalidInputError("tsdf: depth does not match intrinsics");
  }
  if (color && !depth.same_size(*color)) {
    throw InvalidInputError("tsdf: color dimensions differ");
  }
  if (labels && !depth.same_size(*labels)) {
    throw InvalidInputError("tsdf: label dimensions differ");
  }
  // Pass 1: collect blocks along the truncation band of every ray.
  const double block_size = voxel_size_ * block_edge_;
  std::set<BlockKey> touched;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const double d = depth.at(u, v);
      if (!(d > 0)) {
        continue;
      }
      const Vec3 dir((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const double z_min = std::max(voxel_size_ / 2, d - truncation_);
      const double z_max = d + truncation_;
      for (double z = z_min;; z += voxel_size_) {
        const bool last = z >= z_max;
        const Vec3 p = world_from_cam.apply((last ? z_max : z) * dir);
        touched.insert(
            BlockKey{static_cast<int>(std::floor(p.x() / block_size)),
                     static_cast<int>(std::floor(p.y() / block_size)),
                     static_cast<int>(std::floor(p.z() / block_size))});
        if (last) {
          break;
        }
      }
    }
  }
  // Pass 2: project every voxel of every touched block.
  const RigidPose cam_from_world = world_from_cam.inverse();
  for (const BlockKey& key : touched) {
    Block& block = blocks_[key];
    if (block.voxels.empty()) {
      block.voxels.resize(static_cast<size_t>(block_edge_) * block_edge_ *
                          block_edge_);
    }
    size_t index = 0;
    for (int lz = 0; lz < block_edge_; ++lz) {
      for (int ly = 0; ly < block_edge_; ++ly) {
        for (int lx = 0; lx < block_edge_; ++lx, ++index) {
          const Vec3 center = voxel_center(key.x * block_edge_ + lx,
                                           key.y * block_edge_ + ly,
                                           key.z * block_edge_ + lz);
          const Vec3 p_cam = cam_from_world.apply(center);
          if (!(p_cam.z() > 0)) {
            continue;
          }
          const double u = k.fx * p_cam.x() / p_cam.z() + k.cx;
          const double v = k.fy * p_cam.y() / p_cam.z() + k.cy;
          const int px = static_cast<int>(std::lround(u));
          const int py = static_cast<int>(std::lround(v));
          if (!k.contains(px, py)) {
            continue;
          }
          const double d = depth.at(px, py);
          if (!(d > 0)) {
            continue;
          }
          const double sdf = d - p_cam.z();
          if (sdf < -truncation_) {
            continue;  // behind the surface beyond truncation
          }
          TsdfVoxel& voxel = block.voxels[index];
          const float tsdf_norm = static_cast<float>(
              std::clamp(sdf / truncation_, -1.0, 1.0));
          const float w = voxel.weight;
          voxel.tsdf = (voxel.tsdf * w + tsdf_norm) / (w + 1.0f);
          if (color) {
            const Rgb8 c = color->at(px, py);
            voxel.color[0] = (voxel.color[0] * w + c.r) / (w + 1.0f);
            voxel.color[1] = (voxel.color[1] * w + c.g) / (w + 1.0f);
            voxel.color[2] = (voxel.color[2] * w + c.b) / (w + 1.0f);
          }
          if (labels) {
            voxel.labels.add(labels->at(px, py));
          }
          voxel.weight =
              std::min(w + 1.0f, static_cast<float>(max_weight_));
        }
      }
    }
  }
}

void TsdfVolume::integrate_rgbd(const RGBDFrame& frame,
                                const RigidPose& world_from_cam) {
  integrate(frame.depth, frame.intrinsics, world_from_cam, &frame.color,
            nullptr);
}

void TsdfVolume::integrate_maskd(const MASKDFrame& frame, const Intrinsics& k,
                                 const RigidPose& world_from_cam) {
  if (!frame.depth.same_size(frame.labels)) {
    throw InvalidInputError("tsdf: MASKD label/depth dimensions differ");
  }
  integrate(frame.depth, k, world_from_cam, nullptr, &frame.labels);
}

namespace {

Rgb8 round_color(const std::array<float, 3>& c) {
  return Rgb8{static_cast<uint8_t>(std::lround(std::clamp(c[0], 0.f, 255.f))),
              static_cast<uint8_t>(std::lround(std::clamp(c[1], 0.f, 255.f))),
              static_cast<uint8_t>(std::lround(std::clamp(c[2], 0.f, 255.f)))};
}

Rgb8 lerp_color(const std::array<float, 3>& a, const std::array<float, 3>& b,
                double alpha) {
  std::array<float, 3> mix;
  for (int i = 0; i < 3; ++i) {
    mix[i] = static_cast<float>(a[i] + alpha * (b[i] - a[i]));
  }
  return round_color(mix);
}

}  // namespace

LabeledPointCloud TsdfVolume::extract_point_cloud() const {
  LabeledPointCloud cloud;
  constexpr int kAxes[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (const BlockKey& key : sorted_block_keys()) {
    const int bx = key.x * block_edge_, by = key.y * block_edge_,
              bz = key.z * block_edge_;
    for (int lz = 0; lz < block_edge_; ++lz) {
      for (int ly = 0; ly < block_edge_; ++ly) {
        for (int lx = 0; lx < block_edge_; ++lx) {
          const int x = bx + lx, y = by + ly, z = bz + lz;
          const TsdfVoxel* v0 = voxel_at(x, y, z);
          if (!v0 || v0->weight <= 0) {
            continue;
          }
          for (const auto& axis : kAxes) {
            const TsdfVoxel* v1 =
                voxel_at(x + axis[0], y + axis[1], z + axis[2]);
            if (!v1 || v1->weight <= 0) {
              continue;
            }
            const float t0 = v0->tsdf, t1 = v1->tsdf;
            if ((t0 < 0) == (t1 < 0)) {
              continue;
            }
            const double alpha = t0 / (double(t0) - t1);
            const Vec3 p0 = voxel_center(x, y, z);
            cloud.positions.push_back(
                p0 + alpha * voxel_size_ *
                         Vec3(axis[0], axis[1], axis[2]));
            cloud.colors.push_back(lerp_color(v0->color, v1->color, alpha));
            const TsdfVoxel* nearer = std::abs(t0) <= std::abs(t1) ? v0 : v1;
            cloud.labels.push_back(nearer->labels.argmax());
          }
        }
      }
    }
  }
  return cloud;
}

LabeledMesh TsdfVolume::extract_mesh() const {
  LabeledMesh mesh;
  // Edge -> (min corner voxel, axis), matching the Bourke cube layout.
  constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                 {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  constexpr int kEdgeBase[12][3] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0},
                                    {0, 0, 0}, {0, 0, 1}, {1, 0, 1},
                                    {0, 1, 1}, {0, 0, 1}, {0, 0, 0},
                                    {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  constexpr int kEdgeAxis[12] = {0, 1, 0, 1, 0, 1, 0, 1, 2, 2, 2, 2};

  struct EdgeKey {
    int x, y, z, axis;
    bool operator==(const EdgeKey&) const = default;
  };
  struct EdgeKeyHash {
    size_t operator()(const EdgeKey& k) const {
      size_t h = static_cast<size_t>(k.x) * 73856093u ^
                 static_cast<size_t>(k.y) * 19349669u ^
                 static_cast<size_t>(k.z) * 83492791u;
      return h * 4 + k.axis;
    }
  };
  std::unordered_map<EdgeKey, int, EdgeKeyHash> edge_vertex;

  const auto edge_vertex_index = [&](const EdgeKey& ek) {
    const auto it = edge_vertex.find(ek);
    if (it != edge_vertex.end()) {
      return it->second;
    }
    const int step[3] = {ek.axis == 0, ek.axis == 1, ek.axis == 2};
    const TsdfVoxel* a = voxel_at(ek.x, ek.y, ek.z);
    const TsdfVoxel* b =
        voxel_at(ek.x + step[0], ek.y + step[1], ek.z + step[2]);
    const double alpha = a->tsdf / (double(a->tsdf) - b->tsdf);
    const Vec3 p = voxel_center(ek.x, ek.y, ek.z) +
                   alpha * voxel_size_ * Vec3(step[0], step[1], step[2]);
    const int index = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(p);
    mesh.colors.push_back(lerp_color(a->color, b->color, alpha));
    const TsdfVoxel* nearer = std::abs(a->tsdf) <= std::abs(b->tsdf) ? a : b;
    mesh.labels.push_back(nearer->labels.argmax());
    edge_vertex.emplace(ek, index);
    return index;
  };

  for (const BlockKey& key : sorted_block_keys()) {
    const int bx = key.x * block_edge_, by = key.y * block_edge_,
              bz = key.z * block_edge_;
    for (int lz = 0; lz < block_edge_; ++lz) {
      for (int ly = 0; ly < block_edge_; ++ly) {
        for (int lx = 0; lx < block_edge_; ++lx) {
          const int x = bx + lx, y = by + ly, z = bz + lz;
          const TsdfVoxel* corners[8];
          int cube_index = 0;
          bool complete = true;
          for (int c = 0; c < 8; ++c) {
            corners[c] = voxel_at(x + kCorner[c][0], y + kCorner[c][1],
                                  z + kCorner[c][2]);
            if (!corners[c] || corners[c]->weight <= 0) {
              complete = false;
              break;
            }
            if (corners[c]->tsdf < 0) {
              cube_index |= 1 << c;
            }
          }
          if (!complete || mc::kEdgeTable[cube_index] == 0) {
            continue;
          }
          int edge_to_vertex[12];
          for (int e = 0; e < 12; ++e) {
            if (mc::kEdgeTable[cube_index] & (1 << e)) {
              const EdgeKey ek{x + kEdgeBase[e][0], y + kEdgeBase[e][1],
                               z + kEdgeBase[e][2], kEdgeAxis[e]};
              edge_to_vertex[e] = edge_vertex_index(ek);
            }
          }
          for (int i = 0; mc::kTriTable[cube_index][i] != -1; i += 3) {
            mesh.triangles.push_back(
                {edge_to_vertex[mc::kTriTable[cube_index][i]],
                 edge_to_vertex[mc::kTriTable[cube_index][i + 2]],
                 edge_to_vertex[mc::kTriTable[cube_index][i + 1]]});
          }
        }
      }
    }
  }
  return mesh;
}

std::vector<TsdfVolume::VoxelSample> TsdfVolume::extract_voxel_grid(
    double band) const {
  std::vector<VoxelSample> samples;
  for (const BlockKey& key : sorted_block_keys()) {
    const Block& block = blocks_.at(key);
    size_t index = 0;
    for (int lz = 0; lz < block_edge_; ++lz) {
      for (int ly = 0; ly < block_edge_; ++ly) {
        for (int lx = 0; lx < block_edge_; ++lx, ++index) {
          const TsdfVoxel& voxel = block.voxels[index];
          if (voxel.weight <= 0 || !(std::abs(voxel.tsdf) < band)) {
            continue;
          }
          samples.push_back(VoxelSample{
              voxel_center(key.x * block_edge_ + lx,
                           key.y * block_edge_ + ly,
                           key.z * block_edge_ + lz),
              round_color(voxel.color), voxel.labels.argmax()});
        }
      }
    }
  }
  return samples;
}

void integrate_fragments(TsdfVolume& volume,
                         const std::vector<RGBDFrame>& frames,
                         const std::vector<LabelImage>& masks,
                         const std::vector<Fragment>& fragments,
                         const std::vector<RigidPose>& world_from_fragment) {
  if (frames.size() != masks.size()) {
    throw InvalidInputError("integrate_fragments: masks not aligned");
  }
  if (fragments.size() != world_from_fragment.size()) {
    throw InvalidInputError("integrate_fragments: poses not aligned");
  }
  std::vector<char> covered(frames.size(), 0);
  for (const Fragment& frag : fragments) {
    for (int t = frag.start; t < frag.end; ++t) {
      if (t < 0 || static_cast<size_t>(t) >= frames.size() || covered[t]) {
        throw InvalidInputError(
            "integrate_fragments: invalid fragment frame range");
      }
      covered[t] = 1;
    }
  }
  for (size_t t = 0; t < covered.size(); ++t) {
    if (!covered[t]) {
      throw InvalidInputError("integrate_fragments: frame " +
                              std::to_string(t) + " belongs to no fragment");
    }
  }
  for (const Fragment& frag : fragments) {
    for (int t = frag.start; t < frag.end; ++t) {
      const RigidPose world_from_cam =
          world_from_fragment[frag.id] * frag.fragment_from_cam[t - frag.start];
      volume.integrate(frames[t].depth, frames[t].intrinsics, world_from_cam,
                       &frames[t].color, &masks[t]);
    }
  }
}

}  // namespace labelfuse
