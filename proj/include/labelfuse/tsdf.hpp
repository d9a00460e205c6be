#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "labelfuse/fragments.hpp"
#include "labelfuse/geometry.hpp"

namespace labelfuse {

// Label (mask) image paired with depth; integrated exactly like an RGBD
// frame, with the label channel in place of color.
struct MASKDFrame {
  LabelImage labels;
  DepthImage depth;
};

// Bounded label histogram: 8 slots for nonzero ids plus a dedicated
// background slot for label 0. When full, a new id evicts the slot with
// the lowest count at insertion time (first such slot).
struct LabelHistogram {
  static constexpr int kSlots = 8;
  std::array<uint16_t, kSlots> ids{};
  std::array<uint16_t, kSlots> counts{};
  uint16_t background = 0;

  void add(uint16_t label);
  // Highest count wins; ties go to the lower id (background is id 0).
  uint16_t argmax() const;
};

struct TsdfVoxel {
  float tsdf = 0;                 // in [-1, 1], units of truncation
  float weight = 0;               // 0 = unobserved
  std::array<float, 3> color{};   // running mean, 0..255
  LabelHistogram labels;
};

struct BlockKey {
  int x = 0, y = 0, z = 0;
  bool operator==(const BlockKey&) const = default;
  bool operator<(const BlockKey& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

struct BlockKeyHash {
  size_t operator()(const BlockKey& k) const {
    return static_cast<size_t>(k.x) * 73856093u ^
           static_cast<size_t>(k.y) * 19349669u ^
           static_cast<size_t>(k.z) * 83492791u;
  }
};

// Sparse block-hashed truncated signed distance volume with color and
// label channels sharing one tsdf/weight field. Blocks are allocated only
// along the truncation band of integrated depth.
class TsdfVolume {
 public:
  TsdfVolume(double voxel_size, double truncation, int block_edge = 16,
             double max_weight = 255.0);

  double voxel_size() const { return voxel_size_; }
  double truncation() const { return truncation_; }
  int block_edge() const { return block_edge_; }
  size_t block_count() const { return blocks_.size(); }
  std::vector<BlockKey> sorted_block_keys() const;

  // Shared integration core; either channel image may be null.
  void integrate(const DepthImage& depth, const Intrinsics& k,
                 const RigidPose& world_from_cam, const ColorImage* color,
                 const LabelImage* labels);
  void integrate_rgbd(const RGBDFrame& frame, const RigidPose& world_from_cam);
  void integrate_maskd(const MASKDFrame& frame, const Intrinsics& k,
                       const RigidPose& world_from_cam);

  // Voxel at global voxel coordinates; nullptr when unallocated.
  const TsdfVoxel* voxel_at(int x, int y, int z) const;
  Vec3 voxel_center(int x, int y, int z) const {
    return Vec3((x + 0.5) * voxel_size_, (y + 0.5) * voxel_size_,
                (z + 0.5) * voxel_size_);
  }

  // One point per sign-change along axis-aligned voxel edges.
  LabeledPointCloud extract_point_cloud() const;

  // Marching cubes over the block grid with cross-block vertex sharing.
  LabeledMesh extract_mesh() const;

  struct VoxelSample {
    Vec3 center;
    Rgb8 color;
    uint16_t label = 0;
  };
  // All observed voxels with |tsdf| < band.
  std::vector<VoxelSample> extract_voxel_grid(double band) const;

 private:
  struct Block {
    std::vector<TsdfVoxel> voxels;  // edge^3, x fastest
  };

  TsdfVoxel* voxel_at_mutable(int x, int y, int z);

  double voxel_size_;
  double truncation_;
  int block_edge_;
  double max_weight_;
  std::unordered_map<BlockKey, Block, BlockKeyHash> blocks_;
};

// Integrates every frame with its fragment-chained world pose, both
// channels in one pass. Every frame must belong to exactly one fragment.
void integrate_fragments(TsdfVolume& volume,
                         const std::vector<RGBDFrame>& frames,
                         const std::vector<LabelImage>& masks,
                         const std::vector<Fragment>& fragments,
                         const std::vector<RigidPose>& world_from_fragment);

}  // namespace labelfuse
