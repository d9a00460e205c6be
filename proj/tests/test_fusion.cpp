#include <doctest.h>

#include <random>

#include "labelfuse/fusion.hpp"
#include "labelfuse/scene.hpp"

using namespace labelfuse;

namespace {

Scene two_sphere_scene() {
  Scene scene;
  ScenePrimitive a;
  a.kind = ScenePrimitive::Kind::kSphere;
  a.center = Vec3(-0.5, 0, 0);
  a.radius = 0.4;
  a.color = {200, 40, 40};
  a.label = 1;
  scene.primitives.push_back(a);
  ScenePrimitive b = a;
  b.center = Vec3(0.55, 0.1, 0);
  b.radius = 0.25;
  b.color = {40, 40, 200};
  b.label = 2;
  scene.primitives.push_back(b);
  return scene;
}

const Intrinsics kCam{220, 220, 100, 75, 200, 150};

FusionView render_view(const Scene& scene, const RigidPose& world_from_cam) {
  const RenderedFrame frame = render_frame(scene, kCam, world_from_cam);
  FusionView view;
  view.depth = frame.depth;
  view.color = frame.color;
  view.labels = frame.labels;
  view.cam_from_world = world_from_cam.inverse();
  view.intrinsics = kCam;
  return view;
}

std::vector<FusionView> orbit_views(const Scene& scene, int n) {
  std::vector<FusionView> views;
  for (const RigidPose& pose :
       orbit_trajectory(Vec3(0, 0, 0), 2.0, n, 0.5).world_from_cam) {
    views.push_back(render_view(scene, pose));
  }
  return views;
}

}  // namespace

TEST_SUITE_BEGIN("fusion");

TEST_CASE("frame selection strides") {
  CHECK(select_reconstruction_frames(10, 1) ==
        std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(select_reconstruction_frames(10, 3) == std::vector<int>{0, 3, 6, 9});
  CHECK(select_reconstruction_frames(624, 26).size() == 24);
  CHECK_THROWS_AS(select_reconstruction_frames(10, 0), InvalidInputError);
}

TEST_CASE("identical plane views are consistent everywhere") {
  FusionView view;
  view.intrinsics = kCam;
  view.depth = DepthImage(kCam.width, kCam.height, 2.0);
  view.color = ColorImage(kCam.width, kCam.height, Rgb8{100, 100, 100});
  view.labels = LabelImage(kCam.width, kCam.height, 1);
  FusionParams params;
  params.min_consistent_views = 1;
  const std::vector<const FusionView*> candidates{&view};
  for (int v = 0; v < kCam.height; v += 17) {
    for (int u = 0; u < kCam.width; u += 13) {
      const auto result = check_pixel_consistency(view, u, v, candidates,
                                                  params);
      CHECK(result.consistent);
      CHECK(result.supporters == std::vector<int>{0});
    }
  }
}

TEST_CASE("globally scaled depth defeats the relative tolerance") {
  FusionView ref;
  ref.intrinsics = kCam;
  ref.depth = DepthImage(kCam.width, kCam.height, 2.0);
  ref.color = ColorImage(kCam.width, kCam.height);
  ref.labels = LabelImage(kCam.width, kCam.height, 1);
  FusionView scaled = ref;
  for (double& d : scaled.depth.data) {
    d *= 1.5;
  }
  FusionParams params;
  params.min_consistent_views = 2;
  params.depth_tolerance = 0.01;
  const std::vector<const FusionView*> candidates{&scaled};
  int consistent = 0;
  for (int v = 0; v < kCam.height; v += 7) {
    for (int u = 0; u < kCam.width; u += 7) {
      consistent +=
          check_pixel_consistency(ref, u, v, candidates, params).consistent;
    }
  }
  CHECK(consistent == 0);
}

TEST_CASE("consistency equals analytic visibility on a sphere orbit") {
  const Scene scene = two_sphere_scene();
  const auto views = orbit_views(scene, 8);
  FusionParams params;
  params.min_consistent_views = 2;
  const Trajectory traj = orbit_trajectory(Vec3(0, 0, 0), 2.0, 8, 0.5);

  const FusionView& ref = views[0];
  std::vector<const FusionView*> candidates;
  for (size_t i = 1; i < views.size(); ++i) {
    candidates.push_back(&views[i]);
  }
  int checked = 0;
  for (int v = 0; v < kCam.height && checked < 4000; v += 2) {
    for (int u = 0; u < kCam.width; u += 2) {
      const double d = ref.depth.at(u, v);
      if (!(d > 0)) {
        continue;
      }
      ++checked;
      const Vec3 world = ref.cam_from_world.apply_inverse(
          backproject_pixel(u, v, d, ref.intrinsics));
      // Oracle: analytic ray casts instead of the candidate depth images.
      std::vector<int> expected;
      for (size_t ci = 1; ci < views.size(); ++ci) {
        const RigidPose& cand_pose = traj.world_from_cam[ci];
        const Vec3 p_cam = cand_pose.apply_inverse(world);
        if (!(p_cam.z() > 0)) {
          continue;
        }
        const double pu = kCam.fx * p_cam.x() / p_cam.z() + kCam.cx;
        const double pv = kCam.fy * p_cam.y() / p_cam.z() + kCam.cy;
        const int px = static_cast<int>(std::lround(pu));
        const int py = static_cast<int>(std::lround(pv));
        if (!kCam.contains(px, py)) {
          continue;
        }
        // Exact ray cast through the same pixel center.
        const Vec3 dir = cand_pose.rotation() *
                         Vec3((px - kCam.cx) / kCam.fx,
                              (py - kCam.cy) / kCam.fy, 1.0);
        const Vec3 origin = cand_pose.translation();
        double t_hit = 0;
        {
          double best = 1e300;
          for (const ScenePrimitive& prim : scene.primitives) {
            const Vec3 oc = origin - prim.center;
            const double aq = dir.squaredNorm();
            const double bq = 2 * oc.dot(dir);
            const double cq = oc.squaredNorm() - prim.radius * prim.radius;
            const double disc = bq * bq - 4 * aq * cq;
            if (disc < 0) {
              continue;
            }
            const double t0 = (-bq - std::sqrt(disc)) / (2 * aq);
            if (t0 > 0 && t0 < best) {
              best = t0;
            }
          }
          t_hit = best == 1e300 ? 0.0 : best;
        }
        if (t_hit <= 0) {
          continue;
        }
        if (std::abs(t_hit - p_cam.z()) / p_cam.z() <=
            params.depth_tolerance) {
          expected.push_back(static_cast<int>(ci - 1));
        }
      }
      const auto result =
          check_pixel_consistency(ref, u, v, candidates, params);
      CHECK(result.supporters == expected);
      CHECK(result.consistent ==
            (1 + static_cast<int>(expected.size()) >=
             params.min_consistent_views));
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("single-view fusion equals depth_to_cloud exactly") {
  const Scene scene = two_sphere_scene();
  const RigidPose pose =
      orbit_trajectory(Vec3(0, 0, 0), 2.0, 3, 0.5).world_from_cam[0];
  const FusionView view = render_view(scene, pose);
  FusionParams params;
  params.min_consistent_views = 1;
  const LabeledPointCloud fused = fuse_views({view}, params);
  const LabeledPointCloud direct = depth_to_cloud(
      view.depth, view.intrinsics, view.cam_from_world, &view.color,
      &view.labels);
  REQUIRE(fused.size() == direct.size());
  CHECK(fused.positions == direct.positions);
  CHECK(fused.labels == direct.labels);
  for (size_t i = 0; i < fused.size(); ++i) {
    CHECK(fused.colors[i] == direct.colors[i]);
  }
}

TEST_CASE("duplicate views are suppressed") {
  const Scene scene = two_sphere_scene();
  const RigidPose pose =
      orbit_trajectory(Vec3(0, 0, 0), 2.0, 3, 0.5).world_from_cam[1];
  const FusionView view = render_view(scene, pose);
  size_t valid = 0;
  for (double d : view.depth.data) {
    valid += d > 0;
  }
  FusionParams params;
  params.min_consistent_views = 1;
  const LabeledPointCloud fused = fuse_views({view, view}, params);
  CHECK(fused.size() == valid);
}

TEST_CASE("orbit fusion labels match the nearest-sphere oracle") {
  const Scene scene = two_sphere_scene();
  const auto views = orbit_views(scene, 8);
  FusionParams params;
  const LabeledPointCloud fused = fuse_views(views, params);
  REQUIRE(fused.size() > 10000);
  size_t correct = 0;
  for (size_t i = 0; i < fused.size(); ++i) {
    correct += fused.labels[i] == scene_sdf(scene, fused.positions[i]).label;
  }
  CHECK(static_cast<double>(correct) / fused.size() >= 0.99);
}

TEST_CASE("channel alignment: swapped payloads leave positions bit-identical") {
  const Scene scene = two_sphere_scene();
  auto views = orbit_views(scene, 6);
  auto swapped = views;
  for (FusionView& view : swapped) {
    for (int y = 0; y < view.color.height; ++y) {
      for (int x = 0; x < view.color.width; ++x) {
        const uint16_t l = view.labels.at(x, y);
        const Rgb8 c = view.color.at(x, y);
        view.color.at(x, y) =
            Rgb8{static_cast<uint8_t>(l), static_cast<uint8_t>(l >> 8), 0};
        view.labels.at(x, y) = c.r;
      }
    }
  }
  FusionParams params;
  const LabeledPointCloud a = fuse_views(views, params);
  const LabeledPointCloud b = fuse_views(swapped, params);
  REQUIRE(a.size() == b.size());
  CHECK(a.positions == b.positions);
}

TEST_CASE("filter keeps labeled points and drops label zero") {
  LabeledPointCloud cloud;
  for (int i = 0; i < 10; ++i) {
    cloud.positions.emplace_back(i, 0, 0);
    cloud.labels.push_back(i < 3 ? 0 : 1);
  }
  const auto kept = filter_labeled_cloud(cloud, FilterPolicy::kKeepLabeled);
  CHECK(kept.size() == 7);
  for (uint16_t l : kept.labels) {
    CHECK(l != 0);
  }
  const auto all = filter_labeled_cloud(cloud, FilterPolicy::kKeepAll);
  CHECK(all.size() == cloud.size());

  LabeledPointCloud labeled = kept;
  const auto same = filter_labeled_cloud(labeled, FilterPolicy::kKeepLabeled);
  CHECK(same.size() == labeled.size());
}

TEST_CASE("points outside every mask are dropped, labeled points survive") {
  // Masks cover only sphere 1; sphere 2 pixels are unlabeled and must be
  // filtered out, with no labeled point lost.
  const Scene scene = two_sphere_scene();
  auto views = orbit_views(scene, 6);
  for (FusionView& view : views) {
    for (uint16_t& l : view.labels.data) {
      if (l == 2) {
        l = 0;
      }
    }
  }
  FusionParams params;
  const LabeledPointCloud fused = fuse_views(views, params);
  const LabeledPointCloud kept =
      filter_labeled_cloud(fused, FilterPolicy::kKeepLabeled);
  size_t labeled = 0;
  for (size_t i = 0; i < fused.size(); ++i) {
    labeled += fused.labels[i] != 0;
  }
  CHECK(kept.size() == labeled);
  for (size_t i = 0; i < kept.size(); ++i) {
    CHECK(scene_sdf(scene, kept.positions[i]).label == 1);
  }
}

TEST_CASE("fusion rejects an empty view list") {
  CHECK_THROWS_AS(fuse_views({}, FusionParams{}), InvalidInputError);
}

TEST_SUITE_END();
