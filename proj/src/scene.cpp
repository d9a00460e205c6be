#include "labelfuse/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace labelfuse {

void Scene::validate() const {
  std::set<uint16_t> labels;
  for (const ScenePrimitive& prim : primitives) {
    if (prim.label == 0) {
      throw InvalidInputError("scene: primitive labels must be nonzero");
    }
    if (!labels.insert(prim.label).second) {
      throw InvalidInputError("scene: duplicate primitive label " +
                              std::to_string(prim.label));
    }
    switch (prim.kind) {
      case ScenePrimitive::Kind::kSphere:
        if (!(prim.radius > 0)) {
          throw InvalidInputError("scene: sphere radius must be positive");
        }
        break;
      case ScenePrimitive::Kind::kBox:
        if (!(prim.half_extents.minCoeff() > 0)) {
          throw InvalidInputError("scene: box extents must be positive");
        }
        break;
      case ScenePrimitive::Kind::kPlane:
        if (std::abs(prim.normal.norm() - 1.0) > 1e-9) {
          throw InvalidInputError("scene: plane normal must be unit length");
        }
        break;
    }
  }
}

namespace {

double primitive_sdf(const ScenePrimitive& prim, const Vec3& p) {
  switch (prim.kind) {
    case ScenePrimitive::Kind::kSphere:
      return (p - prim.center).norm() - prim.radius;
    case ScenePrimitive::Kind::kBox: {
      const Vec3 q = (p - prim.center).cwiseAbs() - prim.half_extents;
      const Vec3 outside = q.cwiseMax(0.0);
      return outside.norm() + std::min(q.maxCoeff(), 0.0);
    }
    case ScenePrimitive::Kind::kPlane:
      return (p - prim.center).dot(prim.normal);
  }
  return std::numeric_limits<double>::infinity();
}

// Smallest t > 0 with o + t*d on the primitive surface; infinity on miss.
double primitive_raycast(const ScenePrimitive& prim, const Vec3& o,
                         const Vec3& d) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  switch (prim.kind) {
    case ScenePrimitive::Kind::kSphere: {
      const Vec3 oc = o - prim.center;
      const double a = d.squaredNorm();
      const double b = 2.0 * oc.dot(d);
      const double c = oc.squaredNorm() - prim.radius * prim.radius;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) {
        return kInf;
      }
      const double sq = std::sqrt(disc);
      const double t0 = (-b - sq) / (2 * a);
      const double t1 = (-b + sq) / (2 * a);
      if (t0 > 0) return t0;
      if (t1 > 0) return t1;
      return kInf;
    }
    case ScenePrimitive::Kind::kBox: {
      double tmin = 0, tmax = kInf;
      for (int axis = 0; axis < 3; ++axis) {
        const double lo = prim.center[axis] - prim.half_extents[axis];
        const double hi = prim.center[axis] + prim.half_extents[axis];
        if (d[axis] == 0) {
          if (o[axis] < lo || o[axis] > hi) {
            return kInf;
          }
          continue;
        }
        double t0 = (lo - o[axis]) / d[axis];
        double t1 = (hi - o[axis]) / d[axis];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) {
          return kInf;
        }
      }
      return tmin > 0 ? tmin : (tmax > 0 ? tmax : kInf);
    }
    case ScenePrimitive::Kind::kPlane: {
      const double denom = d.dot(prim.normal);
      if (denom == 0) {
        return kInf;
      }
      const double t = (prim.center - o).dot(prim.normal) / denom;
      return t > 0 ? t : kInf;
    }
  }
  return kInf;
}

Rgb8 shade(const ScenePrimitive& prim, const Vec3& p) {
  if (!prim.checker) {
    return prim.color;
  }
  const auto cell = [&](double v) {
    return static_cast<int64_t>(std::floor(v / prim.checker_size));
  };
  const bool dark = (cell(p.x()) + cell(p.y()) + cell(p.z())) & 1;
  if (!dark) {
    return prim.color;
  }
  return Rgb8{static_cast<uint8_t>(prim.color.r / 2),
              static_cast<uint8_t>(prim.color.g / 2),
              static_cast<uint8_t>(prim.color.b / 2)};
}

}  // namespace

SdfResult scene_sdf(const Scene& scene, const Vec3& p) {
  SdfResult best{std::numeric_limits<double>::infinity(), 0};
  for (const ScenePrimitive& prim : scene.primitives) {
    const double d = primitive_sdf(prim, p);
    if (d < best.distance) {
      best.distance = d;
      best.label = prim.label;
    }
  }
  return best;
}

RenderedFrame render_frame(const Scene& scene, const Intrinsics& k,
                           const RigidPose& world_from_cam,
                           double depth_noise_sigma, uint64_t seed) {
  k.validate();
  RenderedFrame frame;
  frame.color = ColorImage(k.width, k.height);
  frame.depth = DepthImage(k.width, k.height, 0.0);
  frame.labels = LabelImage(k.width, k.height, 0);
  const Vec3 origin = world_from_cam.translation();
  const Mat3& rot = world_from_cam.rotation();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      // Direction with unit camera-frame z, so the ray parameter t is the
      // z-depth directly.
      const Vec3 dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Vec3 dir = rot * dir_cam;
      double best_t = std::numeric_limits<double>::infinity();
      const ScenePrimitive* hit = nullptr;
      for (const ScenePrimitive& prim : scene.primitives) {
        const double t = primitive_raycast(prim, origin, dir);
        if (t < best_t) {
          best_t = t;
          hit = &prim;
        }
      }
      if (!hit) {
        continue;
      }
      double depth = best_t;
      if (depth_noise_sigma > 0) {
        depth = std::max(1e-6, depth + depth_noise_sigma * noise(rng));
      }
      frame.depth.at(u, v) = depth;
      frame.labels.at(u, v) = hit->label;
      frame.color.at(u, v) = shade(*hit, origin + best_t * dir);
    }
  }
  return frame;
}

Trajectory orbit_trajectory(const Vec3& center, double radius, int n,
                            double elevation) {
  if (n < 1) {
    throw InvalidInputError("orbit_trajectory: need at least one frame");
  }
  if (!(radius > 0)) {
    throw InvalidInputError("orbit_trajectory: radius must be positive");
  }
  Trajectory traj;
  traj.world_from_cam.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double angle = 2.0 * M_PI * i / n;
    const Vec3 eye = center + Vec3(radius * std::cos(angle),
                                   radius * std::sin(angle), elevation);
    const Vec3 forward = (center - eye).normalized();
    // Stabilized up: project world +z out of the viewing direction.
    Vec3 down = -Vec3::UnitZ() + forward.z() * forward;
    if (down.norm() < 1e-9) {
      down = -Vec3::UnitY() + forward.y() * forward;  // top-down fallback
    }
    down.normalize();
    const Vec3 right = down.cross(forward);
    Mat3 rot;
    rot.col(0) = right;
    rot.col(1) = down;
    rot.col(2) = forward;
    traj.world_from_cam.emplace_back(rot, eye);
  }
  return traj;
}

EvalReport evaluate(const std::vector<Vec3>& positions,
                    const std::vector<uint16_t>& labels, const Scene& scene) {
  if (positions.size() != labels.size()) {
    throw InvalidInputError("evaluate: labels not parallel to positions");
  }
  EvalReport report;
  report.element_count = positions.size();
  if (positions.empty()) {
    for (const ScenePrimitive& prim : scene.primitives) {
      report.label_iou[prim.label] = 1.0;
    }
    return report;
  }
  double sq_sum = 0;
  size_t unlabeled = 0;
  std::map<uint16_t, size_t> intersection, uni;
  for (size_t i = 0; i < positions.size(); ++i) {
    const SdfResult sdf = scene_sdf(scene, positions[i]);
    sq_sum += sdf.distance * sdf.distance;
    if (labels[i] == 0) {
      ++unlabeled;
    }
    if (labels[i] == sdf.label) {
      ++intersection[sdf.label];
      ++uni[sdf.label];
    } else {
      ++uni[sdf.label];
      if (labels[i] != 0) {
        ++uni[labels[i]];
      }
    }
  }
  report.surface_rms = std::sqrt(sq_sum / positions.size());
  report.unlabeled_fraction =
      static_cast<double>(unlabeled) / positions.size();
  for (const ScenePrimitive& prim : scene.primitives) {
    const size_t u = uni.count(prim.label) ? uni.at(prim.label) : 0;
    const size_t inter =
        intersection.count(prim.label) ? intersection.at(prim.label) : 0;
    report.label_iou[prim.label] =
        u == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(u);
  }
  return report;
}

namespace {

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    if (tok[0] == '#') {
      break;
    }
    tokens.push_back(tok);
  }
  return tokens;
}

double parse_num(const std::string& tok, int line_no) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) {
      throw std::invalid_argument(tok);
    }
    return v;
  } catch (const std::exception&) {
    throw ParseError("scene: bad number '" + tok + "'", line_no);
  }
}

uint8_t parse_channel(const std::string& tok, int line_no) {
  const double v = parse_num(tok, line_no);
  if (v < 0 || v > 255 || v != std::floor(v)) {
    throw ParseError("scene: color channel out of range", line_no);
  }
  return static_cast<uint8_t>(v);
}

}  // namespace

Scene Scene::parse(std::istream& in) {
  Scene scene;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) {
      continue;
    }
    ScenePrimitive prim;
    size_t base;
    if (tok[0] == "sphere") {
      if (tok.size() < 9) {
        throw ParseError("scene: sphere needs 8 fields", line_no);
      }
      prim.kind = ScenePrimitive::Kind::kSphere;
      prim.center = Vec3(parse_num(tok[1], line_no), parse_num(tok[2], line_no),
                         parse_num(tok[3], line_no));
      prim.radius = parse_num(tok[4], line_no);
      base = 5;
    } else if (tok[0] == "box" || tok[0] == "plane") {
      if (tok.size() < 11) {
        throw ParseError("scene: " + tok[0] + " needs 10 fields", line_no);
      }
      prim.center = Vec3(parse_num(tok[1], line_no), parse_num(tok[2], line_no),
                         parse_num(tok[3], line_no));
      const Vec3 v(parse_num(tok[4], line_no), parse_num(tok[5], line_no),
                   parse_num(tok[6], line_no));
      if (tok[0] == "box") {
        prim.kind = ScenePrimitive::Kind::kBox;
        prim.half_extents = v;
      } else {
        prim.kind = ScenePrimitive::Kind::kPlane;
        if (!(v.norm() > 0)) {
          throw ParseError("scene: zero plane normal", line_no);
        }
        prim.normal = v.normalized();
      }
      base = 7;
    } else {
      throw ParseError("scene: unknown primitive '" + tok[0] + "'", line_no);
    }
    prim.color = Rgb8{parse_channel(tok[base], line_no),
                      parse_channel(tok[base + 1], line_no),
                      parse_channel(tok[base + 2], line_no)};
    const double label = parse_num(tok[base + 3], line_no);
    if (label < 1 || label > 65535 || label != std::floor(label)) {
      throw ParseError("scene: label must be in [1, 65535]", line_no);
    }
    prim.label = static_cast<uint16_t>(label);
    size_t pos = base + 4;
    if (pos < tok.size()) {
      if (tok[pos] != "checker" || pos + 1 >= tok.size()) {
        throw ParseError("scene: trailing tokens", line_no);
      }
      prim.checker = true;
      prim.checker_size = parse_num(tok[pos + 1], line_no);
      if (!(prim.checker_size > 0)) {
        throw ParseError("scene: checker size must be positive", line_no);
      }
      pos += 2;
    }
    if (pos != tok.size()) {
      throw ParseError("scene: trailing tokens", line_no);
    }
    scene.primitives.push_back(prim);
  }
  scene.validate();
  return scene;
}

Scene Scene::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("scene: cannot open " + path);
  }
  return parse(in);
}

}  // namespace labelfuse
