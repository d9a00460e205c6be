#include "labelfuse/sfm_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace labelfuse {

namespace {

bool comment_or_blank(const std::string& line) {
  const size_t pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    out.push_back(tok);
  }
  return out;
}

double to_double(const std::string& tok, int line_no, const char* what) {
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size() || !std::isfinite(v)) {
      throw std::invalid_argument(tok);
    }
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("bad ") + what + " '" + tok + "'", line_no);
  }
}

int to_int(const std::string& tok, int line_no, const char* what) {
  const double v = to_double(tok, line_no, what);
  if (v != std::floor(v)) {
    throw ParseError(std::string(what) + " must be an integer", line_no);
  }
  return static_cast<int>(v);
}

}  // namespace

void SfmModel::validate() const {
  for (const auto& [id, view] : views) {
    if (!cameras.count(view.camera_id)) {
      throw InvalidInputError("sfm model: image " + std::to_string(id) +
                              " references missing camera " +
                              std::to_string(view.camera_id));
    }
  }
  sparse_points.validate();
}

std::map<int, Intrinsics> parse_sfm_cameras(std::istream& in) {
  std::map<int, Intrinsics> cameras;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (comment_or_blank(line)) {
      continue;
    }
    const std::vector<std::string> tok = split_ws(line);
    if (tok.size() < 4) {
      throw ParseError("camera line needs id, model, width, height", line_no);
    }
    const int id = to_int(tok[0], line_no, "camera id");
    const std::string& model = tok[1];
    Intrinsics k;
    k.width = to_int(tok[2], line_no, "width");
    k.height = to_int(tok[3], line_no, "height");
    if (model == "PINHOLE") {
      if (tok.size() != 8) {
        throw ParseError("PINHOLE needs fx fy cx cy", line_no);
      }
      k.fx = to_double(tok[4], line_no, "fx");
      k.fy = to_double(tok[5], line_no, "fy");
      k.cx = to_double(tok[6], line_no, "cx");
      k.cy = to_double(tok[7], line_no, "cy");
    } else if (model == "SIMPLE_PINHOLE") {
      if (tok.size() != 7) {
        throw ParseError("SIMPLE_PINHOLE needs f cx cy", line_no);
      }
      k.fx = k.fy = to_double(tok[4], line_no, "f");
      k.cx = to_double(tok[5], line_no, "cx");
      k.cy = to_double(tok[6], line_no, "cy");
    } else {
      throw UnsupportedModelError(model, line_no);
    }
    try {
      k.validate();
    } catch (const InvalidInputError& e) {
      throw ParseError(e.what(), line_no);
    }
    cameras[id] = k;
  }
  return cameras;
}

std::map<int, SfmView> parse_sfm_images(std::istream& in) {
  std::map<int, SfmView> views;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (comment_or_blank(line)) {
      continue;
    }
    const std::vector<std::string> tok = split_ws(line);
    if (tok.size() < 10) {
      throw ParseError("image line needs 10 fields", line_no);
    }
    const int id = to_int(tok[0], line_no, "image id");
    const double qw = to_double(tok[1], line_no, "qw");
    const double qx = to_double(tok[2], line_no, "qx");
    const double qy = to_double(tok[3], line_no, "qy");
    const double qz = to_double(tok[4], line_no, "qz");
    const double norm = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (std::abs(norm - 1.0) > 1e-3) {
      throw ParseError("quaternion is not unit length", line_no);
    }
    const Vec3 t(to_double(tok[5], line_no, "tx"),
                 to_double(tok[6], line_no, "ty"),
                 to_double(tok[7], line_no, "tz"));
    SfmView view;
    view.cam_from_world = RigidPose::from_quaternion(qw, qx, qy, qz, t);
    view.camera_id = to_int(tok[8], line_no, "camera id");
    view.name = tok[9];
    // Second line lists 2-d observations; it may be empty but must exist.
    if (!std::getline(in, line)) {
      throw ParseError("missing 2-d point line for image " +
                           std::to_string(id),
                       line_no);
    }
    ++line_no;
    views[id] = std::move(view);
  }
  return views;
}

LabeledPointCloud parse_sfm_points3d(std::istream& in) {
  LabeledPointCloud cloud;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (comment_or_blank(line)) {
      continue;
    }
    const std::vector<std::string> tok = split_ws(line);
    if (tok.size() < 8) {
      throw ParseError("point line needs id, xyz, rgb, error", line_no);
    }
    cloud.positions.emplace_back(to_double(tok[1], line_no, "x"),
                                 to_double(tok[2], line_no, "y"),
                                 to_double(tok[3], line_no, "z"));
    const auto channel = [&](const std::string& s, const char* what) {
      const int v = to_int(s, line_no, what);
      if (v < 0 || v > 255) {
        throw ParseError(std::string(what) + " out of range", line_no);
      }
      return static_cast<uint8_t>(v);
    };
    cloud.colors.push_back(Rgb8{channel(tok[4], "r"), channel(tok[5], "g"),
                                channel(tok[6], "b")});
    to_double(tok[7], line_no, "error");
    cloud.labels.push_back(0);
  }
  return cloud;
}

SfmModel read_sfm_model(const std::string& dir) {
  namespace fs = std::filesystem;
  SfmModel model;
  const auto open = [](const fs::path& p) {
    std::ifstream in(p);
    if (!in) {
      throw IoError("cannot open " + p.string());
    }
    return in;
  };
  {
    auto in = open(fs::path(dir) / "cameras.txt");
    model.cameras = parse_sfm_cameras(in);
  }
  {
    auto in = open(fs::path(dir) / "images.txt");
    model.views = parse_sfm_images(in);
  }
  const fs::path points = fs::path(dir) / "points3D.txt";
  if (fs::exists(points)) {
    auto in = open(points);
    model.sparse_points = parse_sfm_points3d(in);
  }
  model.validate();
  return model;
}

void write_sfm_cameras(const std::map<int, Intrinsics>& cameras,
                       std::ostream& out) {
  out << "# Camera list: CAMERA_ID MODEL WIDTH HEIGHT PARAMS[]\n";
  out << std::setprecision(17);
  for (const auto& [id, k] : cameras) {
    out << id << " PINHOLE " << k.width << ' ' << k.height << ' ' << k.fx
        << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << '\n';
  }
}

void write_sfm_images(const std::map<int, SfmView>& views, std::ostream& out) {
  out << "# Image list: IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME\n";
  out << std::setprecision(17);
  for (const auto& [id, view] : views) {
    Eigen::Quaterniond q = view.cam_from_world.quaternion();
    if (q.w() < 0) {
      q.coeffs() = -q.coeffs();
    }
    const Vec3& t = view.cam_from_world.translation();
    out << id << ' ' << q.w() << ' ' << q.x() << ' ' << q.y() << ' ' << q.z()
        << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' '
        << view.camera_id << ' ' << view.name << '\n';
    out << '\n';  // no 2-d observations
  }
}

void write_sfm_points3d(const LabeledPointCloud& cloud, std::ostream& out) {
  out << "# 3D point list: POINT3D_ID X Y Z R G B ERROR TRACK[]\n";
  out << std::setprecision(17);
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Rgb8 c = cloud.has_colors() ? cloud.colors[i] : Rgb8{255, 255, 255};
    out << i + 1 << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << ' '
        << int(c.r) << ' ' << int(c.g) << ' ' << int(c.b) << " 0\n";
  }
}

void write_sfm_model(const SfmModel& model, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto open = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) {
      throw IoError("cannot open " + p.string() + " for writing");
    }
    return out;
  };
  {
    auto out = open(fs::path(dir) / "cameras.txt");
    write_sfm_cameras(model.cameras, out);
  }
  {
    auto out = open(fs::path(dir) / "images.txt");
    write_sfm_images(model.views, out);
  }
  {
    auto out = open(fs::path(dir) / "points3D.txt");
    write_sfm_points3d(model.sparse_points, out);
  }
}

}  // namespace labelfuse
