#include "labelfuse/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "labelfuse/error.hpp"

namespace labelfuse {

void RunConfig::validate() const {
  if (stride < 1) {
    throw InvalidInputError("config: stride must be >= 1");
  }
  if (fragment_size < 1) {
    throw InvalidInputError("config: fragment_size must be >= 1");
  }
  if (!(voxel_size > 0)) {
    throw InvalidInputError("config: voxel_size must be positive");
  }
  if (truncation < voxel_size) {
    throw InvalidInputError("config: truncation must be >= voxel_size");
  }
  if (min_consistent_views < 1) {
    throw InvalidInputError("config: min_consistent_views must be >= 1");
  }
  if (!(depth_tolerance > 0) || !(normal_tolerance_deg > 0) ||
      !(reprojection_tolerance_px > 0)) {
    throw InvalidInputError("config: tolerances must be positive");
  }
  if (registration_method != "ransac" && registration_method != "fgr") {
    throw InvalidInputError("config: registration_method must be ransac|fgr");
  }
}

namespace {

std::string trim(const std::string& s) {
  const size_t begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return {};
  }
  const size_t end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double num(const std::string& v, int line_no) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) {
      throw std::invalid_argument(v);
    }
    return x;
  } catch (const std::exception&) {
    throw ParseError("config: bad number '" + v + "'", line_no);
  }
}

int int_num(const std::string& v, int line_no) {
  const double x = num(v, line_no);
  if (x != std::floor(x)) {
    throw ParseError("config: expected an integer, got '" + v + "'", line_no);
  }
  return static_cast<int>(x);
}

}  // namespace

RunConfig RunConfig::parse(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config: expected 'key = value'", line_no);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) {
      throw ParseError("config: empty value for '" + key + "'", line_no);
    }
    if (key == "stride") {
      cfg.stride = int_num(value, line_no);
    } else if (key == "fragment_size") {
      cfg.fragment_size = int_num(value, line_no);
    } else if (key == "voxel_size") {
      cfg.voxel_size = num(value, line_no);
    } else if (key == "truncation") {
      cfg.truncation = num(value, line_no);
    } else if (key == "min_consistent_views") {
      cfg.min_consistent_views = int_num(value, line_no);
    } else if (key == "depth_tolerance") {
      cfg.depth_tolerance = num(value, line_no);
    } else if (key == "normal_tolerance_deg") {
      cfg.normal_tolerance_deg = num(value, line_no);
    } else if (key == "reprojection_tolerance_px") {
      cfg.reprojection_tolerance_px = num(value, line_no);
    } else if (key == "registration_method") {
      cfg.registration_method = value;
    } else if (key == "seed") {
      cfg.seed = static_cast<uint64_t>(num(value, line_no));
    } else if (key == "voxel_down") {
      cfg.voxel_down = num(value, line_no);
    } else if (key == "fitness_floor") {
      cfg.fitness_floor = num(value, line_no);
    } else if (key == "frames_dir") {
      cfg.frames_dir = value;
    } else if (key == "masks_dir") {
      cfg.masks_dir = value;
    } else if (key == "output_prefix") {
      cfg.output_prefix = value;
    } else {
      throw ParseError("config: unknown key '" + key + "'", line_no);
    }
  }
  try {
    cfg.validate();
  } catch (const InvalidInputError& e) {
    throw ParseError(e.what(), line_no);
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  return parse(in);
}

}  // namespace labelfuse
