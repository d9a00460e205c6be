#include "labelfuse/ply_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "binary PLY output assumes a little-endian host");

namespace labelfuse {

namespace {

constexpr Rgb8 kPalette[16] = {
    {128, 128, 128}, {230, 25, 75},   {60, 180, 75},   {255, 225, 25},
    {0, 130, 200},   {245, 130, 48},  {145, 30, 180},  {70, 240, 240},
    {240, 50, 230},  {210, 245, 60},  {250, 190, 212}, {0, 128, 128},
    {220, 190, 255}, {170, 110, 40},  {255, 250, 200}, {128, 0, 0}};

void write_header(std::ostream& out, bool binary, size_t vertex_count,
                  size_t face_count, bool with_faces) {
  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n"
                 : "format ascii 1.0\n");
  for (int i = 0; i < 16; ++i) {
    out << "comment label_palette " << i << ' ' << int(kPalette[i].r) << ' '
        << int(kPalette[i].g) << ' ' << int(kPalette[i].b) << '\n';
  }
  out << "element vertex " << vertex_count << '\n';
  out << "property float x\n";
  out << "property float y\n";
  out << "property float z\n";
  out << "property uchar red\n";
  out << "property uchar green\n";
  out << "property uchar blue\n";
  out << "property ushort label\n";
  if (with_faces) {
    out << "element face " << face_count << '\n';
    out << "property list uchar int vertex_indices\n";
  }
  out << "end_header\n";
}

// Shortest decimal form that round-trips a float32.
void append_float(std::string& out, float v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  out += buf;
}

template <typename T>
void append_raw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void write_vertices(std::string& body, bool binary,
                    const std::vector<Vec3>& positions,
                    const std::vector<Rgb8>& colors,
                    const std::vector<uint16_t>& labels) {
  for (size_t i = 0; i < positions.size(); ++i) {
    const Rgb8 c = colors.empty() ? Rgb8{255, 255, 255} : colors[i];
    const uint16_t label = labels[i];
    if (binary) {
      for (int axis = 0; axis < 3; ++axis) {
        append_raw(body, static_cast<float>(positions[i][axis]));
      }
      append_raw(body, c.r);
      append_raw(body, c.g);
      append_raw(body, c.b);
      append_raw(body, label);
    } else {
      for (int axis = 0; axis < 3; ++axis) {
        append_float(body, static_cast<float>(positions[i][axis]));
        body += ' ';
      }
      body += std::to_string(c.r) + ' ' + std::to_string(c.g) + ' ' +
              std::to_string(c.b) + ' ' + std::to_string(label) + '\n';
    }
  }
}

void write_ply_file(const std::string& path, bool binary,
                    const std::vector<Vec3>& positions,
                    const std::vector<Rgb8>& colors,
                    const std::vector<uint16_t>& labels,
                    const std::vector<std::array<int, 3>>* triangles) {
  std::ostringstream header;
  write_header(header, binary, positions.size(),
               triangles ? triangles->size() : 0, triangles != nullptr);
  std::string body;
  write_vertices(body, binary, positions, colors, labels);
  if (triangles) {
    for (const auto& tri : *triangles) {
      if (binary) {
        append_raw(body, static_cast<uint8_t>(3));
        for (int idx : tri) {
          append_raw(body, static_cast<int32_t>(idx));
        }
      } else {
        body += "3 " + std::to_string(tri[0]) + ' ' + std::to_string(tri[1]) +
                ' ' + std::to_string(tri[2]) + '\n';
      }
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open " + path + " for writing");
  }
  out << header.str() << body;
  if (!out) {
    throw IoError("write failed: " + path);
  }
}

}  // namespace

Rgb8 label_palette_color(uint16_t label) { return kPalette[label % 16]; }

void write_labeled_ply(const LabeledPointCloud& cloud, const std::string& path,
                       bool binary) {
  cloud.validate();
  write_ply_file(path, binary, cloud.positions, cloud.colors, cloud.labels,
                 nullptr);
}

void write_labeled_ply(const LabeledMesh& mesh, const std::string& path,
                       bool binary) {
  mesh.validate();
  write_ply_file(path, binary, mesh.vertices, mesh.colors, mesh.labels,
                 &mesh.triangles);
}

LabeledMesh PlyContents::to_mesh() const {
  LabeledMesh mesh;
  mesh.vertices = cloud.positions;
  mesh.colors = cloud.colors;
  mesh.labels = cloud.labels;
  mesh.triangles = triangles;
  mesh.validate();
  return mesh;
}

namespace {

enum class PlyType {
  kChar, kUchar, kShort, kUshort, kInt, kUint, kFloat, kDouble
};

size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kChar:
    case PlyType::kUchar:
      return 1;
    case PlyType::kShort:
    case PlyType::kUshort:
      return 2;
    case PlyType::kInt:
    case PlyType::kUint:
    case PlyType::kFloat:
      return 4;
    case PlyType::kDouble:
      return 8;
  }
  return 0;
}

PlyType parse_type(const std::string& name, int line_no) {
  if (name == "char" || name == "int8") return PlyType::kChar;
  if (name == "uchar" || name == "uint8") return PlyType::kUchar;
  if (name == "short" || name == "int16") return PlyType::kShort;
  if (name == "ushort" || name == "uint16") return PlyType::kUshort;
  if (name == "int" || name == "int32") return PlyType::kInt;
  if (name == "uint" || name == "uint32") return PlyType::kUint;
  if (name == "float" || name == "float32") return PlyType::kFloat;
  if (name == "double" || name == "float64") return PlyType::kDouble;
  throw ParseError("ply: unknown type '" + name + "'", line_no);
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat;
  bool is_list = false;
  PlyType count_type = PlyType::kUchar;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> properties;
};

double read_binary_scalar(std::istream& in, PlyType t) {
  char buf[8];
  in.read(buf, static_cast<std::streamsize>(type_size(t)));
  if (!in) {
    throw ParseError("ply: unexpected end of binary payload", 0);
  }
  switch (t) {
    case PlyType::kChar: {
      int8_t v; std::memcpy(&v, buf, 1); return v;
    }
    case PlyType::kUchar: {
      uint8_t v; std::memcpy(&v, buf, 1); return v;
    }
    case PlyType::kShort: {
      int16_t v; std::memcpy(&v, buf, 2); return v;
    }
    case PlyType::kUshort: {
      uint16_t v; std::memcpy(&v, buf, 2); return v;
    }
    case PlyType::kInt: {
      int32_t v; std::memcpy(&v, buf, 4); return v;
    }
    case PlyType::kUint: {
      uint32_t v; std::memcpy(&v, buf, 4); return v;
    }
    case PlyType::kFloat: {
      float v; std::memcpy(&v, buf, 4); return v;
    }
    case PlyType::kDouble: {
      double v; std::memcpy(&v, buf, 8); return v;
    }
  }
  return 0;
}

}  // namespace

PlyContents read_labeled_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path);
  }
  std::string line;
  int line_no = 0;
  const auto next_line = [&]() {
    if (!std::getline(in, line)) {
      throw ParseError("ply: truncated header", line_no);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
  };
  next_line();
  if (line != "ply") {
    throw ParseError("ply: missing magic", line_no);
  }
  bool binary = false;
  bool format_seen = false;
  std::vector<PlyElement> elements;
  while (true) {
    next_line();
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "end_header") {
      break;
    } else if (word == "comment" || word == "obj_info" || word.empty()) {
      continue;
    } else if (word == "format") {
      std::string fmt, version;
      ls >> fmt >> version;
      if (fmt == "ascii") {
        binary = false;
      } else if (fmt == "binary_little_endian") {
        binary = true;
      } else {
        throw ParseError("ply: unsupported format '" + fmt + "'", line_no);
      }
      format_seen = true;
    } else if (word == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      if (ls.fail()) {
        throw ParseError("ply: malformed element line", line_no);
      }
      elements.push_back(el);
    } else if (word == "property") {
      if (elements.empty()) {
        throw ParseError("ply: property before element", line_no);
      }
      PlyProperty prop;
      std::string t;
      ls >> t;
      if (t == "list") {
        std::string count_t, value_t;
        ls >> count_t >> value_t >> prop.name;
        prop.is_list = true;
        prop.count_type = parse_type(count_t, line_no);
        prop.type = parse_type(value_t, line_no);
      } else {
        prop.type = parse_type(t, line_no);
        ls >> prop.name;
      }
      if (ls.fail()) {
        throw ParseError("ply: malformed property line", line_no);
      }
      elements.back().properties.push_back(prop);
    } else {
      throw ParseError("ply: unknown header keyword '" + word + "'", line_no);
    }
  }
  if (!format_seen) {
    throw ParseError("ply: missing format line", line_no);
  }

  PlyContents contents;
  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    if (is_vertex) {
      contents.cloud.positions.reserve(el.count);
    }
    std::vector<double> scalars(el.properties.size());
    std::vector<double> list_values;
    for (size_t row = 0; row < el.count; ++row) {
      list_values.clear();
      for (size_t pi = 0; pi < el.properties.size(); ++pi) {
        const PlyProperty& prop = el.properties[pi];
        if (prop.is_list) {
          size_t n;
          if (binary) {
            n = static_cast<size_t>(read_binary_scalar(in, prop.count_type));
          } else {
            double nd;
            if (!(in >> nd)) {
              throw ParseError("ply: truncated list", line_no);
            }
            n = static_cast<size_t>(nd);
          }
          list_values.resize(n);
          for (size_t j = 0; j < n; ++j) {
            if (binary) {
              list_values[j] = read_binary_scalar(in, prop.type);
            } else if (!(in >> list_values[j])) {
              throw ParseError("ply: truncated list", line_no);
            }
          }
        } else if (binary) {
          scalars[pi] = read_binary_scalar(in, prop.type);
        } else if (!(in >> scalars[pi])) {
          throw ParseError("ply: truncated element data", line_no);
        }
      }
      if (is_vertex) {
        Vec3 p = Vec3::Zero();
        Rgb8 c{255, 255, 255};
        uint16_t label = 0;
        for (size_t pi = 0; pi < el.properties.size(); ++pi) {
          const std::string& name = el.properties[pi].name;
          // Positions pass through float32 so ASCII and binary readings
          // of the same cloud compare equal.
          if (name == "x") p.x() = static_cast<float>(scalars[pi]);
          else if (name == "y") p.y() = static_cast<float>(scalars[pi]);
          else if (name == "z") p.z() = static_cast<float>(scalars[pi]);
          else if (name == "red") c.r = static_cast<uint8_t>(scalars[pi]);
          else if (name == "green") c.g = static_cast<uint8_t>(scalars[pi]);
          else if (name == "blue") c.b = static_cast<uint8_t>(scalars[pi]);
          else if (name == "label") label = static_cast<uint16_t>(scalars[pi]);
        }
        contents.cloud.positions.push_back(p);
        contents.cloud.colors.push_back(c);
        contents.cloud.labels.push_back(label);
      } else if (is_face && !list_values.empty()) {
        if (list_values.size() < 3) {
          throw ParseError("ply: face with fewer than 3 vertices", line_no);
        }
        for (size_t j = 2; j < list_values.size(); ++j) {
          contents.triangles.push_back({static_cast<int>(list_values[0]),
                                        static_cast<int>(list_values[j - 1]),
                                        static_cast<int>(list_values[j])});
        }
      }
    }
  }
  contents.cloud.validate();
  return contents;
}

}  // namespace labelfuse
