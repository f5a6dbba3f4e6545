#include "shapeflow/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shapeflow {

std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string obj_to_string(const Mesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 32 + mesh.triangles.size() * 16);
  for (const auto& v : mesh.vertices) {
    out += "v ";
    out += format_g9(v.x);
    out += ' ';
    out += format_g9(v.y);
    out += ' ';
    out += format_g9(v.z);
    out += '\n';
  }
  char buf[64];
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof(buf), "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

void write_obj(const std::string& path, const Mesh& mesh) {
  write_text_file(path, obj_to_string(mesh));
}

Mesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_obj: cannot open " + path);
  Mesh mesh;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      ss >> v.x >> v.y >> v.z;
      if (!ss) throw std::runtime_error("read_obj: malformed vertex line");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      for (int i = 0; i < 3; ++i) {
        std::string tok;
        ss >> tok;
        if (tok.empty()) throw std::runtime_error("read_obj: malformed face line");
        t[i] = std::atoi(tok.c_str()) - 1;  // ignore /vt/vn suffixes
      }
      mesh.triangles.push_back(t);
    }
  }
  std::string why;
  if (!mesh.valid(&why)) throw std::runtime_error("read_obj: invalid mesh: " + why);
  return mesh;
}

void write_ply(const std::string& path, const PointSet& points) {
  if (points.has_normals() && points.normals.size() != points.points.size())
    throw std::invalid_argument("write_ply: normal count mismatch");
  std::string out;
  out += "ply\nformat ascii 1.0\n";
  out += "element vertex " + std::to_string(points.points.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  if (points.has_normals())
    out += "property float nx\nproperty float ny\nproperty float nz\n";
  out += "end_header\n";
  for (size_t i = 0; i < points.points.size(); ++i) {
    const Vec3& p = points.points[i];
    out += format_g9(p.x);
    out += ' ';
    out += format_g9(p.y);
    out += ' ';
    out += format_g9(p.z);
    if (points.has_normals()) {
      const Vec3& n = points.normals[i];
      out += ' ';
      out += format_g9(n.x);
      out += ' ';
      out += format_g9(n.y);
      out += ' ';
      out += format_g9(n.z);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

PointSet read_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_ply: cannot open " + path);
  std::string line;
  size_t count = 0;
  int props = 0;
  bool header_done = false;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "element") {
      std::string what;
      ss >> what >> count;
      if (what != "vertex") throw std::runtime_error("read_ply: unsupported element " + what);
    } else if (tag == "property") {
      ++props;
    } else if (tag == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw std::runtime_error("read_ply: only ascii supported");
    } else if (tag == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw std::runtime_error("read_ply: missing end_header");
  if (props != 3 && props != 6)
    throw std::runtime_error("read_ply: expected 3 or 6 float properties");
  PointSet out;
  out.points.reserve(count);
  if (props == 6) out.normals.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("read_ply: truncated vertex data");
    std::istringstream ss(line);
    Vec3 p;
    ss >> p.x >> p.y >> p.z;
    out.points.push_back(p);
    if (props == 6) {
      Vec3 n;
      ss >> n.x >> n.y >> n.z;
      out.normals.push_back(n);
    }
    if (!ss) throw std::runtime_error("read_ply: malformed vertex line");
  }
  return out;
}

std::string sidecar_path(const std::string& raw_path) {
  auto pos = raw_path.rfind(".f32");
  if (pos == raw_path.size() - 4) return raw_path.substr(0, pos) + ".json";
  return raw_path + ".json";
}

void write_raw_f32(const std::string& path, const std::vector<float>& values,
                   const std::string& sidecar_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_raw_f32: cannot open " + path);
  static_assert(sizeof(float) == 4);
  // little-endian hosts write directly
  out.write(reinterpret_cast<const char*>(values.data()), values.size() * 4);
  if (!out) throw std::runtime_error("write_raw_f32: write failed: " + path);
  out.close();
  if (!sidecar_json.empty()) write_text_file(sidecar_path(path), sidecar_json);
}

std::vector<float> read_raw_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("read_raw_f32: cannot open " + path);
  auto bytes = (size_t)in.tellg();
  if (bytes % 4 != 0) throw std::runtime_error("read_raw_f32: size not a multiple of 4");
  in.seekg(0);
  std::vector<float> values(bytes / 4);
  in.read(reinterpret_cast<char*>(values.data()), bytes);
  if (!in) throw std::runtime_error("read_raw_f32: read failed: " + path);
  return values;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out.write(content.data(), (std::streamsize)content.size());
  if (!out) throw std::runtime_error("write failed: " + path);
}

uint32_t crc32(const uint8_t* data, size_t len) {
  static uint32_t table[256];
  static bool init = [] {
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    return true;
  }();
  (void)init;
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

uint64_t fnv1a64(const uint8_t* data, size_t len) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

}  // namespace shapeflow
