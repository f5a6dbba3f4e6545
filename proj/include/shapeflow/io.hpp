#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shapeflow/mesh.hpp"

namespace shapeflow {

// Formats with 9 significant digits, enough to round-trip any f32 exactly.
std::string format_g9(double v);

// ASCII OBJ: `v x y z` and `f i j k` with 1-based indices.
void write_obj(const std::string& path, const Mesh& mesh);
std::string obj_to_string(const Mesh& mesh);
Mesh read_obj(const std::string& path);

// ASCII PLY with float x y z and optional nx ny nz properties.
void write_ply(const std::string& path, const PointSet& points);
PointSet read_ply(const std::string& path);

// Raw little-endian f32 payload plus a JSON sidecar at <path minus .f32>.json.
void write_raw_f32(const std::string& path, const std::vector<float>& values,
                   const std::string& sidecar_json);
std::vector<float> read_raw_f32(const std::string& path);
std::string sidecar_path(const std::string& raw_path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

uint32_t crc32(const uint8_t* data, size_t len);
uint64_t fnv1a64(const uint8_t* data, size_t len);
uint64_t fnv1a64(const std::string& s);

}  // namespace shapeflow
