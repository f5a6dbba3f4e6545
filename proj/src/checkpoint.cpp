#include "shapeflow/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "shapeflow/io.hpp"

namespace shapeflow {

namespace {

void append_u32(std::string* out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(char((v >> (8 * i)) & 0xFF));
}

void append_u64(std::string* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out->push_back(char((v >> (8 * i)) & 0xFF));
}

uint32_t read_u32(const std::string& s, size_t at) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(s[at + i])) << (8 * i);
  return v;
}

uint64_t read_u64(const std::string& s, size_t at) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(s[at + i])) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const nlohmann::json& meta) {
  nlohmann::json table = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& [name, e] : params.entries) {
    table.push_back({{"name", name},
                     {"rows", e.value.rows},
                     {"cols", e.value.cols},
                     {"offset", offset}});
    offset += e.value.size() * 4;
  }
  nlohmann::json header;
  header["meta"] = meta;
  header["params"] = std::move(table);
  std::string header_text = header.dump();

  std::string blob;
  blob.reserve(16 + header_text.size() + offset + 4);
  blob += "OMNI";
  append_u32(&blob, kCheckpointVersion);
  append_u64(&blob, header_text.size());
  blob += header_text;
  for (const auto& [name, e] : params.entries) {
    for (double d : e.value.v) {
      float f = (float)d;
      char bytes[4];
      std::memcpy(bytes, &f, 4);
      blob.append(bytes, 4);
    }
  }
  append_u32(&blob, crc32(reinterpret_cast<const uint8_t*>(blob.data()), blob.size()));
  write_text_file(path, blob);
}

ParamStore load_checkpoint(const std::string& path, nlohmann::json* meta_out) {
  std::string blob = read_text_file(path);
  if (blob.size() < 20) throw std::runtime_error("checkpoint: file truncated");
  if (blob.compare(0, 4, "OMNI") != 0) throw std::runtime_error("checkpoint: bad magic");
  uint32_t version = read_u32(blob, 4);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  uint32_t stored_crc = read_u32(blob, blob.size() - 4);
  uint32_t computed =
      crc32(reinterpret_cast<const uint8_t*>(blob.data()), blob.size() - 4);
  if (stored_crc != computed) throw std::runtime_error("checkpoint: CRC mismatch");

  uint64_t header_len = read_u64(blob, 8);
  if (16 + header_len + 4 > blob.size()) throw std::runtime_error("checkpoint: bad header length");
  auto header = nlohmann::json::parse(blob.substr(16, header_len));
  if (meta_out) *meta_out = header.at("meta");

  size_t payload_at = 16 + header_len;
  size_t payload_bytes = blob.size() - payload_at - 4;

  ParamStore ps;
  uint64_t expected_offset = 0;
  for (const auto& entry : header.at("params")) {
    std::string name = entry.at("name").get<std::string>();
    int rows = entry.at("rows").get<int>();
    int cols = entry.at("cols").get<int>();
    uint64_t offset = entry.at("offset").get<uint64_t>();
    if (rows < 1 || cols < 1) throw std::runtime_error("checkpoint: bad shape for " + name);
    if (offset != expected_offset)
      throw std::runtime_error("checkpoint: overlapping or unordered offsets at " + name);
    uint64_t bytes = uint64_t(rows) * cols * 4;
    if (offset + bytes > payload_bytes)
      throw std::runtime_error("checkpoint: payload overrun at " + name);
    Tensor t(rows, cols);
    for (size_t i = 0; i < t.v.size(); ++i) {
      float f;
      std::memcpy(&f, blob.data() + payload_at + offset + i * 4, 4);
      t.v[i] = (double)f;
    }
    ps.add(name, std::move(t));
    expected_offset = offset + bytes;
  }
  if (expected_offset != payload_bytes) throw std::runtime_error("checkpoint: trailing payload");
  return ps;
}

}  // namespace shapeflow
