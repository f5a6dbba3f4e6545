#pragma once

#include <string>

#include "json.hpp"
#include "shapeflow/tensor.hpp"

namespace shapeflow {

// Checkpoint container: "OMNI" magic, u32 format version, u64 header length,
// JSON header (parameter table of name/rows/cols/byte offset plus free-form
// meta), raw little-endian f32 payload, trailing CRC32 over everything
// before it. Parameters are stored f32-exactly, so save/load round-trips
// reproduce forward passes bit-identically.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParamStore& params,
                     const nlohmann::json& meta);

// Verifies magic, version, CRC and offset table; throws on any mismatch.
ParamStore load_checkpoint(const std::string& path, nlohmann::json* meta_out = nullptr);

}  // namespace shapeflow
