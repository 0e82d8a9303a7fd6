#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mqa/ranker.hpp"

namespace mqa {

// Binary layout, all integers little-endian:
//   "MQAR" | version u32 | config length u32 | config JSON (UTF-8)
//   | tensor count u32 | per tensor: name length u16, name, rank u8,
//   dims u32 x rank, payload f64 x prod(dims), row-major.
// The config JSON carries the ModelConfig under "model" and the n-gram
// vocabulary under "vocab".
inline constexpr char kCheckpointMagic[4] = {'M', 'Q', 'A', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const Model& model);
void save_checkpoint(const std::filesystem::path& path, const Model& model);

// Throws FormatError for a bad magic or truncated file,
// UnsupportedVersionError for another version, ValidationError when tensors
// disagree with the embedded config.
Model load_checkpoint(std::istream& in);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace mqa
