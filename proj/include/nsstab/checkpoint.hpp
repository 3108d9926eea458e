#pragma once

#include "nsstab/field.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace nsstab {

class CheckpointError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Current on-disk format version.
inline constexpr int kCheckpointVersion = 1;

// Layout of a checkpoint file:
//
//   line 1   "nsstab-checkpoint"
//   line 2   compact JSON header: {"version", "kind", "grid": {...},
//            "mode_count", "payload_bytes", "meta": {...}}
//   payload  for each field listed in the header, mode_count*3 complex
//            coefficients as little-endian IEEE doubles (re, im), in
//            (k1, k2, k3, component) lexicographic order over the retained
//            half space k3 >= 0, k != 0
//   trailer  "crc32 XXXXXXXX\n", the zlib CRC-32 of every preceding byte
//
// `meta` is free-form JSON owned by the caller (seeds, times, ledgers).

struct CheckpointContents
{
  std::string kind;
  GridSpec grid;
  nlohmann::json meta;
  std::vector<SpectralVectorField> fields;
};

void write_checkpoint(const std::filesystem::path& path, const CheckpointContents& contents);

/// Throws CheckpointError on a bad magic line, unsupported version, size
/// mismatch or checksum failure. Nothing is returned on failure.
CheckpointContents read_checkpoint(const std::filesystem::path& path);

/// Single-field convenience wrappers.
void write_field(const std::filesystem::path& path, const SpectralVectorField& f,
                 const nlohmann::json& meta = nlohmann::json::object());
SpectralVectorField read_field(const std::filesystem::path& path, nlohmann::json* meta = nullptr);

nlohmann::json grid_to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

} // namespace nsstab
