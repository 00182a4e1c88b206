#pragma once

// Checkpoint container:
//   line 1  "sgdlab-checkpoint"
//   line 2  one-line JSON header: format_version, spec, provenance, seed,
//           config_fingerprint (hex string), created, param_count
//   rest    param_count little-endian float64 values in Weights::flatten() order
//           (per layer: weight matrix row-major, then bias)

#include "sgdlab/nn.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sgdlab {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointVersion;
  MlpSpec spec;
  std::vector<double> params;
  Provenance provenance = Provenance::RandomInit;
  std::uint64_t seed = 0;
  std::uint64_t config_fingerprint = 0;
  std::string created;  // ISO-8601 UTC

  Weights weights() const;
  bool operator==(const Checkpoint&) const = default;
};

// `created` defaults to $SOURCE_DATE_EPOCH when set, else the current time.
Checkpoint make_checkpoint(const MlpSpec& spec, const Weights& w, std::uint64_t config_fingerprint);
std::string utc_timestamp();

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c);
// Throws CheckpointError: BadHeader, VersionMismatch, CountMismatch or Truncated.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace sgdlab
