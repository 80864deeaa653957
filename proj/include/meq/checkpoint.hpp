#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "meq/run_io.hpp"
#include "meq/trainer.hpp"

namespace meq {

/// Raised for wrong magic, unsupported version, or truncated/corrupt payloads.
struct BadCheckpoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LoadedCheckpoint {
  CheckpointState state;
  ScenarioConfig config;
};

/// Binary layout (all integers little-endian):
///   "MEQ1" | u32 version | u32 json_len | metadata JSON |
///   u32 net_count   | per net:  name, shape header, f64 weights then biases |
///   u32 adam_count  | per state: name, shape header, m/v blocks, step, betas |
///   u8 has_log_alpha | log-alpha value and Adam scalar |
///   u32 rng_count   | per stream: name, u64 key, u64 counter
/// The metadata JSON carries the resolved scenario config, seed, and step
/// counters. Round trips are bitwise lossless.
std::vector<std::uint8_t> serialize_checkpoint(const CheckpointState& state,
                                               const ScenarioConfig& config);
LoadedCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Atomic write (temp file + rename).
void save_checkpoint_file(const std::filesystem::path& path, const CheckpointState& state,
                          const ScenarioConfig& config);
LoadedCheckpoint load_checkpoint_file(const std::filesystem::path& path);

}  // namespace meq
