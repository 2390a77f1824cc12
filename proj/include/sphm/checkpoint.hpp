#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sphm/embedder.hpp"

namespace sphm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Checkpoint byte layout (all little-endian after the magic):
///   "SPHM" | u32 version | u64 header length | JSON header bytes |
///   per array: u64 element count | count * f64 payload
/// The JSON header lists configs, counters, and the array shapes in order.
/// Parameter doubles live only in the binary arrays, so round-trips are
/// bit-exact. Truncated or oversized streams fail with the byte offset.
std::vector<std::uint8_t> checkpoint_serialize(const ModelState& state);
ModelState checkpoint_deserialize(std::span<const std::uint8_t> bytes);

void checkpoint_save(const ModelState& state, const std::filesystem::path& path);
ModelState checkpoint_load(const std::filesystem::path& path);

}  // namespace sphm
