#pragma once

#include "evomas/adapter.hpp"

#include <cstdint>
#include <filesystem>

namespace evomas {

/// Versioned parameter snapshot: structured-text header (shapes, config
/// hash, trajectory counter) followed by raw little-endian 64-bit floats
/// per named array, in header order. Round-trips bit-exactly.
struct Checkpoint {
    AdapterParams params;
    long trajectories = 0;
    std::uint64_t rng_digest = 0;
    std::uint64_t config_hash = 0;
};

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);

/// Throws CheckpointError on truncation, header corruption, or payload
/// hash mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace evomas
