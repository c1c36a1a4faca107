#pragma once

#include <cstdint>

#include "agidet/rng.hpp"

namespace agidet::seeds {

// Every stage derives its own stream from the one master seed, so chained
// subcommands given the same --seed reproduce the pipeline bit for bit.
inline constexpr std::uint64_t kSynth = 1;
inline constexpr std::uint64_t kVae = 2;
inline constexpr std::uint64_t kSplit = 3;
inline constexpr std::uint64_t kModel = 4;

inline std::uint64_t for_stream(std::uint64_t master, std::uint64_t stream) {
    return derive_seed(master, stream);
}

}  // namespace agidet::seeds
