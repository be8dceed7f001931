#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace recast::util {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// 64-bit FNV-1a; used only for seed derivation where a cryptographic hash
// is not needed.
std::uint64_t fnv1a64(std::string_view data);

// Per-record seed: splitmix64 finalizer over (global_seed, fnv1a64(key)).
// Stable across platforms and independent of processing order.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view key);

}  // namespace recast::util
