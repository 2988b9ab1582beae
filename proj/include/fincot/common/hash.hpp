#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

namespace fincot {

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// First 8 bytes of SHA-256, big-endian. Stable across platforms and runs.
std::uint64_t stable_hash64(std::string_view data);

// Derives an RNG seed from a run seed and an ordered list of labels
// (query id, judge id, replicate, ...). Each part is length-prefixed so
// ("ab","c") and ("a","bc") do not collide.
std::uint64_t derive_seed(std::uint64_t run_seed, std::initializer_list<std::string_view> parts);

}  // namespace fincot
