#include "fincot/common/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <stdexcept>

namespace fincot {
namespace {

std::array<unsigned char, 32> sha256_raw(std::string_view data) {
  std::array<unsigned char, 32> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
      len != digest.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return digest;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto digest = sha256_raw(data);
  std::string out;
  out.reserve(64);
  for (unsigned char b : digest) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0x0f]);
  }
  return out;
}

std::uint64_t stable_hash64(std::string_view data) {
  const auto digest = sha256_raw(data);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::initializer_list<std::string_view> parts) {
  std::string buf = std::to_string(run_seed);
  for (auto p : parts) {
    buf.push_back('\x1f');
    buf += std::to_string(p.size());
    buf.push_back(':');
    buf.append(p);
  }
  return stable_hash64(buf);
}

}  // namespace fincot
