#include "pirnsi/serialize.hpp"

#include <openssl/sha.h>

namespace pirnsi {

std::string sha256_hex(const std::vector<std::uint8_t>& data) {
  unsigned char d[SHA256_DIGEST_LENGTH];
  SHA256(data.data(), data.size(), d);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char c : d) {
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 0xF]);
  }
  return out;
}

}  // namespace pirnsi
