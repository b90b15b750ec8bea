#include "lexifactor/hash.hpp"

#include <array>
#include <cstdio>

#include <openssl/evp.h>

#include "lexifactor/error.hpp"

namespace lexifactor {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(),
                 nullptr) != 1) {
    throw RuntimeError("sha256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_fields(const std::vector<std::string>& fields) {
  std::string buffer;
  for (const auto& f : fields) {
    buffer += std::to_string(f.size());
    buffer.push_back(':');
    buffer += f;
  }
  return sha256_hex(buffer);
}

}  // namespace lexifactor
