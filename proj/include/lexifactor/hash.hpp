#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lexifactor {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

// Digest of a field list; fields are length-prefixed so ("ab","c") and
// ("a","bc") never collide.
std::string sha256_fields(const std::vector<std::string>& fields);

}  // namespace lexifactor
