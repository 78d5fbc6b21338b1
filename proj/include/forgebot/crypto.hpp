#pragma once

#include <string>
#include <string_view>

namespace forgebot::crypto {

// Lowercase hex digests.
std::string sha1_hex(std::string_view data);
std::string sha256_hex(std::string_view data);
std::string hmac_sha256_hex(std::string_view key, std::string_view data);

// Runs in time dependent only on the lengths of the inputs.
bool constant_time_equals(std::string_view a, std::string_view b);

}  // namespace forgebot::crypto
