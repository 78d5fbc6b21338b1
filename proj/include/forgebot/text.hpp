#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace forgebot::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

// Splits on '\n'; a trailing "\r" is stripped from each line. A final empty
// line after a terminating newline is not reported.
std::vector<std::string_view> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// Replaces every "{key}" with its value. Unknown placeholders are left as is.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values);

// Cuts at most `max_bytes` bytes without splitting a UTF-8 sequence.
std::string truncate_utf8(std::string_view s, std::size_t max_bytes);

std::string to_hex(std::string_view bytes);

}  // namespace forgebot::text
