#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace spatialqa {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
/// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize_space(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with(std::string_view s, std::string_view prefix);
/// Replace every occurrence of `from` with `to`.
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// Fixed-point with `decimals` places, trailing zeros (and a bare point) removed.
/// Negative zero prints as "0".
std::string format_decimal(double value, int decimals);
/// Fixed-point with exactly `decimals` places.
std::string format_fixed(double value, int decimals);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);
/// Inverse of base64_encode; whitespace is ignored. Throws ValidationError.
std::string base64_decode(std::string_view data);

}  // namespace spatialqa
