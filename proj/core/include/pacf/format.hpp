#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pacf {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// Strict full-string parse; throws ParseError mentioning `context`.
double parse_double(std::string_view text, std::string_view context);
long long parse_integer(std::string_view text, std::string_view context);

// 64-bit FNV-1a, printed as 16 lowercase hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace pacf
