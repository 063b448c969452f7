#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dqa::text {

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);
bool starts_with_icase(std::string_view s, std::string_view prefix);
bool contains_icase(std::string_view haystack, std::string_view needle);

/// Splits on runs of ASCII whitespace; never yields empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

/// Splits on '\n'; a trailing '\r' on each line is dropped.
std::vector<std::string> split_lines(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Byte offsets of each code point in a UTF-8 string, plus a final entry
/// equal to s.size(). Invalid sequences are treated as single-byte code
/// points so the result always partitions the input.
std::vector<std::size_t> utf8_boundaries(std::string_view s);

std::size_t utf8_length(std::string_view s);

std::uint32_t fnv1a_32(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace dqa::text
