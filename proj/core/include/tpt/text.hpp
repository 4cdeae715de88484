#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tpt::text {

// Collapses every run of whitespace to one space and trims both ends.
// This is the normalization used for dedup and diversity counting.
std::string collapse_whitespace(std::string_view s);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

std::string replace_all(std::string s, std::string_view from, std::string_view to);

}  // namespace tpt::text
