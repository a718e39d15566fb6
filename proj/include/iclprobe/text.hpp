#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace iclprobe::text {

std::string_view trim(std::string_view s);

/// Maximal runs of non-whitespace characters.
std::vector<std::string_view> tokens(std::string_view s);

std::string ascii_lower(std::string_view s);

std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

std::vector<std::string> split(std::string_view s, char delimiter);

/// Record-field escaping for the tab-separated data files: backslash,
/// newline and tab are written as `\\`, `\n` and `\t`.
std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view escaped);

}  // namespace iclprobe::text
