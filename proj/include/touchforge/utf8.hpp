#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace touchforge::utf8 {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD, one per byte.
std::u32string decode(std::string_view s);

std::string encode(char32_t cp);
std::string encode(std::u32string_view s);

// Splits into one string per code point.
std::vector<std::string> chars(std::string_view s);

std::size_t length(std::string_view s);

} // namespace touchforge::utf8
