#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mdapt::unicode {

// Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view text);
void append_utf8(std::string& out, char32_t cp);

bool is_letter(char32_t cp);  // general category L*
bool is_mark(char32_t cp);    // general category M*
bool is_digit(char32_t cp);   // general category Nd
bool is_space(char32_t cp);
bool is_alnum(char32_t cp);   // L* or N*

bool contains_letter(std::string_view text);

// Trims and collapses every whitespace run to a single ASCII space.
std::string normalize_whitespace(std::string_view text);

}  // namespace mdapt::unicode
