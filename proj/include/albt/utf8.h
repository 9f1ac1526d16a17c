#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace albt::utf8 {

// Byte length of the sequence starting at s[i]. Malformed bytes count as
// length-1 sequences so they pass through untouched.
std::size_t sequence_length(std::string_view s, std::size_t i);

// Code point of the sequence starting at s[i]; U+FFFD for malformed input.
char32_t decode_at(std::string_view s, std::size_t i, std::size_t len);

std::string encode(char32_t cp);

// Splits into one view per (possibly malformed) character.
std::vector<std::string_view> characters(std::string_view s);

std::size_t length(std::string_view s);

}  // namespace albt::utf8
