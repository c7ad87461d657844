#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace curator {

// Strict UTF-8 validation: rejects overlong forms, surrogates, and
// code points above U+10FFFF.
bool utf8_valid(std::string_view s);

// Number of Unicode scalar values. Precondition: valid UTF-8.
std::size_t utf8_length(std::string_view s);

// Decodes the scalar starting at byte offset `pos` and advances `pos`
// past it. Precondition: valid UTF-8, pos < s.size().
char32_t utf8_next(std::string_view s, std::size_t& pos);

// Appends the UTF-8 encoding of `cp` (must be a valid scalar value).
void utf8_append(std::string& out, char32_t cp);

// Byte offset of the character boundary at character index `char_index`
// (0 <= char_index <= utf8_length(s)).
std::size_t utf8_byte_offset(std::string_view s, std::size_t char_index);

// Unicode Alphabetic approximation over the major scripts (Latin, Greek,
// Cyrillic, Armenian, Hebrew, Arabic, Devanagari, Thai, Georgian, Hangul,
// kana, CJK ideographs and extensions). Combining marks, digits, and
// punctuation are excluded.
bool is_alphabetic(char32_t cp);

}  // namespace curator
