#pragma once

#include <string>
#include <string_view>

namespace textrobust {

// Decodes UTF-8 into Unicode scalar values. Returns false on malformed
// input (overlong forms, surrogates, truncation) and leaves *out valid
// up to the error.
bool utf8_decode(std::string_view in, std::u32string& out);

// Throws std::runtime_error on malformed input.
std::u32string utf8_decode_or_throw(std::string_view in);

std::string utf8_encode(std::u32string_view in);
std::string utf8_encode(char32_t cp);

// Unicode whitespace (Zs/Zl/Zp plus the ASCII controls conventionally
// treated as spacing).
bool is_space(char32_t cp);

// Unicode punctuation and symbol test (general categories P* and S*),
// backed by range tables for ASCII, Latin-1 and the common BMP
// punctuation/symbol blocks.
bool is_punct_or_symbol(char32_t cp);

// Case mapping over ASCII, Latin-1 and Latin Extended-A (covers Polish
// diacritics); other scalars pass through unchanged.
char32_t simple_lower(char32_t cp);
char32_t simple_upper(char32_t cp);

}  // namespace textrobust
