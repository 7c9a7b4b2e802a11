#pragma once

#include <string>
#include <string_view>

// Minimal UTF-8 and Unicode character-class helpers. The class tables cover
// the scripts the toolkit targets (Latin, Greek, Cyrillic, Bengali, CJK and
// their punctuation blocks); they are not a full Unicode database.
namespace proverbkit::utf8 {

/// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view text);

std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

/// Number of code points.
std::size_t length(std::string_view text);

bool is_space(char32_t cp);
/// Unicode general category P*.
bool is_punct(char32_t cp);
/// Unicode general category S*.
bool is_symbol(char32_t cp);
/// Unicode general category N*.
bool is_number(char32_t cp);

char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

/// Strips leading and trailing Unicode whitespace.
std::string trim(std::string_view text);

}  // namespace proverbkit::utf8
