#pragma once

// Small string helpers shared by the feature, masking, augmentation and
// metric code. All functions treat text as UTF-8 and only fold ASCII case.

#include <string>
#include <string_view>
#include <vector>

namespace qrouter::text {

std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower(std::string_view s);

bool is_space(char c);
bool is_ascii_punct(char c);

/// Removes leading and trailing ASCII punctuation (quotes included).
std::string_view strip_punct(std::string_view token);

/// Decodes UTF-8 into code points; invalid bytes decode as U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);

/// Letters for readability statistics: ASCII letters and Latin-1/Latin
/// Extended-A/B letters.
bool is_letter(char32_t cp);

/// Splits on anything that is not an ASCII alphanumeric, lowercased.
std::vector<std::string> alnum_words(std::string_view s);

}  // namespace qrouter::text
