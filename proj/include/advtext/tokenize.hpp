#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace advtext {

/// Half-open byte range [start, end) into the raw text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct TokenizedText {
  std::string raw;
  std::vector<std::string> tokens;
  std::vector<Span> spans;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
};

/// Splits on Unicode whitespace, then peels leading and trailing punctuation
/// into single-character tokens. Lowercasing is ASCII-only and affects only
/// `tokens`; spans always index the untouched raw string.
TokenizedText tokenize(std::string_view text, bool lowercase = false);

/// Rebuilds the raw text with the listed token positions replaced. Every
/// inter-token gap is kept byte-for-byte.
std::string replace_tokens(const TokenizedText& text,
                           const std::vector<std::pair<std::size_t, std::string>>& replacements);

std::string join_tokens(const std::vector<std::string>& tokens, std::string_view sep = " ");

std::string ascii_lower(std::string_view s);

/// Decodes UTF-8 into code points; invalid bytes decode to themselves.
std::u32string utf8_decode(std::string_view s);

std::string utf8_encode(std::u32string_view s);

bool is_unicode_space(char32_t cp) noexcept;
bool is_peelable_punct(char32_t cp) noexcept;

}  // namespace advtext
