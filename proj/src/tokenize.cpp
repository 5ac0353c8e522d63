#include "advtext/tokenize.hpp"

#include <algorithm>

namespace advtext {
namespace {

struct Decoded {
  char32_t cp;
  std::size_t length;
};

Decoded decode_at(std::string_view s, std::size_t i) noexcept {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto continuation = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  auto cont = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) return {b0, 1};
  if ((b0 & 0xE0) == 0xC0 && continuation(1)) return {((b0 & 0x1Fu) << 6) | cont(1), 2};
  if ((b0 & 0xF0) == 0xE0 && continuation(1) && continuation(2))
    return {((b0 & 0x0Fu) << 12) | (cont(1) << 6) | cont(2), 3};
  if ((b0 & 0xF8) == 0xF0 && continuation(1) && continuation(2) && continuation(3))
    return {((b0 & 0x07u) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3), 4};
  return {b0, 1};
}

}  // namespace

bool is_unicode_space(char32_t cp) noexcept {
  return (cp >= 0x09 && cp <= 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
         cp == 0x205F || cp == 0x3000;
}

bool is_peelable_punct(char32_t cp) noexcept {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60) ||
           (cp >= 0x7B && cp <= 0x7E);
  }
  return cp == 0xA1 || cp == 0xAB || cp == 0xBB || cp == 0xBF || cp == 0x2013 || cp == 0x2014 ||
         (cp >= 0x2018 && cp <= 0x201F) || cp == 0x2026;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto d = decode_at(s, i);
    out.push_back(d.cp);
    i += d.length;
  }
  return out;
}

std::string utf8_encode(std::u32string_view s) {
  std::string out;
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  }
  return out;
}

TokenizedText tokenize(std::string_view text, bool lowercase) {
  TokenizedText out;
  out.raw = std::string(text);

  struct Unit {
    std::size_t start;
    std::size_t length;
    bool punct;
  };
  std::vector<Unit> chunk;

  auto emit = [&](std::size_t start, std::size_t end) {
    out.spans.push_back({start, end});
    auto token = text.substr(start, end - start);
    out.tokens.push_back(lowercase ? ascii_lower(token) : std::string(token));
  };

  auto flush_chunk = [&] {
    if (chunk.empty()) return;
    std::size_t first = 0;
    std::size_t last = chunk.size();
    while (first < last && chunk[first].punct) ++first;
    while (last > first && chunk[last - 1].punct) --last;
    for (std::size_t k = 0; k < first; ++k) emit(chunk[k].start, chunk[k].start + chunk[k].length);
    if (first < last) emit(chunk[first].start, chunk[last - 1].start + chunk[last - 1].length);
    for (std::size_t k = std::max(last, first); k < chunk.size(); ++k)
      emit(chunk[k].start, chunk[k].start + chunk[k].length);
    chunk.clear();
  };

  for (std::size_t i = 0; i < text.size();) {
    const auto d = decode_at(text, i);
    if (is_unicode_space(d.cp)) {
      flush_chunk();
    } else {
      chunk.push_back({i, d.length, is_peelable_punct(d.cp)});
    }
    i += d.length;
  }
  flush_chunk();
  return out;
}

std::string replace_tokens(const TokenizedText& text,
                           const std::vector<std::pair<std::size_t, std::string>>& replacements) {
  std::vector<const std::string*> by_position(text.size(), nullptr);
  for (const auto& [index, token] : replacements) {
    if (index < by_position.size()) by_position[index] = &token;
  }
  std::string out;
  out.reserve(text.raw.size() + 16);
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& span = text.spans[i];
    out.append(text.raw, cursor, span.start - cursor);
    if (by_position[i]) {
      out += *by_position[i];
    } else {
      out.append(text.raw, span.start, span.end - span.start);
    }
    cursor = span.end;
  }
  out.append(text.raw, cursor, std::string::npos);
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

}  // namespace advtext
