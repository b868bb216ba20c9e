#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace emojicomb::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct DecodedScalar {
  char32_t value;
  std::size_t begin;  // byte offset
  std::size_t end;
};

// Decodes one scalar at `pos`. Invalid or truncated sequences yield U+FFFD
// and consume a single byte so byte offsets stay aligned with the input.
inline DecodedScalar decode_at(std::string_view s, std::size_t pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) return {lead, pos, pos + 1};

  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2, cp = lead & 0x1F, min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3, cp = lead & 0x0F, min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4, cp = lead & 0x07, min = 0x10000;
  } else {
    return {kReplacement, pos, pos + 1};
  }
  if (pos + len > s.size()) return {kReplacement, pos, pos + 1};
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) return {kReplacement, pos, pos + 1};
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return {kReplacement, pos, pos + 1};
  }
  return {cp, pos, pos + len};
}

inline std::vector<DecodedScalar> decode(std::string_view s) {
  std::vector<DecodedScalar> out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    out.push_back(decode_at(s, pos));
    pos = out.back().end;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view scalars) {
  std::string out;
  for (char32_t cp : scalars) append(out, cp);
  return out;
}

inline std::u32string to_scalars(std::string_view s) {
  std::u32string out;
  for (const auto& d : decode(s)) out.push_back(d.value);
  return out;
}

// "1F468 200D 1F4BB"
inline std::string to_hex(std::u32string_view scalars) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (i) out.push_back(' ');
    std::string part;
    for (auto cp = static_cast<std::uint32_t>(scalars[i]); cp; cp >>= 4) {
      part.insert(part.begin(), digits[cp & 0xF]);
    }
    while (part.size() < 4) part.insert(part.begin(), '0');
    out += part;
  }
  return out;
}

// Parses space-separated hex codepoints. Returns nullopt on any malformed
// field, an out-of-range value, or empty input.
inline std::optional<std::u32string> from_hex(std::string_view text) {
  std::u32string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos == text.size()) break;
    std::size_t end = text.find(' ', pos);
    if (end == std::string_view::npos) end = text.size();
    std::uint32_t value = 0;
    const auto* first = text.data() + pos;
    const auto* last = text.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, value, 16);
    if (ec != std::errc{} || ptr != last || end - pos > 6 || value > 0x10FFFF ||
        (value >= 0xD800 && value <= 0xDFFF)) {
      return std::nullopt;
    }
    out.push_back(static_cast<char32_t>(value));
    pos = end;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

}  // namespace emojicomb::utf8
