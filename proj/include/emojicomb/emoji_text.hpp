#pragma once

// Emoji recognition, normalization and segmentation of raw text into
// whitespace-separated words and maximal emoji runs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "emojicomb/detail/default_emoji_table.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/utf8.hpp"

namespace emojicomb {

// Scalar values of one emoji grapheme, e.g. U+1F468 U+200D U+1F4BB.
using EmojiSeq = std::u32string;

inline constexpr char32_t kZeroWidthJoiner = 0x200D;
inline constexpr char32_t kVariationSelector16 = 0xFE0F;

inline constexpr bool is_skin_tone_modifier(char32_t cp) {
  return cp >= 0x1F3FB && cp <= 0x1F3FF;
}

// Characters folded into the emoji they follow while matching.
inline constexpr bool is_presentation_extender(char32_t cp) {
  return cp == kVariationSelector16 || is_skin_tone_modifier(cp);
}

// Strips skin-tone modifiers and U+FE0F. Returns nullopt when nothing is
// left (a bare modifier); callers drop such graphemes.
inline std::optional<EmojiSeq> normalize_emoji(std::u32string_view grapheme) {
  EmojiSeq out;
  out.reserve(grapheme.size());
  for (char32_t cp : grapheme) {
    if (!is_presentation_extender(cp)) out.push_back(cp);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

// Membership structure over a Unicode emoji list. Entries are indexed by
// their normalized form, so text variants with or without U+FE0F and with
// any skin tone resolve to the same entry. Immutable after construction.
class EmojiTable {
 public:
  EmojiTable() { nodes_.emplace_back(); }

  // TSV: column 1 is space-separated hex codepoints, further columns ignored.
  // Blank lines and lines starting with '#' are skipped.
  static EmojiTable parse(std::string_view text) {
    EmojiTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t nl = text.find('\n', pos);
      if (nl == std::string_view::npos) nl = text.size();
      std::string_view line = text.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty() || line.front() == '#') continue;
      const auto column = line.substr(0, line.find('\t'));
      auto seq = utf8::from_hex(column);
      if (!seq) {
        throw ParseError("malformed emoji codepoint sequence '" + std::string(column) + "'",
                         line_no);
      }
      table.insert(*seq);
    }
    return table;
  }

  static EmojiTable load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open emoji table " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
  }

  // Bundled Unicode Emoji 11.0 list.
  static const EmojiTable& builtin() {
    static const EmojiTable table = parse(detail::kDefaultEmojiTable);
    return table;
  }

  // Number of entry lines loaded, duplicates included.
  std::size_t size() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_ == 0; }

  bool is_emoji(std::u32string_view grapheme) const {
    const auto key = key_of(grapheme);
    std::uint32_t node = 0;
    for (char32_t cp : key) {
      auto next = child(node, cp);
      if (!next) return false;
      node = *next;
    }
    return node != 0 && nodes_[node].terminal;
  }

  // Length in scalars of the longest emoji starting at `first`, 0 if none.
  // Presentation extenders inside or trailing a match are absorbed.
  std::size_t match(std::u32string_view scalars, std::size_t first) const {
    std::uint32_t node = 0;
    std::size_t best = 0;
    for (std::size_t i = first; i < scalars.size(); ++i) {
      const char32_t cp = scalars[i];
      if (node != 0 && is_presentation_extender(cp)) {
        if (nodes_[node].terminal && best == i - first) best = i + 1 - first;
        continue;
      }
      auto next = child(node, cp);
      if (!next) break;
      node = *next;
      if (nodes_[node].terminal) best = i + 1 - first;
    }
    return best;
  }

 private:
  struct Node {
    bool terminal = false;
  };

  // A bare modifier keeps its leading scalar; whatever extenders follow it
  // were absorbed by match().
  static EmojiSeq key_of(std::u32string_view seq) {
    auto normalized = normalize_emoji(seq);
    if (normalized) return *normalized;
    return seq.empty() ? EmojiSeq() : EmojiSeq(1, seq.front());
  }

  static std::uint64_t edge_key(std::uint32_t node, char32_t cp) {
    return (static_cast<std::uint64_t>(node) << 21) | static_cast<std::uint64_t>(cp);
  }

  std::optional<std::uint32_t> child(std::uint32_t node, char32_t cp) const {
    auto it = edges_.find(edge_key(node, cp));
    if (it == edges_.end()) return std::nullopt;
    return it->second;
  }

  void insert(std::u32string_view seq) {
    ++entries_;
    std::uint32_t node = 0;
    for (char32_t cp : key_of(seq)) {
      auto next = child(node, cp);
      if (!next) {
        next = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();
        edges_.emplace(edge_key(node, cp), *next);
      }
      node = *next;
    }
    nodes_[node].terminal = true;
  }

  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
  std::size_t entries_ = 0;
};

inline EmojiTable load_emoji_table(const std::filesystem::path& path) {
  return EmojiTable::load(path);
}

struct EmojiGrapheme {
  EmojiSeq scalars;  // as written, before normalization
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct WordToken {
  std::string text;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Maximal run of emojis with no intervening non-emoji character. A joiner
// left dangling between two emojis (an unlisted ZWJ sequence) lies inside
// the run span but belongs to neither grapheme.
struct EmojiRun {
  std::vector<EmojiGrapheme> emojis;
  std::size_t begin = 0;
  std::size_t end = 0;
};

using Token = std::variant<WordToken, EmojiRun>;

inline std::size_t token_begin(const Token& t) {
  return std::visit([](const auto& v) { return v.begin; }, t);
}
inline std::size_t token_end(const Token& t) {
  return std::visit([](const auto& v) { return v.end; }, t);
}

// Ordered tokens; the bytes between consecutive token spans are whitespace.
using TokenStream = std::vector<Token>;

inline TokenStream segment(std::string_view text, const EmojiTable& table) {
  const auto decoded = utf8::decode(text);
  std::u32string scalars;
  scalars.reserve(decoded.size());
  for (const auto& d : decoded) scalars.push_back(d.value);

  TokenStream out;
  std::optional<std::size_t> word_start;  // scalar index
  auto flush_word = [&](std::size_t stop) {
    if (!word_start) return;
    const std::size_t b = decoded[*word_start].begin;
    const std::size_t e = decoded[stop - 1].end;
    out.emplace_back(WordToken{std::string(text.substr(b, e - b)), b, e});
    word_start.reset();
  };

  std::size_t i = 0;
  while (i < scalars.size()) {
    if (utf8::is_space(scalars[i])) {
      flush_word(i);
      ++i;
      continue;
    }
    const std::size_t len = table.match(scalars, i);
    if (len == 0) {
      if (!word_start) word_start = i;
      ++i;
      continue;
    }
    flush_word(i);
    EmojiGrapheme g{scalars.substr(i, len), decoded[i].begin, decoded[i + len - 1].end};
    auto* run = out.empty() ? nullptr : std::get_if<EmojiRun>(&out.back());
    if (run && run->end == g.begin) {
      run->end = g.end;
      run->emojis.push_back(std::move(g));
    } else {
      EmojiRun fresh;
      fresh.begin = g.begin;
      fresh.end = g.end;
      fresh.emojis.push_back(std::move(g));
      out.emplace_back(std::move(fresh));
    }
    i += len;
    if (i + 1 < scalars.size() && scalars[i] == kZeroWidthJoiner && table.match(scalars, i + 1) > 0) {
      std::get<EmojiRun>(out.back()).end = decoded[i].end;
      ++i;
    }
  }
  flush_word(scalars.size());
  return out;
}

}  // namespace emojicomb
