#pragma once

// Raw posts -> cleaned text -> (context, target) samples, the emoji
// vocabulary and the mined candidate dictionary.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emojicomb/emoji_text.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/utf8.hpp"

namespace emojicomb {

inline constexpr std::size_t kDefaultVocabularySize = 500;
inline constexpr std::size_t kDefaultMaxTargetLength = 3;
inline constexpr std::size_t kDefaultDictionarySize = 30000;

using EmojiId = std::uint32_t;

// Ordered emoji ids as written in the source text.
struct Combination {
  std::vector<EmojiId> ids;

  std::size_t size() const noexcept { return ids.size(); }
  auto operator<=>(const Combination&) const = default;
};

struct CombinationHash {
  std::size_t operator()(const Combination& c) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (EmojiId id : c.ids) {
      h ^= id + 0x9E3779B9u;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct Sample {
  std::string context;  // exact cleaned-text prefix before the target run
  Combination target;

  bool operator==(const Sample&) const = default;
};

// ---------------------------------------------------------------------------
// Preprocessing

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

inline bool is_url_byte(unsigned char c) { return c > 0x20 && c < 0x7F; }

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char a = s[i];
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    if (a != prefix[i]) return false;
  }
  return true;
}

// Length of a URL starting at `pos`: scheme://... or www.... URL bytes are
// printable ASCII, so an adjacent emoji terminates the match.
inline std::size_t url_length(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  if (starts_with_ci(s.substr(pos), "www.")) {
    i += 4;
  } else {
    const auto alpha = [](unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
    if (!alpha(static_cast<unsigned char>(s[i]))) return 0;
    while (i < s.size()) {
      const auto c = static_cast<unsigned char>(s[i]);
      if (alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '.' || c == '-') {
        ++i;
      } else {
        break;
      }
    }
    if (s.substr(i, 3) != "://") return 0;
    i += 3;
  }
  while (i < s.size() && is_url_byte(static_cast<unsigned char>(s[i]))) ++i;
  return i - pos;
}

}  // namespace detail

// Removes hyperlinks, @mentions and #hashtags, then collapses whitespace to
// single spaces and trims. Emojis are untouched.
inline std::string preprocess(std::string_view raw) {
  std::string stripped;
  stripped.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    const auto c = static_cast<unsigned char>(raw[i]);
    const bool at_boundary = i == 0 || !detail::is_word_byte(static_cast<unsigned char>(raw[i - 1]));
    if (at_boundary) {
      if (std::size_t n = detail::url_length(raw, i)) {
        i += n;
        continue;
      }
      if ((c == '@' || c == '#') && i + 1 < raw.size() &&
          detail::is_word_byte(static_cast<unsigned char>(raw[i + 1]))) {
        ++i;
        while (i < raw.size() && detail::is_word_byte(static_cast<unsigned char>(raw[i]))) ++i;
        continue;
      }
    }
    stripped.push_back(raw[i]);
    ++i;
  }

  std::string out;
  out.reserve(stripped.size());
  bool pending_space = false;
  for (std::size_t pos = 0; pos < stripped.size();) {
    const auto d = utf8::decode_at(stripped, pos);
    if (utf8::is_space(d.value)) {
      pending_space = true;
    } else {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.append(stripped, d.begin, d.end - d.begin);
    }
    pos = d.end;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

struct VocabularyEntry {
  EmojiSeq emoji;  // normalized
  std::uint64_t count = 0;

  bool operator==(const VocabularyEntry&) const = default;
};

// The K most frequent normalized emojis. Id i is the i-th entry; counts are
// non-increasing by id, equal counts ordered by codepoint sequence.
class EmojiVocabulary {
 public:
  EmojiVocabulary() = default;

  explicit EmojiVocabulary(std::vector<VocabularyEntry> entries) : entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!index_.emplace(entries_[i].emoji, static_cast<EmojiId>(i)).second) {
        throw DataError("duplicate vocabulary entry " + utf8::to_hex(entries_[i].emoji));
      }
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<VocabularyEntry>& entries() const noexcept { return entries_; }
  const VocabularyEntry& operator[](EmojiId id) const { return entries_.at(id); }

  std::optional<EmojiId> find(std::u32string_view normalized) const {
    auto it = index_.find(EmojiSeq(normalized));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::string emoji_utf8(EmojiId id) const { return utf8::encode(entries_.at(id).emoji); }

  // FNV-1a over the id-ordered hex sequences. Artifacts embed it so that
  // dense ids are never read against a different vocabulary.
  std::uint64_t checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& e : entries_) {
      for (char c : utf8::to_hex(e.emoji) + "\n") {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
      }
    }
    return h;
  }

  bool operator==(const EmojiVocabulary& other) const { return entries_ == other.entries_; }

 private:
  std::vector<VocabularyEntry> entries_;
  std::unordered_map<EmojiSeq, EmojiId> index_;
};

// Mergeable occurrence counts of normalized emojis.
class EmojiCounter {
 public:
  explicit EmojiCounter(const EmojiTable& table) : table_(&table) {}

  void add_post(std::string_view cleaned) {
    for (const auto& token : segment(cleaned, *table_)) {
      const auto* run = std::get_if<EmojiRun>(&token);
      if (!run) continue;
      for (const auto& g : run->emojis) {
        if (auto n = normalize_emoji(g.scalars)) ++counts_[*n];
      }
    }
  }

  void merge(const EmojiCounter& other) {
    for (const auto& [emoji, n] : other.counts_) counts_[emoji] += n;
  }

  const std::unordered_map<EmojiSeq, std::uint64_t>& counts() const noexcept { return counts_; }

  EmojiVocabulary top(std::size_t k) const {
    if (counts_.empty()) throw DataError("empty emoji vocabulary");
    std::vector<VocabularyEntry> entries;
    entries.reserve(counts_.size());
    for (const auto& [emoji, n] : counts_) entries.push_back({emoji, n});
    const auto by_rank = [](const VocabularyEntry& a, const VocabularyEntry& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.emoji < b.emoji;
    };
    const std::size_t keep = std::min(k, entries.size());
    std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep),
                      entries.end(), by_rank);
    entries.resize(keep);
    return EmojiVocabulary(std::move(entries));
  }

 private:
  const EmojiTable* table_;
  std::unordered_map<EmojiSeq, std::uint64_t> counts_;
};

template <typename Posts>
EmojiVocabulary build_vocabulary(const Posts& cleaned_posts, std::size_t k,
                                 const EmojiTable& table = EmojiTable::builtin()) {
  if (k == 0) throw DataError("vocabulary size must be at least 1");
  EmojiCounter counter(table);
  for (const auto& post : cleaned_posts) counter.add_post(post);
  return counter.top(k);
}

// ---------------------------------------------------------------------------
// Samples

// One sample per maximal emoji run whose length is within [1, max_len] and
// whose emojis are all in the vocabulary. Other runs stay in later contexts.
inline std::vector<Sample> extract_samples(std::string_view cleaned, const EmojiVocabulary& vocab,
                                           const EmojiTable& table = EmojiTable::builtin(),
                                           std::size_t max_len = kDefaultMaxTargetLength) {
  std::vector<Sample> out;
  for (const auto& token : segment(cleaned, table)) {
    const auto* run = std::get_if<EmojiRun>(&token);
    if (!run) continue;
    Combination target;
    bool in_vocab = true;
    for (const auto& g : run->emojis) {
      auto normalized = normalize_emoji(g.scalars);
      if (!normalized) continue;  // bare modifier
      auto id = vocab.find(*normalized);
      if (!id) {
        in_vocab = false;
        break;
      }
      target.ids.push_back(*id);
    }
    if (!in_vocab || target.ids.empty() || target.size() > max_len) continue;
    out.push_back({std::string(cleaned.substr(0, run->begin)), std::move(target)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate dictionary

struct Candidate {
  Combination combination;
  std::uint64_t frequency = 0;

  bool operator==(const Candidate&) const = default;
};

// Retrieval search space: mined combinations by descending frequency (ties
// by id order), followed by frequency-0 singletons for every vocabulary
// emoji that was not mined.
struct CandidateDictionary {
  std::vector<Candidate> candidates;

  std::size_t size() const noexcept { return candidates.size(); }
  bool empty() const noexcept { return candidates.empty(); }
  bool operator==(const CandidateDictionary&) const = default;
};

class CombinationCounter {
 public:
  void add(const Combination& c) { ++counts_[c]; }
  void merge(const CombinationCounter& other) {
    for (const auto& [c, n] : other.counts_) counts_[c] += n;
  }
  bool empty() const noexcept { return counts_.empty(); }
  const std::unordered_map<Combination, std::uint64_t, CombinationHash>& counts() const noexcept {
    return counts_;
  }

  CandidateDictionary top(std::size_t n, std::size_t vocab_size) const {
    if (counts_.empty()) throw DataError("cannot mine candidates from zero samples");
    if (n == 0) throw DataError("dictionary size must be at least 1");
    std::vector<Candidate> all;
    all.reserve(counts_.size());
    for (const auto& [c, f] : counts_) all.push_back({c, f});
    const auto by_rank = [](const Candidate& a, const Candidate& b) {
      if (a.frequency != b.frequency) return a.frequency > b.frequency;
      return a.combination < b.combination;
    };
    const std::size_t keep = std::min(n, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_rank);
    all.resize(keep);

    std::vector<bool> has_single(vocab_size, false);
    for (const auto& c : all) {
      if (c.combination.size() == 1 && c.combination.ids[0] < vocab_size) {
        has_single[c.combination.ids[0]] = true;
      }
    }
    for (std::size_t id = 0; id < vocab_size; ++id) {
      if (!has_single[id]) all.push_back({Combination{{static_cast<EmojiId>(id)}}, 0});
    }
    return {std::move(all)};
  }

 private:
  std::unordered_map<Combination, std::uint64_t, CombinationHash> counts_;
};

inline CandidateDictionary mine_candidates(std::span<const Sample> samples, std::size_t n,
                                           std::size_t vocab_size) {
  CombinationCounter counter;
  for (const auto& s : samples) counter.add(s.target);
  return counter.top(n, vocab_size);
}

}  // namespace emojicomb
