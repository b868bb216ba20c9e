#pragma once

// Test-only generators, fixtures and independent oracles. Nothing here calls
// into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "emojicomb/emojicomb.hpp"

namespace emojicomb {

// Readable gtest output for combinations.
inline void PrintTo(const Combination& c, std::ostream* os) {
  *os << "[";
  for (std::size_t i = 0; i < c.ids.size(); ++i) *os << (i ? "," : "") << c.ids[i];
  *os << "]";
}

}  // namespace emojicomb

namespace emojicomb::testing {

// ---------------------------------------------------------------------------
// Random instances

inline std::vector<double> random_weights(std::mt19937_64& rng, std::size_t k, bool with_ties) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(k);
  for (auto& v : w) v = u(rng);
  if (with_ties) {
    // Quantize so equal probabilities and zeros appear.
    for (auto& v : w) v = std::floor(v * 4.0);
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) w[0] = 1.0;
  }
  return w;
}

inline ProbDistribution random_distribution(std::mt19937_64& rng, std::size_t k, bool with_ties = false) {
  return ProbDistribution::normalized(random_weights(rng, k, with_ties));
}

inline Combination random_combination(std::mt19937_64& rng, std::size_t k, std::size_t max_len = 3) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<EmojiId> id(0, static_cast<EmojiId>(k - 1));
  Combination c;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) c.ids.push_back(id(rng));
  return c;
}

// Random dictionary of distinct ordered combinations; permutations of the
// same multiset are added on purpose so frequency tie-breaks are exercised.
inline CandidateDictionary random_dictionary(std::mt19937_64& rng, std::size_t k, std::size_t max_size) {
  std::uniform_int_distribution<std::size_t> size(1, max_size);
  std::uniform_int_distribution<std::uint64_t> freq(0, 5);
  std::size_t possible = 0;
  for (std::size_t len = 1, pow = k; len <= 3; ++len, pow *= k) possible += pow;
  const std::size_t n = std::min(size(rng), possible);
  std::vector<Combination> combos;
  while (combos.size() < n) {
    auto c = random_combination(rng, k);
    if (std::find(combos.begin(), combos.end(), c) == combos.end()) combos.push_back(c);
    if (combos.size() < n && c.size() > 1 && rng() % 2 == 0) {
      std::reverse(c.ids.begin(), c.ids.end());
      if (std::find(combos.begin(), combos.end(), c) == combos.end()) combos.push_back(c);
    }
  }
  CandidateDictionary dict;
  for (auto& c : combos) dict.candidates.push_back({std::move(c), freq(rng)});
  return dict;
}

// ---------------------------------------------------------------------------
// Independent oracles

// Cross-entropy of a candidate by direct multiset enumeration.
inline double oracle_score(const ProbDistribution& p, const Combination& c) {
  std::map<EmojiId, int> counts;
  for (EmojiId id : c.ids) ++counts[id];
  double acc = 0.0;
  for (const auto& [id, n] : counts) {
    const double weight = static_cast<double>(n) / static_cast<double>(c.ids.size());
    acc += weight * std::log(std::max(p[id], 1e-12));
  }
  return -acc;
}

// Exhaustive ranking: sort every candidate by (S', -frequency, ids).
inline Combination oracle_retrieval(const ProbDistribution& p, const CandidateDictionary& dict, double pen) {
  using Key = std::tuple<double, std::int64_t, std::vector<EmojiId>>;
  std::vector<Key> keys;
  for (const auto& c : dict.candidates) {
    const double s = oracle_score(p, c.combination) + pen * (3.0 - static_cast<double>(c.combination.size()));
    keys.emplace_back(s, -static_cast<std::int64_t>(c.frequency), c.combination.ids);
  }
  std::sort(keys.begin(), keys.end());
  return {std::get<2>(keys.front())};
}

// ---------------------------------------------------------------------------
// Fixtures

// 8 context types, each always followed by the same one-hot combination.
inline std::vector<Sample> separable_fixture(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::pair<std::string, Combination>> kinds = {
      {"ctxA", {{0}}},          {"ctxB", {{1, 1}}},       {"ctxC", {{2, 2, 2}}}, {"ctxD", {{3}}},
      {"ctxE", {{4, 4}}},       {"ctxF", {{5}}},          {"ctxG", {{6, 6, 6}}}, {"ctxH", {{7}}},
  };
  std::mt19937_64 rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& [ctx, target] = kinds[rng() % kinds.size()];
    out.push_back({ctx, target});
  }
  return out;
}

// Topic-structured synthetic posts. Every topic has characteristic words and
// a small distribution over emoji combinations, including repeated emojis
// and order-sensitive pairs, the way real posts use them.
struct Topic {
  std::vector<std::string> words;
  std::vector<std::pair<std::vector<std::string>, double>> combos;
};

inline const std::vector<Topic>& synthetic_topics() {
  static const std::vector<Topic> topics = {
      {{"lol", "haha", "dead", "joke", "hilarious", "crying"},
       {{{"😂", "😂", "😂"}, 0.40}, {{"😂"}, 0.25}, {{"😂", "💀"}, 0.20}, {{"💀"}, 0.15}}},
      {{"love", "babe", "miss", "cute", "forever", "bae"},
       {{{"😍"}, 0.30}, {{"😍", "😍"}, 0.25}, {{"💕", "😍"}, 0.25}, {{"💕"}, 0.20}}},
      {{"gym", "workout", "lift", "gains", "grind", "sweat"},
       {{{"💪"}, 0.35}, {{"💪", "🔥"}, 0.35}, {{"💪", "💪", "💪"}, 0.30}}},
      {{"party", "birthday", "cake", "celebrate", "friday", "drinks"},
       {{{"🎉"}, 0.30}, {{"🎉", "🎂"}, 0.30}, {{"🎂", "🎉", "🎈"}, 0.20}, {{"🎈"}, 0.20}}},
      {{"sad", "tired", "ugh", "hate", "worst", "monday"},
       {{{"😭"}, 0.35}, {{"😭", "😭", "😭"}, 0.35}, {{"😩"}, 0.30}}},
      {{"pizza", "hungry", "dinner", "food", "burger", "lunch"},
       {{{"🍕"}, 0.30}, {{"🍕", "🍔"}, 0.25}, {{"🍔"}, 0.25}, {{"🍟", "🍔"}, 0.20}}},
      {{"game", "win", "team", "score", "season", "playoffs"},
       {{{"🏀"}, 0.35}, {{"🏀", "🔥"}, 0.35}, {{"🏆"}, 0.30}}},
      {{"beach", "summer", "sun", "vacation", "ocean", "trip"},
       {{{"🌴"}, 0.30}, {{"🌴", "🌊"}, 0.30}, {{"🌊"}, 0.20}, {{"🌞", "🌴", "🌊"}, 0.20}}},
  };
  return topics;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {"i",    "the",  "so",   "today", "this", "is",
                                                 "my",   "just", "really", "we",  "you",  "it",
                                                 "and",  "that", "what", "got",   "now",  "omg"};
  return words;
}

// Long-tail emojis used independently of topic.
inline const std::vector<std::string>& background_emojis() {
  static const std::vector<std::string> pool = {
      "😊", "😎", "🙏", "👀", "✨", "🎶", "🐶", "🐱", "🌸", "🌹", "🍀", "🍺", "🍷", "☕", "🎮", "📚",
      "💤", "🤔", "🙄", "😡", "😱", "🤗", "😘", "😜", "👏", "🙌", "👌", "🤞", "💯", "💙", "💜", "💛",
      "🖤", "🌙", "⭐", "🌈", "🚗", "🏠", "🎄", "🎃"};
  return pool;
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& v) {
  return v[rng() % v.size()];
}

inline const std::vector<std::string>& pick_combo(std::mt19937_64& rng, const Topic& topic) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng);
  for (const auto& [combo, w] : topic.combos) {
    if ((r -= w) <= 0.0) return combo;
  }
  return topic.combos.back().first;
}

inline std::string synthetic_segment(std::mt19937_64& rng, const Topic& topic) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::string s;
  const std::size_t n = 3 + rng() % 4;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.empty()) s += ' ';
    s += u(rng) < 0.6 ? pick(rng, topic.words) : pick(rng, filler_words());
  }
  s += ' ';
  if (u(rng) < 0.25) {
    const std::size_t len = 1 + rng() % 3;
    for (std::size_t i = 0; i < len; ++i) s += pick(rng, background_emojis());
  } else {
    for (const auto& e : pick_combo(rng, topic)) s += e;
  }
  return s;
}

// Raw posts (before preprocessing); some carry mentions, links and
// skin-toned emojis, some continue with a second topic segment.
inline std::vector<std::string> synthetic_corpus(std::size_t posts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto& topics = synthetic_topics();
  std::vector<std::string> out;
  out.reserve(posts);
  for (std::size_t i = 0; i < posts; ++i) {
    std::string post;
    if (u(rng) < 0.1) post += "@friend" + std::to_string(rng() % 100) + " ";
    post += synthetic_segment(rng, pick(rng, topics));
    if (u(rng) < 0.3) post += " " + synthetic_segment(rng, pick(rng, topics));
    if (u(rng) < 0.05) post += " 👍🏽";
    if (u(rng) < 0.1) post += " https://t.co/" + std::to_string(rng() % 100000);
    if (u(rng) < 0.05) post += " #mood";
    out.push_back(std::move(post));
  }
  return out;
}

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("emojicomb_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& body) {
  std::ofstream(p, std::ios::binary) << body;
}

inline std::string corpus_jsonl(const std::vector<std::string>& posts) {
  std::string out;
  for (const auto& p : posts) out += nlohmann::json{{"text", p}, {"id", out.size()}}.dump() + "\n";
  return out;
}

}  // namespace emojicomb::testing
