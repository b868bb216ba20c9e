#pragma once

// Strategies turning one emoji distribution into a predicted combination.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "emojicomb/corpus.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/prob_model.hpp"

namespace emojicomb {

// Floor applied to probabilities inside the logarithm; bounds every score
// by -ln(kProbabilityFloor).
inline constexpr double kProbabilityFloor = 1e-12;

namespace detail {

// The `n` most probable ids, by descending probability then ascending id.
inline std::vector<EmojiId> top_ids(const ProbDistribution& p, std::size_t n) {
  std::vector<EmojiId> ids(p.size());
  std::iota(ids.begin(), ids.end(), EmojiId{0});
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(),
                    [&](EmojiId a, EmojiId b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
  ids.resize(n);
  return ids;
}

}  // namespace detail

inline Combination naive_top3(const ProbDistribution& p) {
  if (p.size() < 3) throw DataError("naive top-3 needs at least 3 classes");
  return {detail::top_ids(p, 3)};
}

// Most probable emojis in order until their cumulative probability reaches
// `threshold` or `max_len` are taken. Never empty.
inline Combination greedy_topk(const ProbDistribution& p, double threshold,
                               std::size_t max_len = kDefaultMaxTargetLength) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DataError("greedy threshold must be in (0, 1]");
  if (max_len == 0) throw DataError("max_len must be at least 1");
  Combination out;
  double cumulative = 0.0;
  for (EmojiId id : detail::top_ids(p, max_len)) {
    out.ids.push_back(id);
    cumulative += p[id];
    if (cumulative >= threshold) break;
  }
  return out;
}

// Normalized emoji counts of a candidate, ids ascending. Every ordering of
// the same multiset yields the identical object.
struct CandidateDistribution {
  std::vector<std::pair<EmojiId, double>> weights;
  std::size_t length = 0;
};

inline CandidateDistribution candidate_distribution(const Combination& c) {
  std::vector<EmojiId> sorted = c.ids;
  std::sort(sorted.begin(), sorted.end());
  CandidateDistribution d;
  d.length = sorted.size();
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    d.weights.emplace_back(sorted[i], static_cast<double>(j - i) / static_cast<double>(d.length));
    i = j;
  }
  return d;
}

// Cross-entropy between the candidate's emoji distribution and p:
//   S = -sum_e d[e] ln max(p[e], floor)
// Lower is better.
inline double score_candidate(const ProbDistribution& p, const CandidateDistribution& d) {
  double acc = 0.0;
  for (const auto& [id, w] : d.weights) acc += w * std::log(std::max(p[id], kProbabilityFloor));
  return -acc;
}

inline double score_candidate(const ProbDistribution& p, const Combination& c) {
  return score_candidate(p, candidate_distribution(c));
}

// S' = S + pen * (max_len - |c|): shorter candidates pay more.
inline double penalized_score(double score, double penalty, std::size_t length,
                              std::size_t max_len = kDefaultMaxTargetLength) {
  return score + penalty * (static_cast<double>(max_len) - static_cast<double>(length));
}

struct RankedPrediction {
  Combination combination;
  double score = 0.0;  // penalized
  std::uint64_t frequency = 0;
};

// Candidate dictionary with precomputed candidate distributions. The
// dictionary must outlive the index.
class RetrievalIndex {
 public:
  explicit RetrievalIndex(const CandidateDictionary& dict) : dict_(&dict) {
    if (dict.empty()) throw DataError("empty candidate dictionary");
    distributions_.reserve(dict.size());
    for (const auto& c : dict.candidates) {
      distributions_.push_back(candidate_distribution(c.combination));
      for (EmojiId id : c.combination.ids) max_id_ = std::max(max_id_, id);
    }
  }

  const CandidateDictionary& dictionary() const noexcept { return *dict_; }

  // Argmin of S' over the dictionary; ties by higher frequency, then by
  // lexicographically smaller ids. Returns the stored (mined) ordering.
  RankedPrediction predict(const ProbDistribution& p, double penalty,
                           std::size_t max_len = kDefaultMaxTargetLength) const {
    if (!(penalty >= 0.0)) throw DataError("penalty must be >= 0");
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    if (max_id_ >= p.size()) throw DataError("candidate emoji id out of range for distribution");
    for (std::size_t j = 0; j < distributions_.size(); ++j) {
      const double s = penalized_score(score_candidate(p, distributions_[j]), penalty,
                                       distributions_[j].length, max_len);
      if (j == 0 || better(s, j, best_score, best)) {
        best = j;
        best_score = s;
      }
    }
    const auto& c = dict_->candidates[best];
    return {c.combination, best_score, c.frequency};
  }

 private:
  bool better(double s, std::size_t j, double best_score, std::size_t best) const {
    if (s != best_score) return s < best_score;
    const auto& a = dict_->candidates[j];
    const auto& b = dict_->candidates[best];
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.combination < b.combination;
  }

  const CandidateDictionary* dict_;
  std::vector<CandidateDistribution> distributions_;
  EmojiId max_id_ = 0;
};

inline RankedPrediction retrieval_predict(const ProbDistribution& p, const CandidateDictionary& dict,
                                          double penalty, std::size_t max_len = kDefaultMaxTargetLength) {
  return RetrievalIndex(dict).predict(p, penalty, max_len);
}

}  // namespace emojicomb
