#pragma once

// Precision / recall / F1 for predicted combinations and the strategy
// comparison table.
//
// Matching is on multisets: order inside a combination is ignored and a
// repeated emoji matches at most as often as it occurs on both sides.
// Aggregation is micro-averaged over pooled counts.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "emojicomb/corpus.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/prob_model.hpp"
#include "emojicomb/strategies.hpp"

namespace emojicomb {

struct SampleScore {
  std::uint64_t true_positives = 0;
  std::uint64_t predicted = 0;
  std::uint64_t target = 0;
  bool exact = false;  // identical ordered sequence

  double precision() const { return predicted ? static_cast<double>(true_positives) / predicted : 0.0; }
  double recall() const { return target ? static_cast<double>(true_positives) / target : 0.0; }
};

inline SampleScore sample_score(const Combination& pred, const Combination& target) {
  std::map<EmojiId, std::uint64_t> counts;
  for (EmojiId id : target.ids) ++counts[id];
  std::uint64_t tp = 0;
  for (EmojiId id : pred.ids) {
    auto it = counts.find(id);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++tp;
    }
  }
  return {tp, pred.size(), target.size(), pred == target};
}

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

struct EvalReport {
  std::string strategy;
  std::string params;
  double recall = 0.0;     // fractions in [0, 1]; scaled only for display
  double precision = 0.0;
  double f1 = 0.0;
  double exact_match = 0.0;  // supplementary: ordered exact-match rate
  std::size_t samples = 0;

  double recall_pct() const { return 100.0 * recall; }
  double precision_pct() const { return 100.0 * precision; }
  double f1_x100() const { return 100.0 * f1; }
  double exact_match_pct() const { return 100.0 * exact_match; }
};

// Pooled counts; merging two accumulators is order-independent.
struct ScoreAccumulator {
  std::uint64_t true_positives = 0;
  std::uint64_t predicted = 0;
  std::uint64_t target = 0;
  std::uint64_t exact = 0;
  std::size_t samples = 0;

  void add(const SampleScore& s) {
    true_positives += s.true_positives;
    predicted += s.predicted;
    target += s.target;
    exact += s.exact ? 1 : 0;
    ++samples;
  }

  void merge(const ScoreAccumulator& o) {
    true_positives += o.true_positives;
    predicted += o.predicted;
    target += o.target;
    exact += o.exact;
    samples += o.samples;
  }

  EvalReport report(std::string strategy = {}, std::string params = {}) const {
    if (samples == 0) throw DataError("cannot aggregate an empty score stream");
    EvalReport r;
    r.strategy = std::move(strategy);
    r.params = std::move(params);
    r.precision = predicted ? static_cast<double>(true_positives) / static_cast<double>(predicted) : 0.0;
    r.recall = target ? static_cast<double>(true_positives) / static_cast<double>(target) : 0.0;
    r.f1 = f1_score(r.precision, r.recall);
    r.exact_match = static_cast<double>(exact) / static_cast<double>(samples);
    r.samples = samples;
    return r;
  }
};

inline EvalReport aggregate(std::span<const SampleScore> scores) {
  ScoreAccumulator acc;
  for (const auto& s : scores) acc.add(s);
  return acc.report();
}

// ---------------------------------------------------------------------------
// Strategy grid

enum class StrategyKind { Naive, Greedy, Retrieval };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Retrieval;
  double value = 0.0;  // greedy threshold or retrieval penalty

  std::string name() const {
    switch (kind) {
      case StrategyKind::Naive: return "naive";
      case StrategyKind::Greedy: return "greedy";
      case StrategyKind::Retrieval: return "retrieval";
    }
    return "?";
  }

  std::string params() const {
    char buf[48];
    switch (kind) {
      case StrategyKind::Naive: return "-";
      case StrategyKind::Greedy: std::snprintf(buf, sizeof buf, "thr=%g", value); return buf;
      case StrategyKind::Retrieval: std::snprintf(buf, sizeof buf, "pen=%g", value); return buf;
    }
    return "";
  }
};

inline StrategyKind parse_strategy(const std::string& name) {
  if (name == "naive") return StrategyKind::Naive;
  if (name == "greedy") return StrategyKind::Greedy;
  if (name == "retrieval") return StrategyKind::Retrieval;
  throw DataError("unknown strategy '" + name + "' (expected naive, greedy or retrieval)");
}

// Naive Top-3, Greedy at thr 0.4/0.3/0.2, Retrieval at pen 0/0.2/0.3/0.4.
inline std::vector<StrategyConfig> default_strategy_grid() {
  return {{StrategyKind::Naive, 0.0},     {StrategyKind::Greedy, 0.4},    {StrategyKind::Greedy, 0.3},
          {StrategyKind::Greedy, 0.2},    {StrategyKind::Retrieval, 0.0}, {StrategyKind::Retrieval, 0.2},
          {StrategyKind::Retrieval, 0.3}, {StrategyKind::Retrieval, 0.4}};
}

struct StrategyPrediction {
  Combination combination;
  double score = 0.0;  // cross-entropy of the emitted combination, penalized for retrieval
};

inline StrategyPrediction apply_strategy(const StrategyConfig& config, const ProbDistribution& p,
                                         const RetrievalIndex* index,
                                         std::size_t max_len = kDefaultMaxTargetLength) {
  switch (config.kind) {
    case StrategyKind::Naive: {
      auto c = naive_top3(p);
      const double s = score_candidate(p, c);
      return {std::move(c), s};
    }
    case StrategyKind::Greedy: {
      auto c = greedy_topk(p, config.value, max_len);
      const double s = score_candidate(p, c);
      return {std::move(c), s};
    }
    case StrategyKind::Retrieval: {
      if (!index) throw DataError("retrieval strategy needs a candidate dictionary");
      auto r = index->predict(p, config.value, max_len);
      return {std::move(r.combination), r.score};
    }
  }
  throw DataError("unknown strategy");
}

// One report per configuration, all over the same distributions.
inline std::vector<EvalReport> compare_strategies(std::span<const ProbDistribution> distributions,
                                                  std::span<const Sample> samples,
                                                  const CandidateDictionary& dict,
                                                  std::span<const StrategyConfig> grid,
                                                  std::size_t max_len = kDefaultMaxTargetLength) {
  if (samples.empty()) throw DataError("no test samples");
  if (distributions.size() != samples.size()) throw DataError("one distribution per sample required");
  const RetrievalIndex index(dict);
  std::vector<EvalReport> out;
  for (const auto& config : grid) {
    ScoreAccumulator acc;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      acc.add(sample_score(apply_strategy(config, distributions[i], &index, max_len).combination,
                           samples[i].target));
    }
    out.push_back(acc.report(config.name(), config.params()));
  }
  return out;
}

inline std::vector<EvalReport> compare_strategies(const ProbabilityModel& model, std::span<const Sample> samples,
                                                  const CandidateDictionary& dict,
                                                  std::span<const StrategyConfig> grid,
                                                  std::size_t max_len = kDefaultMaxTargetLength) {
  const auto distributions = model.predict_all(samples);
  return compare_strategies(distributions, samples, dict, grid, max_len);
}

inline void write_report_csv(std::ostream& out, std::span<const EvalReport> reports) {
  out << "strategy,params,recall_pct,precision_pct,f1_x100,exact_match_pct,n_samples\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f,%.4f,%zu\n", r.strategy.c_str(), r.params.c_str(),
                  r.recall_pct(), r.precision_pct(), r.f1_x100(), r.exact_match_pct(), r.samples);
    out << buf;
  }
}

}  // namespace emojicomb
