#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "emojicomb/evaluation.hpp"
#include "support.hpp"

namespace emojicomb {
namespace {

Combination C(std::initializer_list<EmojiId> ids) { return {std::vector<EmojiId>(ids)}; }

TEST(SampleScore, MultisetMatching) {
  const auto s = sample_score(C({0, 0, 1}), C({0, 1, 1}));
  EXPECT_EQ(s.true_positives, 2u);
  EXPECT_EQ(s.predicted, 3u);
  EXPECT_EQ(s.target, 3u);
  EXPECT_FALSE(s.exact);

  const auto rep = sample_score(C({0, 0, 0}), C({0}));
  EXPECT_EQ(rep.true_positives, 1u);
  EXPECT_DOUBLE_EQ(rep.precision(), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(rep.recall(), 1.0);

  const auto swapped = sample_score(C({1, 0}), C({0, 1}));
  EXPECT_EQ(swapped.true_positives, 2u);
  EXPECT_FALSE(swapped.exact);
  EXPECT_TRUE(sample_score(C({0, 1}), C({0, 1})).exact);
  EXPECT_EQ(sample_score(C({2}), C({0, 1})).true_positives, 0u);
}

TEST(Aggregate, MicroAveraged) {
  const std::vector<SampleScore> scores = {{1, 2, 2, false}, {1, 1, 3, false}};
  const auto r = aggregate(scores);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_EQ(r.samples, 2u);
}

TEST(Aggregate, MicroDiffersFromMacro) {
  const std::vector<SampleScore> scores = {{1, 1, 1, true}, {0, 3, 3, false}, {0, 3, 3, false}};
  const auto r = aggregate(scores);
  double macro_p = 0.0;
  for (const auto& s : scores) macro_p += s.precision();
  macro_p /= 3.0;
  EXPECT_DOUBLE_EQ(r.precision, 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(macro_p, 1.0 / 3.0);
  EXPECT_NE(r.precision, macro_p);
  EXPECT_DOUBLE_EQ(r.exact_match, 1.0 / 3.0);
}

TEST(Aggregate, PerfectZeroAndEmpty) {
  const std::vector<SampleScore> perfect = {sample_score(C({0, 1}), C({0, 1})), sample_score(C({2}), C({2}))};
  const auto p = aggregate(perfect);
  EXPECT_EQ(p.f1, 1.0);
  EXPECT_EQ(p.recall_pct(), 100.0);
  const std::vector<SampleScore> zero = {sample_score(C({3}), C({0, 1}))};
  const auto z = aggregate(zero);
  EXPECT_EQ(z.precision, 0.0);
  EXPECT_EQ(z.f1, 0.0);
  EXPECT_THROW(aggregate(std::vector<SampleScore>{}), DataError);
}

TEST(Aggregate, MergeIsOrderIndependent) {
  std::mt19937_64 rng(4);
  std::vector<SampleScore> scores;
  for (int i = 0; i < 300; ++i) {
    scores.push_back(sample_score(testing::random_combination(rng, 5), testing::random_combination(rng, 5)));
  }
  ScoreAccumulator a, b, all;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (i % 3 == 0 ? a : b).add(scores[i]);
    all.add(scores[i]);
  }
  b.merge(a);
  const auto merged = b.report();
  const auto direct = all.report();
  EXPECT_EQ(merged.precision, direct.precision);
  EXPECT_EQ(merged.recall, direct.recall);
  EXPECT_EQ(merged.f1, direct.f1);
}

TEST(Strategies, ParseAndParams) {
  EXPECT_EQ(parse_strategy("greedy"), StrategyKind::Greedy);
  EXPECT_THROW(parse_strategy("beam"), DataError);
  EXPECT_EQ((StrategyConfig{StrategyKind::Greedy, 0.3}).params(), "thr=0.3");
  EXPECT_EQ((StrategyConfig{StrategyKind::Retrieval, 0.0}).params(), "pen=0");
  EXPECT_EQ((StrategyConfig{StrategyKind::Naive, 0.0}).params(), "-");
}

TEST(Compare, GridOfEightDeterministicRows) {
  std::mt19937_64 rng(8);
  const std::size_t k = 6;
  std::vector<ProbDistribution> dists;
  std::vector<Sample> samples;
  for (int i = 0; i < 100; ++i) {
    dists.push_back(testing::random_distribution(rng, k));
    samples.push_back({"ctx", testing::random_combination(rng, k)});
  }
  const auto dict = testing::random_dictionary(rng, k, 30);
  const auto grid = default_strategy_grid();
  const auto a = compare_strategies(dists, samples, dict, grid);
  const auto b = compare_strategies(dists, samples, dict, grid);
  ASSERT_EQ(a.size(), 8u);
  std::ostringstream ca, cb;
  write_report_csv(ca, a);
  write_report_csv(cb, b);
  EXPECT_EQ(ca.str(), cb.str());
  const std::string csv = ca.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "strategy,params,recall_pct,precision_pct,f1_x100,exact_match_pct,n_samples");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(a[0].strategy, "naive");
  EXPECT_EQ(a[7].params, "pen=0.4");

  // Every row agrees with a direct recount.
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::uint64_t tp = 0, pred = 0, tgt = 0;
    const RetrievalIndex index(dict);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto c = apply_strategy(grid[g], dists[i], &index).combination;
      const auto s = sample_score(c, samples[i].target);
      tp += s.true_positives;
      pred += s.predicted;
      tgt += s.target;
    }
    EXPECT_DOUBLE_EQ(a[g].precision, static_cast<double>(tp) / pred);
    EXPECT_DOUBLE_EQ(a[g].recall, static_cast<double>(tp) / tgt);
  }
  EXPECT_THROW(compare_strategies(std::span<const ProbDistribution>(dists).first(3), samples, dict, grid), DataError);
}

}  // namespace
}  // namespace emojicomb
