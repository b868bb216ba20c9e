#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "emojicomb/prob_model.hpp"
#include "support.hpp"

namespace emojicomb {
namespace {

double sum(const ProbDistribution& p) {
  double s = 0.0;
  for (double v : p.values()) s += v;
  return s;
}

TEST(ProbDistribution, ValidatesAndNormalizes) {
  EXPECT_THROW(ProbDistribution({0.5, 0.6}), DataError);
  EXPECT_THROW(ProbDistribution({-0.1, 1.1}), DataError);
  EXPECT_THROW(ProbDistribution::normalized({0.0, 0.0}), DataError);
  EXPECT_THROW(ProbDistribution::normalized({1.0, NAN}), DataError);
  const auto p = ProbDistribution::normalized({1.0, 3.0});
  EXPECT_DOUBLE_EQ(p[0], 0.25);
  EXPECT_DOUBLE_EQ(p[1], 0.75);
}

TEST(SoftLabel, NormalizedCounts) {
  const auto ab = soft_label({{0, 1}}, 4);
  EXPECT_EQ(ab, (std::vector<double>{0.5, 0.5, 0.0, 0.0}));
  const auto aab = soft_label({{0, 0, 1}}, 3);
  EXPECT_NEAR(aab[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(aab[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(aab[2], 0.0);
  EXPECT_EQ(soft_label({{2}}, 3), (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(Features, HashedWordsAndEmojis) {
  const auto& table = EmojiTable::builtin();
  const auto a = extract_features("Good GOOD night😴", 1u << 20, table);
  const auto b = extract_features("good good night 😴", 1u << 20, table);
  EXPECT_EQ(a.size(), b.size());
  ASSERT_EQ(a.size(), 3u);
  double total = 0.0;
  for (const auto& f : a) total += f.value;
  EXPECT_EQ(total, 4.0);
  // Skin tones share a feature with the base emoji.
  const auto toned = extract_features("👍🏽", 1u << 20, table);
  const auto plain = extract_features("👍", 1u << 20, table);
  ASSERT_EQ(toned.size(), 1u);
  EXPECT_EQ(toned[0].index, plain[0].index);
  EXPECT_TRUE(extract_features("", 16, table).empty());
}

TEST(BowModel, UntrainedIsUniform) {
  BowModel model(7, 64);
  for (const char* ctx : {"", "anything at all 😂", "ctxA"}) {
    const auto p = model.predict(ctx);
    ASSERT_EQ(p.size(), 7u);
    for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
  }
}

TEST(BowModel, ZeroEpochsReturnsInitializedModel) {
  const auto data = testing::separable_fixture(100, 1);
  TrainOptions o;
  o.epochs = 0;
  o.feature_dim = 64;
  const auto result = train_bow(data, 8, o);
  EXPECT_TRUE(result.epoch_loss.empty());
  const auto p = result.model.predict("ctxA");
  for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 1.0 / 8.0);
}

TEST(BowModel, PredictNormalizedOnRandomModels) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> w(0.0, 3.0);
  for (int m = 0; m < 20; ++m) {
    BowModel model(2 + rng() % 30, 32);
    for (double& v : model.weights()) v = w(rng);
    for (double& v : model.bias()) v = w(rng);
    for (int c = 0; c < 20; ++c) {
      std::string ctx;
      for (int t = 0; t < static_cast<int>(rng() % 8); ++t) ctx += "tok" + std::to_string(rng() % 50) + " ";
      const auto p = model.predict(ctx);
      EXPECT_NEAR(sum(p), 1.0, 1e-6);
      for (double v : p.values()) EXPECT_GE(v, 0.0);
      EXPECT_EQ(model.predict(ctx).values()[0], p[0]);  // deterministic
    }
  }
}

// Central finite differences against the analytic gradient.
double finite_difference(BowModel& model, std::span<const EncodedSample> batch, double& param) {
  constexpr double eps = 1e-4;
  const double saved = param;
  param = saved + eps;
  const double up = loss_and_gradient(model, batch);
  param = saved - eps;
  const double down = loss_and_gradient(model, batch);
  param = saved;
  return (up - down) / (2.0 * eps);
}

TEST(BowModel, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> w(0.0, 1.0);
  for (int m = 0; m < 10; ++m) {
    const std::size_t k = 2 + rng() % 5;
    const std::uint32_t dim = 3 + static_cast<std::uint32_t>(rng() % 6);
    BowModel model(k, dim);
    for (double& v : model.weights()) v = w(rng);
    for (double& v : model.bias()) v = w(rng);
    std::vector<EncodedSample> batch;
    for (int b = 0; b < 4; ++b) {
      EncodedSample s;
      for (std::uint32_t f = 0; f < dim; ++f) {
        if (rng() % 2) s.features.push_back({f, 0.5 + static_cast<double>(rng() % 3)});
      }
      s.target = testing::random_combination(rng, k);
      batch.push_back(s);
    }
    Gradient grad;
    loss_and_gradient(model, batch, &grad);
    for (std::size_t c = 0; c < k; ++c) {
      const double numeric = finite_difference(model, batch, model.bias()[c]);
      EXPECT_NEAR(grad.bias[c], numeric, 1e-4 * std::max(1.0, std::abs(numeric)));
    }
    for (std::uint32_t f = 0; f < dim; ++f) {
      for (std::size_t c = 0; c < k; ++c) {
        const double numeric = finite_difference(model, batch, model.weights()[f * k + c]);
        auto it = grad.weight_rows.find(f);
        const double analytic = it == grad.weight_rows.end() ? 0.0 : it->second[c];
        EXPECT_NEAR(analytic, numeric, 1e-4 * std::max(1.0, std::abs(numeric)));
      }
    }
  }
}

TEST(BowModel, SeparableFixtureTrainsBelowThreshold) {
  const auto data = testing::separable_fixture(5000, 3);
  TrainOptions o;
  o.epochs = 50;
  o.feature_dim = 1024;
  const auto result = train_bow(data, 8, o);
  ASSERT_EQ(result.epoch_loss.size(), 50u);
  EXPECT_LT(result.epoch_loss.back(), 0.1);
  EXPECT_LT(result.epoch_loss.back(), result.epoch_loss.front());
  // Labels are one-hot so the entropy lower bound is 0.
  for (double l : result.epoch_loss) EXPECT_GT(l, 0.0);
  const auto p = result.model.predict("ctxA");
  EXPECT_EQ(std::max_element(p.values().begin(), p.values().end()) - p.values().begin(), 0);
  const auto g = result.model.predict("ctxG");
  EXPECT_EQ(std::max_element(g.values().begin(), g.values().end()) - g.values().begin(), 6);
}

TEST(BowModel, LossBoundedBelowByLabelEntropy) {
  // One context, always [A, B]: entropy ln 2.
  std::vector<Sample> data(200, Sample{"same", {{0, 1}}});
  TrainOptions o;
  o.epochs = 200;
  o.feature_dim = 64;
  const auto result = train_bow(data, 3, o);
  for (double l : result.epoch_loss) EXPECT_GE(l, std::log(2.0) - 1e-12);
  EXPECT_NEAR(result.epoch_loss.back(), std::log(2.0), 1e-3);
}

TEST(BowModel, SeededTrainingIsBitReproducible) {
  const auto data = testing::separable_fixture(600, 9);
  TrainOptions o;
  o.epochs = 3;
  o.feature_dim = 256;
  o.seed = 77;
  const auto a = train_bow(data, 8, o);
  const auto b = train_bow(data, 8, o);
  EXPECT_TRUE(a.model == b.model);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  o.seed = 78;
  const auto c = train_bow(data, 8, o);
  EXPECT_FALSE(a.model == c.model);
}

TEST(BowModel, DivergenceAborts) {
  // One context with conflicting labels, large feature counts and an absurd
  // step size: the first update overflows the logits.
  std::string ctx;
  for (int r = 0; r < 2000; ++r) ctx += "w ";
  std::vector<Sample> data;
  for (int i = 0; i < 30; ++i) data.push_back({ctx, {{static_cast<EmojiId>(i % 3)}}});
  TrainOptions o;
  o.learning_rate = 1e306;
  o.batch_size = 1;
  o.feature_dim = 16;
  o.epochs = 5;
  EXPECT_THROW(train_bow(data, 3, o), TrainingError);
}

TEST(BowModel, CheckpointRoundTrip) {
  const auto data = testing::separable_fixture(300, 2);
  TrainOptions o;
  o.epochs = 2;
  o.feature_dim = 128;
  auto model = train_bow(data, 8, o).model;
  model.vocab_checksum = 0xDEADBEEFCAFEF00Dull;
  std::stringstream buf;
  write_model(buf, model);
  const auto loaded = read_model(buf);
  EXPECT_TRUE(loaded == model);
  EXPECT_EQ(loaded.predict("ctxB").values()[1], model.predict("ctxB").values()[1]);

  std::stringstream truncated(buf.str().substr(0, 40));
  EXPECT_THROW(read_model(truncated), DataError);
  std::stringstream wrong("NOTAMODEL");
  EXPECT_THROW(read_model(wrong), DataError);
}

TEST(UnigramModel, CorpusFrequencies) {
  const EmojiVocabulary vocab({{U"\U0001F602", 6}, {U"\U0001F60D", 3}, {U"\U0001F525", 1}});
  const UnigramModel model(vocab);
  for (const char* ctx : {"", "whatever"}) {
    const auto p = model.predict(ctx);
    EXPECT_DOUBLE_EQ(p[0], 0.6);
    EXPECT_DOUBLE_EQ(p[1], 0.3);
    EXPECT_DOUBLE_EQ(p[2], 0.1);
  }
}

TEST(ExternalModel, VerbatimAndRenormalizedRows) {
  std::istringstream csv("0.2,0.3,0.5\n1.0, 0.6, 0.4\n");
  const auto rows = parse_distribution_csv(csv, 3);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0][2], 0.5);
  EXPECT_DOUBLE_EQ(rows[1][0], 0.5);
  EXPECT_DOUBLE_EQ(rows[1][1], 0.3);
  const std::vector<Sample> samples = {{"a", {{0}}}, {"b", {{1}}}};
  const ExternalModel model(rows, {"a", "b"});
  EXPECT_EQ(model.predict("b")[0], rows[1][0]);
  const auto all = model.predict_all(samples);
  EXPECT_EQ(all[1][1], rows[1][1]);
}

TEST(ExternalModel, Errors) {
  std::istringstream negative("0.5,-0.1,0.6\n");
  EXPECT_THROW(parse_distribution_csv(negative, 3), ParseError);
  std::istringstream zero("0,0,0\n");
  EXPECT_THROW(parse_distribution_csv(zero, 3), ParseError);
  std::istringstream wrong_width("0.5,0.5\n");
  EXPECT_THROW(parse_distribution_csv(wrong_width, 3), ParseError);
  std::istringstream garbage("0.5,abc,0.5\n");
  EXPECT_THROW(parse_distribution_csv(garbage, 3), ParseError);

  std::istringstream three("1,0\n0,1\n1,1\n");
  auto rows = parse_distribution_csv(three, 2);
  std::vector<std::string> four(4, "ctx");
  EXPECT_THROW(ExternalModel(rows, four), DataError);
}

}  // namespace
}  // namespace emojicomb
