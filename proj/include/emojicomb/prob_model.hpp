#pragma once

// Emoji probability models P(y | context) over the K vocabulary emojis.
//
// Every position of a target combination is scored against the same
// per-context distribution (the unigram approximation of the autoregressive
// objective), so one distribution per context serves all strategies.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emojicomb/corpus.hpp"
#include "emojicomb/dataset_io.hpp"
#include "emojicomb/emoji_text.hpp"
#include "emojicomb/error.hpp"

namespace emojicomb {

inline constexpr double kDistributionTolerance = 1e-6;

// Length-K probability vector. Construction validates it.
class ProbDistribution {
 public:
  ProbDistribution() = default;

  explicit ProbDistribution(std::vector<double> p) : p_(std::move(p)) {
    double sum = 0.0;
    for (double v : p_) {
      if (!std::isfinite(v) || v < 0.0) throw DataError("probability entries must be finite and >= 0");
      sum += v;
    }
    if (p_.empty() || std::abs(sum - 1.0) > kDistributionTolerance) {
      throw DataError("probabilities must sum to 1");
    }
  }

  // Rescales non-negative weights to sum 1.
  static ProbDistribution normalized(std::vector<double> weights) {
    double sum = 0.0;
    for (double v : weights) {
      if (!std::isfinite(v) || v < 0.0) throw DataError("negative or non-finite probability entry");
      sum += v;
    }
    if (!(sum > 0.0)) throw DataError("probability row sums to zero");
    for (double& v : weights) v /= sum;
    return ProbDistribution(std::move(weights));
  }

  static ProbDistribution uniform(std::size_t k) {
    return ProbDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }

 private:
  std::vector<double> p_;
};

// Normalized emoji counts of a target: q[e] = count(e) / |target|.
inline std::vector<double> soft_label(const Combination& target, std::size_t k) {
  std::vector<double> q(k, 0.0);
  const double w = 1.0 / static_cast<double>(target.size());
  for (EmojiId id : target.ids) q.at(id) += w;
  return q;
}

class ProbabilityModel {
 public:
  virtual ~ProbabilityModel() = default;

  virtual std::size_t num_classes() const = 0;
  virtual ProbDistribution predict(std::string_view context) const = 0;

  // One distribution per sample, in order.
  virtual std::vector<ProbDistribution> predict_all(std::span<const Sample> samples) const {
    std::vector<ProbDistribution> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(predict(s.context));
    return out;
  }
};

// ---------------------------------------------------------------------------
// Hashed bag-of-words features

struct Feature {
  std::uint32_t index;
  double value;
};

using FeatureVector = std::vector<Feature>;

inline constexpr std::uint32_t kDefaultFeatureDim = 1u << 14;

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

// Lowercased whitespace words ("w:" prefix) and normalized emoji graphemes
// ("e:" prefix), hashed with FNV-1a 64 modulo `dim`, valued by count.
// Sorted by index.
inline FeatureVector extract_features(std::string_view context, std::uint32_t dim,
                                      const EmojiTable& table) {
  std::map<std::uint32_t, double> counts;
  const auto bump = [&](const std::string& key) { counts[static_cast<std::uint32_t>(fnv1a(key) % dim)] += 1.0; };
  for (const auto& token : segment(context, table)) {
    if (const auto* w = std::get_if<WordToken>(&token)) {
      std::string key = "w:" + w->text;
      for (char& c : key) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      }
      bump(key);
    } else {
      for (const auto& g : std::get<EmojiRun>(token).emojis) {
        auto n = normalize_emoji(g.scalars);
        bump("e:" + utf8::encode(n ? *n : g.scalars));
      }
    }
  }
  FeatureVector out;
  out.reserve(counts.size());
  for (const auto& [i, v] : counts) out.push_back({i, v});
  return out;
}

// ---------------------------------------------------------------------------
// Bag-of-words softmax model: P = softmax(x W + b)

class BowModel final : public ProbabilityModel {
 public:
  BowModel(std::size_t num_classes, std::uint32_t feature_dim)
      : k_(num_classes), dim_(feature_dim), weights_(static_cast<std::size_t>(feature_dim) * num_classes, 0.0),
        bias_(num_classes, 0.0) {
    if (num_classes == 0 || feature_dim == 0) throw DataError("model dimensions must be positive");
  }

  std::size_t num_classes() const override { return k_; }
  std::uint32_t feature_dim() const noexcept { return dim_; }

  // Row-major [feature][class].
  std::span<double> weights() noexcept { return weights_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<double> bias() noexcept { return bias_; }
  std::span<const double> bias() const noexcept { return bias_; }

  std::uint64_t seed = 0;
  std::uint64_t vocab_checksum = 0;

  void set_emoji_table(const EmojiTable& table) noexcept { table_ = &table; }
  const EmojiTable& emoji_table() const noexcept { return *table_; }

  FeatureVector features(std::string_view context) const { return extract_features(context, dim_, *table_); }

  std::vector<double> logits(const FeatureVector& x) const {
    std::vector<double> z(bias_.begin(), bias_.end());
    for (const auto& f : x) {
      const double* row = &weights_[static_cast<std::size_t>(f.index) * k_];
      for (std::size_t c = 0; c < k_; ++c) z[c] += f.value * row[c];
    }
    return z;
  }

  ProbDistribution predict_features(const FeatureVector& x) const {
    auto z = logits(x);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) sum += (v = std::exp(v - zmax));
    for (double& v : z) v /= sum;
    return ProbDistribution(std::move(z));
  }

  ProbDistribution predict(std::string_view context) const override {
    return predict_features(features(context));
  }

  bool operator==(const BowModel& o) const {
    return k_ == o.k_ && dim_ == o.dim_ && weights_ == o.weights_ && bias_ == o.bias_ && seed == o.seed &&
           vocab_checksum == o.vocab_checksum;
  }

 private:
  std::size_t k_;
  std::uint32_t dim_;
  std::vector<double> weights_;
  std::vector<double> bias_;
  const EmojiTable* table_ = &EmojiTable::builtin();
};

struct EncodedSample {
  FeatureVector features;
  Combination target;
};

inline std::vector<EncodedSample> encode_samples(const BowModel& model, std::span<const Sample> samples) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({model.features(s.context), s.target});
  return out;
}

// Gradient of the mean loss; weight rows only for features present in the batch.
struct Gradient {
  std::map<std::uint32_t, std::vector<double>> weight_rows;
  std::vector<double> bias;
};

// Mean soft-label cross-entropy  -1/B sum_b sum_k q_bk ln p_bk  over the
// batch. The logit gradient is p - q.
inline double loss_and_gradient(const BowModel& model, std::span<const EncodedSample> batch,
                                Gradient* grad = nullptr) {
  const std::size_t k = model.num_classes();
  if (grad) {
    grad->weight_rows.clear();
    grad->bias.assign(k, 0.0);
  }
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& sample : batch) {
    auto z = model.logits(sample.features);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);
    const auto q = soft_label(sample.target, k);
    for (std::size_t c = 0; c < k; ++c) {
      if (q[c] > 0.0) loss -= q[c] * (z[c] - log_norm);
    }
    if (!grad) continue;
    std::vector<double> delta(k);
    for (std::size_t c = 0; c < k; ++c) delta[c] = (std::exp(z[c] - log_norm) - q[c]) * inv_batch;
    for (std::size_t c = 0; c < k; ++c) grad->bias[c] += delta[c];
    for (const auto& f : sample.features) {
      auto& row = grad->weight_rows[f.index];
      row.resize(k, 0.0);
      for (std::size_t c = 0; c < k; ++c) row[c] += f.value * delta[c];
    }
  }
  return loss * inv_batch;
}

struct TrainOptions {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 0.5;
  std::uint64_t seed = 1;
  std::uint32_t feature_dim = kDefaultFeatureDim;
};

struct TrainResult {
  BowModel model;
  std::vector<double> epoch_loss;  // full-dataset mean loss after each epoch
};

// Plain mini-batch gradient descent with a fixed learning rate from zero
// weights. The seed drives only the per-epoch shuffle, and the shuffle uses
// raw mt19937_64 output so parameters are bit-identical across platforms.
inline TrainResult train_bow(std::span<const Sample> samples, std::size_t num_classes,
                             const TrainOptions& options, const EmojiTable& table = EmojiTable::builtin()) {
  if (samples.empty()) throw DataError("cannot train on an empty dataset");
  if (options.batch_size == 0) throw DataError("batch size must be positive");
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate)) {
    throw DataError("learning rate must be positive");
  }
  BowModel model(num_classes, options.feature_dim);
  model.set_emoji_table(table);
  model.seed = options.seed;
  const auto data = encode_samples(model, samples);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  std::vector<EncodedSample> batch;
  Gradient grad;
  std::vector<double> epoch_loss;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t j = start; j < stop; ++j) batch.push_back(data[order[j]]);
      const double loss = loss_and_gradient(model, batch, &grad);
      if (!std::isfinite(loss)) {
        char lr[32];
        std::snprintf(lr, sizeof lr, "%g", options.learning_rate);
        throw TrainingError("loss became non-finite in epoch " + std::to_string(epoch + 1) + "; learning rate " +
                            lr + " is too high");
      }
      auto bias = model.bias();
      for (std::size_t c = 0; c < num_classes; ++c) bias[c] -= options.learning_rate * grad.bias[c];
      auto weights = model.weights();
      for (const auto& [index, row] : grad.weight_rows) {
        double* w = &weights[static_cast<std::size_t>(index) * num_classes];
        for (std::size_t c = 0; c < num_classes; ++c) w[c] -= options.learning_rate * row[c];
      }
    }
    const double loss = loss_and_gradient(model, data);
    if (!std::isfinite(loss)) {
      throw TrainingError("loss became non-finite after epoch " + std::to_string(epoch + 1) +
                          "; learning rate is too high");
    }
    epoch_loss.push_back(loss);
  }
  return {std::move(model), std::move(epoch_loss)};
}

// ---------------------------------------------------------------------------
// Checkpoint: little-endian binary
//   "EMJCBOW1" | u32 K | u32 feature_dim | u64 seed | u64 vocab_checksum |
//   K f64 bias | feature_dim*K f64 weights

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}
inline void put_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 4);
}
inline std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("truncated model checkpoint");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}
inline std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw DataError("truncated model checkpoint");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

inline constexpr std::string_view kModelMagic = "EMJCBOW1";

}  // namespace detail

inline void write_model(std::ostream& out, const BowModel& model) {
  out.write(detail::kModelMagic.data(), static_cast<std::streamsize>(detail::kModelMagic.size()));
  detail::put_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  detail::put_u32(out, model.feature_dim());
  detail::put_u64(out, model.seed);
  detail::put_u64(out, model.vocab_checksum);
  for (double v : model.bias()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  for (double v : model.weights()) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline void write_model(const std::filesystem::path& path, const BowModel& model) {
  write_atomically(path, [&](std::ostream& out) { write_model(out, model); });
}

inline BowModel read_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::string_view(magic, 8) != detail::kModelMagic) {
    throw DataError("not a model checkpoint (bad magic or version)");
  }
  const std::uint32_t k = detail::get_u32(in);
  const std::uint32_t dim = detail::get_u32(in);
  BowModel model(k, dim);
  model.seed = detail::get_u64(in);
  model.vocab_checksum = detail::get_u64(in);
  for (double& v : model.bias()) v = std::bit_cast<double>(detail::get_u64(in));
  for (double& v : model.weights()) v = std::bit_cast<double>(detail::get_u64(in));
  return model;
}

inline BowModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_model(in);
}

// ---------------------------------------------------------------------------
// Baselines and adapters

// Corpus emoji frequencies, ignoring the context.
class UnigramModel final : public ProbabilityModel {
 public:
  explicit UnigramModel(const EmojiVocabulary& vocab) {
    std::vector<double> w;
    w.reserve(vocab.size());
    for (const auto& e : vocab.entries()) w.push_back(static_cast<double>(e.count));
    p_ = ProbDistribution::normalized(std::move(w));
  }

  std::size_t num_classes() const override { return p_.size(); }
  ProbDistribution predict(std::string_view) const override { return p_; }

 private:
  ProbDistribution p_;
};

// Distributions computed elsewhere (e.g. by a neural encoder), one CSV row
// per dataset sample, aligned by index. Rows are renormalized on load.
class ExternalModel final : public ProbabilityModel {
 public:
  ExternalModel(std::vector<ProbDistribution> rows, std::vector<std::string> contexts)
      : rows_(std::move(rows)), contexts_(std::move(contexts)) {
    if (rows_.size() != contexts_.size()) {
      throw DataError("external distributions have " + std::to_string(rows_.size()) + " rows for " +
                      std::to_string(contexts_.size()) + " samples");
    }
    if (rows_.empty()) throw DataError("no external distributions");
  }

  std::size_t num_classes() const override { return rows_.front().size(); }
  std::size_t size() const noexcept { return rows_.size(); }
  const ProbDistribution& row(std::size_t i) const { return rows_.at(i); }

  // Row of the first sample with this exact context.
  ProbDistribution predict(std::string_view context) const override {
    for (std::size_t i = 0; i < contexts_.size(); ++i) {
      if (contexts_[i] == context) return rows_[i];
    }
    throw DataError("no external distribution for context");
  }

  std::vector<ProbDistribution> predict_all(std::span<const Sample> samples) const override {
    if (samples.size() != rows_.size()) {
      throw DataError("external distributions have " + std::to_string(rows_.size()) + " rows for " +
                      std::to_string(samples.size()) + " samples");
    }
    return rows_;
  }

 private:
  std::vector<ProbDistribution> rows_;
  std::vector<std::string> contexts_;
};

inline std::vector<ProbDistribution> parse_distribution_csv(std::istream& in, std::size_t k) {
  std::vector<ProbDistribution> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    for (auto field : detail::split(line, ',')) {
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
        throw ParseError("bad number '" + std::string(field) + "'", line_no);
      }
      values.push_back(v);
    }
    if (values.size() != k) {
      throw ParseError("expected " + std::to_string(k) + " values, got " + std::to_string(values.size()),
                       line_no);
    }
    for (double v : values) {
      if (!std::isfinite(v) || v < 0.0) throw ParseError("negative or non-finite probability", line_no);
    }
    try {
      rows.push_back(ProbDistribution::normalized(std::move(values)));
    } catch (const DataError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return rows;
}

inline ExternalModel load_external(const std::filesystem::path& path, std::span<const Sample> dataset,
                                   std::size_t k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> contexts;
  contexts.reserve(dataset.size());
  for (const auto& s : dataset) contexts.push_back(s.context);
  return ExternalModel(parse_distribution_csv(in, k), std::move(contexts));
}

}  // namespace emojicomb
