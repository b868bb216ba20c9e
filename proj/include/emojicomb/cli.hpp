#pragma once

// Subcommands behind the `emojicomb` binary. Each command validates its
// inputs and reads everything it needs before writing any output file.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "emojicomb/corpus.hpp"
#include "emojicomb/dataset_io.hpp"
#include "emojicomb/emoji_text.hpp"
#include "emojicomb/error.hpp"
#include "emojicomb/evaluation.hpp"
#include "emojicomb/prob_model.hpp"
#include "emojicomb/strategies.hpp"

namespace emojicomb::cli {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path corpus;
  fs::path dataset;
  fs::path test_dataset;
  fs::path vocab;
  fs::path dict;
  fs::path model;
  fs::path external;  // CSV of distributions, alternative to --model
  fs::path report;
  fs::path output;
  fs::path emoji_table;  // empty: bundled Unicode 11.0 list

  std::size_t k = kDefaultVocabularySize;
  std::size_t max_target_len = kDefaultMaxTargetLength;
  std::size_t dict_size = kDefaultDictionarySize;
  double test_fraction = 0.0;

  std::string strategy = "retrieval";
  double thr = 0.3;
  double pen = 0.3;
  std::vector<double> thr_grid = {0.4, 0.3, 0.2};
  std::vector<double> pen_grid = {0.0, 0.2, 0.3, 0.4};

  std::size_t epochs = 10;
  std::size_t batch = 64;
  double lr = 0.5;
  std::uint32_t features = kDefaultFeatureDim;
  std::uint64_t seed = 1;

  int serve_port = 0;  // 0: stdin/stdout
  std::size_t serve_max_connections = 0;  // 0: unlimited
};

namespace detail {

inline void require(const fs::path& p, const char* flag) {
  if (p.empty()) throw DataError(std::string("missing required ") + flag);
}

inline void require_file(const fs::path& p, const char* flag) {
  require(p, flag);
  if (!fs::is_regular_file(p)) throw DataError(std::string(flag) + " " + p.string() + " does not exist");
}

inline void require_writable_dir(const fs::path& p, const char* flag) {
  require(p, flag);
  const auto dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  if (!fs::is_directory(dir)) throw DataError(std::string(flag) + ": directory " + dir.string() + " does not exist");
}

inline const EmojiTable& table_for(const RunConfig& config, std::optional<EmojiTable>& storage) {
  if (config.emoji_table.empty()) return EmojiTable::builtin();
  storage = EmojiTable::load(config.emoji_table);
  return *storage;
}

inline std::vector<std::string> read_corpus(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  std::vector<std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      const auto obj = nlohmann::json::parse(line);
      texts.push_back(obj.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("corpus record: ") + e.what(), line_no);
    }
  }
  return texts;
}

inline void check_model_vocab(const BowModel& model, const EmojiVocabulary& vocab) {
  if (model.vocab_checksum != vocab.checksum() || model.num_classes() != vocab.size()) {
    throw DataError("model was trained against a different vocabulary (checksum " +
                    checksum_hex(model.vocab_checksum) + ", vocabulary has " + checksum_hex(vocab.checksum()) +
                    "); retrain or pass the matching --vocab");
  }
}

inline std::vector<StrategyConfig> grid_from(const RunConfig& config) {
  std::vector<StrategyConfig> grid{{StrategyKind::Naive, 0.0}};
  for (double t : config.thr_grid) grid.push_back({StrategyKind::Greedy, t});
  for (double p : config.pen_grid) grid.push_back({StrategyKind::Retrieval, p});
  return grid;
}

inline nlohmann::json emoji_list(const Combination& c, const EmojiVocabulary& vocab) {
  auto out = nlohmann::json::array();
  for (EmojiId id : c.ids) out.push_back(vocab.emoji_utf8(id));
  return out;
}

}  // namespace detail

struct BuildSummary {
  std::size_t posts = 0;
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  std::size_t vocabulary = 0;
};

inline BuildSummary cmd_build_dataset(const RunConfig& config, std::ostream& log) {
  detail::require_file(config.corpus, "--corpus");
  detail::require_writable_dir(config.dataset, "--dataset");
  detail::require_writable_dir(config.vocab, "--vocab");
  if (config.test_fraction < 0.0 || config.test_fraction >= 1.0) {
    throw DataError("--test-fraction must be in [0, 1)");
  }
  if (config.test_fraction > 0.0) detail::require_writable_dir(config.test_dataset, "--test-dataset");
  if (config.k == 0) throw DataError("--k must be at least 1");

  std::optional<EmojiTable> table_storage;
  const auto& table = detail::table_for(config, table_storage);

  std::vector<std::string> cleaned;
  for (const auto& text : detail::read_corpus(config.corpus)) cleaned.push_back(preprocess(text));
  const auto vocab = build_vocabulary(cleaned, config.k, table);

  std::vector<Sample> samples;
  for (const auto& post : cleaned) {
    for (auto& s : extract_samples(post, vocab, table, config.max_target_len)) samples.push_back(std::move(s));
  }
  if (samples.empty()) throw DataError("no samples extracted from corpus");

  std::vector<Sample> train;
  std::vector<Sample> test;
  if (config.test_fraction > 0.0) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * static_cast<double>(samples.size())));
    std::vector<bool> is_test(samples.size(), false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
    for (std::size_t i = 0; i < samples.size(); ++i) (is_test[i] ? test : train).push_back(samples[i]);
    if (train.empty() || test.empty()) throw DataError("--test-fraction leaves an empty split");
  } else {
    train = std::move(samples);
  }

  write_vocabulary(config.vocab, vocab);
  write_dataset(config.dataset, train, vocab);
  if (!test.empty()) write_dataset(config.test_dataset, test, vocab);

  BuildSummary summary{cleaned.size(), train.size(), test.size(), vocab.size()};
  log << "posts: " << summary.posts << "\nsamples: " << summary.train_samples + summary.test_samples
      << " (train " << summary.train_samples << ", test " << summary.test_samples << ")\nvocabulary: "
      << summary.vocabulary << "\n";
  return summary;
}

inline std::size_t cmd_mine_candidates(const RunConfig& config, std::ostream& log) {
  detail::require_file(config.vocab, "--vocab");
  detail::require_file(config.dataset, "--dataset");
  detail::require_writable_dir(config.dict, "--dict");
  const auto vocab = read_vocabulary(config.vocab);
  const auto samples = read_dataset(config.dataset, vocab);
  const auto dict = mine_candidates(samples, config.dict_size, vocab.size());
  write_dictionary(config.dict, dict, vocab);
  log << "candidates: " << dict.size() << "\n";
  return dict.size();
}

inline std::vector<double> cmd_train(const RunConfig& config, std::ostream& log) {
  detail::require_file(config.vocab, "--vocab");
  detail::require_file(config.dataset, "--dataset");
  detail::require_writable_dir(config.model, "--model");
  std::optional<EmojiTable> table_storage;
  const auto& table = detail::table_for(config, table_storage);
  const auto vocab = read_vocabulary(config.vocab);
  const auto samples = read_dataset(config.dataset, vocab);

  TrainOptions options;
  options.epochs = config.epochs;
  options.batch_size = config.batch;
  options.learning_rate = config.lr;
  options.seed = config.seed;
  options.feature_dim = config.features;
  auto result = train_bow(samples, vocab.size(), options, table);
  result.model.vocab_checksum = vocab.checksum();
  write_model(config.model, result.model);
  for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
    log << "epoch " << e + 1 << " loss " << result.epoch_loss[e] << "\n";
  }
  return result.epoch_loss;
}

// Loaded artifacts shared by predict, evaluate and serve.
struct Predictor {
  EmojiVocabulary vocab;
  std::optional<CandidateDictionary> dict;
  std::unique_ptr<ProbabilityModel> model;
  std::optional<EmojiTable> table_storage;
  std::size_t max_len = kDefaultMaxTargetLength;

  const RetrievalIndex* index() const { return index_ ? &*index_ : nullptr; }
  void build_index() {
    if (dict) index_.emplace(*dict);
  }

 private:
  std::optional<RetrievalIndex> index_;
};

// `aligned` gives the samples external distribution rows belong to; unused
// for checkpoints.
inline std::unique_ptr<Predictor> load_predictor(const RunConfig& config, std::span<const Sample> aligned,
                                                 bool need_dict) {
  detail::require_file(config.vocab, "--vocab");
  if (need_dict) detail::require_file(config.dict, "--dict");
  if (config.model.empty() == config.external.empty()) {
    throw DataError("pass exactly one of --model or --external");
  }
  auto p = std::make_unique<Predictor>();
  p->max_len = config.max_target_len;
  p->vocab = read_vocabulary(config.vocab);
  if (!config.dict.empty()) p->dict = read_dictionary(config.dict, p->vocab);
  const auto& table = detail::table_for(config, p->table_storage);
  if (!config.model.empty()) {
    detail::require_file(config.model, "--model");
    auto model = std::make_unique<BowModel>(read_model(config.model));
    detail::check_model_vocab(*model, p->vocab);
    model->set_emoji_table(table);
    p->model = std::move(model);
  } else {
    detail::require_file(config.external, "--external");
    p->model = std::make_unique<ExternalModel>(load_external(config.external, aligned, p->vocab.size()));
  }
  p->build_index();
  return p;
}

inline StrategyConfig strategy_from(const RunConfig& config) {
  const auto kind = parse_strategy(config.strategy);
  return {kind, kind == StrategyKind::Greedy ? config.thr : config.pen};
}

inline std::size_t cmd_predict(const RunConfig& config, std::ostream& log) {
  detail::require_file(config.dataset, "--dataset");
  detail::require_writable_dir(config.output, "--output");
  const auto strategy = strategy_from(config);
  std::ifstream in(config.dataset, std::ios::binary);
  if (!in) throw DataError("cannot open " + config.dataset.string());
  std::vector<Sample> inputs;
  for (auto& c : read_contexts(in)) inputs.push_back({std::move(c), {}});
  const auto predictor = load_predictor(config, inputs, strategy.kind == StrategyKind::Retrieval);
  const auto distributions = predictor->model->predict_all(inputs);

  std::vector<std::string> lines;
  lines.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto pred = apply_strategy(strategy, distributions[i], predictor->index(), predictor->max_len);
    lines.push_back(nlohmann::json{{"context", inputs[i].context},
                                   {"prediction", detail::emoji_list(pred.combination, predictor->vocab)},
                                   {"score", pred.score}}
                        .dump());
  }
  write_atomically(config.output, [&](std::ostream& out) {
    for (const auto& l : lines) out << l << '\n';
  });
  log << "predictions: " << lines.size() << "\n";
  return lines.size();
}

inline std::vector<EvalReport> cmd_evaluate(const RunConfig& config, std::ostream& log) {
  detail::require_file(config.vocab, "--vocab");
  detail::require_file(config.dataset, "--dataset");
  detail::require_writable_dir(config.report, "--report");
  const auto vocab = read_vocabulary(config.vocab);
  const auto samples = read_dataset(config.dataset, vocab);
  const auto predictor = load_predictor(config, samples, true);
  const auto grid = detail::grid_from(config);
  const auto reports = compare_strategies(*predictor->model, samples, *predictor->dict, grid, predictor->max_len);
  write_atomically(config.report, [&](std::ostream& out) { write_report_csv(out, reports); });
  write_report_csv(log, reports);
  return reports;
}

// ---------------------------------------------------------------------------
// Serve: one JSON request per line, one JSON response per line, in order.

inline std::string handle_request(const std::string& line, const Predictor& predictor, const RunConfig& defaults) {
  nlohmann::json request;
  try {
    request = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    return nlohmann::json{{"error", "parse"}, {"message", e.what()}}.dump();
  }
  try {
    if (!request.is_object() || !request.contains("context") || !request["context"].is_string()) {
      return nlohmann::json{{"error", "request"}, {"message", "missing string field 'context'"}}.dump();
    }
    RunConfig config = defaults;
    if (request.contains("strategy")) config.strategy = request["strategy"].get<std::string>();
    if (request.contains("params")) {
      const auto& params = request["params"];
      if (params.contains("thr")) config.thr = params["thr"].get<double>();
      if (params.contains("pen")) config.pen = params["pen"].get<double>();
    }
    const auto strategy = strategy_from(config);
    const auto p = predictor.model->predict(request["context"].get<std::string>());
    const auto pred = apply_strategy(strategy, p, predictor.index(), predictor.max_len);
    return nlohmann::json{{"prediction", detail::emoji_list(pred.combination, predictor.vocab)},
                          {"score", pred.score}}
        .dump();
  } catch (const std::exception& e) {
    return nlohmann::json{{"error", "request"}, {"message", e.what()}}.dump();
  }
}

inline std::size_t serve_stream(std::istream& in, std::ostream& out, const Predictor& predictor,
                                const RunConfig& config) {
  std::size_t handled = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << handle_request(line, predictor, config) << '\n';
    out.flush();
    ++handled;
  }
  return handled;
}

namespace detail {

inline bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

class FileDescriptor {
 public:
  explicit FileDescriptor(int fd) : fd_(fd) {}
  FileDescriptor(const FileDescriptor&) = delete;
  FileDescriptor& operator=(const FileDescriptor&) = delete;
  ~FileDescriptor() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const noexcept { return fd_; }

 private:
  int fd_;
};

}  // namespace detail

// Accepts connections one at a time on 127.0.0.1:`port`. `on_listening`
// fires once the socket is bound.
inline void serve_tcp(int port, const Predictor& predictor, const RunConfig& config,
                      const std::function<void()>& on_listening = {}) {
  detail::FileDescriptor listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.get() < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  int yes = 1;
  ::setsockopt(listener.get(), SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listener.get(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(listener.get(), 16) < 0) {
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + std::strerror(errno));
  }
  if (on_listening) on_listening();

  for (std::size_t served = 0; config.serve_max_connections == 0 || served < config.serve_max_connections;
       ++served) {
    detail::FileDescriptor conn(::accept(listener.get(), nullptr, nullptr));
    if (conn.get() < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("accept: ") + std::strerror(errno));
    }
    std::string pending;
    char buf[4096];
    bool open = true;
    while (open) {
      const ssize_t n = ::recv(conn.get(), buf, sizeof buf, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      pending.append(buf, static_cast<std::size_t>(n));
      std::size_t nl;
      while (open && (nl = pending.find('\n')) != std::string::npos) {
        std::string line = pending.substr(0, nl);
        pending.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        open = detail::send_all(conn.get(), handle_request(line, predictor, config) + "\n");
      }
    }
  }
}

inline void cmd_serve(const RunConfig& config, std::istream& in, std::ostream& out) {
  if (config.model.empty()) throw DataError("serve needs --model");
  const auto predictor = load_predictor(config, {}, true);
  if (config.serve_port > 0) {
    serve_tcp(config.serve_port, *predictor, config);
  } else {
    serve_stream(in, out, *predictor, config);
  }
}

}  // namespace emojicomb::cli
