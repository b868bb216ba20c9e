// emojicomb: build datasets, mine candidates, train, predict, evaluate and
// serve emoji-combination predictions.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <iostream>

#include "CLI11.hpp"

#include "emojicomb/cli.hpp"

namespace {

using emojicomb::cli::RunConfig;

void add_paths(CLI::App& app, RunConfig& c) {
  app.add_option("--corpus", c.corpus, "Input corpus (JSON lines with a \"text\" field)");
  app.add_option("--dataset", c.dataset, "Dataset JSON lines (train split for build-dataset)");
  app.add_option("--test-dataset", c.test_dataset, "Held-out split written by build-dataset");
  app.add_option("--vocab", c.vocab, "Emoji vocabulary TSV");
  app.add_option("--dict", c.dict, "Candidate dictionary TSV");
  app.add_option("--model", c.model, "Model checkpoint");
  app.add_option("--external", c.external, "CSV of externally computed distributions, one row per sample");
  app.add_option("--report", c.report, "Evaluation report CSV");
  app.add_option("--output", c.output, "Predictions JSON lines");
  app.add_option("--emoji-table", c.emoji_table, "Emoji table TSV (default: bundled Unicode 11.0 list)");
}

void add_sizes(CLI::App& app, RunConfig& c) {
  app.add_option("--k", c.k, "Vocabulary size")->capture_default_str();
  app.add_option("--max-target-len", c.max_target_len, "Longest emoji run kept as a target")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--dict-size", c.dict_size, "Number of mined candidates")->capture_default_str();
  app.add_option("--test-fraction", c.test_fraction, "Fraction of samples held out")->capture_default_str();
}

void add_strategy(CLI::App& app, RunConfig& c) {
  app.add_option("--strategy", c.strategy, "naive, greedy or retrieval")
      ->capture_default_str()
      ->check(CLI::IsMember({"naive", "greedy", "retrieval"}));
  app.add_option("--thr", c.thr, "Greedy cumulative-probability threshold")->capture_default_str();
  app.add_option("--pen", c.pen, "Retrieval size penalty")->capture_default_str();
  app.add_option("--thr-grid", c.thr_grid, "Greedy thresholds evaluated")->delimiter(',')->capture_default_str();
  app.add_option("--pen-grid", c.pen_grid, "Retrieval penalties evaluated")->delimiter(',')->capture_default_str();
}

void add_training(CLI::App& app, RunConfig& c) {
  app.add_option("--epochs", c.epochs)->capture_default_str();
  app.add_option("--batch", c.batch)->capture_default_str();
  app.add_option("--lr", c.lr)->capture_default_str();
  app.add_option("--features", c.features, "Hashed feature-space size")->capture_default_str();
  app.add_option("--seed", c.seed)->capture_default_str();
  app.add_option("--serve-port", c.serve_port, "Serve on 127.0.0.1:PORT instead of stdin/stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Emoji combination prediction pipeline"};
  app.set_config("--config", "", "Optional TOML/INI config file; flags given on the command line win");
  app.require_subcommand(1);

  RunConfig config;
  add_paths(app, config);
  add_sizes(app, config);
  add_strategy(app, config);
  add_training(app, config);
  for (auto* opt : app.get_options()) opt->configurable(true);

  auto* build = app.add_subcommand("build-dataset", "Clean a corpus, build the vocabulary and extract samples");
  auto* mine = app.add_subcommand("mine-candidates", "Mine the candidate dictionary from a dataset");
  auto* train = app.add_subcommand("train", "Train the bag-of-words softmax model");
  auto* predict = app.add_subcommand("predict", "Predict a combination for every context in --dataset");
  auto* evaluate = app.add_subcommand("evaluate", "Compare strategies on a test dataset");
  auto* serve = app.add_subcommand("serve", "Answer JSON-lines prediction requests");
  for (auto* sub : {build, mine, train, predict, evaluate, serve}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*build) {
      emojicomb::cli::cmd_build_dataset(config, std::cout);
    } else if (*mine) {
      emojicomb::cli::cmd_mine_candidates(config, std::cout);
    } else if (*train) {
      emojicomb::cli::cmd_train(config, std::cout);
    } else if (*predict) {
      emojicomb::cli::cmd_predict(config, std::cout);
    } else if (*evaluate) {
      emojicomb::cli::cmd_evaluate(config, std::cout);
    } else if (*serve) {
      std::ios::sync_with_stdio(false);
      emojicomb::cli::cmd_serve(config, std::cin, std::cout);
    }
  } catch (const emojicomb::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const emojicomb::TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
