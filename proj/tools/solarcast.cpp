// solarcast: synthetic data, hyperparameter search, training, evaluation.
//
// Precedence: built-in defaults < --config file < command-line flags.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "solarcast/errors.hpp"
#include "solarcast/pipeline.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intra-day solar irradiance forecasting"};
  app.require_subcommand(1);

  std::string config_path, out_dir, family, models_csv, log_level = "info";
  std::uint64_t seed = 0;
  int trials = 0, threads = 0;
  bool restart = false;

  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "global seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error");

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
  auto* search = app.add_subcommand("hypersearch", "TPE search for one model family");
  search->add_option("--trials", trials, "trial budget")->check(CLI::PositiveNumber);
  search->add_option("--family", family, "global-dnn, linear, gbt or local-dnn")->required();
  search->add_flag("--restart", restart, "discard an existing trial log");
  auto* train = app.add_subcommand("train", "train one model family");
  train->add_option("--family", family, "global-dnn, linear, gbt, local-dnn, persistence or nwp")->required();
  auto* evaluate = app.add_subcommand("evaluate", "evaluate trained models on the test period");
  evaluate->add_option("--models", models_csv, "comma-separated model list");
  auto* report = app.add_subcommand("report", "rebuild the report tables from stored records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));
  try {
    solarcast::RunConfig cfg = config_path.empty() ? solarcast::RunConfig{} : solarcast::load_run_config(config_path);
    if (app.count("--seed")) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (trials > 0) cfg.search.trials = trials;
    if (!models_csv.empty()) cfg.models = split_list(models_csv);
    cfg.validate();

    if (*gen) {
      solarcast::cmd_gen_data(cfg);
    } else if (*search) {
      const auto r = solarcast::cmd_hypersearch(cfg, family, restart);
      std::cout << "best validation rRMSE " << r.best_performance << " % after " << r.history.size() << " trials\n";
    } else if (*train) {
      solarcast::cmd_train(cfg, family);
    } else if (*evaluate) {
      const auto r = solarcast::cmd_evaluate(cfg, cfg.models);
      std::cout << solarcast::format_report(r);
    } else if (*report) {
      std::cout << solarcast::cmd_report(cfg);
    }
  } catch (const solarcast::ConfigError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const solarcast::DataError& e) {
    spdlog::error("{}", e.what());
    return 3;
  } catch (const solarcast::TrainingFailure& e) {
    spdlog::error("{}", e.what());
    return 4;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
