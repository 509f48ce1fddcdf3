// kagg: command-line front end for kernel-based consensual aggregation experiments.
//
//   kagg simulate --model 3 --regime correlated --seed 1 --out data.csv
//   kagg run --config experiment.json --format markdown
//   kagg time --model 1 --replications 10
//   kagg validate
//
// Exit codes: 0 success, 1 runtime error or failed validation, 2 bad configuration,
// 3 too many failed replications.

#include "kagg/csv.hpp"
#include "kagg/errors.hpp"
#include "kagg/harness.hpp"
#include "kagg/parallel.hpp"
#include "kagg/results_io.hpp"
#include "kagg/validation.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitThreshold = 3;

struct CommonOptions {
  std::string config;
  std::optional<int> model;
  std::string regime = "uncorrelated";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::string out = "-";
  std::string format = "json";
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--model", o.model, "Synthetic model 1-10 (default experiment, no config needed)")
      ->check(CLI::Range(1, 10));
  cmd->add_option("--regime", o.regime, "uncorrelated or correlated (with --model)");
  cmd->add_option("--seed", o.seed, "Base seed (overrides the config)");
  cmd->add_option("--replications", o.replications, "Replication count (overrides the config)");
  cmd->add_option("--out", o.out, "Output path, - for stdout");
  cmd->add_option("--format", o.format, "csv, json or markdown")
      ->check(CLI::IsMember({"csv", "json", "markdown", "md"}));
  cmd->add_option("--threads", o.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
}

kagg::ExperimentConfig build_config(const CommonOptions& o) {
  if (o.config.empty() && !o.model) throw kagg::InvalidConfig("give --config or --model");
  if (!o.config.empty() && o.model) throw kagg::InvalidConfig("--config and --model are exclusive");
  kagg::ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = kagg::load_experiment_config(o.config);
  } else {
    kagg::Regime regime;
    try {
      regime = kagg::parse_regime(o.regime);
    } catch (const std::exception& e) {
      throw kagg::InvalidConfig(e.what());
    }
    cfg = kagg::default_experiment({*o.model, regime});
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.replications) cfg.replications = *o.replications;
  if (o.threads > 0) cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
  if (!f.flush()) throw std::runtime_error("failed writing " + path);
}

int cmd_simulate(int model, const std::string& regime, std::optional<std::size_t> n, std::uint64_t seed,
                 bool with_signal, const std::string& out) {
  kagg::Regime r;
  try {
    r = kagg::parse_regime(regime);
  } catch (const std::exception& e) {
    throw kagg::InvalidConfig(e.what());
  }
  const kagg::SyntheticModelId id{model, r};
  const auto data = n ? kagg::gen_model(id, *n, seed) : kagg::gen_model(id, seed);
  std::ostringstream text;
  kagg::write_dataset_csv(text, data.data, with_signal ? &data.signal : nullptr);
  write_text(out, text.str());
  return 0;
}

int cmd_run(const CommonOptions& o) {
  const kagg::ExperimentConfig cfg = build_config(o);
  const kagg::ResultTable table = kagg::run_experiment(cfg);
  if (table.failed > 0) std::clog << "kagg: " << table.failed << " replication(s) excluded\n";
  kagg::emit_results(table, kagg::parse_format(o.format), std::filesystem::path(o.out));
  return 0;
}

int cmd_time(const CommonOptions& o) {
  const kagg::ExperimentConfig cfg = build_config(o);
  std::vector<kagg::OptimizerTiming> timings;
  for (std::size_t r = 0; r < cfg.replications; ++r) timings.push_back(kagg::time_optimizers(cfg, r));
  std::ostringstream text;
  kagg::write_timings(text, timings, kagg::parse_format(o.format));
  write_text(o.out, text.str());
  return 0;
}

int cmd_validate(std::uint64_t seed, std::size_t instances, int threads) {
  if (threads > 0) kagg::set_threads(threads);
  bool all = true;
  for (const auto& c : kagg::run_validation_suite(seed, instances)) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " [" << c.detail << "]\n";
    all = all && c.passed;
  }
  return all ? 0 : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-based consensual aggregation for regression"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset as CSV");
  int sim_model = 1;
  std::string sim_regime = "uncorrelated";
  std::optional<std::size_t> sim_n;
  std::uint64_t sim_seed = 0;
  bool sim_signal = false;
  std::string sim_out = "-";
  simulate->add_option("--model", sim_model, "Model 1-10")->required()->check(CLI::Range(1, 10));
  simulate->add_option("--regime", sim_regime, "uncorrelated or correlated");
  simulate->add_option("--n", sim_n, "Row count (default: the model's own)")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_seed, "Seed");
  simulate->add_flag("--with-signal", sim_signal, "Append the noise-free signal column");
  simulate->add_option("--out", sim_out, "Output path, - for stdout");

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run a replicated experiment and emit the result table");
  add_common(run, run_opts);

  CommonOptions time_opts;
  time_opts.format = "markdown";
  time_opts.replications = 10;
  auto* time = app.add_subcommand("time", "Compare gradient descent and grid search on the CV objective");
  add_common(time, time_opts);

  std::uint64_t val_seed = 2024;
  std::size_t val_instances = 20;
  int val_threads = 0;
  auto* validate = app.add_subcommand("validate", "Run randomised property checks");
  validate->add_option("--seed", val_seed, "Seed");
  validate->add_option("--instances", val_instances, "Instances per check")->check(CLI::PositiveNumber);
  validate->add_option("--threads", val_threads, "OpenMP threads (0: runtime default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(sim_model, sim_regime, sim_n, sim_seed, sim_signal, sim_out);
    if (*run) return cmd_run(run_opts);
    if (*time) return cmd_time(time_opts);
    if (*validate) return cmd_validate(val_seed, val_instances, val_threads);
  } catch (const kagg::InvalidConfig& e) {
    std::cerr << "kagg: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const kagg::FailureThresholdExceeded& e) {
    std::cerr << "kagg: " << e.what() << "\n";
    return kExitThreshold;
  } catch (const std::exception& e) {
    std::cerr << "kagg: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
