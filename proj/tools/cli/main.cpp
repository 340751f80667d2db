#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <optional>

#include "commands.hpp"
#include "pacf/error.hpp"

namespace fs = std::filesystem;
using namespace pacf;
using namespace pacf::cli;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "experiment config (JSON); defaults apply when omitted");
  cmd->add_option("--out", c.out, "existing output directory (default: out_dir from the config)");
  cmd->add_option("--seed", c.seed, "overrides the benchmark and trainer seeds");
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig config = c.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config);
  if (c.seed) config.override_seed(*c.seed);
  config.validate();
  return config;
}

fs::path out_dir(const Common& c, const ExperimentConfig& config) {
  return c.out.empty() ? fs::path(config.out_dir) : fs::path(c.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pacf: prototype-augmented compact feature adaptation lab"};
  app.require_subcommand(1);

  Common gen_opts, train_opts, eval_opts;
  std::string train_data, eval_data, checkpoint, report_out;
  std::vector<std::string> report_runs;

  CLI::App* gen = app.add_subcommand("gen", "generate and dump a synthetic domain-shift dataset");
  add_common(gen, gen_opts);

  CLI::App* train = app.add_subcommand("train", "warm up, adapt, and write checkpoint, losses and metrics");
  add_common(train, train_opts);
  train->add_option("--data", train_data, "dataset directory from 'pacf gen' (generated from the config when omitted)");

  CLI::App* eval = app.add_subcommand("eval", "recompute the metrics for a checkpoint");
  add_common(eval, eval_opts);
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json written by 'pacf train'")->required();
  eval->add_option("--data", eval_data, "dataset directory (generated from the config when omitted)");

  CLI::App* report = app.add_subcommand("report", "compare runs and draw the plots");
  report->add_option("runs", report_runs, "run directories, baseline first")->required();
  report->add_option("--out", report_out, "existing output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "UsageError: %s\n", e.what());
    return 2;
  }

  try {
    if (*gen) {
      const ExperimentConfig config = load_config(gen_opts);
      cmd_gen(config, out_dir(gen_opts, config));
    } else if (*train) {
      const ExperimentConfig config = load_config(train_opts);
      cmd_train(config, train_data, out_dir(train_opts, config));
    } else if (*eval) {
      const ExperimentConfig config = load_config(eval_opts);
      cmd_eval(config, checkpoint, eval_data, out_dir(eval_opts, config));
    } else if (*report) {
      cmd_report(std::vector<fs::path>(report_runs.begin(), report_runs.end()), report_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "InternalError: %s\n", e.what());
    return 1;
  }
  return 0;
}
