#pragma once

// The four pacf commands. Each writes into an existing output directory and
// produces byte-identical files for identical inputs.

#include <filesystem>
#include <string>
#include <vector>

#include "experiment.hpp"

namespace pacf::cli {

// source.csv, target.csv, target_hidden.csv, manifest.json.
void cmd_gen(const ExperimentConfig& config, const std::filesystem::path& out);

// Generates the data from the config when `data_dir` is empty. Writes
// checkpoint.json, losses.csv, the final metrics (metrics.json plus the CSV
// tables), warmup_metrics.json, rank_pairs.csv, projection.csv and
// manifest.json.
void cmd_train(const ExperimentConfig& config, const std::filesystem::path& data_dir,
               const std::filesystem::path& out);

// Recomputes the metrics files for a checkpoint.
void cmd_eval(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
              const std::filesystem::path& data_dir, const std::filesystem::path& out);

// Comparison tables across runs plus rank-correlation and projection plots
// for each run.
void cmd_report(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out);

// Names used for run columns: the directory name, made unique by suffix.
std::vector<std::string> run_names(const std::vector<std::filesystem::path>& runs);

}  // namespace pacf::cli
