#pragma once

// Experiment configuration and the train/evaluate pipeline shared by the
// pacf commands and the end-to-end tests.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pacf/adapt.hpp"
#include "pacf/evaluation.hpp"
#include "pacf/synthbench.hpp"

namespace pacf::cli {

enum class RegularizerChoice { None, L2, KL, JSD };

const char* to_string(RegularizerChoice r);
RegularizerChoice regularizer_choice_from_string(const std::string& name);

struct Ablation {
  bool enable_pce = true;
  RegularizerChoice regularizer = RegularizerChoice::JSD;
  bool enable_adversarial = true;
};

struct ExperimentConfig {
  DomainShiftSpec benchmark;
  TrainerConfig trainer;
  Ablation ablation;
  std::string out_dir = "runs/default";

  // Every key is optional; unknown keys anywhere throw InvalidConfig.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Sets both the benchmark seed and the trainer seed.
  void override_seed(std::uint64_t seed);

  // Canonical JSON with every field spelled out and keys sorted.
  std::string canonical_json() const;
  std::string hash() const;

  // Trainer settings with the ablation switches folded into the weights.
  TrainerConfig effective_trainer() const;

  void validate() const;
};

// Dataset as read from (or written to) the three dump files.
struct DatasetFiles {
  LabeledBatch source;
  std::vector<FeatureVector> target;
  std::vector<ClassId> hidden_target_labels;
};

DatasetFiles dataset_from(const DatasetPair& pair);
void save_dataset(const DatasetFiles& data, const std::filesystem::path& dir);
// Reads source.csv, target.csv and target_hidden.csv from `dir`. The target
// labels come from target_hidden.csv, or from target.csv when it is labeled.
DatasetFiles load_dataset(const std::filesystem::path& dir);
DatasetFiles load_dataset(const std::filesystem::path& source_csv, const std::filesystem::path& target_csv,
                          const std::optional<std::filesystem::path>& hidden_csv);

struct TrainingOutcome {
  ModelParams warmed;
  AdaptationState state;
  std::vector<StepRecord> history;
  EvaluationResult warmup_evaluation;
  EvaluationResult final_evaluation;
};

// Warm-up, prototype initialization, adaptation, then evaluation of both the
// warmed-up and the adapted model.
TrainingOutcome run_training(const ExperimentConfig& config, const DatasetFiles& data);

EvaluationResult evaluate_checkpoint(const Checkpoint& checkpoint, const DatasetFiles& data,
                                     double pseudo_threshold);

}  // namespace pacf::cli
