#pragma once

// Mean-teacher adaptation: the teacher pseudo-labels clean target features,
// the student trains on noise-augmented source and target features under the
// combined objective, prototypes follow the student's embeddings, and the
// teacher tracks the student by EMA.
//
// Randomness protocol (all draws from AdaptationState::rng, in this order):
//   train_run, per step: batch_size source indices, then batch_size target
//     indices, each via Rng::index;
//   train_step: one Rng::normal per coordinate of every source row (row
//     major), then of every target row, added times augment_noise_std.
// warm_up follows the same per-step protocol on its own generator seeded
// with Rng::derive_seed(seed, kWarmupStream), drawing source data only.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pacf/data.hpp"
#include "pacf/losses.hpp"
#include "pacf/model.hpp"
#include "pacf/prototypes.hpp"
#include "pacf/random.hpp"

namespace pacf {

inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kWarmupStream = 1;
inline constexpr std::uint64_t kAdaptStream = 2;

struct TrainerConfig {
  double tau = 0.05;             // prototype posterior temperature
  double init_threshold = 0.8;   // score threshold for prototype initialization
  double pseudo_threshold = 0.8; // teacher confidence needed for a pseudo label; > 1 disables
  LossWeights weights;
  RegularizerKind regularizer = RegularizerKind::JSD;
  double ema_rate = 0.9996;
  double learning_rate = 0.02;
  std::size_t steps = 300;
  std::size_t warmup_steps = 200;
  std::size_t batch_size = 64;
  double augment_noise_std = 0.3;
  std::size_t feature_dim = 16;
  std::uint64_t seed = 0;

  // Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct AdaptationState {
  ModelParams student;
  ModelParams teacher;
  PrototypeSet source_prototypes;
  PrototypeSet target_prototypes;
  std::uint64_t step = 0;
  Rng rng;
};

struct PseudoLabels {
  std::vector<std::size_t> indices;  // positions in the target batch
  std::vector<ClassId> labels;
  std::vector<double> scores;

  std::size_t size() const { return indices.size(); }
};

struct StepRecord {
  std::uint64_t step = 0;
  double sup = 0.0;
  double unsup = 0.0;
  double dis = 0.0;
  double pce = 0.0;
  double mut = 0.0;
  double total = 0.0;
  std::size_t pseudo_count = 0;
};

// Largest probability among the model's classes and its index (the padded
// background entry of the single-class variant is never a label).
std::pair<ClassId, double> top_class(const ModelParams& params, std::span<const double> probs);

// Teacher predictions on clean target features, kept when the top
// probability is at least `threshold`; ties go to the lowest class id.
PseudoLabels generate_pseudo_labels(const ModelParams& teacher,
                                    std::span<const FeatureVector> target, double threshold);

// teacher <- rate * teacher + (1 - rate) * student, for every parameter.
ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double rate);

// Copies rows and adds N(0, std^2) noise to every coordinate.
std::vector<FeatureVector> augment(std::span<const FeatureVector> rows, double noise_std, Rng& rng);

// The combined student objective on one (already augmented) batch pair.
struct ObjectiveEvaluation {
  LossComponents components;  // per-term values, each averaged over its instances
  double total = 0.0;
  ModelParams gradient;       // d total / d student parameters
  std::vector<FeatureVector> source_embeddings;
  std::vector<FeatureVector> target_embeddings;  // every target row, pseudo-labeled or not
};

// When `reverse_adversarial` is false the extractor receives the plain
// discriminator gradient, which makes `gradient` the true derivative of
// `total` (used for gradient checking). Training always reverses it.
ObjectiveEvaluation evaluate_objective(const ModelParams& student,
                                       const PrototypeSet& source_prototypes,
                                       const PrototypeSet& target_prototypes,
                                       const LabeledBatch& source,
                                       std::span<const FeatureVector> target,
                                       const PseudoLabels& pseudo, const TrainerConfig& config,
                                       bool reverse_adversarial = true);

// Supervised source-only training from `init` for config.warmup_steps.
ModelParams warm_up(ModelParams init, const LabeledBatch& source, const TrainerConfig& config);

// Initializes both prototype sets from the warmed-up model's own predictions
// (score = top probability, threshold config.init_threshold) and copies the
// model into student and teacher.
AdaptationState begin_adaptation(const ModelParams& warmed, TrainingView data,
                                 const TrainerConfig& config);

// One adaptation step on a sampled source batch and target batch.
StepRecord train_step(AdaptationState& state, const LabeledBatch& source_batch,
                      std::span<const FeatureVector> target_batch, const TrainerConfig& config);

// config.steps train_steps on batches sampled from `data`.
std::vector<StepRecord> train_run(AdaptationState& state, TrainingView data,
                                  const TrainerConfig& config);

// Inference uses only the extractor and the linear classifier.
ClassId predict(const ModelParams& params, std::span<const double> x_raw);

struct Checkpoint {
  ModelParams student;
  ModelParams teacher;
  PrototypeSet source_prototypes;
  PrototypeSet target_prototypes;
  std::uint64_t step = 0;
  std::string config_hash;

  std::string to_json() const;
  static Checkpoint from_json(const std::string& text);
};

Checkpoint make_checkpoint(const AdaptationState& state, const std::string& config_hash);

// "step,L_sup,L_unsup,L_dis,L_pce,L_mut,total,pseudo_count"
std::string step_record_csv_header();
std::string to_csv_row(const StepRecord& record);

}  // namespace pacf
