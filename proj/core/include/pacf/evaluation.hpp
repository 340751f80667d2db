#pragma once

// Computes a MetricsReport for a trained model on a dataset, plus the raw
// material behind the plots (rank pairs and a 2-D projection).

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pacf/adapt.hpp"
#include "pacf/data.hpp"
#include "pacf/metrics.hpp"
#include "pacf/model.hpp"
#include "pacf/prototypes.hpp"

namespace pacf {

// Worker count for parallel evaluation: `requested` when non-zero, else the
// PACF_THREADS environment variable, else the hardware concurrency.
std::size_t resolve_thread_count(std::size_t requested = 0);

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index runs
// exactly once, so results written by index are independent of scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

struct EvaluationInputs {
  const ModelParams& student;
  const ModelParams& teacher;
  const PrototypeSet& target_prototypes;
  const LabeledBatch& source;
  std::span<const FeatureVector> target;
  std::span<const ClassId> hidden_target_labels;
  double pseudo_threshold = 0.8;
};

// One target instance: the student's top linear probability and the cosine
// between its embedding and the target prototype of the predicted class.
struct RankPair {
  std::size_t index = 0;
  ClassId predicted = 0;
  double linear_score = 0.0;
  double prototype_cosine = 0.0;
};

struct EvaluationResult {
  MetricsReport report;
  std::vector<RankPair> rank_pairs;
  std::vector<Point2> projection;            // target embeddings
  std::vector<ClassId> projection_labels;    // hidden labels of those rows
};

// Variance and mean shift use student embeddings with ground-truth source
// labels and hidden target labels. Pseudo labels come from the teacher on the
// whole clean target set. Instances whose predicted class has no target
// prototype are left out of the rank pairs.
EvaluationResult evaluate(const EvaluationInputs& inputs, std::size_t threads = 0);

std::string rank_pairs_csv(std::span<const RankPair> pairs);
std::string projection_csv(std::span<const Point2> points, std::span<const ClassId> labels);

}  // namespace pacf
