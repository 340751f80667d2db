#pragma once

#include <span>
#include <vector>

#include "pacf/mathcore.hpp"

namespace pacf {

// Features with class labels (ground truth or pseudo) and optional
// confidence scores. `scores` is either empty or the same length as
// `features`.
struct LabeledBatch {
  std::vector<FeatureVector> features;
  std::vector<ClassId> labels;
  std::vector<double> scores;

  std::size_t size() const { return features.size(); }
  bool empty() const { return features.empty(); }
  // Throws DimensionMismatch on ragged rows or misaligned columns.
  void validate() const;
};

// What the trainer is allowed to see: labeled source data and unlabeled
// target features. Hidden target labels are not reachable from here.
struct TrainingView {
  const LabeledBatch& source;
  std::span<const FeatureVector> target;
};

// Throws DimensionMismatch unless all rows share one dimension; returns it
// (0 for an empty sequence).
std::size_t common_dimension(std::span<const FeatureVector> rows);

}  // namespace pacf
