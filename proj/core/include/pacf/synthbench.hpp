#pragma once

// Synthetic domain-shift benchmark: isotropic Gaussian classes on the source,
// the same classes shifted and widened on the target. Also the CSV feature
// dump format used to move data in and out of the tools.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pacf/data.hpp"

namespace pacf {

struct DomainShiftSpec {
  std::size_t class_count = 8;
  std::size_t dim = 32;
  // Explicit class means; when empty, class k's mean is class_separation
  // times a random unit direction.
  std::vector<FeatureVector> source_means;
  double class_separation = 5.0;
  double source_std = 1.0;
  // Explicit per-class target shifts; when empty, every class is shifted by
  // shift_magnitude along axis 0.
  std::vector<FeatureVector> target_shifts;
  double shift_magnitude = 1.5;
  double target_std_multiplier = 1.8;
  std::size_t samples_per_class = 200;
  std::uint64_t seed = 0;

  // Throws InvalidSpec.
  void validate() const;
};

// Source data plus unlabeled target data. The target's true labels are kept
// for evaluation and are not part of the TrainingView handed to the trainer.
class DatasetPair {
 public:
  DatasetPair(LabeledBatch source, std::vector<FeatureVector> target,
              std::vector<ClassId> hidden_target_labels);

  TrainingView training_view() const { return {source_, target_}; }
  const LabeledBatch& source() const { return source_; }
  const std::vector<FeatureVector>& target_features() const { return target_; }
  // Evaluation only.
  const std::vector<ClassId>& hidden_target_labels() const { return hidden_; }

 private:
  LabeledBatch source_;
  std::vector<FeatureVector> target_;
  std::vector<ClassId> hidden_;
};

// Class means and shifts actually used for a spec (explicit or drawn).
struct ShiftGeometry {
  std::vector<FeatureVector> source_means;
  std::vector<FeatureVector> target_shifts;
};

ShiftGeometry resolve_geometry(const DomainShiftSpec& spec);

// Draw order from Rng(seed): means (if drawn), source samples class by
// class, then target samples class by class.
DatasetPair generate(const DomainShiftSpec& spec);

// One CSV dump: header "label,score,f0,...,f{d-1}"; label -1 marks an
// unlabeled row, score -1 an absent score.
struct FeatureDump {
  std::vector<FeatureVector> features;
  std::vector<long long> labels;
  std::vector<double> scores;

  std::size_t size() const { return features.size(); }
};

FeatureDump to_dump(const LabeledBatch& batch);
FeatureDump unlabeled_dump(std::span<const FeatureVector> features);
// Throws ParseError if any row is unlabeled.
LabeledBatch to_labeled_batch(const FeatureDump& dump);

std::string format_dump(const FeatureDump& dump);
// Throws IoError when the file cannot be written.
void save_dump(const FeatureDump& dump, const std::filesystem::path& path);
// Throws IoError, EmptyBatch for a file without data rows, and ParseError
// with the 1-based line number for malformed content.
FeatureDump load_dump(const std::filesystem::path& path);

}  // namespace pacf
