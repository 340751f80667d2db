#pragma once

// Per-domain class prototypes: unit-norm EMA buffers, one per class,
// initialized from confidently scored features and refreshed from each
// mini-batch with a cosine-derived blending weight.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pacf/mathcore.hpp"

namespace pacf {

enum class Domain { Source, Target };

std::string_view to_string(Domain domain);
Domain domain_from_string(std::string_view text);

class PrototypeSet {
 public:
  PrototypeSet(Domain domain, std::size_t class_count, std::size_t dim);

  Domain domain() const { return domain_; }
  std::size_t class_count() const { return prototypes_.size(); }
  std::size_t dim() const { return dim_; }

  bool is_initialized(ClassId k) const;
  bool fully_initialized() const;
  // Throws UninitializedPrototype for a class that has no prototype yet.
  const FeatureVector& at(ClassId k) const;
  // Stores l2_normalize(v) as the prototype of class k.
  void assign(ClassId k, std::span<const double> v);
  // Stores an already unit-norm vector verbatim (checked to 1e-9).
  void assign_unit(ClassId k, FeatureVector unit);

  // {"domain", "dim", "class_count", "prototypes": {"<k>": [...]}};
  // uninitialized classes are omitted from "prototypes".
  std::string to_json() const;
  static PrototypeSet from_json(const std::string& text);

  friend bool operator==(const PrototypeSet&, const PrototypeSet&) = default;

 private:
  void require_class(ClassId k) const;

  Domain domain_;
  std::size_t dim_;
  std::vector<std::optional<FeatureVector>> prototypes_;
};

struct ScoredFeatureBatch {
  std::vector<FeatureVector> features;
  std::vector<ClassId> labels;
  std::vector<double> scores;
};

// Per class k: mean of the features labeled k with score >= threshold,
// normalized. Classes without a qualifying feature stay uninitialized.
PrototypeSet initialize_prototypes(const ScoredFeatureBatch& batch, double threshold,
                                   Domain domain, std::size_t class_count);

// Arithmetic per-class mean of the batch, not normalized.
std::map<ClassId, FeatureVector> minibatch_prototypes(std::span<const FeatureVector> features,
                                                      std::span<const ClassId> labels);

// alpha = (cos(prev, mean) + 1) / 2, in [0, 1].
double blend_weight(std::span<const double> previous, std::span<const double> minibatch_mean);

// normalize((1 - alpha) * prev + alpha * mean).
FeatureVector update_prototype(std::span<const double> previous,
                               std::span<const double> minibatch_mean);

// One prototype-update pass over a mini-batch. Classes absent from the batch
// are left untouched; uninitialized classes adopt the normalized batch mean.
PrototypeSet update_all(PrototypeSet set, std::span<const FeatureVector> features,
                        std::span<const ClassId> labels);

}  // namespace pacf
