#include "pacf/prototypes.hpp"

#include <cmath>
#include <json.hpp>
#include <string>

#include "pacf/data.hpp"
#include "pacf/error.hpp"

namespace pacf {

namespace {

using nlohmann::json;

void require_label(ClassId label, std::size_t class_count) {
  if (label >= class_count) {
    throw Error(ErrorCode::InvalidArgument, "class id " + std::to_string(label) +
                                                " out of range for " +
                                                std::to_string(class_count) + " classes");
  }
}

}  // namespace

std::string_view to_string(Domain domain) {
  return domain == Domain::Source ? "source" : "target";
}

Domain domain_from_string(std::string_view text) {
  if (text == "source") return Domain::Source;
  if (text == "target") return Domain::Target;
  throw Error(ErrorCode::ParseError, "unknown domain '" + std::string(text) + "'");
}

PrototypeSet::PrototypeSet(Domain domain, std::size_t class_count, std::size_t dim)
    : domain_(domain), dim_(dim), prototypes_(class_count) {
  if (class_count == 0) throw Error(ErrorCode::InvalidArgument, "prototype set needs at least one class");
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "prototype dimension must be positive");
}

void PrototypeSet::require_class(ClassId k) const { require_label(k, prototypes_.size()); }

bool PrototypeSet::is_initialized(ClassId k) const {
  require_class(k);
  return prototypes_[k].has_value();
}

bool PrototypeSet::fully_initialized() const {
  for (const auto& p : prototypes_) {
    if (!p) return false;
  }
  return true;
}

const FeatureVector& PrototypeSet::at(ClassId k) const {
  require_class(k);
  if (!prototypes_[k]) {
    throw Error(ErrorCode::UninitializedPrototype, std::string(to_string(domain_)) +
                                                       " prototype for class " +
                                                       std::to_string(k) + " is uninitialized");
  }
  return *prototypes_[k];
}

void PrototypeSet::assign(ClassId k, std::span<const double> v) {
  require_class(k);
  require_same_size(v.size(), dim_, "prototype dimension");
  prototypes_[k] = l2_normalize(v);
}

void PrototypeSet::assign_unit(ClassId k, FeatureVector unit) {
  require_class(k);
  require_same_size(unit.size(), dim_, "prototype dimension");
  if (std::abs(l2_norm(unit) - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument,
                "prototype for class " + std::to_string(k) + " is not unit norm");
  }
  prototypes_[k] = std::move(unit);
}

std::string PrototypeSet::to_json() const {
  json protos = json::object();
  for (std::size_t k = 0; k < prototypes_.size(); ++k) {
    if (prototypes_[k]) protos[std::to_string(k)] = *prototypes_[k];
  }
  json doc = {{"domain", to_string(domain_)},
              {"dim", dim_},
              {"class_count", prototypes_.size()},
              {"prototypes", protos}};
  return doc.dump();
}

PrototypeSet PrototypeSet::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    PrototypeSet set(domain_from_string(doc.at("domain").get<std::string>()),
                     doc.at("class_count").get<std::size_t>(), doc.at("dim").get<std::size_t>());
    for (const auto& [key, value] : doc.at("prototypes").items()) {
      const ClassId k = std::stoul(key);
      set.require_class(k);
      // Stored verbatim: re-normalizing would perturb the last bits.
      set.assign_unit(k, value.get<FeatureVector>());
    }
    return set;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("prototype set: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, "prototype set: " + e.detail());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::ParseError, std::string("prototype set: ") + e.what());
  }
}

PrototypeSet initialize_prototypes(const ScoredFeatureBatch& batch, double threshold,
                                   Domain domain, std::size_t class_count) {
  if (batch.features.empty()) throw Error(ErrorCode::EmptyBatch, "prototype initialization batch is empty");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "confidence threshold must lie in (0, 1]");
  }
  require_same_size(batch.features.size(), batch.labels.size(), "initialization labels");
  require_same_size(batch.features.size(), batch.scores.size(), "initialization scores");
  const std::size_t dim = common_dimension(batch.features);

  std::vector<FeatureVector> sums(class_count, FeatureVector(dim, 0.0));
  std::vector<std::size_t> counts(class_count, 0);
  for (std::size_t i = 0; i < batch.features.size(); ++i) {
    const ClassId k = batch.labels[i];
    require_label(k, class_count);
    if (batch.scores[i] < threshold) continue;
    for (std::size_t j = 0; j < dim; ++j) sums[k][j] += batch.features[i][j];
    ++counts[k];
  }

  PrototypeSet set(domain, class_count, dim);
  for (ClassId k = 0; k < class_count; ++k) {
    if (counts[k] == 0) continue;
    for (double& v : sums[k]) v /= static_cast<double>(counts[k]);
    set.assign(k, sums[k]);
  }
  return set;
}

std::map<ClassId, FeatureVector> minibatch_prototypes(std::span<const FeatureVector> features,
                                                      std::span<const ClassId> labels) {
  if (features.empty()) throw Error(ErrorCode::EmptyBatch, "mini-batch is empty");
  require_same_size(features.size(), labels.size(), "mini-batch labels");
  const std::size_t dim = common_dimension(features);

  std::map<ClassId, FeatureVector> sums;
  std::map<ClassId, std::size_t> counts;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto [it, inserted] = sums.try_emplace(labels[i], dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) it->second[j] += features[i][j];
    ++counts[labels[i]];
  }
  for (auto& [k, sum] : sums) {
    const double n = static_cast<double>(counts[k]);
    for (double& v : sum) v /= n;
  }
  return sums;
}

double blend_weight(std::span<const double> previous, std::span<const double> minibatch_mean) {
  return (cosine_similarity(previous, minibatch_mean) + 1.0) / 2.0;
}

FeatureVector update_prototype(std::span<const double> previous,
                               std::span<const double> minibatch_mean) {
  const double alpha = blend_weight(previous, minibatch_mean);
  FeatureVector blended(previous.size());
  for (std::size_t j = 0; j < previous.size(); ++j) {
    blended[j] = (1.0 - alpha) * previous[j] + alpha * minibatch_mean[j];
  }
  return l2_normalize(blended);
}

PrototypeSet update_all(PrototypeSet set, std::span<const FeatureVector> features,
                        std::span<const ClassId> labels) {
  if (features.empty()) return set;
  for (ClassId k : labels) require_label(k, set.class_count());
  for (const auto& [k, mean] : minibatch_prototypes(features, labels)) {
    if (set.is_initialized(k)) {
      set.assign_unit(k, update_prototype(set.at(k), mean));
    } else {
      set.assign(k, mean);
    }
  }
  return set;
}

}  // namespace pacf
