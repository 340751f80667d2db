#pragma once

// Distribution diagnostics for embeddings: intra-class spread, class-mean
// shift between domains, proxy A-distance, rank agreement between two
// scorers, pseudo-label precision and a 2-D PCA projection.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pacf/mathcore.hpp"

namespace pacf {

using ClassMetric = std::map<ClassId, double>;

// Trace of the unbiased sample covariance of each class (sum over dimensions
// of per-dimension variances). Classes with fewer than two samples are left
// out.
ClassMetric intra_class_variance(std::span<const FeatureVector> features,
                                 std::span<const ClassId> labels);

// Euclidean distance between each class's mean in the two domains, for the
// classes present in both.
ClassMetric mean_shift(std::span<const FeatureVector> source_features,
                       std::span<const ClassId> source_labels,
                       std::span<const FeatureVector> target_features,
                       std::span<const ClassId> target_labels);

// Unweighted mean over classes; NaN for an empty map.
double class_average(const ClassMetric& metric);

struct ProxyADistanceOptions {
  std::uint64_t seed = 0x5eedULL;  // split shuffle
  std::size_t epochs = 400;        // full-batch gradient descent
  double learning_rate = 0.5;
  double l2 = 1e-3;
};

// 2 (1 - error), error = held-out error of a logistic domain classifier
// trained on half of each domain. Throws InsufficientSamples below 20 samples
// per domain.
double proxy_a_distance(std::span<const FeatureVector> source,
                        std::span<const FeatureVector> target,
                        const ProxyADistanceOptions& options = {});
double proxy_a_distance_from_error(double error);

// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of average ranks. Returns 0 when either input is
// constant. Throws DimensionMismatch or InsufficientSamples (< 2 values).
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

// Kendall tau-b in O(n log n) (Knight's merge-sort count). Returns 0 when
// either input is constant.
double kendall_tau(std::span<const double> xs, std::span<const double> ys);

struct ClassRatio {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  friend bool operator==(const ClassRatio&, const ClassRatio&) = default;
};

// For each pseudo class k: how many instances pseudo-labeled k truly are k.
std::map<ClassId, ClassRatio> tp_ratio(std::span<const std::size_t> pseudo_indices,
                                       std::span<const ClassId> pseudo_labels,
                                       std::span<const ClassId> hidden_labels);
double tp_average(const std::map<ClassId, ClassRatio>& ratios);

using Point2 = std::array<double, 2>;

// Coordinates on the top two principal components of the centered data. Each
// component's largest-magnitude loading is made positive. Throws
// InsufficientSamples (< 3 rows or dim < 2).
std::vector<Point2> pca_project_2d(std::span<const FeatureVector> features);

struct MetricsReport {
  ClassMetric source_variance;
  ClassMetric target_variance;
  ClassMetric mean_shift;
  double proxy_a_distance = 0.0;
  double spearman_rho = 0.0;
  double kendall_tau = 0.0;
  std::map<ClassId, ClassRatio> tp_ratio;
  std::size_t pseudo_count = 0;

  double avg_source_variance() const { return class_average(source_variance); }
  double avg_target_variance() const { return class_average(target_variance); }
  double avg_mean_shift() const { return class_average(mean_shift); }
  double avg_tp_ratio() const { return tp_average(tp_ratio); }

  std::string to_json() const;
  static MetricsReport from_json(const std::string& text);

  // Table layouts: one row per class plus an "avg." row.
  std::string variance_csv() const;   // class,source,target
  std::string mean_shift_csv() const; // class,mean_shift
  std::string tp_ratio_csv() const;   // class,correct,total,tp_ratio
  std::string summary_csv() const;    // metric,value
};

}  // namespace pacf
