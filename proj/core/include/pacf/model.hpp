#pragma once

// The student/teacher network: an affine feature extractor standing in for
// backbone + RoI head, a linear classifier on top, and a logistic domain
// discriminator on the embedding.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pacf/mathcore.hpp"

namespace pacf {

// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct ModelParams {
  Matrix extractor;                // feature_dim x input_dim
  FeatureVector extractor_bias;    // feature_dim
  Matrix classifier;               // logit_count x feature_dim
  FeatureVector classifier_bias;   // logit_count
  FeatureVector discriminator;     // feature_dim
  double discriminator_bias = 0.0;

  // All-zero parameters. A single class gets one logit; its probability pair
  // is the softmax of [logit, 0].
  static ModelParams zeros(std::size_t input_dim, std::size_t feature_dim, std::size_t class_count);
  // Gaussian init with std 1/sqrt(fan_in) for the matrices, zero biases.
  static ModelParams random(std::size_t input_dim, std::size_t feature_dim,
                            std::size_t class_count, std::uint64_t seed);

  std::size_t input_dim() const { return extractor.cols; }
  std::size_t feature_dim() const { return extractor.rows; }
  std::size_t logit_count() const { return classifier.rows; }
  // Number of classes the model distinguishes (1 for the sigmoid variant).
  std::size_t class_count() const { return classifier.rows; }
  std::size_t parameter_count() const;

  // Throws DimensionMismatch on inconsistent shapes, InvalidArgument on
  // non-finite entries.
  void validate() const;

  // Flat views in a fixed order: extractor, extractor_bias, classifier,
  // classifier_bias, discriminator, discriminator_bias.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);

  std::string to_json() const;
  static ModelParams from_json(const std::string& text);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct ForwardResult {
  FeatureVector embedding;
  std::vector<double> logits;  // logit_count entries
  ProbabilityVector probs;     // max(class_count, 2) entries
};

// embedding = extractor * x + bias; probs = softmax(classifier * embedding +
// bias) (padded with a zero logit for a single class).
ForwardResult forward(const ModelParams& params, std::span<const double> x_raw);

// Maps dL/dprobs-logit space (length of probs) onto the real logits.
std::vector<double> trim_logit_gradient(std::span<const double> grad_probs_logits,
                                        std::size_t logit_count);

// Gradient accumulator with the same shape as the parameters.
class ParamGradient {
 public:
  explicit ParamGradient(const ModelParams& like);

  // Backpropagates one instance's dL/dlogits and direct dL/dembedding
  // through the classifier and the extractor. The extractor sees
  // grad_embedding + classifier^T * grad_logits; an empty grad_embedding
  // counts as zero.
  void accumulate(const ModelParams& params, std::span<const double> x_raw,
                  std::span<const double> embedding, std::span<const double> grad_logits,
                  std::span<const double> grad_embedding);
  void accumulate_discriminator(std::span<const double> grad_params, double scale);

  const ModelParams& value() const { return grad_; }

 private:
  ModelParams grad_;
};

// params -= learning_rate * gradient, entry by entry.
void gradient_descent_step(ModelParams& params, const ModelParams& gradient, double learning_rate);

// Index of the largest probability; ties go to the lowest index.
ClassId argmax(std::span<const double> probs);

}  // namespace pacf
