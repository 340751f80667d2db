#pragma once

// Objective terms with analytic gradients. Prototype sets enter every loss as
// read-only buffers: no gradient is ever produced for a prototype.

#include <span>
#include <string_view>
#include <vector>

#include "pacf/mathcore.hpp"
#include "pacf/prototypes.hpp"

namespace pacf {

// A loss value in nats with its gradients. `grad_inputs` holds one gradient
// per differentiable input, in argument order (which inputs, and in what
// space, is documented per function). `grad_params` is the flat gradient of
// any trainable parameters the loss owns.
struct LossValue {
  double value = 0.0;
  std::vector<FeatureVector> grad_inputs;
  std::vector<double> grad_params;
};

struct LossWeights {
  double unsup = 1.0;  // pseudo-label classification term
  double dis = 0.1;    // domain-adversarial term
  double pce = 1.0;    // prototype cross entropy
  double mut = 1.0;    // mutual regularization

  // Throws InvalidConfig unless every weight is finite and non-negative.
  void validate() const;
};

enum class RegularizerKind { L2, KL, JSD };

std::string_view to_string(RegularizerKind kind);
RegularizerKind regularizer_from_string(std::string_view text);

// Cosine scores against each prototype, turned into a distribution: softmax
// of cos / tau for C > 1, sigmoid_probability for C = 1 (two entries).
// Throws UninitializedPrototype, ZeroVector or InvalidTemperature.
ProbabilityVector prototype_posterior(std::span<const double> x, const PrototypeSet& set,
                                      double tau);

// Vector-Jacobian product of prototype_posterior: given dL/dprobs, returns
// dL/dx. `probs` must be the posterior already computed for `x`.
FeatureVector prototype_posterior_backward(std::span<const double> x, const PrototypeSet& set,
                                           double tau, std::span<const double> probs,
                                           std::span<const double> grad_probs);

// -log p_src(label | x) - log p_tgt(label | x). grad_inputs = {dL/dx}.
LossValue prototype_cross_entropy(std::span<const double> x, ClassId label,
                                  const PrototypeSet& source, const PrototypeSet& target,
                                  double tau);

// JS(p_lin || p_src) + JS(p_lin || p_tgt).
// grad_inputs = {dL/dp_lin, dL/dp_src, dL/dp_tgt} in probability space; use
// softmax_backward / prototype_posterior_backward to reach the logits.
LossValue mutual_regularization(std::span<const double> p_lin, std::span<const double> p_src,
                                std::span<const double> p_tgt);

// Ablation regularizers between the linear and the two prototype posteriors.
// L2: squared distances, KL: KL(p_lin || p_*), JSD: mutual_regularization.
// Gradients laid out as for mutual_regularization.
LossValue regularizer_variant(std::span<const double> p_lin, std::span<const double> p_src,
                              std::span<const double> p_tgt, RegularizerKind kind);

// -log p_lin[label]. grad_inputs = {dL/dlogits} for p_lin = softmax(logits),
// i.e. p_lin - onehot(label).
LossValue classification_loss(std::span<const double> p_lin, ClassId label);

enum class DomainLabel { Source, Target };
enum class GradientFlow { Reversed, Forward };

// Binary cross-entropy of a logistic discriminator sigmoid(w.x + b) that
// predicts 1 for source and 0 for target.
//   grad_inputs = {dL/dx}, sign-flipped when flow == Reversed;
//   grad_params = {dL/dw..., dL/db}, never reversed.
LossValue domain_adversarial_loss(std::span<const double> x, DomainLabel domain,
                                  std::span<const double> disc_weights, double disc_bias,
                                  GradientFlow flow = GradientFlow::Reversed);

struct LossComponents {
  LossValue sup;
  LossValue unsup;
  LossValue dis;
  LossValue pce;
  LossValue mut;
};

// sup + unsup*w.unsup + dis*w.dis + pce*w.pce + mut*w.mut, for both the value
// and every gradient. Components with empty gradients contribute to the value
// only; non-empty gradients must agree in shape (DimensionMismatch).
LossValue total_loss(const LossComponents& components, const LossWeights& weights);

}  // namespace pacf
