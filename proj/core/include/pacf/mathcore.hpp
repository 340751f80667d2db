#pragma once

// Vector geometry and probability primitives shared by the rest of the
// library. Everything here is a pure function of its arguments and works in
// 64-bit floating point.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pacf {

using FeatureVector = std::vector<double>;
// Entries in [0, 1] summing to one. The single-class sigmoid variant is the
// two-entry vector [p, 1 - p].
using ProbabilityVector = std::vector<double>;
using ClassId = std::size_t;

// Norms at or below this are treated as zero vectors.
inline constexpr double kNormEpsilon = 1e-12;
// Probabilities are clamped to [kProbabilityFloor, 1] before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Throws ZeroVector when ||v|| <= kNormEpsilon.
FeatureVector l2_normalize(std::span<const double> v);

// Throws ZeroVector or DimensionMismatch. Result is clamped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Gradient of cosine_similarity(x, other) with respect to x.
FeatureVector cosine_similarity_gradient(std::span<const double> x,
                                         std::span<const double> other);

// softmax(scores / tau), computed with max subtraction.
ProbabilityVector temperature_softmax(std::span<const double> scores, double tau);

// log softmax(scores / tau), computed through log-sum-exp. Used by losses
// that start from logits so that no clamping is needed.
std::vector<double> temperature_log_softmax(std::span<const double> scores, double tau);

// [sigmoid(score / tau), 1 - sigmoid(score / tau)], stable for large |score|.
ProbabilityVector sigmoid_probability(double score, double tau);

// Maps a gradient with respect to softmax probabilities onto the logits that
// produced them: dL/dz_j = p_j * (g_j - sum_i p_i g_i). No temperature.
std::vector<double> softmax_backward(std::span<const double> probs,
                                     std::span<const double> grad_probs);

// KL(q || p) in nats. Both arguments are clamped inside the logarithm.
double kl_divergence(std::span<const double> q, std::span<const double> p);

// JS(p, q) = KL(p || m) / 2 + KL(q || m) / 2 with m = (p + q) / 2, in nats.
// Evaluation order is symmetric so js_divergence(p, q) == js_divergence(q, p)
// bit for bit.
double js_divergence(std::span<const double> p, std::span<const double> q);

using ScalarField = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
FeatureVector finite_difference_gradient(const ScalarField& f,
                                         std::span<const double> x, double h);

// Throws DimensionMismatch naming `what` when the sizes differ.
void require_same_size(std::size_t a, std::size_t b, const char* what);

}  // namespace pacf
