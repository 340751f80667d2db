#include "pacf/mathcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "pacf/error.hpp"

namespace pacf {

namespace {

void require_temperature(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidTemperature,
                "temperature must be positive and finite, got " + std::to_string(tau));
  }
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityFloor, 1.0); }

}  // namespace

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": " + std::to_string(a) +
                                                  " vs " + std::to_string(b));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

FeatureVector l2_normalize(std::span<const double> v) {
  const double norm = l2_norm(v);
  if (!(norm > kNormEpsilon)) {
    throw Error(ErrorCode::ZeroVector, "cannot normalize a vector with norm " + std::to_string(norm));
  }
  FeatureVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "cosine_similarity");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > kNormEpsilon) || !(nb > kNormEpsilon)) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  }
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

FeatureVector cosine_similarity_gradient(std::span<const double> x,
                                         std::span<const double> other) {
  require_same_size(x.size(), other.size(), "cosine_similarity_gradient");
  const double nx = l2_norm(x);
  const double no = l2_norm(other);
  if (!(nx > kNormEpsilon) || !(no > kNormEpsilon)) {
    throw Error(ErrorCode::ZeroVector, "cosine gradient at a zero vector");
  }
  const double cos = dot(x, other) / (nx * no);
  FeatureVector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad[i] = other[i] / (nx * no) - cos * x[i] / (nx * nx);
  }
  return grad;
}

ProbabilityVector temperature_softmax(std::span<const double> scores, double tau) {
  require_temperature(tau);
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "softmax of an empty score vector");
  const double max_score = *std::max_element(scores.begin(), scores.end());
  ProbabilityVector probs(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp((scores[i] - max_score) / tau);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

std::vector<double> temperature_log_softmax(std::span<const double> scores, double tau) {
  require_temperature(tau);
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "softmax of an empty score vector");
  const double max_score = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double s : scores) total += std::exp((s - max_score) / tau);
  const double log_total = std::log(total);
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = (scores[i] - max_score) / tau - log_total;
  }
  return out;
}

ProbabilityVector sigmoid_probability(double score, double tau) {
  require_temperature(tau);
  const double z = score / tau;
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return {p, 1.0 - p};
}

std::vector<double> softmax_backward(std::span<const double> probs,
                                     std::span<const double> grad_probs) {
  require_same_size(probs.size(), grad_probs.size(), "softmax_backward");
  const double weighted = dot(probs, grad_probs);
  std::vector<double> grad(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) grad[j] = probs[j] * (grad_probs[j] - weighted);
  return grad;
}

double kl_divergence(std::span<const double> q, std::span<const double> p) {
  require_same_size(q.size(), p.size(), "kl_divergence");
  double sum = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    sum += q[i] * (std::log(clamp_probability(q[i])) - std::log(clamp_probability(p[i])));
  }
  // Gibbs' inequality; anything below zero is rounding.
  return std::max(sum, 0.0);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
  require_same_size(p.size(), q.size(), "js_divergence");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = clamp_probability(0.5 * (p[i] + q[i]));
    const double lp = p[i] > 0.0 ? 0.5 * p[i] * std::log(clamp_probability(p[i]) / m) : 0.0;
    const double lq = q[i] > 0.0 ? 0.5 * q[i] * std::log(clamp_probability(q[i]) / m) : 0.0;
    sum += lp + lq;
  }
  return std::clamp(sum, 0.0, std::numbers::ln2);
}

FeatureVector finite_difference_gradient(const ScalarField& f, std::span<const double> x,
                                         double h) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite difference step must be positive");
  FeatureVector probe(x.begin(), x.end());
  FeatureVector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double forward = f(probe);
    probe[i] = x[i] - h;
    const double backward = f(probe);
    probe[i] = x[i];
    grad[i] = (forward - backward) / (2.0 * h);
  }
  return grad;
}

}  // namespace pacf
