#include "pacf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pacf/error.hpp"

namespace pacf {

namespace {

double clamped_log(double p) { return std::log(std::clamp(p, kProbabilityFloor, 1.0)); }

// d/dp of log(clamp(p)).
double clamped_log_derivative(double p) {
  return (p > kProbabilityFloor && p <= 1.0) ? 1.0 / p : 0.0;
}

// Raw cosine scores against every prototype; for a single class the scores
// are padded with a constant zero so that softmax([s, 0]) is the sigmoid pair.
std::vector<double> prototype_scores(std::span<const double> x, const PrototypeSet& set) {
  std::vector<double> scores;
  scores.reserve(std::max<std::size_t>(set.class_count(), 2));
  for (ClassId k = 0; k < set.class_count(); ++k) scores.push_back(cosine_similarity(set.at(k), x));
  if (set.class_count() == 1) scores.push_back(0.0);
  return scores;
}

// dL/dx given dL/dscore_k, through each cosine.
FeatureVector scores_backward(std::span<const double> x, const PrototypeSet& set,
                              std::span<const double> grad_scores) {
  FeatureVector grad(x.size(), 0.0);
  for (ClassId k = 0; k < set.class_count(); ++k) {
    if (grad_scores[k] == 0.0) continue;
    const FeatureVector dcos = cosine_similarity_gradient(x, set.at(k));
    for (std::size_t j = 0; j < x.size(); ++j) grad[j] += grad_scores[k] * dcos[j];
  }
  return grad;
}

void check_triple(std::span<const double> a, std::span<const double> b, std::span<const double> c) {
  require_same_size(a.size(), b.size(), "regularizer p_lin vs p_src");
  require_same_size(a.size(), c.size(), "regularizer p_lin vs p_tgt");
}

// JS(p || q) and its partial derivatives. For m = (p + q) / 2 the cross terms
// cancel, leaving dJS/dp_i = log(p_i / m_i) / 2.
double js_with_gradient(std::span<const double> p, std::span<const double> q,
                        std::vector<double>& grad_p, std::vector<double>& grad_q) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    grad_p[i] += 0.5 * (clamped_log(p[i]) - clamped_log(m));
    grad_q[i] += 0.5 * (clamped_log(q[i]) - clamped_log(m));
  }
  return js_divergence(p, q);
}

void add_scaled(std::vector<double>& into, std::span<const double> from, double scale) {
  if (into.empty()) into.assign(from.size(), 0.0);
  require_same_size(into.size(), from.size(), "gradient shape");
  for (std::size_t i = 0; i < from.size(); ++i) into[i] += scale * from[i];
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {unsup, dis, pce, mut}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw Error(ErrorCode::InvalidConfig, "loss weights must be finite and non-negative");
    }
  }
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::L2: return "l2";
    case RegularizerKind::KL: return "kl";
    case RegularizerKind::JSD: return "jsd";
  }
  return "jsd";
}

RegularizerKind regularizer_from_string(std::string_view text) {
  if (text == "l2") return RegularizerKind::L2;
  if (text == "kl") return RegularizerKind::KL;
  if (text == "jsd") return RegularizerKind::JSD;
  throw Error(ErrorCode::InvalidConfig, "unknown regularizer '" + std::string(text) + "'");
}

ProbabilityVector prototype_posterior(std::span<const double> x, const PrototypeSet& set,
                                      double tau) {
  require_same_size(x.size(), set.dim(), "feature vs prototype dimension");
  if (set.class_count() == 1) return sigmoid_probability(cosine_similarity(set.at(0), x), tau);
  const std::vector<double> scores = prototype_scores(x, set);
  return temperature_softmax(scores, tau);
}

FeatureVector prototype_posterior_backward(std::span<const double> x, const PrototypeSet& set,
                                           double tau, std::span<const double> probs,
                                           std::span<const double> grad_probs) {
  std::vector<double> grad_scores = softmax_backward(probs, grad_probs);
  for (double& g : grad_scores) g /= tau;
  return scores_backward(x, set, grad_scores);
}

LossValue prototype_cross_entropy(std::span<const double> x, ClassId label,
                                  const PrototypeSet& source, const PrototypeSet& target,
                                  double tau) {
  require_same_size(source.class_count(), target.class_count(), "prototype class counts");
  if (label >= source.class_count()) {
    throw Error(ErrorCode::InvalidArgument, "pseudo label " + std::to_string(label) + " out of range");
  }
  LossValue out;
  FeatureVector grad(x.size(), 0.0);
  for (const PrototypeSet* set : {&source, &target}) {
    require_same_size(x.size(), set->dim(), "feature vs prototype dimension");
    const std::vector<double> scores = prototype_scores(x, *set);
    const std::vector<double> log_probs = temperature_log_softmax(scores, tau);
    out.value -= log_probs[label];
    std::vector<double> grad_scores(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) {
      grad_scores[k] = (std::exp(log_probs[k]) - (k == label ? 1.0 : 0.0)) / tau;
    }
    const FeatureVector g = scores_backward(x, *set, grad_scores);
    for (std::size_t j = 0; j < x.size(); ++j) grad[j] += g[j];
  }
  out.grad_inputs.push_back(std::move(grad));
  return out;
}

LossValue mutual_regularization(std::span<const double> p_lin, std::span<const double> p_src,
                                std::span<const double> p_tgt) {
  check_triple(p_lin, p_src, p_tgt);
  const std::size_t n = p_lin.size();
  std::vector<double> g_lin(n, 0.0), g_src(n, 0.0), g_tgt(n, 0.0);
  LossValue out;
  out.value = js_with_gradient(p_lin, p_src, g_lin, g_src) + js_with_gradient(p_lin, p_tgt, g_lin, g_tgt);
  out.grad_inputs = {std::move(g_lin), std::move(g_src), std::move(g_tgt)};
  return out;
}

LossValue regularizer_variant(std::span<const double> p_lin, std::span<const double> p_src,
                              std::span<const double> p_tgt, RegularizerKind kind) {
  check_triple(p_lin, p_src, p_tgt);
  if (kind == RegularizerKind::JSD) return mutual_regularization(p_lin, p_src, p_tgt);

  const std::size_t n = p_lin.size();
  std::vector<double> g_lin(n, 0.0), g_src(n, 0.0), g_tgt(n, 0.0);
  LossValue out;
  if (kind == RegularizerKind::L2) {
    for (std::size_t i = 0; i < n; ++i) {
      const double ds = p_lin[i] - p_src[i];
      const double dt = p_lin[i] - p_tgt[i];
      out.value += ds * ds + dt * dt;
      g_lin[i] = 2.0 * (ds + dt);
      g_src[i] = -2.0 * ds;
      g_tgt[i] = -2.0 * dt;
    }
  } else {
    out.value = kl_divergence(p_lin, p_src) + kl_divergence(p_lin, p_tgt);
    for (std::size_t i = 0; i < n; ++i) {
      if (p_lin[i] <= 0.0) continue;
      const double log_lin = clamped_log(p_lin[i]);
      const double dlog_lin = clamped_log_derivative(p_lin[i]);
      g_lin[i] = (log_lin - clamped_log(p_src[i])) + p_lin[i] * dlog_lin +
                 (log_lin - clamped_log(p_tgt[i])) + p_lin[i] * dlog_lin;
      g_src[i] = -p_lin[i] * clamped_log_derivative(p_src[i]);
      g_tgt[i] = -p_lin[i] * clamped_log_derivative(p_tgt[i]);
    }
  }
  out.grad_inputs = {std::move(g_lin), std::move(g_src), std::move(g_tgt)};
  return out;
}

LossValue classification_loss(std::span<const double> p_lin, ClassId label) {
  if (label >= p_lin.size()) {
    throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(label) + " out of range");
  }
  LossValue out;
  out.value = -clamped_log(p_lin[label]);
  FeatureVector grad(p_lin.begin(), p_lin.end());
  grad[label] -= 1.0;
  out.grad_inputs.push_back(std::move(grad));
  return out;
}

LossValue domain_adversarial_loss(std::span<const double> x, DomainLabel domain,
                                  std::span<const double> disc_weights, double disc_bias,
                                  GradientFlow flow) {
  require_same_size(x.size(), disc_weights.size(), "discriminator weights");
  const double logit = dot(disc_weights, x) + disc_bias;
  const double target = domain == DomainLabel::Source ? 1.0 : 0.0;
  // softplus(s) - y*s, evaluated without overflow
  const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  const double prob = sigmoid_probability(logit, 1.0)[0];
  const double dlogit = prob - target;

  LossValue out;
  out.value = softplus - target * logit;
  const double sign = flow == GradientFlow::Reversed ? -1.0 : 1.0;
  FeatureVector grad_x(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) grad_x[j] = sign * (dlogit * disc_weights[j]);
  out.grad_inputs.push_back(std::move(grad_x));
  out.grad_params.resize(x.size() + 1);
  for (std::size_t j = 0; j < x.size(); ++j) out.grad_params[j] = dlogit * x[j];
  out.grad_params[x.size()] = dlogit;
  return out;
}

LossValue total_loss(const LossComponents& components, const LossWeights& weights) {
  const std::pair<const LossValue*, double> terms[] = {
      {&components.sup, 1.0},
      {&components.unsup, weights.unsup},
      {&components.dis, weights.dis},
      {&components.pce, weights.pce},
      {&components.mut, weights.mut},
  };
  LossValue out;
  for (const auto& [term, weight] : terms) {
    out.value += weight * term->value;
    if (!term->grad_inputs.empty()) {
      if (out.grad_inputs.empty()) out.grad_inputs.resize(term->grad_inputs.size());
      require_same_size(out.grad_inputs.size(), term->grad_inputs.size(), "gradient input count");
      for (std::size_t i = 0; i < term->grad_inputs.size(); ++i) {
        add_scaled(out.grad_inputs[i], term->grad_inputs[i], weight);
      }
    }
    if (!term->grad_params.empty()) add_scaled(out.grad_params, term->grad_params, weight);
  }
  return out;
}

}  // namespace pacf
