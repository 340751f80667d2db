#include "pacf/model.hpp"

#include <cmath>
#include <json.hpp>

#include "pacf/error.hpp"
#include "pacf/random.hpp"

namespace pacf {

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows}, {"cols", m.cols}, {"values", m.values}};
}

Matrix matrix_from_json(const json& doc) {
  Matrix m(doc.at("rows").get<std::size_t>(), doc.at("cols").get<std::size_t>());
  m.values = doc.at("values").get<std::vector<double>>();
  require_same_size(m.values.size(), m.rows * m.cols, "matrix values");
  return m;
}

template <typename F>
void for_each_block(ModelParams& p, F&& f) {
  f(std::span<double>(p.extractor.values));
  f(std::span<double>(p.extractor_bias));
  f(std::span<double>(p.classifier.values));
  f(std::span<double>(p.classifier_bias));
  f(std::span<double>(p.discriminator));
  f(std::span<double>(&p.discriminator_bias, 1));
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t input_dim, std::size_t feature_dim,
                               std::size_t class_count) {
  if (input_dim == 0 || feature_dim == 0 || class_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
  }
  ModelParams p;
  p.extractor = Matrix(feature_dim, input_dim);
  p.extractor_bias.assign(feature_dim, 0.0);
  p.classifier = Matrix(class_count, feature_dim);
  p.classifier_bias.assign(class_count, 0.0);
  p.discriminator.assign(feature_dim, 0.0);
  return p;
}

ModelParams ModelParams::random(std::size_t input_dim, std::size_t feature_dim,
                                std::size_t class_count, std::uint64_t seed) {
  ModelParams p = zeros(input_dim, feature_dim, class_count);
  Rng rng(seed);
  const double extractor_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double head_scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  for (double& v : p.extractor.values) v = extractor_scale * rng.normal();
  for (double& v : p.classifier.values) v = head_scale * rng.normal();
  for (double& v : p.discriminator) v = head_scale * rng.normal();
  return p;
}

std::size_t ModelParams::parameter_count() const {
  return extractor.values.size() + extractor_bias.size() + classifier.values.size() +
         classifier_bias.size() + discriminator.size() + 1;
}

void ModelParams::validate() const {
  require_same_size(extractor.values.size(), extractor.rows * extractor.cols, "extractor storage");
  require_same_size(classifier.values.size(), classifier.rows * classifier.cols, "classifier storage");
  require_same_size(extractor_bias.size(), extractor.rows, "extractor bias");
  require_same_size(classifier.cols, extractor.rows, "classifier input");
  require_same_size(classifier_bias.size(), classifier.rows, "classifier bias");
  require_same_size(discriminator.size(), extractor.rows, "discriminator");
  if (extractor.rows == 0 || extractor.cols == 0 || classifier.rows == 0) {
    throw Error(ErrorCode::DimensionMismatch, "model has an empty layer");
  }
  for (double v : flatten()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "model has a non-finite parameter");
  }
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for_each_block(const_cast<ModelParams&>(*this),
                 [&](std::span<double> block) { flat.insert(flat.end(), block.begin(), block.end()); });
  return flat;
}

void ModelParams::unflatten(std::span<const double> flat) {
  require_same_size(flat.size(), parameter_count(), "flat parameter vector");
  std::size_t offset = 0;
  for_each_block(*this, [&](std::span<double> block) {
    for (double& v : block) v = flat[offset++];
  });
}

std::string ModelParams::to_json() const {
  json doc = {{"extractor", matrix_to_json(extractor)},
              {"extractor_bias", extractor_bias},
              {"classifier", matrix_to_json(classifier)},
              {"classifier_bias", classifier_bias},
              {"discriminator", discriminator},
              {"discriminator_bias", discriminator_bias}};
  return doc.dump();
}

ModelParams ModelParams::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    ModelParams p;
    p.extractor = matrix_from_json(doc.at("extractor"));
    p.extractor_bias = doc.at("extractor_bias").get<FeatureVector>();
    p.classifier = matrix_from_json(doc.at("classifier"));
    p.classifier_bias = doc.at("classifier_bias").get<FeatureVector>();
    p.discriminator = doc.at("discriminator").get<FeatureVector>();
    p.discriminator_bias = doc.at("discriminator_bias").get<double>();
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("model parameters: ") + e.what());
  }
}

ForwardResult forward(const ModelParams& params, std::span<const double> x_raw) {
  require_same_size(x_raw.size(), params.input_dim(), "model input");
  ForwardResult out;
  out.embedding.resize(params.feature_dim());
  for (std::size_t r = 0; r < params.feature_dim(); ++r) {
    out.embedding[r] = dot(params.extractor.row(r), x_raw) + params.extractor_bias[r];
  }
  out.logits.resize(params.logit_count());
  for (std::size_t k = 0; k < params.logit_count(); ++k) {
    out.logits[k] = dot(params.classifier.row(k), out.embedding) + params.classifier_bias[k];
  }
  if (params.logit_count() == 1) {
    out.probs = sigmoid_probability(out.logits[0], 1.0);
  } else {
    out.probs = temperature_softmax(out.logits, 1.0);
  }
  return out;
}

std::vector<double> trim_logit_gradient(std::span<const double> grad_probs_logits,
                                        std::size_t logit_count) {
  return {grad_probs_logits.begin(), grad_probs_logits.begin() + logit_count};
}

ParamGradient::ParamGradient(const ModelParams& like)
    : grad_(ModelParams::zeros(like.input_dim(), like.feature_dim(), like.logit_count())) {}

void ParamGradient::accumulate(const ModelParams& params, std::span<const double> x_raw,
                               std::span<const double> embedding,
                               std::span<const double> grad_logits,
                               std::span<const double> grad_embedding) {
  const std::size_t feat = params.feature_dim();
  require_same_size(grad_logits.size(), params.logit_count(), "logit gradient");
  if (!grad_embedding.empty()) require_same_size(grad_embedding.size(), feat, "embedding gradient");

  FeatureVector through(feat);
  for (std::size_t r = 0; r < feat; ++r) through[r] = grad_embedding.empty() ? 0.0 : grad_embedding[r];
  for (std::size_t k = 0; k < params.logit_count(); ++k) {
    const double g = grad_logits[k];
    for (std::size_t c = 0; c < feat; ++c) {
      grad_.classifier(k, c) += g * embedding[c];
      through[c] += params.classifier(k, c) * g;
    }
    grad_.classifier_bias[k] += g;
  }
  for (std::size_t r = 0; r < feat; ++r) {
    const double g = through[r];
    for (std::size_t c = 0; c < params.input_dim(); ++c) grad_.extractor(r, c) += g * x_raw[c];
    grad_.extractor_bias[r] += g;
  }
}

void ParamGradient::accumulate_discriminator(std::span<const double> grad_params, double scale) {
  require_same_size(grad_params.size(), grad_.discriminator.size() + 1, "discriminator gradient");
  for (std::size_t j = 0; j < grad_.discriminator.size(); ++j) grad_.discriminator[j] += scale * grad_params[j];
  grad_.discriminator_bias += scale * grad_params.back();
}

void gradient_descent_step(ModelParams& params, const ModelParams& gradient, double learning_rate) {
  const std::vector<double> g = gradient.flatten();
  std::vector<double> p = params.flatten();
  require_same_size(p.size(), g.size(), "gradient shape");
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= learning_rate * g[i];
  params.unflatten(p);
}

ClassId argmax(std::span<const double> probs) {
  if (probs.empty()) throw Error(ErrorCode::InvalidArgument, "argmax of an empty vector");
  ClassId best = 0;
  for (ClassId k = 1; k < probs.size(); ++k) {
    if (probs[k] > probs[best]) best = k;
  }
  return best;
}

}  // namespace pacf
