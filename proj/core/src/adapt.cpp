#include "pacf/adapt.hpp"

#include <cmath>
#include <json.hpp>

#include "pacf/error.hpp"
#include "pacf/format.hpp"

namespace pacf {

namespace {

using nlohmann::json;

void require_config(bool ok, const char* field, const char* rule) {
  if (!ok) throw Error(ErrorCode::InvalidConfig, std::string(field) + " " + rule);
}

struct SampledBatch {
  LabeledBatch source;
  std::vector<FeatureVector> target;
};

SampledBatch sample_batches(TrainingView data, std::size_t batch_size, Rng& rng,
                            bool with_target) {
  SampledBatch out;
  out.source.features.reserve(batch_size);
  out.source.labels.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::size_t idx = rng.index(data.source.size());
    out.source.features.push_back(data.source.features[idx]);
    out.source.labels.push_back(data.source.labels[idx]);
  }
  if (with_target) {
    out.target.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) out.target.push_back(data.target[rng.index(data.target.size())]);
  }
  return out;
}

void require_prototypes_match(const ModelParams& student, const PrototypeSet& source,
                              const PrototypeSet& target) {
  require_same_size(source.dim(), student.feature_dim(), "source prototype dimension");
  require_same_size(target.dim(), student.feature_dim(), "target prototype dimension");
  require_same_size(source.class_count(), student.class_count(), "source prototype classes");
  require_same_size(target.class_count(), student.class_count(), "target prototype classes");
}

}  // namespace

void TrainerConfig::validate() const {
  require_config(tau > 0.0 && std::isfinite(tau), "tau", "must be positive");
  require_config(init_threshold > 0.0 && init_threshold <= 1.0, "init_threshold", "must lie in (0, 1]");
  require_config(pseudo_threshold > 0.0 && std::isfinite(pseudo_threshold), "pseudo_threshold",
                 "must be positive (values above 1 disable pseudo labels)");
  weights.validate();
  require_config(ema_rate >= 0.0 && ema_rate < 1.0, "ema_rate", "must lie in [0, 1)");
  require_config(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate",
                 "must be finite and non-negative");
  require_config(steps >= 1, "steps", "must be at least 1");
  require_config(batch_size >= 1, "batch_size", "must be at least 1");
  require_config(augment_noise_std >= 0.0 && std::isfinite(augment_noise_std), "augment_noise_std",
                 "must be finite and non-negative");
  require_config(feature_dim >= 1, "feature_dim", "must be at least 1");
}

std::pair<ClassId, double> top_class(const ModelParams& params, std::span<const double> probs) {
  const ClassId k = argmax(probs.first(params.class_count()));
  return {k, probs[k]};
}

PseudoLabels generate_pseudo_labels(const ModelParams& teacher,
                                    std::span<const FeatureVector> target, double threshold) {
  PseudoLabels out;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const ForwardResult f = forward(teacher, target[i]);
    const auto [label, score] = top_class(teacher, f.probs);
    if (score >= threshold) {
      out.indices.push_back(i);
      out.labels.push_back(label);
      out.scores.push_back(score);
    }
  }
  return out;
}

ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(ErrorCode::InvalidArgument, "EMA rate must lie in [0, 1)");
  std::vector<double> t = teacher.flatten();
  const std::vector<double> s = student.flatten();
  require_same_size(t.size(), s.size(), "teacher vs student parameters");
  require_same_size(teacher.input_dim(), student.input_dim(), "teacher vs student input");
  require_same_size(teacher.feature_dim(), student.feature_dim(), "teacher vs student features");
  // Written as t + (1 - rate)(s - t) so that teacher == student is an exact
  // fixed point; rate 0 copies the student verbatim.
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rate == 0.0 ? s[i] : t[i] + (1.0 - rate) * (s[i] - t[i]);
  ModelParams out = teacher;
  out.unflatten(t);
  return out;
}

std::vector<FeatureVector> augment(std::span<const FeatureVector> rows, double noise_std, Rng& rng) {
  std::vector<FeatureVector> out(rows.begin(), rows.end());
  for (FeatureVector& row : out) {
    for (double& v : row) v += noise_std * rng.normal();
  }
  return out;
}

ObjectiveEvaluation evaluate_objective(const ModelParams& student,
                                       const PrototypeSet& source_prototypes,
                                       const PrototypeSet& target_prototypes,
                                       const LabeledBatch& source,
                                       std::span<const FeatureVector> target,
                                       const PseudoLabels& pseudo, const TrainerConfig& config,
                                       bool reverse_adversarial) {
  require_prototypes_match(student, source_prototypes, target_prototypes);
  const LossWeights& w = config.weights;
  const std::size_t logits = student.logit_count();
  const GradientFlow flow = reverse_adversarial ? GradientFlow::Reversed : GradientFlow::Forward;
  const bool prototypes_ready =
      source_prototypes.fully_initialized() && target_prototypes.fully_initialized();

  const double n_source = static_cast<double>(source.size());
  const double n_all = static_cast<double>(source.size() + target.size());
  const double n_pseudo = static_cast<double>(pseudo.size());

  ObjectiveEvaluation out;
  LossComponents& c = out.components;
  ParamGradient grad(student);
  double dis_sum = 0.0;
  std::vector<double> disc_grad(student.feature_dim() + 1, 0.0);

  auto add_adversarial = [&](std::span<const double> embedding, DomainLabel domain,
                             FeatureVector& grad_embedding) {
    const LossValue adv = domain_adversarial_loss(embedding, domain, student.discriminator,
                                                  student.discriminator_bias, flow);
    dis_sum += adv.value;
    for (std::size_t j = 0; j < grad_embedding.size(); ++j) {
      grad_embedding[j] += w.dis * (adv.grad_inputs[0][j] / n_all);
    }
    for (std::size_t j = 0; j < disc_grad.size(); ++j) disc_grad[j] += adv.grad_params[j] / n_all;
  };

  double sup_sum = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const ForwardResult f = forward(student, source.features[i]);
    const LossValue ce = classification_loss(f.probs, source.labels[i]);
    out.source_embeddings.push_back(f.embedding);
    sup_sum += ce.value;
    std::vector<double> grad_logits = trim_logit_gradient(ce.grad_inputs[0], logits);
    for (double& g : grad_logits) g /= n_source;
    FeatureVector grad_embedding(student.feature_dim(), 0.0);
    add_adversarial(f.embedding, DomainLabel::Source, grad_embedding);
    grad.accumulate(student, source.features[i], f.embedding, grad_logits, grad_embedding);
  }

  double unsup_sum = 0.0, pce_sum = 0.0, mut_sum = 0.0;
  std::size_t next_pseudo = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const ForwardResult f = forward(student, target[i]);
    out.target_embeddings.push_back(f.embedding);
    std::vector<double> grad_probs_logits(f.probs.size(), 0.0);
    FeatureVector grad_embedding(student.feature_dim(), 0.0);

    if (next_pseudo < pseudo.size() && pseudo.indices[next_pseudo] == i) {
      const ClassId label = pseudo.labels[next_pseudo++];
      const LossValue ce = classification_loss(f.probs, label);
      unsup_sum += ce.value;
      for (std::size_t k = 0; k < f.probs.size(); ++k) {
        grad_probs_logits[k] += w.unsup * (ce.grad_inputs[0][k] / n_pseudo);
      }
      if (prototypes_ready) {
        const LossValue pce = prototype_cross_entropy(f.embedding, label, source_prototypes,
                                                      target_prototypes, config.tau);
        pce_sum += pce.value;
        for (std::size_t j = 0; j < grad_embedding.size(); ++j) {
          grad_embedding[j] += w.pce * (pce.grad_inputs[0][j] / n_pseudo);
        }

        const ProbabilityVector p_src = prototype_posterior(f.embedding, source_prototypes, config.tau);
        const ProbabilityVector p_tgt = prototype_posterior(f.embedding, target_prototypes, config.tau);
        const LossValue reg = regularizer_variant(f.probs, p_src, p_tgt, config.regularizer);
        mut_sum += reg.value;
        const std::vector<double> d_lin = softmax_backward(f.probs, reg.grad_inputs[0]);
        for (std::size_t k = 0; k < f.probs.size(); ++k) {
          grad_probs_logits[k] += w.mut * (d_lin[k] / n_pseudo);
        }
        const FeatureVector d_src = prototype_posterior_backward(
            f.embedding, source_prototypes, config.tau, p_src, reg.grad_inputs[1]);
        const FeatureVector d_tgt = prototype_posterior_backward(
            f.embedding, target_prototypes, config.tau, p_tgt, reg.grad_inputs[2]);
        for (std::size_t j = 0; j < grad_embedding.size(); ++j) {
          grad_embedding[j] += w.mut * ((d_src[j] + d_tgt[j]) / n_pseudo);
        }
      }
    }
    add_adversarial(f.embedding, DomainLabel::Target, grad_embedding);
    grad.accumulate(student, target[i], f.embedding, trim_logit_gradient(grad_probs_logits, logits),
                    grad_embedding);
  }
  grad.accumulate_discriminator(disc_grad, w.dis);

  c.sup.value = source.empty() ? 0.0 : sup_sum / n_source;
  c.dis.value = n_all > 0.0 ? dis_sum / n_all : 0.0;
  if (n_pseudo > 0.0) {
    c.unsup.value = unsup_sum / n_pseudo;
    c.pce.value = pce_sum / n_pseudo;
    c.mut.value = mut_sum / n_pseudo;
  }
  out.total = total_loss(c, w).value;
  out.gradient = grad.value();
  return out;
}

ModelParams warm_up(ModelParams init, const LabeledBatch& source, const TrainerConfig& config) {
  config.validate();
  source.validate();
  if (source.empty()) throw Error(ErrorCode::EmptyBatch, "warm-up needs labeled source data");
  Rng rng(Rng::derive_seed(config.seed, kWarmupStream));
  const std::vector<FeatureVector> no_target;
  const TrainingView view{source, no_target};
  for (std::size_t step = 0; step < config.warmup_steps; ++step) {
    SampledBatch batch = sample_batches(view, config.batch_size, rng, false);
    batch.source.features = augment(batch.source.features, config.augment_noise_std, rng);
    ParamGradient grad(init);
    for (std::size_t i = 0; i < batch.source.size(); ++i) {
      const ForwardResult f = forward(init, batch.source.features[i]);
      const LossValue ce = classification_loss(f.probs, batch.source.labels[i]);
      std::vector<double> grad_logits = trim_logit_gradient(ce.grad_inputs[0], init.logit_count());
      for (double& g : grad_logits) g /= static_cast<double>(batch.source.size());
      grad.accumulate(init, batch.source.features[i], f.embedding, grad_logits, {});
    }
    gradient_descent_step(init, grad.value(), config.learning_rate);
  }
  return init;
}

namespace {

ScoredFeatureBatch score_with(const ModelParams& model, std::span<const FeatureVector> rows) {
  ScoredFeatureBatch batch;
  for (const FeatureVector& x : rows) {
    const ForwardResult f = forward(model, x);
    const auto [label, score] = top_class(model, f.probs);
    batch.features.push_back(f.embedding);
    batch.labels.push_back(label);
    batch.scores.push_back(score);
  }
  return batch;
}

}  // namespace

AdaptationState begin_adaptation(const ModelParams& warmed, TrainingView data,
                                 const TrainerConfig& config) {
  config.validate();
  warmed.validate();
  const std::size_t classes = warmed.class_count();
  const std::size_t dim = warmed.feature_dim();
  AdaptationState state{warmed,
                        warmed,
                        PrototypeSet(Domain::Source, classes, dim),
                        PrototypeSet(Domain::Target, classes, dim),
                        0,
                        Rng(Rng::derive_seed(config.seed, kAdaptStream))};
  if (!data.source.empty()) {
    state.source_prototypes = initialize_prototypes(score_with(warmed, data.source.features),
                                                    config.init_threshold, Domain::Source, classes);
  }
  if (!data.target.empty()) {
    state.target_prototypes = initialize_prototypes(score_with(warmed, data.target),
                                                    config.init_threshold, Domain::Target, classes);
  }
  return state;
}

StepRecord train_step(AdaptationState& state, const LabeledBatch& source_batch,
                      std::span<const FeatureVector> target_batch, const TrainerConfig& config) {
  const PseudoLabels pseudo = generate_pseudo_labels(state.teacher, target_batch, config.pseudo_threshold);

  LabeledBatch source_aug{augment(source_batch.features, config.augment_noise_std, state.rng),
                          source_batch.labels, {}};
  const std::vector<FeatureVector> target_aug =
      augment(target_batch, config.augment_noise_std, state.rng);

  const ObjectiveEvaluation eval =
      evaluate_objective(state.student, state.source_prototypes, state.target_prototypes,
                         source_aug, target_aug, pseudo, config);

  gradient_descent_step(state.student, eval.gradient, config.learning_rate);

  // Prototype refresh uses the embeddings seen in this step's forward pass.
  std::vector<FeatureVector> target_embeddings;
  target_embeddings.reserve(pseudo.size());
  for (std::size_t idx : pseudo.indices) target_embeddings.push_back(eval.target_embeddings[idx]);
  state.source_prototypes =
      update_all(std::move(state.source_prototypes), eval.source_embeddings, source_aug.labels);
  state.target_prototypes = update_all(std::move(state.target_prototypes), target_embeddings, pseudo.labels);
  state.teacher = ema_update(state.teacher, state.student, config.ema_rate);
  ++state.step;

  const LossComponents& c = eval.components;
  return StepRecord{state.step, c.sup.value, c.unsup.value, c.dis.value, c.pce.value,
                    c.mut.value, eval.total, pseudo.size()};
}

std::vector<StepRecord> train_run(AdaptationState& state, TrainingView data,
                                  const TrainerConfig& config) {
  config.validate();
  data.source.validate();
  if (data.source.empty() || data.target.empty()) {
    throw Error(ErrorCode::EmptyBatch, "adaptation needs source and target data");
  }
  std::vector<StepRecord> history;
  history.reserve(config.steps);
  for (std::size_t s = 0; s < config.steps; ++s) {
    const SampledBatch batch = sample_batches(data, config.batch_size, state.rng, true);
    history.push_back(train_step(state, batch.source, batch.target, config));
  }
  return history;
}

ClassId predict(const ModelParams& params, std::span<const double> x_raw) {
  return top_class(params, forward(params, x_raw).probs).first;
}

std::string Checkpoint::to_json() const {
  json doc = {{"step", step},
              {"config_hash", config_hash},
              {"student", json::parse(student.to_json())},
              {"teacher", json::parse(teacher.to_json())},
              {"source_prototypes", json::parse(source_prototypes.to_json())},
              {"target_prototypes", json::parse(target_prototypes.to_json())}};
  return doc.dump(1);
}

Checkpoint Checkpoint::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    return Checkpoint{ModelParams::from_json(doc.at("student").dump()),
                      ModelParams::from_json(doc.at("teacher").dump()),
                      PrototypeSet::from_json(doc.at("source_prototypes").dump()),
                      PrototypeSet::from_json(doc.at("target_prototypes").dump()),
                      doc.at("step").get<std::uint64_t>(),
                      doc.at("config_hash").get<std::string>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

Checkpoint make_checkpoint(const AdaptationState& state, const std::string& config_hash) {
  return Checkpoint{state.student, state.teacher, state.source_prototypes,
                    state.target_prototypes, state.step, config_hash};
}

std::string step_record_csv_header() {
  return "step,L_sup,L_unsup,L_dis,L_pce,L_mut,total,pseudo_count";
}

std::string to_csv_row(const StepRecord& r) {
  return std::to_string(r.step) + "," + format_double(r.sup) + "," + format_double(r.unsup) + "," +
         format_double(r.dis) + "," + format_double(r.pce) + "," + format_double(r.mut) + "," +
         format_double(r.total) + "," + std::to_string(r.pseudo_count);
}

}  // namespace pacf
