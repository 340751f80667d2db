#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pacf/adapt.hpp"
#include "pacf/error.hpp"
#include "pacf/synthbench.hpp"

using namespace pacf;

namespace {

DatasetPair small_benchmark(std::uint64_t seed) {
  DomainShiftSpec spec;
  spec.class_count = 3;
  spec.dim = 6;
  spec.samples_per_class = 30;
  spec.seed = seed;
  return generate(spec);
}

TrainerConfig small_config() {
  TrainerConfig c;
  c.feature_dim = 4;
  c.batch_size = 8;
  c.steps = 5;
  c.warmup_steps = 20;
  c.pseudo_threshold = 0.5;
  return c;
}

PrototypeSet random_set(oracle::Sampler& s, Domain domain, std::size_t classes, std::size_t dim) {
  PrototypeSet set(domain, classes, dim);
  for (ClassId k = 0; k < classes; ++k) set.assign(k, s.gaussian(dim));
  return set;
}

double distance(const ModelParams& a, const ModelParams& b) {
  const auto x = a.flatten(), y = b.flatten();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("generate_pseudo_labels") {
  ModelParams teacher = ModelParams::zeros(2, 2, 3);
  teacher.extractor(0, 0) = 1.0;
  teacher.extractor(1, 1) = 1.0;
  teacher.classifier(0, 0) = 10.0;
  teacher.classifier(1, 1) = 10.0;
  const std::vector<FeatureVector> target{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}, {0.1, 0.1}};
  const auto p = generate_pseudo_labels(teacher, target, 0.8);
  CHECK(p.indices == std::vector<std::size_t>{0, 1});
  CHECK(p.labels == std::vector<ClassId>{0, 1});
  CHECK(p.scores[0] >= 0.8);

  // A uniform teacher over 8 classes keeps nothing at 0.8.
  const ModelParams uniform = ModelParams::zeros(2, 2, 8);
  CHECK(generate_pseudo_labels(uniform, target, 0.8).size() == 0);
  CHECK(generate_pseudo_labels(uniform, target, 1.01).size() == 0);
  // Ties go to the lowest class.
  const auto all = generate_pseudo_labels(uniform, target, 0.125);
  CHECK(all.size() == target.size());
  for (ClassId k : all.labels) CHECK(k == 0);

  // Larger thresholds never keep more.
  oracle::Sampler s(41);
  const auto random_teacher = ModelParams::random(5, 4, 4, 9);
  std::vector<FeatureVector> batch;
  for (int i = 0; i < 100; ++i) batch.push_back(s.gaussian(5, 3.0));
  std::size_t previous = batch.size() + 1;
  for (double t = 0.2; t <= 1.0; t += 0.05) {
    const std::size_t n = generate_pseudo_labels(random_teacher, batch, t).size();
    CHECK(n <= previous);
    previous = n;
  }
}

TEST_CASE("ema_update") {
  const auto t = ModelParams::random(3, 2, 2, 1), st = ModelParams::random(3, 2, 2, 2);
  CHECK(ema_update(t, st, 0.0) == st);
  CHECK(ema_update(st, st, 0.9) == st);
  ModelParams two = ModelParams::zeros(1, 1, 1), zero = ModelParams::zeros(1, 1, 1);
  two.extractor(0, 0) = 2.0;
  CHECK(ema_update(two, zero, 0.5).extractor(0, 0) == 1.0);
  CHECK_THROWS_AS(ema_update(t, st, 1.0), Error);
  CHECK_THROWS_AS(ema_update(t, ModelParams::random(4, 2, 2, 1), 0.5), Error);

  // Geometric convergence towards a fixed student.
  const double r = 0.9, d0 = distance(t, st);
  ModelParams teacher = t;
  for (int n = 1; n <= 50; ++n) {
    teacher = ema_update(teacher, st, r);
    CHECK(std::abs(distance(teacher, st) - std::pow(r, n) * d0) <= 1e-9);
  }
}

TEST_CASE("full objective gradient matches central differences") {
  oracle::Sampler s(42);
  for (auto kind : {RegularizerKind::L2, RegularizerKind::KL, RegularizerKind::JSD}) {
    for (int trial = 0; trial < 8; ++trial) {
      const std::size_t C = 1 + s.index(4), in = 3 + s.index(3), feat = 2 + s.index(3);
      const auto student = ModelParams::random(in, feat, C, 300 + trial);
      const auto src = random_set(s, Domain::Source, C, feat);
      const auto tgt = random_set(s, Domain::Target, C, feat);
      LabeledBatch source;
      std::vector<FeatureVector> target;
      PseudoLabels pseudo;
      for (std::size_t i = 0; i < 5; ++i) {
        source.features.push_back(s.gaussian(in));
        source.labels.push_back(s.index(C));
        target.push_back(s.gaussian(in));
        if (i % 2 == 0) {
          pseudo.indices.push_back(i);
          pseudo.labels.push_back(s.index(C));
          pseudo.scores.push_back(0.9);
        }
      }
      TrainerConfig config;
      config.tau = s.uniform(0.05, 0.3);
      config.regularizer = kind;
      config.weights = {s.uniform(0.1, 2.0), s.uniform(0.1, 2.0), s.uniform(0.1, 2.0), s.uniform(0.1, 2.0)};
      const auto eval = evaluate_objective(student, src, tgt, source, target, pseudo, config, false);
      const auto fd = oracle::central_difference(
          [&](const FeatureVector& flat) {
            ModelParams p = student;
            p.unflatten(flat);
            return evaluate_objective(p, src, tgt, source, target, pseudo, config, false).total;
          },
          student.flatten(), 1e-5);
      CHECK(oracle::relative_error(eval.gradient.flatten(), fd) < 1e-4);

      // Training reverses only the extractor's share of the adversarial term.
      const auto reversed = evaluate_objective(student, src, tgt, source, target, pseudo, config, true);
      CHECK(reversed.total == eval.total);
      CHECK(reversed.gradient.discriminator == eval.gradient.discriminator);
      CHECK(reversed.gradient.classifier == eval.gradient.classifier);
    }
  }
}

TEST_CASE("objective terms switch off with their weights") {
  const auto data = small_benchmark(1);
  auto config = small_config();
  config.weights = {0.0, 0.0, 0.0, 0.0};
  const auto warmed = warm_up(ModelParams::random(6, 4, 3, 5), data.source(), config);
  const auto state = begin_adaptation(warmed, data.training_view(), config);
  const auto pseudo = generate_pseudo_labels(warmed, data.target_features(), 0.5);
  REQUIRE(pseudo.size() > 0);
  const auto eval = evaluate_objective(state.student, state.source_prototypes, state.target_prototypes,
                                       data.source(), data.target_features(), pseudo, config);
  CHECK(eval.total == eval.components.sup.value);
  CHECK(eval.components.pce.value > 0.0);
  for (double v : eval.gradient.discriminator) CHECK(v == 0.0);
}

TEST_CASE("train_step") {
  const auto data = small_benchmark(2);
  auto config = small_config();
  const auto warmed = warm_up(ModelParams::random(6, 4, 3, 5), data.source(), config);
  AdaptationState state = begin_adaptation(warmed, data.training_view(), config);
  CHECK(state.student == warmed);
  CHECK(state.teacher == warmed);

  SUBCASE("learning rate zero leaves the student untouched") {
    config.learning_rate = 0.0;
    const auto before = state;
    const auto rec = train_step(state, data.source(), data.target_features(), config);
    CHECK(state.student == before.student);
    CHECK(state.step == 1);
    CHECK(rec.step == 1);
    CHECK(std::isfinite(rec.total));
  }
  SUBCASE("deterministic") {
    AdaptationState a = state, b = state;
    const auto ra = train_run(a, data.training_view(), config);
    const auto rb = train_run(b, data.training_view(), config);
    CHECK(a.student == b.student);
    CHECK(a.teacher == b.teacher);
    CHECK(a.source_prototypes == b.source_prototypes);
    CHECK(a.target_prototypes == b.target_prototypes);
    CHECK(a.rng == b.rng);
    REQUIRE(ra.size() == config.steps);
    for (std::size_t i = 0; i < ra.size(); ++i) CHECK(to_csv_row(ra[i]) == to_csv_row(rb[i]));
  }
  SUBCASE("one step of a run equals a single train_step") {
    config.steps = 1;
    AdaptationState a = state, b = state;
    train_run(a, data.training_view(), config);
    LabeledBatch src;
    std::vector<FeatureVector> tgt;
    for (std::size_t i = 0; i < config.batch_size; ++i) {
      const std::size_t k = b.rng.index(data.source().size());
      src.features.push_back(data.source().features[k]);
      src.labels.push_back(data.source().labels[k]);
    }
    for (std::size_t i = 0; i < config.batch_size; ++i) tgt.push_back(data.target_features()[b.rng.index(data.target_features().size())]);
    train_step(b, src, tgt, config);
    CHECK(a.student == b.student);
    CHECK(a.target_prototypes == b.target_prototypes);
  }
  SUBCASE("history stays finite and prototypes stay unit") {
    config.steps = 50;
    for (const auto& r : train_run(state, data.training_view(), config)) {
      for (double v : {r.sup, r.unsup, r.dis, r.pce, r.mut, r.total}) CHECK(std::isfinite(v));
    }
    for (const auto* set : {&state.source_prototypes, &state.target_prototypes}) {
      for (ClassId k = 0; k < set->class_count(); ++k) {
        if (set->is_initialized(k)) CHECK(std::abs(l2_norm(set->at(k)) - 1.0) <= 1e-9);
      }
    }
  }
}

TEST_CASE("prediction ignores prototypes and discriminator") {
  oracle::Sampler s(43);
  const auto params = ModelParams::random(5, 4, 3, 11);
  ModelParams perturbed = params;
  for (double& v : perturbed.discriminator) v += s.normal();
  perturbed.discriminator_bias += 5.0;
  for (int i = 0; i < 100; ++i) {
    const auto x = s.gaussian(5, 2.0);
    CHECK(predict(params, x) == predict(perturbed, x));
  }
}

TEST_CASE("config validation and checkpoint round trip") {
  TrainerConfig c;
  c.validate();
  c.tau = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainerConfig{};
  c.ema_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainerConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = TrainerConfig{};
  c.init_threshold = 1.2;
  CHECK_THROWS_AS(c.validate(), Error);

  const auto data = small_benchmark(3);
  auto config = small_config();
  const auto warmed = warm_up(ModelParams::random(6, 4, 3, 5), data.source(), config);
  AdaptationState state = begin_adaptation(warmed, data.training_view(), config);
  train_run(state, data.training_view(), config);
  const auto cp = make_checkpoint(state, "0123456789abcdef");
  const auto text = cp.to_json();
  const auto back = Checkpoint::from_json(text);
  CHECK(back.student == state.student);
  CHECK(back.teacher == state.teacher);
  CHECK(back.target_prototypes == state.target_prototypes);
  CHECK(back.step == config.steps);
  CHECK(back.to_json() == text);
  CHECK_THROWS_AS(Checkpoint::from_json("{}"), Error);
  CHECK(step_record_csv_header() == "step,L_sup,L_unsup,L_dis,L_pce,L_mut,total,pseudo_count");
}
