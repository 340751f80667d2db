#include "experiment.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "pacf/error.hpp"
#include "pacf/format.hpp"

namespace pacf::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad_config(const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); }

// Reads known keys out of one JSON object and rejects the rest.
class ObjectReader {
 public:
  ObjectReader(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) bad_config(path_ + " must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    if (it == doc_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      bad_config(path_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (seen_.count(key) == 0) bad_config("unknown key " + path_ + "." + key);
    }
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json benchmark_json(const DomainShiftSpec& s) {
  return {{"class_count", s.class_count},
          {"dim", s.dim},
          {"source_means", s.source_means},
          {"class_separation", s.class_separation},
          {"source_std", s.source_std},
          {"target_shifts", s.target_shifts},
          {"shift_magnitude", s.shift_magnitude},
          {"target_std_multiplier", s.target_std_multiplier},
          {"samples_per_class", s.samples_per_class},
          {"seed", s.seed}};
}

json trainer_json(const TrainerConfig& t) {
  return {{"tau", t.tau},
          {"init_threshold", t.init_threshold},
          {"pseudo_threshold", t.pseudo_threshold},
          {"weights", {{"unsup", t.weights.unsup}, {"dis", t.weights.dis}, {"pce", t.weights.pce}, {"mut", t.weights.mut}}},
          {"regularizer", std::string(to_string(t.regularizer))},
          {"ema_rate", t.ema_rate},
          {"learning_rate", t.learning_rate},
          {"steps", t.steps},
          {"warmup_steps", t.warmup_steps},
          {"batch_size", t.batch_size},
          {"augment_noise_std", t.augment_noise_std},
          {"feature_dim", t.feature_dim},
          {"seed", t.seed}};
}

void read_benchmark(const json& doc, DomainShiftSpec& s) {
  ObjectReader r(doc, "benchmark");
  r.read("class_count", s.class_count);
  r.read("dim", s.dim);
  r.read("source_means", s.source_means);
  r.read("class_separation", s.class_separation);
  r.read("source_std", s.source_std);
  r.read("target_shifts", s.target_shifts);
  r.read("shift_magnitude", s.shift_magnitude);
  r.read("target_std_multiplier", s.target_std_multiplier);
  r.read("samples_per_class", s.samples_per_class);
  r.read("seed", s.seed);
  r.finish();
}

void read_trainer(const json& doc, TrainerConfig& t) {
  ObjectReader r(doc, "trainer");
  r.read("tau", t.tau);
  r.read("init_threshold", t.init_threshold);
  r.read("pseudo_threshold", t.pseudo_threshold);
  if (const json* w = r.child("weights")) {
    ObjectReader wr(*w, "trainer.weights");
    wr.read("unsup", t.weights.unsup);
    wr.read("dis", t.weights.dis);
    wr.read("pce", t.weights.pce);
    wr.read("mut", t.weights.mut);
    wr.finish();
  }
  std::string regularizer(to_string(t.regularizer));
  r.read("regularizer", regularizer);
  try {
    t.regularizer = regularizer_from_string(regularizer);
  } catch (const Error& e) {
    bad_config("trainer.regularizer: " + e.detail());
  }
  r.read("ema_rate", t.ema_rate);
  r.read("learning_rate", t.learning_rate);
  r.read("steps", t.steps);
  r.read("warmup_steps", t.warmup_steps);
  r.read("batch_size", t.batch_size);
  r.read("augment_noise_std", t.augment_noise_std);
  r.read("feature_dim", t.feature_dim);
  r.read("seed", t.seed);
  r.finish();
}

std::vector<ClassId> labels_of(const FeatureDump& dump, const std::string& what) {
  std::vector<ClassId> out;
  for (long long label : dump.labels) {
    if (label < 0) throw Error(ErrorCode::ParseError, what + " has unlabeled rows");
    out.push_back(static_cast<ClassId>(label));
  }
  return out;
}

}  // namespace

const char* to_string(RegularizerChoice r) {
  switch (r) {
    case RegularizerChoice::None: return "none";
    case RegularizerChoice::L2: return "l2";
    case RegularizerChoice::KL: return "kl";
    case RegularizerChoice::JSD: return "jsd";
  }
  return "?";
}

RegularizerChoice regularizer_choice_from_string(const std::string& name) {
  for (auto r : {RegularizerChoice::None, RegularizerChoice::L2, RegularizerChoice::KL, RegularizerChoice::JSD}) {
    if (name == to_string(r)) return r;
  }
  bad_config("unknown regularizer '" + name + "' (expected none, l2, kl or jsd)");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  ObjectReader r(doc, "config");
  if (const json* b = r.child("benchmark")) read_benchmark(*b, c.benchmark);
  if (const json* t = r.child("trainer")) read_trainer(*t, c.trainer);
  if (const json* a = r.child("ablation")) {
    ObjectReader ar(*a, "ablation");
    ar.read("enable_pce", c.ablation.enable_pce);
    std::string regularizer = to_string(c.ablation.regularizer);
    ar.read("regularizer", regularizer);
    c.ablation.regularizer = regularizer_choice_from_string(regularizer);
    ar.read("enable_adversarial", c.ablation.enable_adversarial);
    ar.finish();
  }
  r.read("out_dir", c.out_dir);
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
  benchmark.seed = seed;
  trainer.seed = seed;
}

std::string ExperimentConfig::canonical_json() const {
  const json doc = {{"benchmark", benchmark_json(benchmark)},
                    {"trainer", trainer_json(trainer)},
                    {"ablation",
                     {{"enable_pce", ablation.enable_pce},
                      {"regularizer", to_string(ablation.regularizer)},
                      {"enable_adversarial", ablation.enable_adversarial}}},
                    {"out_dir", out_dir}};
  return doc.dump();
}

std::string ExperimentConfig::hash() const { return content_hash(canonical_json()); }

TrainerConfig ExperimentConfig::effective_trainer() const {
  TrainerConfig t = trainer;
  if (!ablation.enable_pce) t.weights.pce = 0.0;
  switch (ablation.regularizer) {
    case RegularizerChoice::None: t.weights.mut = 0.0; break;
    case RegularizerChoice::L2: t.regularizer = RegularizerKind::L2; break;
    case RegularizerChoice::KL: t.regularizer = RegularizerKind::KL; break;
    case RegularizerChoice::JSD: t.regularizer = RegularizerKind::JSD; break;
  }
  if (!ablation.enable_adversarial) t.weights.dis = 0.0;
  return t;
}

void ExperimentConfig::validate() const {
  try {
    benchmark.validate();
  } catch (const Error& e) {
    bad_config("benchmark: " + e.detail());
  }
  trainer.validate();
}

DatasetFiles dataset_from(const DatasetPair& pair) {
  return DatasetFiles{pair.source(), pair.target_features(), pair.hidden_target_labels()};
}

void save_dataset(const DatasetFiles& data, const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "output directory '" + dir.string() + "' does not exist");
  }
  save_dump(to_dump(data.source), dir / "source.csv");
  save_dump(unlabeled_dump(data.target), dir / "target.csv");
  save_dump(to_dump(LabeledBatch{data.target, data.hidden_target_labels, {}}), dir / "target_hidden.csv");
}

DatasetFiles load_dataset(const std::filesystem::path& dir) {
  return load_dataset(dir / "source.csv", dir / "target.csv", dir / "target_hidden.csv");
}

DatasetFiles load_dataset(const std::filesystem::path& source_csv, const std::filesystem::path& target_csv,
                          const std::optional<std::filesystem::path>& hidden_csv) {
  DatasetFiles out;
  const FeatureDump source = load_dump(source_csv);
  out.source = LabeledBatch{source.features, labels_of(source, source_csv.string()), {}};
  const FeatureDump target = load_dump(target_csv);
  out.target = target.features;
  const bool target_labeled =
      std::all_of(target.labels.begin(), target.labels.end(), [](long long l) { return l >= 0; });
  if (target_labeled) {
    out.hidden_target_labels = labels_of(target, target_csv.string());
  } else {
    if (!hidden_csv || !std::filesystem::exists(*hidden_csv)) {
      throw Error(ErrorCode::MissingArtifact, "hidden target labels: " +
                                                  (hidden_csv ? hidden_csv->string() : std::string("target_hidden.csv")));
    }
    const FeatureDump hidden = load_dump(*hidden_csv);
    require_same_size(hidden.size(), target.size(), "target_hidden.csv vs target.csv rows");
    out.hidden_target_labels = labels_of(hidden, hidden_csv->string());
  }
  require_same_size(common_dimension(out.source.features), common_dimension(out.target), "source vs target dimension");
  return out;
}

TrainingOutcome run_training(const ExperimentConfig& config, const DatasetFiles& data) {
  config.validate();
  const TrainerConfig trainer = config.effective_trainer();
  std::size_t classes = 0;
  for (ClassId k : data.source.labels) classes = std::max(classes, k + 1);
  const std::size_t input_dim = common_dimension(data.source.features);

  const ModelParams init = ModelParams::random(input_dim, trainer.feature_dim, classes,
                                               Rng::derive_seed(trainer.seed, kInitStream));
  ModelParams warmed = warm_up(init, data.source, trainer);
  const TrainingView view{data.source, data.target};
  AdaptationState state = begin_adaptation(warmed, view, trainer);

  EvaluationResult warmup_eval = evaluate(EvaluationInputs{warmed, warmed, state.target_prototypes, data.source,
                                                           data.target, data.hidden_target_labels,
                                                           trainer.pseudo_threshold});
  std::vector<StepRecord> history = train_run(state, view, trainer);
  EvaluationResult final_eval = evaluate(EvaluationInputs{state.student, state.teacher, state.target_prototypes,
                                                          data.source, data.target, data.hidden_target_labels,
                                                          trainer.pseudo_threshold});
  return TrainingOutcome{std::move(warmed), std::move(state), std::move(history), std::move(warmup_eval),
                         std::move(final_eval)};
}

EvaluationResult evaluate_checkpoint(const Checkpoint& checkpoint, const DatasetFiles& data,
                                     double pseudo_threshold) {
  return evaluate(EvaluationInputs{checkpoint.student, checkpoint.teacher, checkpoint.target_prototypes,
                                   data.source, data.target, data.hidden_target_labels, pseudo_threshold});
}

}  // namespace pacf::cli
