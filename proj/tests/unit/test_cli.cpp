#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "commands.hpp"
#include "experiment.hpp"
#include "pacf/error.hpp"
#include "pacf/format.hpp"

using namespace pacf;
using namespace pacf::cli;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "benchmark": {"class_count": 3, "dim": 6, "samples_per_class": 40, "seed": 4},
  "trainer": {"steps": 20, "warmup_steps": 40, "batch_size": 16, "feature_dim": 4, "pseudo_threshold": 0.6, "seed": 4}
})";

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pacf_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

void check_same_files(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const fs::path other = b / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK_MESSAGE(slurp(entry.path()) == slurp(other), entry.path().filename().string());
    ++n;
  }
  CHECK(n > 0);
}

ErrorCode error_code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

std::string error_text_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig defaults = ExperimentConfig::parse("{}");
  CHECK(defaults.benchmark.class_count == 8);
  CHECK(defaults.benchmark.dim == 32);
  CHECK(defaults.trainer.tau == 0.05);
  CHECK(defaults.ablation.regularizer == RegularizerChoice::JSD);

  const ExperimentConfig small = ExperimentConfig::parse(kSmall);
  CHECK(small.benchmark.class_count == 3);
  CHECK(small.trainer.pseudo_threshold == 0.6);

  CHECK(error_text_of([] { ExperimentConfig::parse(R"({"bogus": 1})"); }).find("config.bogus") != std::string::npos);
  CHECK(error_text_of([] { ExperimentConfig::parse(R"({"benchmark": {"dims": 3}})"); }).find("benchmark.dims") !=
        std::string::npos);
  CHECK(error_text_of([] { ExperimentConfig::parse(R"({"trainer": {"weights": {"pc": 1}}})"); })
            .find("trainer.weights.pc") != std::string::npos);
  CHECK(error_code_of([] { ExperimentConfig::parse(R"({"ablation": {"enable_gan": true}})"); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { ExperimentConfig::parse(R"({"trainer": {"steps": "many"}})"); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { ExperimentConfig::parse(R"({"trainer": {"regularizer": "hinge"}})"); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { ExperimentConfig::parse(R"({"ablation": {"regularizer": "hinge"}})"); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { ExperimentConfig::parse(R"({"trainer": {"tau": 0}})"); }) == ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { ExperimentConfig::parse(R"({"benchmark": {"dim": 1}})"); }) == ErrorCode::InvalidConfig);
  CHECK(error_code_of([] { ExperimentConfig::parse("{"); }) == ErrorCode::ParseError);
  CHECK(error_code_of([] { ExperimentConfig::load("/no/such/config.json"); }) == ErrorCode::IoError);
}

TEST_CASE("config hash") {
  const ExperimentConfig a = ExperimentConfig::parse(R"({"trainer": {"steps": 5, "tau": 0.1}})");
  const ExperimentConfig b = ExperimentConfig::parse("{ \"trainer\" : { \"tau\" : 0.1 ,\n \"steps\" : 5 } }");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() == content_hash(a.canonical_json()));
  CHECK(ExperimentConfig::parse(a.canonical_json()).canonical_json() == a.canonical_json());

  ExperimentConfig c = a;
  c.ablation.enable_pce = false;
  CHECK(c.hash() != a.hash());
  ExperimentConfig d = a;
  d.override_seed(9);
  CHECK(d.benchmark.seed == 9);
  CHECK(d.trainer.seed == 9);
  CHECK(d.hash() != a.hash());
}

TEST_CASE("ablation switches fold into the trainer weights") {
  ExperimentConfig c;
  c.trainer.weights = {1.0, 0.1, 1.0, 1.0};
  TrainerConfig t = c.effective_trainer();
  CHECK(t.weights.pce == 1.0);
  CHECK(t.weights.mut == 1.0);
  CHECK(t.regularizer == RegularizerKind::JSD);

  c.ablation = {false, RegularizerChoice::None, false};
  t = c.effective_trainer();
  CHECK(t.weights.pce == 0.0);
  CHECK(t.weights.mut == 0.0);
  CHECK(t.weights.dis == 0.0);
  CHECK(t.weights.unsup == 1.0);

  c.ablation = {true, RegularizerChoice::KL, true};
  t = c.effective_trainer();
  CHECK(t.regularizer == RegularizerKind::KL);
  CHECK(t.weights.mut == 1.0);
  c.ablation.regularizer = RegularizerChoice::L2;
  CHECK(c.effective_trainer().regularizer == RegularizerKind::L2);
}

TEST_CASE("gen") {
  const ExperimentConfig config;
  const fs::path a = fresh_dir("gen_a"), b = fresh_dir("gen_b");
  cmd_gen(config, a);
  cmd_gen(config, b);
  for (const char* f : {"source.csv", "target.csv", "target_hidden.csv"}) {
    const std::string text = slurp(a / f);
    CHECK(line_count(text) == 1 + 8 * 200);
    CHECK(std::count(text.begin(), text.begin() + static_cast<long>(text.find('\n')), ',') == 33);
  }
  check_same_files(a, b);
  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest["config_hash"] == config.hash());

  // Target rows carry no labels; the hidden file does.
  const FeatureDump target = load_dump(a / "target.csv");
  CHECK(std::all_of(target.labels.begin(), target.labels.end(), [](long long l) { return l == -1; }));
  const DatasetFiles data = load_dataset(a);
  CHECK(data.hidden_target_labels.size() == 1600);

  const fs::path missing = fs::temp_directory_path() / "pacf_test_cli" / "does" / "not" / "exist";
  const std::string message = error_text_of([&] { cmd_gen(config, missing); });
  CHECK(message.rfind("IoError", 0) == 0);
  CHECK(message.find(missing.string()) != std::string::npos);

  fs::remove(a / "target_hidden.csv");
  CHECK(error_code_of([&] { load_dataset(a); }) == ErrorCode::MissingArtifact);
}

TEST_CASE("train, eval and report") {
  const ExperimentConfig full = ExperimentConfig::parse(kSmall);
  ExperimentConfig baseline = full;
  baseline.ablation = {false, RegularizerChoice::None, false};

  const fs::path data = fresh_dir("data");
  cmd_gen(full, data);
  const fs::path run_full = fresh_dir("full"), run_full2 = fresh_dir("full_again"), run_base = fresh_dir("baseline");
  cmd_train(full, data, run_full);
  cmd_train(full, data, run_full2);
  cmd_train(baseline, data, run_base);

  SUBCASE("artifacts and config hash") {
    for (const char* f : {"checkpoint.json", "losses.csv", "metrics.json", "warmup_metrics.json", "variance.csv",
                          "mean_shift.csv", "tp_ratio.csv", "summary.csv", "rank_pairs.csv", "projection.csv",
                          "manifest.json"}) {
      CHECK_MESSAGE(fs::exists(run_base / f), f);
    }
    CHECK(line_count(slurp(run_full / "losses.csv")) == 1 + 20);
    const auto metrics = nlohmann::json::parse(slurp(run_base / "metrics.json"));
    CHECK(metrics["config_hash"] == baseline.hash());
    const auto manifest = nlohmann::json::parse(slurp(run_base / "manifest.json"));
    CHECK(manifest["config_hash"] == baseline.hash());
    CHECK(manifest["config"]["ablation"]["enable_pce"] == false);
    CHECK(Checkpoint::from_json(slurp(run_full / "checkpoint.json")).config_hash == full.hash());
    CHECK(baseline.hash() != full.hash());
  }

  SUBCASE("identical inputs give identical files") { check_same_files(run_full, run_full2); }

  SUBCASE("generated and loaded data give the same run") {
    const fs::path generated = fresh_dir("generated");
    cmd_train(full, "", generated);
    CHECK(slurp(generated / "metrics.json") == slurp(run_full / "metrics.json"));
    CHECK(slurp(generated / "checkpoint.json") == slurp(run_full / "checkpoint.json"));
  }

  SUBCASE("eval right after train reproduces the final report") {
    const fs::path ev = fresh_dir("eval");
    cmd_eval(full, run_full / "checkpoint.json", data, ev);
    for (const char* f : {"metrics.json", "variance.csv", "mean_shift.csv", "tp_ratio.csv", "summary.csv",
                          "rank_pairs.csv", "projection.csv"}) {
      CHECK_MESSAGE(slurp(ev / f) == slurp(run_full / f), f);
    }
    CHECK(error_code_of([&] { cmd_eval(full, ev / "nothing.json", data, ev); }) == ErrorCode::MissingArtifact);
    ExperimentConfig other = full;
    other.benchmark.dim = 7;
    CHECK(error_code_of([&] { cmd_eval(other, run_full / "checkpoint.json", "", ev); }) ==
          ErrorCode::DimensionMismatch);
  }

  SUBCASE("swapping source and target swaps variances and keeps mean shift") {
    const DatasetFiles original = load_dataset(data);
    const fs::path swapped_dir = fresh_dir("swapped");
    DatasetFiles swapped{LabeledBatch{original.target, original.hidden_target_labels, {}}, original.source.features,
                         original.source.labels};
    save_dataset(swapped, swapped_dir);
    const Checkpoint ck = Checkpoint::from_json(slurp(run_full / "checkpoint.json"));
    const MetricsReport a = evaluate_checkpoint(ck, original, 0.6).report;
    const MetricsReport b = evaluate_checkpoint(ck, load_dataset(swapped_dir), 0.6).report;
    CHECK(a.mean_shift == b.mean_shift);
    CHECK(a.source_variance == b.target_variance);
    CHECK(a.target_variance == b.source_variance);
  }

  SUBCASE("corrupt data is a parse error naming the line") {
    const fs::path bad = fresh_dir("bad_data");
    fs::copy(data, bad, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    std::string text = slurp(bad / "source.csv");
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) pos = text.find('\n', pos) + 1;
    text.insert(text.find('\n', pos), ",9");
    write_text(bad / "source.csv", text);
    const std::string message = error_text_of([&] { cmd_train(full, bad, fresh_dir("bad_run")); });
    CHECK(message.rfind("ParseError", 0) == 0);
    CHECK(message.find("source.csv:5") != std::string::npos);
  }

  SUBCASE("report") {
    const fs::path single = fresh_dir("report_single");
    cmd_report({run_full}, single);
    const std::string one = slurp(single / "variance_comparison.csv");
    CHECK(one.rfind("class,full\n", 0) == 0);
    CHECK(one.find("delta") == std::string::npos);

    const fs::path pair = fresh_dir("report_pair");
    cmd_report({run_base, run_full}, pair);
    const MetricsReport mb = MetricsReport::from_json(slurp(run_base / "metrics.json"));
    const MetricsReport mf = MetricsReport::from_json(slurp(run_full / "metrics.json"));
    const std::string table = slurp(pair / "variance_comparison.csv");
    CHECK(table.rfind("class,baseline,full,delta\n", 0) == 0);
    const std::string avg_row = "avg.," + format_double(mb.avg_target_variance()) + "," +
                                format_double(mf.avg_target_variance()) + "," +
                                format_double(mf.avg_target_variance() - mb.avg_target_variance()) + "\n";
    CHECK(table.find(avg_row) != std::string::npos);
    const std::string summary = slurp(pair / "summary_comparison.csv");
    CHECK(summary.find("avg_mean_shift," + format_double(mb.avg_mean_shift()) + "," +
                       format_double(mf.avg_mean_shift()) + "," +
                       format_double(mf.avg_mean_shift() - mb.avg_mean_shift())) != std::string::npos);

    const std::string svg = slurp(pair / "rank_scatter_full.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("ρ = " + format_double(mf.spearman_rho) + "<") != std::string::npos);
    CHECK(svg.find("τ = " + format_double(mf.kendall_tau) + "<") != std::string::npos);
    CHECK(svg.find(full.hash()) != std::string::npos);
    CHECK(fs::exists(pair / "projection_baseline.svg"));
    CHECK(svg.find("http://") != std::string::npos);  // namespace only
    CHECK(svg.find("href") == std::string::npos);

    const fs::path again = fresh_dir("report_again");
    cmd_report({run_base, run_full}, again);
    check_same_files(pair, again);

    const fs::path incomplete = fresh_dir("incomplete");
    fs::copy(run_full, incomplete, fs::copy_options::overwrite_existing | fs::copy_options::recursive);
    fs::remove(incomplete / "rank_pairs.csv");
    const std::string message = error_text_of([&] { cmd_report({incomplete}, fresh_dir("report_bad")); });
    CHECK(message.rfind("MissingArtifact", 0) == 0);
    CHECK(message.find("rank_pairs.csv") != std::string::npos);
  }
}

TEST_CASE("run names are unique") {
  CHECK(run_names({"a/full", "b/full/", "c/base"}) == std::vector<std::string>{"full", "full#2", "base"});
}

TEST_CASE("command-line binary") {
  const fs::path dir = fresh_dir("binary");
  const fs::path config = dir / "config.json";
  write_text(config, kSmall);
  const std::string bin = PACF_BINARY;
  const std::string err = (dir / "stderr.txt").string();
  auto run = [&](const std::string& args) {
    const int status = std::system((bin + " " + args + " 2> " + err).c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  fs::create_directories(dir / "data");
  CHECK(run("gen --config " + config.string() + " --out " + (dir / "data").string()) == 0);
  CHECK(slurp(err).empty());
  CHECK(fs::exists(dir / "data" / "source.csv"));

  write_text(dir / "data" / "target.csv", "label,score,f0\n-1,-1,1,2\n");
  fs::create_directories(dir / "run");
  CHECK(run("train --config " + config.string() + " --data " + (dir / "data").string() + " --out " +
            (dir / "run").string()) != 0);
  const std::string message = slurp(err);
  CHECK(message.rfind("ParseError: ", 0) == 0);
  CHECK(message.find("target.csv:2") != std::string::npos);
  CHECK(line_count(message) == 1);

  CHECK(run("gen --out " + (dir / "missing").string()) != 0);
  CHECK(slurp(err).rfind("IoError: ", 0) == 0);
  CHECK(run("frobnicate") != 0);
  CHECK(line_count(slurp(err)) == 1);
  CHECK(run("gen --config " + config.string() + " --seed 3 --out " + (dir / "data").string()) == 0);
  const auto manifest = nlohmann::json::parse(slurp(dir / "data" / "manifest.json"));
  CHECK(manifest["config"]["benchmark"]["seed"] == 3);
}

TEST_CASE("shipped configs match the built-in defaults") {
  const fs::path dir = PACF_CONFIG_DIR;
  ExperimentConfig defaults;
  ExperimentConfig loaded = ExperimentConfig::load(dir / "default.json");
  loaded.out_dir = defaults.out_dir;
  CHECK(loaded.canonical_json() == defaults.canonical_json());

  const ExperimentConfig full = ExperimentConfig::load(dir / "full.json");
  CHECK(full.ablation.enable_pce);
  CHECK(full.ablation.regularizer == RegularizerChoice::JSD);
  const ExperimentConfig baseline = ExperimentConfig::load(dir / "baseline.json");
  CHECK(baseline.effective_trainer().weights.pce == 0.0);
  CHECK(baseline.effective_trainer().weights.mut == 0.0);
  CHECK(baseline.effective_trainer().weights.dis == full.effective_trainer().weights.dis);
  const ExperimentConfig no_mut = ExperimentConfig::load(dir / "no_mut.json");
  CHECK(no_mut.effective_trainer().weights.mut == 0.0);
  CHECK(no_mut.effective_trainer().weights.pce == 1.0);
  for (const auto* c : {&full, &baseline, &no_mut}) {
    ExperimentConfig same = *c;
    same.out_dir = defaults.out_dir;
    same.ablation = defaults.ablation;
    CHECK(same.canonical_json() == defaults.canonical_json());
  }
}
