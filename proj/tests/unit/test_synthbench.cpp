#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <filesystem>
#include <fstream>
#include <limits>

#include "oracles.hpp"
#include "pacf/error.hpp"
#include "pacf/synthbench.hpp"

using namespace pacf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pacf_test_synthbench";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::vector<FeatureVector> rows_of(const std::vector<FeatureVector>& features, const std::vector<ClassId>& labels,
                                   ClassId k) {
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (labels[i] == k) out.push_back(features[i]);
  }
  return out;
}

FeatureVector mean_of(const std::vector<FeatureVector>& rows) {
  FeatureVector m(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r[j];
  }
  for (double& x : m) x /= static_cast<double>(rows.size());
  return m;
}

void check_throws_code(const std::function<void()>& f, ErrorCode code) {
  try {
    f();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("spec validation") {
  auto invalid = [](auto mutate) {
    DomainShiftSpec s;
    mutate(s);
    check_throws_code([&] { s.validate(); }, ErrorCode::InvalidSpec);
  };
  invalid([](DomainShiftSpec& s) { s.class_count = 0; });
  invalid([](DomainShiftSpec& s) { s.dim = 1; });
  invalid([](DomainShiftSpec& s) { s.source_std = 0.0; });
  invalid([](DomainShiftSpec& s) { s.target_std_multiplier = 0.99; });
  invalid([](DomainShiftSpec& s) { s.samples_per_class = 0; });
  invalid([](DomainShiftSpec& s) { s.source_means = {FeatureVector(32, 0.0)}; });
  invalid([](DomainShiftSpec& s) { s.target_shifts.assign(8, FeatureVector(3, 0.0)); });
  DomainShiftSpec ok;
  CHECK_NOTHROW(ok.validate());
  check_throws_code([] {
    DomainShiftSpec s;
    s.dim = 1;
    generate(s);
  }, ErrorCode::InvalidSpec);
}

TEST_CASE("default benchmark shape") {
  const DatasetPair data = generate(DomainShiftSpec{});
  CHECK(data.source().size() == 8 * 200);
  CHECK(data.target_features().size() == 8 * 200);
  CHECK(data.hidden_target_labels().size() == data.target_features().size());
  CHECK(common_dimension(data.source().features) == 32);
  for (ClassId k = 0; k < 8; ++k) {
    CHECK(std::count(data.source().labels.begin(), data.source().labels.end(), k) == 200);
    CHECK(std::count(data.hidden_target_labels().begin(), data.hidden_target_labels().end(), k) == 200);
  }
  const TrainingView view = data.training_view();
  CHECK(view.target.size() == data.target_features().size());
}

TEST_CASE("no shift and unit multiplier leave the target distributed like the source") {
  DomainShiftSpec spec;
  spec.class_count = 2;
  spec.dim = 4;
  spec.samples_per_class = 2000;
  spec.shift_magnitude = 0.0;
  spec.target_std_multiplier = 1.0;
  spec.seed = 11;
  const DatasetPair data = generate(spec);
  const double n = 2000.0;
  for (ClassId k = 0; k < 2; ++k) {
    const auto s = rows_of(data.source().features, data.source().labels, k);
    const auto t = rows_of(data.target_features(), data.hidden_target_labels(), k);
    const FeatureVector ms = mean_of(s), mt = mean_of(t);
    // Difference of two means with std 1 and n samples each has std sqrt(2/n).
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(ms[j] - mt[j]) < 4.0 * std::sqrt(2.0 / n));
    CHECK(oracle::trace_variance(t) / oracle::trace_variance(s) == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("scalar shift moves every class along the first axis") {
  DomainShiftSpec spec;
  spec.class_count = 2;
  spec.dim = 4;
  spec.samples_per_class = 2000;
  spec.shift_magnitude = 2.5;
  spec.target_std_multiplier = 1.0;
  spec.seed = 3;
  const DatasetPair data = generate(spec);
  const ShiftGeometry g = resolve_geometry(spec);
  for (ClassId k = 0; k < 2; ++k) {
    CHECK(g.target_shifts[k] == FeatureVector{2.5, 0.0, 0.0, 0.0});
    const FeatureVector ms = mean_of(rows_of(data.source().features, data.source().labels, k));
    const FeatureVector mt = mean_of(rows_of(data.target_features(), data.hidden_target_labels(), k));
    const double bound = 3.0 * std::sqrt(2.0) / std::sqrt(2000.0);
    CHECK(std::abs(mt[0] - ms[0] - 2.5) < bound);
    for (std::size_t j = 1; j < 4; ++j) CHECK(std::abs(mt[j] - ms[j]) < bound);
  }
}

TEST_CASE("target trace variance scales with the squared multiplier") {
  DomainShiftSpec spec;
  spec.class_count = 3;
  spec.dim = 8;
  spec.samples_per_class = 2000;
  spec.source_std = 0.7;
  spec.target_std_multiplier = 1.8;
  spec.seed = 5;
  const DatasetPair data = generate(spec);
  for (ClassId k = 0; k < 3; ++k) {
    const double vs = oracle::trace_variance(rows_of(data.source().features, data.source().labels, k));
    const double vt = oracle::trace_variance(rows_of(data.target_features(), data.hidden_target_labels(), k));
    CHECK(vs == doctest::Approx(8 * 0.49).epsilon(0.1));
    CHECK(vt / vs == doctest::Approx(1.8 * 1.8).epsilon(0.1));
  }
}

TEST_CASE("explicit geometry is used as given") {
  DomainShiftSpec spec;
  spec.class_count = 2;
  spec.dim = 2;
  spec.source_means = {{10.0, 0.0}, {0.0, -10.0}};
  spec.target_shifts = {{0.0, 1.0}, {-1.0, 0.0}};
  spec.samples_per_class = 1000;
  spec.source_std = 0.1;
  const ShiftGeometry g = resolve_geometry(spec);
  CHECK(g.source_means == spec.source_means);
  CHECK(g.target_shifts == spec.target_shifts);
  const DatasetPair data = generate(spec);
  const FeatureVector mt = mean_of(rows_of(data.target_features(), data.hidden_target_labels(), 1));
  CHECK(mt[0] == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(mt[1] == doctest::Approx(-10.0).epsilon(0.002));
}

TEST_CASE("drawn class means have the requested norm") {
  DomainShiftSpec spec;
  spec.class_separation = 4.0;
  const ShiftGeometry g = resolve_geometry(spec);
  REQUIRE(g.source_means.size() == spec.class_count);
  for (const auto& m : g.source_means) CHECK(l2_norm(m) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("generation is a pure function of the spec") {
  DomainShiftSpec spec;
  spec.seed = 77;
  const DatasetPair a = generate(spec), b = generate(spec);
  CHECK(a.source().features == b.source().features);
  CHECK(a.source().labels == b.source().labels);
  CHECK(a.target_features() == b.target_features());
  CHECK(a.hidden_target_labels() == b.hidden_target_labels());
  spec.seed = 78;
  CHECK(generate(spec).source().features != a.source().features);
}

TEST_CASE("dump round trip is exact") {
  oracle::Sampler s(9);
  LabeledBatch batch;
  for (int i = 0; i < 50; ++i) {
    FeatureVector row = s.gaussian(5, std::pow(10.0, s.uniform(-30.0, 30.0)));
    batch.features.push_back(row);
    batch.labels.push_back(s.index(4));
    batch.scores.push_back(s.uniform(0.0, 1.0));
  }
  batch.features[0] = {std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                       -std::numeric_limits<double>::min(), 0.1, 1.0 / 3.0};
  const fs::path path = scratch("roundtrip.csv");
  save_dump(to_dump(batch), path);
  const FeatureDump loaded = load_dump(path);
  CHECK(loaded.features == batch.features);
  CHECK(loaded.scores == batch.scores);
  const LabeledBatch back = to_labeled_batch(loaded);
  CHECK(back.labels == batch.labels);

  save_dump(unlabeled_dump(batch.features), path);
  const FeatureDump unlabeled = load_dump(path);
  CHECK(unlabeled.features == batch.features);
  CHECK(std::all_of(unlabeled.labels.begin(), unlabeled.labels.end(), [](long long l) { return l == -1; }));
  CHECK(std::all_of(unlabeled.scores.begin(), unlabeled.scores.end(), [](double v) { return v == -1.0; }));
  check_throws_code([&] { to_labeled_batch(unlabeled); }, ErrorCode::ParseError);
}

TEST_CASE("dump format") {
  LabeledBatch batch{{{1.5, -2.0}}, {3}, {}};
  CHECK(format_dump(to_dump(batch)) == "label,score,f0,f1\n3,-1,1.5,-2\n");
}

TEST_CASE("dump errors") {
  const fs::path path = scratch("bad.csv");
  write_text(path, "label,score,f0,f1\n0,-1,1,2\n1,-1,3\n");
  try {
    load_dump(path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  write_text(path, "");
  check_throws_code([&] { load_dump(path); }, ErrorCode::EmptyBatch);
  write_text(path, "label,score,f0\n");
  check_throws_code([&] { load_dump(path); }, ErrorCode::EmptyBatch);
  write_text(path, "label,score,f0\n0,-1,abc\n");
  check_throws_code([&] { load_dump(path); }, ErrorCode::ParseError);
  write_text(path, "a,b,c\n0,-1,1\n");
  check_throws_code([&] { load_dump(path); }, ErrorCode::ParseError);
  check_throws_code([&] { load_dump(scratch("does_not_exist.csv")); }, ErrorCode::IoError);
  check_throws_code([&] { save_dump(unlabeled_dump(std::vector<FeatureVector>{{1.0, 2.0}}), scratch("no/such/dir.csv")); },
                    ErrorCode::IoError);
}
