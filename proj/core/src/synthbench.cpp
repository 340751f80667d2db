#include "pacf/synthbench.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "pacf/error.hpp"
#include "pacf/format.hpp"
#include "pacf/random.hpp"

namespace pacf {

namespace {

void require_spec(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidSpec, what);
}

FeatureVector random_direction(std::size_t dim, double length, Rng& rng) {
  FeatureVector v(dim);
  for (double& x : v) x = rng.normal();
  FeatureVector unit = l2_normalize(v);
  for (double& x : unit) x *= length;
  return unit;
}

ShiftGeometry draw_geometry(const DomainShiftSpec& spec, Rng& rng) {
  ShiftGeometry g;
  g.source_means = spec.source_means;
  if (g.source_means.empty()) {
    for (std::size_t k = 0; k < spec.class_count; ++k) {
      g.source_means.push_back(random_direction(spec.dim, spec.class_separation, rng));
    }
  }
  g.target_shifts = spec.target_shifts;
  if (g.target_shifts.empty()) {
    FeatureVector shift(spec.dim, 0.0);
    shift[0] = spec.shift_magnitude;
    g.target_shifts.assign(spec.class_count, shift);
  }
  return g;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

void DomainShiftSpec::validate() const {
  require_spec(class_count >= 1, "class_count must be at least 1");
  require_spec(dim >= 2, "dim must be at least 2");
  require_spec(source_std > 0.0 && std::isfinite(source_std), "source_std must be positive");
  require_spec(target_std_multiplier >= 1.0 && std::isfinite(target_std_multiplier),
               "target_std_multiplier must be at least 1");
  require_spec(samples_per_class >= 1, "samples_per_class must be at least 1");
  require_spec(std::isfinite(class_separation) && class_separation >= 0.0,
               "class_separation must be finite and non-negative");
  require_spec(std::isfinite(shift_magnitude) && shift_magnitude >= 0.0,
               "shift_magnitude must be finite and non-negative");
  for (const auto* list : {&source_means, &target_shifts}) {
    if (list->empty()) continue;
    require_spec(list->size() == class_count, "explicit means/shifts need one vector per class");
    for (const FeatureVector& v : *list) {
      require_spec(v.size() == dim, "explicit means/shifts must have dimension dim");
      for (double x : v) require_spec(std::isfinite(x), "explicit means/shifts must be finite");
    }
  }
}

DatasetPair::DatasetPair(LabeledBatch source, std::vector<FeatureVector> target,
                         std::vector<ClassId> hidden_target_labels)
    : source_(std::move(source)), target_(std::move(target)), hidden_(std::move(hidden_target_labels)) {
  source_.validate();
  require_same_size(target_.size(), hidden_.size(), "hidden target labels");
}

ShiftGeometry resolve_geometry(const DomainShiftSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  return draw_geometry(spec, rng);
}

DatasetPair generate(const DomainShiftSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const ShiftGeometry geometry = draw_geometry(spec, rng);
  const auto& means = geometry.source_means;
  const auto& shifts = geometry.target_shifts;

  LabeledBatch source;
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    for (std::size_t n = 0; n < spec.samples_per_class; ++n) {
      FeatureVector x(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) x[j] = means[k][j] + spec.source_std * rng.normal();
      source.features.push_back(std::move(x));
      source.labels.push_back(k);
    }
  }
  const double target_std = spec.source_std * spec.target_std_multiplier;
  std::vector<FeatureVector> target;
  std::vector<ClassId> hidden;
  for (std::size_t k = 0; k < spec.class_count; ++k) {
    for (std::size_t n = 0; n < spec.samples_per_class; ++n) {
      FeatureVector x(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        x[j] = means[k][j] + shifts[k][j] + target_std * rng.normal();
      }
      target.push_back(std::move(x));
      hidden.push_back(k);
    }
  }
  return DatasetPair(std::move(source), std::move(target), std::move(hidden));
}

FeatureDump to_dump(const LabeledBatch& batch) {
  batch.validate();
  FeatureDump dump;
  dump.features = batch.features;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    dump.labels.push_back(static_cast<long long>(batch.labels[i]));
    dump.scores.push_back(batch.scores.empty() ? -1.0 : batch.scores[i]);
  }
  return dump;
}

FeatureDump unlabeled_dump(std::span<const FeatureVector> features) {
  FeatureDump dump;
  dump.features.assign(features.begin(), features.end());
  dump.labels.assign(features.size(), -1);
  dump.scores.assign(features.size(), -1.0);
  return dump;
}

LabeledBatch to_labeled_batch(const FeatureDump& dump) {
  LabeledBatch batch;
  batch.features = dump.features;
  for (std::size_t i = 0; i < dump.size(); ++i) {
    if (dump.labels[i] < 0) {
      throw Error(ErrorCode::ParseError, "row " + std::to_string(i + 1) + " is unlabeled");
    }
    batch.labels.push_back(static_cast<ClassId>(dump.labels[i]));
  }
  return batch;
}

std::string format_dump(const FeatureDump& dump) {
  require_same_size(dump.features.size(), dump.labels.size(), "dump labels");
  require_same_size(dump.features.size(), dump.scores.size(), "dump scores");
  const std::size_t dim = common_dimension(dump.features);
  std::string out = "label,score";
  for (std::size_t j = 0; j < dim; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < dump.size(); ++i) {
    out += std::to_string(dump.labels[i]);
    out += ',';
    out += format_double(dump.scores[i]);
    for (double v : dump.features[i]) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_dump(const FeatureDump& dump, const std::filesystem::path& path) {
  const std::string text = format_dump(dump);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

FeatureDump load_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  const std::string where = path.string();

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::EmptyBatch, where + ": file is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "label" || header[1] != "score") {
    throw Error(ErrorCode::ParseError, where + ":1: expected header label,score,f0,...");
  }
  for (std::size_t j = 2; j < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j - 2)) {
      throw Error(ErrorCode::ParseError, where + ":1: unexpected column '" + std::string(header[j]) + "'");
    }
  }
  const std::size_t dim = header.size() - 2;

  FeatureDump dump;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string context = where + ":" + std::to_string(line_no);
    const auto cells = split_commas(line);
    if (cells.size() != dim + 2) {
      throw Error(ErrorCode::ParseError, context + ": expected " + std::to_string(dim + 2) +
                                             " columns, found " + std::to_string(cells.size()));
    }
    const long long label = parse_integer(cells[0], context);
    if (label < -1) throw Error(ErrorCode::ParseError, context + ": label must be >= -1");
    dump.labels.push_back(label);
    dump.scores.push_back(parse_double(cells[1], context));
    FeatureVector row(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      row[j] = parse_double(cells[j + 2], context);
      if (!std::isfinite(row[j])) throw Error(ErrorCode::ParseError, context + ": non-finite feature");
    }
    dump.features.push_back(std::move(row));
  }
  if (dump.features.empty()) throw Error(ErrorCode::EmptyBatch, where + ": no data rows");
  return dump;
}

}  // namespace pacf
