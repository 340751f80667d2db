#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pacf/error.hpp"
#include "pacf/format.hpp"
#include "svg.hpp"

namespace pacf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "output directory '" + dir.string() + "' does not exist");
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write to '" + path.string() + "' failed");
}

std::string read_artifact(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::MissingArtifact, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DatasetFiles dataset_for(const ExperimentConfig& config, const fs::path& data_dir) {
  if (data_dir.empty()) return dataset_from(generate(config.benchmark));
  return load_dataset(data_dir);
}

void write_manifest(const fs::path& out, const std::string& command, const ExperimentConfig& config,
                    const std::vector<std::string>& files, json extra = json::object()) {
  json doc = {{"command", command},
              {"config_hash", config.hash()},
              {"config", json::parse(config.canonical_json())},
              {"files", files}};
  for (auto& [k, v] : extra.items()) doc[k] = v;
  write_file(out / "manifest.json", doc.dump(2) + "\n");
}

std::string report_json(const MetricsReport& report, const std::string& config_hash) {
  json doc = json::parse(report.to_json());
  doc["config_hash"] = config_hash;
  return doc.dump(2) + "\n";
}

std::vector<std::string> write_evaluation(const fs::path& out, const EvaluationResult& result,
                                          const std::string& config_hash) {
  write_file(out / "metrics.json", report_json(result.report, config_hash));
  write_file(out / "variance.csv", result.report.variance_csv());
  write_file(out / "mean_shift.csv", result.report.mean_shift_csv());
  write_file(out / "tp_ratio.csv", result.report.tp_ratio_csv());
  write_file(out / "summary.csv", result.report.summary_csv());
  write_file(out / "rank_pairs.csv", rank_pairs_csv(result.rank_pairs));
  write_file(out / "projection.csv", projection_csv(result.projection, result.projection_labels));
  return {"metrics.json", "variance.csv", "mean_shift.csv", "tp_ratio.csv",
          "summary.csv", "rank_pairs.csv", "projection.csv"};
}

// Rows of a small numeric CSV with a known header.
std::vector<std::vector<double>> read_table(const fs::path& path, const std::string& header) {
  std::istringstream in(read_artifact(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw Error(ErrorCode::ParseError, path.string() + ":1: expected header '" + header + "'");
  }
  const std::size_t columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::vector<std::vector<double>> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    const std::string where = path.string() + ":" + std::to_string(n);
    while (std::getline(cells, cell, ',')) row.push_back(parse_double(cell, where));
    if (row.size() != columns) throw Error(ErrorCode::ParseError, where + ": expected " + std::to_string(columns) + " columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

struct RunArtifacts {
  MetricsReport report;
  std::string config_hash;
  std::vector<std::vector<double>> rank_pairs;
  std::vector<std::vector<double>> projection;
};

RunArtifacts load_run(const fs::path& dir) {
  RunArtifacts run;
  const std::string metrics = read_artifact(dir / "metrics.json");
  run.report = MetricsReport::from_json(metrics);
  const json doc = json::parse(metrics, nullptr, false);
  if (doc.is_object() && doc.contains("config_hash")) run.config_hash = doc["config_hash"].get<std::string>();
  run.rank_pairs = read_table(dir / "rank_pairs.csv", "index,predicted,linear_score,prototype_cosine");
  run.projection = read_table(dir / "projection.csv", "label,pc1,pc2");
  return run;
}

using Column = std::map<std::string, double>;

// One comparison table: rows in the given order, one column per run, and a
// last-minus-first delta column when there are at least two runs.
std::string comparison_csv(const std::string& key, const std::vector<std::string>& row_names,
                           const std::vector<std::string>& names, const std::vector<Column>& columns) {
  std::string out = key;
  for (const auto& n : names) out += "," + n;
  if (names.size() >= 2) out += ",delta";
  out += "\n";
  for (const auto& row : row_names) {
    out += row;
    std::vector<std::optional<double>> values;
    for (const auto& c : columns) {
      const auto it = c.find(row);
      values.push_back(it == c.end() ? std::nullopt : std::optional<double>(it->second));
      out += "," + (values.back() ? format_double(*values.back()) : std::string());
    }
    if (names.size() >= 2) {
      out += ",";
      if (values.front() && values.back()) out += format_double(*values.back() - *values.front());
    }
    out += "\n";
  }
  return out;
}

std::vector<std::string> class_rows(const std::vector<Column>& columns) {
  std::set<long long> classes;
  for (const auto& c : columns) {
    for (const auto& [k, v] : c) {
      if (k != "avg.") classes.insert(std::stoll(k));
    }
  }
  std::vector<std::string> rows;
  for (long long k : classes) rows.push_back(std::to_string(k));
  rows.push_back("avg.");
  return rows;
}

Column class_column(const ClassMetric& metric, double average) {
  Column c;
  for (const auto& [k, v] : metric) c[std::to_string(k)] = v;
  c["avg."] = average;
  return c;
}

}  // namespace

void cmd_gen(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  require_dir(out);
  save_dataset(dataset_from(generate(config.benchmark)), out);
  write_manifest(out, "gen", config, {"source.csv", "target.csv", "target_hidden.csv"});
}

void cmd_train(const ExperimentConfig& config, const fs::path& data_dir, const fs::path& out) {
  require_dir(out);
  const DatasetFiles data = dataset_for(config, data_dir);
  const TrainingOutcome outcome = run_training(config, data);
  const std::string hash = config.hash();

  write_file(out / "checkpoint.json", make_checkpoint(outcome.state, hash).to_json() + "\n");
  std::string losses = step_record_csv_header() + "\n";
  for (const auto& r : outcome.history) losses += to_csv_row(r) + "\n";
  write_file(out / "losses.csv", losses);
  write_file(out / "warmup_metrics.json", report_json(outcome.warmup_evaluation.report, hash));
  std::vector<std::string> files = {"checkpoint.json", "losses.csv", "warmup_metrics.json"};
  for (auto& f : write_evaluation(out, outcome.final_evaluation, hash)) files.push_back(std::move(f));
  write_manifest(out, "train", config, files,
                 {{"data", data_dir.empty() ? std::string("generated") : data_dir.string()},
                  {"steps", outcome.state.step}});
}

void cmd_eval(const ExperimentConfig& config, const fs::path& checkpoint_path, const fs::path& data_dir,
              const fs::path& out) {
  config.validate();
  require_dir(out);
  const Checkpoint checkpoint = Checkpoint::from_json(read_artifact(checkpoint_path));
  const DatasetFiles data = dataset_for(config, data_dir);
  require_same_size(checkpoint.student.input_dim(), common_dimension(data.source.features),
                    "checkpoint input dimension vs data");
  const EvaluationResult result =
      evaluate_checkpoint(checkpoint, data, config.effective_trainer().pseudo_threshold);
  const std::string hash = config.hash();
  write_manifest(out, "eval", config, write_evaluation(out, result, hash),
                 {{"checkpoint", checkpoint_path.string()},
                  {"checkpoint_config_hash", checkpoint.config_hash},
                  {"checkpoint_step", checkpoint.step},
                  {"data", data_dir.empty() ? std::string("generated") : data_dir.string()}});
}

std::vector<std::string> run_names(const std::vector<fs::path>& runs) {
  std::vector<std::string> names;
  std::map<std::string, int> seen;
  for (const auto& r : runs) {
    fs::path p = r;
    if (!p.has_filename()) p = p.parent_path();
    std::string name = p.filename().string();
    if (name.empty() || name == "." || name == "..") name = "run";
    for (char& c : name) {
      if (c == ',' || c == '"' || c == '\n') c = '_';
    }
    const int n = ++seen[name];
    names.push_back(n == 1 ? name : name + "#" + std::to_string(n));
  }
  return names;
}

void cmd_report(const std::vector<fs::path>& runs, const fs::path& out) {
  if (runs.empty()) throw Error(ErrorCode::InvalidArgument, "report needs at least one run directory");
  require_dir(out);
  const std::vector<std::string> names = run_names(runs);
  std::vector<RunArtifacts> loaded;
  for (const auto& r : runs) loaded.push_back(load_run(r));

  std::vector<Column> variance, shift, tp, summary;
  for (const auto& run : loaded) {
    const MetricsReport& m = run.report;
    variance.push_back(class_column(m.target_variance, m.avg_target_variance()));
    shift.push_back(class_column(m.mean_shift, m.avg_mean_shift()));
    Column t;
    for (const auto& [k, r] : m.tp_ratio) t[std::to_string(k)] = r.value();
    t["avg."] = m.avg_tp_ratio();
    tp.push_back(std::move(t));
    summary.push_back({{"avg_source_variance", m.avg_source_variance()},
                       {"avg_target_variance", m.avg_target_variance()},
                       {"avg_mean_shift", m.avg_mean_shift()},
                       {"proxy_a_distance", m.proxy_a_distance},
                       {"spearman_rho", m.spearman_rho},
                       {"kendall_tau", m.kendall_tau},
                       {"avg_tp_ratio", m.avg_tp_ratio()},
                       {"pseudo_count", static_cast<double>(m.pseudo_count)}});
  }
  write_file(out / "variance_comparison.csv", comparison_csv("class", class_rows(variance), names, variance));
  write_file(out / "mean_shift_comparison.csv", comparison_csv("class", class_rows(shift), names, shift));
  write_file(out / "tp_ratio_comparison.csv", comparison_csv("class", class_rows(tp), names, tp));
  write_file(out / "summary_comparison.csv",
             comparison_csv("metric",
                            {"avg_source_variance", "avg_target_variance", "avg_mean_shift", "proxy_a_distance",
                             "spearman_rho", "kendall_tau", "avg_tp_ratio", "pseudo_count"},
                            names, summary));

  std::vector<std::string> files = {"variance_comparison.csv", "mean_shift_comparison.csv",
                                    "tp_ratio_comparison.csv", "summary_comparison.csv"};
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    const RunArtifacts& run = loaded[i];
    ScatterPlot rank;
    rank.title = "Linear score vs prototype cosine (" + names[i] + ")";
    rank.x_label = "linear classification score";
    rank.y_label = "cosine similarity to target prototype";
    rank.notes = {"ρ = " + format_double(run.report.spearman_rho),
                  "τ = " + format_double(run.report.kendall_tau)};
    rank.description = "config_hash " + run.config_hash;
    for (const auto& row : run.rank_pairs) rank.points.push_back({row[2], row[3], static_cast<int>(row[1])});
    const std::string rank_file = "rank_scatter_" + names[i] + ".svg";
    write_file(out / rank_file, render_svg(rank));

    ScatterPlot proj;
    proj.title = "Target embeddings, first two principal components (" + names[i] + ")";
    proj.x_label = "PC1";
    proj.y_label = "PC2";
    proj.description = "config_hash " + run.config_hash;
    for (const auto& row : run.projection) proj.points.push_back({row[1], row[2], static_cast<int>(row[0])});
    const std::string proj_file = "projection_" + names[i] + ".svg";
    write_file(out / proj_file, render_svg(proj));
    files.push_back(rank_file);
    files.push_back(proj_file);
  }

  json manifest = {{"command", "report"}, {"files", files}, {"runs", json::array()}};
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    manifest["runs"].push_back({{"name", names[i]}, {"path", runs[i].string()}, {"config_hash", loaded[i].config_hash}});
  }
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace pacf::cli
