#include "pacf/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <numeric>

#include "pacf/data.hpp"
#include "pacf/error.hpp"
#include "pacf/format.hpp"
#include "pacf/random.hpp"

namespace pacf {

namespace {

using nlohmann::json;

struct ClassAccumulator {
  FeatureVector sum;
  std::size_t count = 0;
};

std::map<ClassId, ClassAccumulator> class_sums(std::span<const FeatureVector> features,
                                               std::span<const ClassId> labels) {
  require_same_size(features.size(), labels.size(), "features vs labels");
  const std::size_t dim = common_dimension(features);
  std::map<ClassId, ClassAccumulator> acc;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& a = acc[labels[i]];
    if (a.sum.empty()) a.sum.assign(dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) a.sum[j] += features[i][j];
    ++a.count;
  }
  return acc;
}

FeatureVector mean_of(const ClassAccumulator& a) {
  FeatureVector m = a.sum;
  for (double& v : m) v /= static_cast<double>(a.count);
  return m;
}

void require_pairs(std::span<const double> xs, std::span<const double> ys) {
  require_same_size(xs.size(), ys.size(), "rank correlation inputs");
  if (xs.size() < 2) throw Error(ErrorCode::InsufficientSamples, "rank correlation needs at least 2 pairs");
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// Number of pairs i < j with values[i] > values[j]; sorts `values`.
std::int64_t count_inversions(std::vector<double>& values) {
  std::vector<double> buffer(values.size());
  std::int64_t inversions = 0;
  for (std::size_t width = 1; width < values.size(); width *= 2) {
    for (std::size_t lo = 0; lo < values.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, values.size());
      const std::size_t hi = std::min(lo + 2 * width, values.size());
      std::size_t i = lo, j = mid, out = lo;
      while (i < mid && j < hi) {
        if (values[j] < values[i]) {
          inversions += static_cast<std::int64_t>(mid - i);
          buffer[out++] = values[j++];
        } else {
          buffer[out++] = values[i++];
        }
      }
      while (i < mid) buffer[out++] = values[i++];
      while (j < hi) buffer[out++] = values[j++];
    }
    values.swap(buffer);
  }
  return inversions;
}

// Sum of t(t-1)/2 over runs of equal adjacent elements.
template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq&& equal_adjacent) {
  std::int64_t ties = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < n; ++i) {
    if (equal_adjacent(i)) {
      ++run;
    } else {
      ties += run * (run - 1) / 2;
      run = 1;
    }
  }
  return ties + run * (run - 1) / 2;
}

double logistic(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

json class_metric_json(const ClassMetric& m) {
  json out = json::object();
  for (const auto& [k, v] : m) out[std::to_string(k)] = v;
  return out;
}

ClassMetric class_metric_from_json(const json& doc) {
  ClassMetric m;
  for (const auto& [k, v] : doc.items()) m[std::stoul(k)] = v.get<double>();
  return m;
}

std::string cell(const ClassMetric& m, ClassId k) {
  const auto it = m.find(k);
  return it == m.end() ? std::string() : format_double(it->second);
}

}  // namespace

ClassMetric intra_class_variance(std::span<const FeatureVector> features,
                                 std::span<const ClassId> labels) {
  const auto sums = class_sums(features, labels);
  std::map<ClassId, FeatureVector> means;
  for (const auto& [k, a] : sums) means[k] = mean_of(a);
  std::map<ClassId, double> squares;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const FeatureVector& m = means[labels[i]];
    double s = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double d = features[i][j] - m[j];
      s += d * d;
    }
    squares[labels[i]] += s;
  }
  ClassMetric out;
  for (const auto& [k, a] : sums) {
    if (a.count < 2) continue;
    out[k] = squares[k] / static_cast<double>(a.count - 1);
  }
  return out;
}

ClassMetric mean_shift(std::span<const FeatureVector> source_features,
                       std::span<const ClassId> source_labels,
                       std::span<const FeatureVector> target_features,
                       std::span<const ClassId> target_labels) {
  const auto src = class_sums(source_features, source_labels);
  const auto tgt = class_sums(target_features, target_labels);
  ClassMetric out;
  for (const auto& [k, a] : src) {
    const auto it = tgt.find(k);
    if (it == tgt.end()) continue;
    const FeatureVector ms = mean_of(a);
    const FeatureVector mt = mean_of(it->second);
    require_same_size(ms.size(), mt.size(), "source vs target dimension");
    double s = 0.0;
    for (std::size_t j = 0; j < ms.size(); ++j) s += (ms[j] - mt[j]) * (ms[j] - mt[j]);
    out[k] = std::sqrt(s);
  }
  return out;
}

double class_average(const ClassMetric& metric) {
  if (metric.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& [k, v] : metric) sum += v;
  return sum / static_cast<double>(metric.size());
}

double proxy_a_distance_from_error(double error) {
  return std::clamp(2.0 * (1.0 - error), 0.0, 2.0);
}

double proxy_a_distance(std::span<const FeatureVector> source,
                        std::span<const FeatureVector> target,
                        const ProxyADistanceOptions& options) {
  if (source.size() < 20 || target.size() < 20) {
    throw Error(ErrorCode::InsufficientSamples, "proxy A-distance needs at least 20 samples per domain");
  }
  const std::size_t dim = common_dimension(source);
  require_same_size(common_dimension(target), dim, "source vs target dimension");

  // Half of each domain trains, the other half is held out.
  std::vector<const FeatureVector*> train_x, test_x;
  std::vector<double> train_y, test_y;
  Rng rng(options.seed);
  for (const auto& [rows, label] : {std::pair{source, 1.0}, std::pair{target, 0.0}}) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    const std::size_t half = rows.size() / 2;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto& xs = i < half ? train_x : test_x;
      auto& ys = i < half ? train_y : test_y;
      xs.push_back(&rows[order[i]]);
      ys.push_back(label);
    }
  }

  FeatureVector mean(dim, 0.0), scale(dim, 0.0);
  for (const auto* x : train_x) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += (*x)[j];
  }
  for (double& m : mean) m /= static_cast<double>(train_x.size());
  for (const auto* x : train_x) {
    for (std::size_t j = 0; j < dim; ++j) scale[j] += ((*x)[j] - mean[j]) * ((*x)[j] - mean[j]);
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(train_x.size()));
    if (s < 1e-12) s = 1.0;
  }
  auto standardized = [&](const FeatureVector& x) {
    FeatureVector z(dim);
    for (std::size_t j = 0; j < dim; ++j) z[j] = (x[j] - mean[j]) / scale[j];
    return z;
  };
  std::vector<FeatureVector> train_z;
  for (const auto* x : train_x) train_z.push_back(standardized(*x));

  FeatureVector w(dim, 0.0);
  double b = 0.0;
  const double n = static_cast<double>(train_z.size());
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    FeatureVector gw(dim, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < train_z.size(); ++i) {
      const double r = logistic(dot(w, train_z[i]) + b) - train_y[i];
      for (std::size_t j = 0; j < dim; ++j) gw[j] += r * train_z[i][j];
      gb += r;
    }
    for (std::size_t j = 0; j < dim; ++j) w[j] -= options.learning_rate * (gw[j] / n + options.l2 * w[j]);
    b -= options.learning_rate * gb / n;
  }

  std::size_t errors = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    const double predicted = dot(w, standardized(*test_x[i])) + b >= 0.0 ? 1.0 : 0.0;
    if (predicted != test_y[i]) ++errors;
  }
  return proxy_a_distance_from_error(static_cast<double>(errors) / static_cast<double>(test_x.size()));
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys);
  return pearson(average_ranks(xs), average_ranks(ys));
}

double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys);
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] < xs[b] || (xs[a] == xs[b] && ys[a] < ys[b]);
  });

  const std::int64_t x_ties = tied_pairs(n, [&](std::size_t i) { return xs[order[i]] == xs[order[i - 1]]; });
  const std::int64_t joint_ties = tied_pairs(n, [&](std::size_t i) {
    return xs[order[i]] == xs[order[i - 1]] && ys[order[i]] == ys[order[i - 1]];
  });
  std::vector<double> y_sorted(n);
  for (std::size_t i = 0; i < n; ++i) y_sorted[i] = ys[order[i]];
  const std::int64_t discordant = count_inversions(y_sorted);
  const std::int64_t y_ties = tied_pairs(n, [&](std::size_t i) { return y_sorted[i] == y_sorted[i - 1]; });

  const std::int64_t total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const double numerator = static_cast<double>(total - x_ties - y_ties + joint_ties - 2 * discordant);
  const double denominator = std::sqrt(static_cast<double>(total - x_ties)) *
                             std::sqrt(static_cast<double>(total - y_ties));
  if (denominator == 0.0) return 0.0;
  return std::clamp(numerator / denominator, -1.0, 1.0);
}

std::map<ClassId, ClassRatio> tp_ratio(std::span<const std::size_t> pseudo_indices,
                                       std::span<const ClassId> pseudo_labels,
                                       std::span<const ClassId> hidden_labels) {
  require_same_size(pseudo_indices.size(), pseudo_labels.size(), "pseudo indices vs labels");
  std::map<ClassId, ClassRatio> out;
  for (std::size_t i = 0; i < pseudo_indices.size(); ++i) {
    if (pseudo_indices[i] >= hidden_labels.size()) {
      throw Error(ErrorCode::InvalidArgument, "pseudo label index " + std::to_string(pseudo_indices[i]) +
                                                  " out of range");
    }
    ClassRatio& r = out[pseudo_labels[i]];
    ++r.total;
    if (hidden_labels[pseudo_indices[i]] == pseudo_labels[i]) ++r.correct;
  }
  return out;
}

double tp_average(const std::map<ClassId, ClassRatio>& ratios) {
  if (ratios.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& [k, r] : ratios) sum += r.value();
  return sum / static_cast<double>(ratios.size());
}

std::vector<Point2> pca_project_2d(std::span<const FeatureVector> features) {
  if (features.size() < 3) throw Error(ErrorCode::InsufficientSamples, "PCA needs at least 3 samples");
  const std::size_t dim = common_dimension(features);
  if (dim < 2) throw Error(ErrorCode::InsufficientSamples, "PCA needs dimension >= 2");

  Eigen::MatrixXd data(features.size(), dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) data(i, j) = features[i][j];
  }
  const Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
  const Eigen::MatrixXd cov = (data.transpose() * data) / static_cast<double>(features.size() - 1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "PCA eigen-decomposition failed");

  // Eigenvalues come back ascending.
  Eigen::MatrixXd components(dim, 2);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(dim) - 1 - c);
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    if (v(largest) < 0.0) v = -v;
    components.col(c) = v;
  }
  const Eigen::MatrixXd projected = data * components;
  std::vector<Point2> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    out[i] = {projected(static_cast<Eigen::Index>(i), 0), projected(static_cast<Eigen::Index>(i), 1)};
  }
  return out;
}

std::string MetricsReport::to_json() const {
  json tp = json::object();
  for (const auto& [k, r] : tp_ratio) {
    tp[std::to_string(k)] = {{"correct", r.correct}, {"total", r.total}, {"ratio", r.value()}};
  }
  json doc = {
      {"per_class_variance",
       {{"source", class_metric_json(source_variance)}, {"target", class_metric_json(target_variance)}}},
      {"avg_variance", {{"source", avg_source_variance()}, {"target", avg_target_variance()}}},
      {"mean_shift", class_metric_json(mean_shift)},
      {"avg_mean_shift", avg_mean_shift()},
      {"proxy_a_distance", proxy_a_distance},
      {"spearman_rho", spearman_rho},
      {"kendall_tau", kendall_tau},
      {"tp_ratio", tp},
      {"avg_tp_ratio", avg_tp_ratio()},
      {"pseudo_count", pseudo_count},
  };
  return doc.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    MetricsReport r;
    r.source_variance = class_metric_from_json(doc.at("per_class_variance").at("source"));
    r.target_variance = class_metric_from_json(doc.at("per_class_variance").at("target"));
    r.mean_shift = class_metric_from_json(doc.at("mean_shift"));
    r.proxy_a_distance = doc.at("proxy_a_distance").get<double>();
    r.spearman_rho = doc.at("spearman_rho").get<double>();
    r.kendall_tau = doc.at("kendall_tau").get<double>();
    for (const auto& [k, v] : doc.at("tp_ratio").items()) {
      r.tp_ratio[std::stoul(k)] = ClassRatio{v.at("correct").get<std::size_t>(), v.at("total").get<std::size_t>()};
    }
    r.pseudo_count = doc.at("pseudo_count").get<std::size_t>();
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("metrics report: ") + e.what());
  }
}

std::string MetricsReport::variance_csv() const {
  std::map<ClassId, bool> classes;
  for (const auto& [k, v] : source_variance) classes[k] = true;
  for (const auto& [k, v] : target_variance) classes[k] = true;
  std::string out = "class,source,target\n";
  for (const auto& [k, unused] : classes) {
    out += std::to_string(k) + "," + cell(source_variance, k) + "," + cell(target_variance, k) + "\n";
  }
  out += "avg.," + format_double(avg_source_variance()) + "," + format_double(avg_target_variance()) + "\n";
  return out;
}

std::string MetricsReport::mean_shift_csv() const {
  std::string out = "class,mean_shift\n";
  for (const auto& [k, v] : mean_shift) out += std::to_string(k) + "," + format_double(v) + "\n";
  out += "avg.," + format_double(avg_mean_shift()) + "\n";
  return out;
}

std::string MetricsReport::tp_ratio_csv() const {
  std::string out = "class,correct,total,tp_ratio\n";
  std::size_t correct = 0, total = 0;
  for (const auto& [k, r] : tp_ratio) {
    out += std::to_string(k) + "," + std::to_string(r.correct) + "," + std::to_string(r.total) + "," +
           format_double(r.value()) + "\n";
    correct += r.correct;
    total += r.total;
  }
  out += "avg.," + std::to_string(correct) + "," + std::to_string(total) + "," + format_double(avg_tp_ratio()) + "\n";
  return out;
}

std::string MetricsReport::summary_csv() const {
  std::string out = "metric,value\n";
  out += "avg_source_variance," + format_double(avg_source_variance()) + "\n";
  out += "avg_target_variance," + format_double(avg_target_variance()) + "\n";
  out += "avg_mean_shift," + format_double(avg_mean_shift()) + "\n";
  out += "proxy_a_distance," + format_double(proxy_a_distance) + "\n";
  out += "spearman_rho," + format_double(spearman_rho) + "\n";
  out += "kendall_tau," + format_double(kendall_tau) + "\n";
  out += "avg_tp_ratio," + format_double(avg_tp_ratio()) + "\n";
  out += "pseudo_count," + std::to_string(pseudo_count) + "\n";
  return out;
}

}  // namespace pacf
