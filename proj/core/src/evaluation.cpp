#include "pacf/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include "pacf/error.hpp"
#include "pacf/format.hpp"

namespace pacf {

std::size_t resolve_thread_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PACF_THREADS"); env != nullptr && *env != '\0') {
    const long long n = parse_integer(env, "PACF_THREADS");
    if (n < 1) throw Error(ErrorCode::InvalidConfig, "PACF_THREADS must be at least 1");
    return static_cast<std::size_t>(n);
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::min(std::max<std::size_t>(threads, 1), n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

EvaluationResult evaluate(const EvaluationInputs& in, std::size_t threads) {
  in.source.validate();
  if (in.source.empty() || in.target.empty()) {
    throw Error(ErrorCode::EmptyBatch, "evaluation needs source and target data");
  }
  require_same_size(in.target.size(), in.hidden_target_labels.size(), "hidden target labels");
  require_same_size(common_dimension(in.source.features), in.student.input_dim(), "source data vs model input");
  require_same_size(common_dimension(in.target), in.student.input_dim(), "target data vs model input");
  require_same_size(in.teacher.input_dim(), in.student.input_dim(), "teacher vs student input");
  require_same_size(in.target_prototypes.dim(), in.student.feature_dim(), "target prototype dimension");
  threads = resolve_thread_count(threads);

  std::vector<FeatureVector> source_embeddings(in.source.size());
  parallel_for(in.source.size(), threads, [&](std::size_t i) {
    source_embeddings[i] = forward(in.student, in.source.features[i]).embedding;
  });
  std::vector<ForwardResult> target_forward(in.target.size());
  std::vector<ProbabilityVector> teacher_probs(in.target.size());
  parallel_for(in.target.size(), threads, [&](std::size_t i) {
    target_forward[i] = forward(in.student, in.target[i]);
    teacher_probs[i] = forward(in.teacher, in.target[i]).probs;
  });
  std::vector<FeatureVector> target_embeddings;
  target_embeddings.reserve(target_forward.size());
  for (const auto& f : target_forward) target_embeddings.push_back(f.embedding);

  EvaluationResult out;
  MetricsReport& r = out.report;
  r.source_variance = intra_class_variance(source_embeddings, in.source.labels);
  r.target_variance = intra_class_variance(target_embeddings, in.hidden_target_labels);
  r.mean_shift = mean_shift(source_embeddings, in.source.labels, target_embeddings, in.hidden_target_labels);
  r.proxy_a_distance = proxy_a_distance(source_embeddings, target_embeddings);

  for (std::size_t i = 0; i < target_forward.size(); ++i) {
    const auto [k, score] = top_class(in.student, target_forward[i].probs);
    if (!in.target_prototypes.is_initialized(k)) continue;
    out.rank_pairs.push_back(
        RankPair{i, k, score, cosine_similarity(target_forward[i].embedding, in.target_prototypes.at(k))});
  }
  if (out.rank_pairs.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& p : out.rank_pairs) {
      xs.push_back(p.linear_score);
      ys.push_back(p.prototype_cosine);
    }
    r.spearman_rho = spearman_rho(xs, ys);
    r.kendall_tau = kendall_tau(xs, ys);
  }

  std::vector<std::size_t> pseudo_indices;
  std::vector<ClassId> pseudo_labels;
  for (std::size_t i = 0; i < teacher_probs.size(); ++i) {
    const auto [k, score] = top_class(in.teacher, teacher_probs[i]);
    if (score >= in.pseudo_threshold) {
      pseudo_indices.push_back(i);
      pseudo_labels.push_back(k);
    }
  }
  r.tp_ratio = tp_ratio(pseudo_indices, pseudo_labels, in.hidden_target_labels);
  r.pseudo_count = pseudo_indices.size();

  if (target_embeddings.size() >= 3 && in.student.feature_dim() >= 2) {
    out.projection = pca_project_2d(target_embeddings);
    out.projection_labels.assign(in.hidden_target_labels.begin(), in.hidden_target_labels.end());
  }
  return out;
}

std::string rank_pairs_csv(std::span<const RankPair> pairs) {
  std::string out = "index,predicted,linear_score,prototype_cosine\n";
  for (const auto& p : pairs) {
    out += std::to_string(p.index) + "," + std::to_string(p.predicted) + "," + format_double(p.linear_score) +
           "," + format_double(p.prototype_cosine) + "\n";
  }
  return out;
}

std::string projection_csv(std::span<const Point2> points, std::span<const ClassId> labels) {
  require_same_size(points.size(), labels.size(), "projection labels");
  std::string out = "label,pc1,pc2\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out += std::to_string(labels[i]) + "," + format_double(points[i][0]) + "," + format_double(points[i][1]) + "\n";
  }
  return out;
}

}  // namespace pacf
