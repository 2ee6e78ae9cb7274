#include "alkd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace alkd {

double recall_at_k(std::span<const long> ranking, long target, size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const size_t limit = std::min(k, ranking.size());
  for (size_t i = 0; i < limit; ++i)
    if (ranking[i] == target) return 1.0;
  return 0.0;
}

double ndcg_at_k(std::span<const long> ranking, long target, size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const size_t limit = std::min(k, ranking.size());
  for (size_t i = 0; i < limit; ++i)
    if (ranking[i] == target) return 1.0 / std::log2(static_cast<double>(i) + 2.0);
  return 0.0;
}

size_t target_rank(const RecommenderModel& model, const EvalInstance& instance) {
  std::vector<double> enc = encode(model, instance.prefix);
  std::unordered_set<long> excluded(instance.prefix.begin(), instance.prefix.end());
  if (excluded.count(instance.target)) return 0;
  const double target_score = score_encoded(model, enc, instance.target);
  size_t rank = 1;
  for (long item = 0; item < static_cast<long>(model.n_items); ++item) {
    if (item == instance.target || excluded.count(item)) continue;
    const double s = score_encoded(model, enc, item);
    if (s > target_score || (s == target_score && item < instance.target)) ++rank;
  }
  return rank;
}

MetricsReport evaluate(const RecommenderModel& model,
                       std::span<const EvalInstance> instances,
                       const std::vector<size_t>& ks) {
  if (instances.empty()) throw std::runtime_error("no instances to evaluate");
  MetricsReport report;
  report.n_instances = instances.size();
  for (size_t k : ks) {
    report.recall[k] = 0.0;
    report.ndcg[k] = 0.0;
  }
  for (const EvalInstance& instance : instances) {
    const size_t rank = target_rank(model, instance);
    if (rank == 0) continue;  // target hidden by its own prefix
    for (size_t k : ks) {
      if (rank <= k) {
        report.recall[k] += 1.0;
        report.ndcg[k] += 1.0 / std::log2(static_cast<double>(rank) + 1.0);
      }
    }
  }
  for (size_t k : ks) {
    report.recall[k] /= static_cast<double>(instances.size());
    report.ndcg[k] /= static_cast<double>(instances.size());
  }
  return report;
}

MetricsReport SeededMetrics::mean() const {
  MetricsReport out;
  if (per_seed.empty()) return out;
  for (const auto& [seed, report] : per_seed) {
    out.n_instances = report.n_instances;
    for (const auto& [k, v] : report.recall) out.recall[k] += v;
    for (const auto& [k, v] : report.ndcg) out.ndcg[k] += v;
  }
  const double n = static_cast<double>(per_seed.size());
  for (auto& [k, v] : out.recall) v /= n;
  for (auto& [k, v] : out.ndcg) v /= n;
  return out;
}

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows,
                          const std::vector<size_t>& ks) {
  std::ostringstream out;
  size_t label_width = 5;
  for (const auto& [label, report] : rows) label_width = std::max(label_width, label.size());
  out << std::left;
  out.width(static_cast<std::streamsize>(label_width + 2));
  out << "model";
  char buf[32];
  for (size_t k : ks) {
    std::snprintf(buf, sizeof(buf), "recall@%zu", k);
    out << std::left << std::setw(12) << buf;
    std::snprintf(buf, sizeof(buf), "ndcg@%zu", k);
    out << std::left << std::setw(12) << buf;
  }
  out << '\n';
  for (const auto& [label, report] : rows) {
    out << std::left << std::setw(static_cast<std::streamsize>(label_width + 2)) << label;
    for (size_t k : ks) {
      std::snprintf(buf, sizeof(buf), "%.5f", report.recall.count(k) ? report.recall.at(k) : 0.0);
      out << std::left << std::setw(12) << buf;
      std::snprintf(buf, sizeof(buf), "%.5f", report.ndcg.count(k) ? report.ndcg.at(k) : 0.0);
      out << std::left << std::setw(12) << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace alkd
