#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "alkd/backbone.hpp"
#include "alkd/dataset.hpp"

namespace alkd {

// Single-target hit rate: 1 when the target is in the first k, else 0.
double recall_at_k(std::span<const long> ranking, long target, size_t k);

// 1/log2(rank+1) when the target sits at 1-based rank <= k, else 0; the
// ideal DCG for a single target is 1.
double ndcg_at_k(std::span<const long> ranking, long target, size_t k);

// 1-based rank of the target among all non-prefix items under (score desc,
// id asc) ordering; equivalent to searching the full rank() output. Returns
// 0 when the target repeats inside its own prefix and is therefore never
// ranked (such instances score zero on every metric).
size_t target_rank(const RecommenderModel& model, const EvalInstance& instance);

struct MetricsReport {
  std::map<size_t, double> recall;  // k -> mean over instances
  std::map<size_t, double> ndcg;
  size_t n_instances = 0;
};

MetricsReport evaluate(const RecommenderModel& model,
                       std::span<const EvalInstance> instances,
                       const std::vector<size_t>& ks = {5, 10});

// Per-seed reports plus their mean, for the "average of five runs" protocol.
struct SeededMetrics {
  std::vector<std::pair<uint64_t, MetricsReport>> per_seed;

  MetricsReport mean() const;
};

std::string metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows,
                          const std::vector<size_t>& ks);

}  // namespace alkd
