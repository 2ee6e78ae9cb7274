#include "alkd/distill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "alkd/rng.hpp"

namespace alkd {

double alpha_weight(int position, const std::array<double, 3>& alpha) {
  if (position < 1) throw std::invalid_argument("ranking position must be >= 1");
  if (position <= 5) return alpha[0];
  if (position <= 15) return alpha[1];
  if (position <= 25) return alpha[2];
  return 0.0;
}

std::vector<RankPair> distill_pairs(const EvalInstance& instance,
                                    const TeacherRanking& ranking,
                                    const std::map<long, long>& negatives,
                                    const std::array<double, 3>& alpha) {
  if (instance.prefix.empty())
    throw std::runtime_error("instance " + std::to_string(instance.sid) +
                             " has an empty prefix");
  std::unordered_set<long> forbidden(instance.prefix.begin(), instance.prefix.end());
  forbidden.insert(instance.target);
  forbidden.insert(ranking.items.begin(), ranking.items.end());

  std::vector<RankPair> pairs;
  pairs.reserve(ranking.items.size());
  for (size_t i = 0; i < ranking.items.size(); ++i) {
    const long positive = ranking.items[i];
    auto it = negatives.find(positive);
    if (it == negatives.end())
      throw std::runtime_error("no negative assigned for ranked item " +
                               std::to_string(positive));
    if (forbidden.count(it->second))
      throw std::runtime_error("invalid negative " + std::to_string(it->second) +
                               " for ranked item " + std::to_string(positive) +
                               ": inside the session or the ranking");
    RankPair pair;
    pair.context = instance.prefix;
    pair.positive = positive;
    pair.negative = it->second;
    pair.weight = alpha_weight(static_cast<int>(i + 1), alpha);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

double distill_loss(const RecommenderModel& student, const EvalInstance& instance,
                    const TeacherRanking& ranking, const std::map<long, long>& negatives,
                    const std::array<double, 3>& alpha) {
  return pairwise_loss(student, distill_pairs(instance, ranking, negatives, alpha));
}

RecommenderModel finetune(
    RecommenderModel student, std::span<const TeacherRanking> rankings,
    const SessionDataset& dataset, const DistillConfig& cfg,
    const std::function<double(const RecommenderModel&)>& validation_metric) {
  if (rankings.empty()) throw std::runtime_error("empty distillation batch");

  // positive context = the leave-one-out prefix of each selected session
  struct Item {
    const TeacherRanking* ranking;
    EvalInstance instance;
    std::unordered_set<long> forbidden;  // session items + ranked items
  };
  std::vector<Item> items;
  items.reserve(rankings.size());
  for (const TeacherRanking& r : rankings) {
    Item item;
    item.ranking = &r;
    item.instance = leave_one_out(dataset.session_by_sid(r.sid));
    item.forbidden.insert(item.instance.prefix.begin(), item.instance.prefix.end());
    item.forbidden.insert(item.instance.target);
    item.forbidden.insert(r.items.begin(), r.items.end());
    if (item.forbidden.size() >= student.n_items)
      throw std::runtime_error("no negatives available for sid " + std::to_string(r.sid));
    items.push_back(std::move(item));
  }

  struct FlatPair {
    size_t item_idx;
    size_t rank_pos;  // 0-based within the teacher list
  };
  std::vector<FlatPair> flat;
  for (size_t i = 0; i < items.size(); ++i)
    for (size_t j = 0; j < items[i].ranking->items.size(); ++j) flat.push_back({i, j});

  AdamOptimizer opt(student.n_items, student.dim, cfg.learning_rate);
  std::mt19937_64 eng = make_engine(cfg.seed);

  RecommenderModel best = student;
  double best_metric = validation_metric ? validation_metric(student)
                                         : -std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  std::vector<size_t> order(flat.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_inplace(order, eng);
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<RankPair> batch;
      batch.reserve((stop - start) * cfg.negatives_per_positive);
      for (size_t i = start; i < stop; ++i) {
        const FlatPair& fp = flat[order[i]];
        const Item& item = items[fp.item_idx];
        for (int rep = 0; rep < cfg.negatives_per_positive; ++rep) {
          long neg;
          do {
            neg = static_cast<long>(uniform_index(eng, student.n_items));
          } while (item.forbidden.count(neg));
          RankPair pair;
          pair.context = item.instance.prefix;
          pair.positive = item.ranking->items[fp.rank_pos];
          pair.negative = neg;
          pair.weight = alpha_weight(static_cast<int>(fp.rank_pos + 1), cfg.alpha);
          batch.push_back(std::move(pair));
        }
      }
      SparseGrad grad;
      const double loss = pairwise_loss(student, batch, &grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("NaN/inf distillation loss at epoch " +
                                 std::to_string(epoch) + "; lr=" +
                                 std::to_string(cfg.learning_rate));
      opt.apply(student, grad);
    }
    if (validation_metric) {
      const double metric = validation_metric(student);
      if (metric > best_metric) {
        best_metric = metric;
        best = student;
        stale_epochs = 0;
      } else if (++stale_epochs >= cfg.patience) {
        break;
      }
    }
  }
  return validation_metric ? best : student;
}

}  // namespace alkd
