#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "alkd/dataset.hpp"

namespace alkd {

enum class ModelRole : uint8_t { Teacher = 0, Student = 1 };

// Embedding-table recommender. The session encoder is the mean of the prefix
// item embeddings; with `last_item_boost` the last prefix item is added on
// top of the mean, which emphasizes the most recent transition.
struct RecommenderModel {
  size_t n_items = 0;
  int dim = 0;
  ModelRole role = ModelRole::Teacher;
  uint64_t seed = 0;
  bool last_item_boost = false;
  std::vector<double> weights;  // n_items x dim, row-major

  std::span<const double> row(long item) const {
    return {weights.data() + static_cast<size_t>(item) * dim, static_cast<size_t>(dim)};
  }
  std::span<double> row_mut(long item) {
    return {weights.data() + static_cast<size_t>(item) * dim, static_cast<size_t>(dim)};
  }
};

struct TrainConfig {
  double learning_rate = 1e-3;
  size_t batch_size = 1024;
  int epochs = 30;
  int negatives_per_positive = 1;
  uint64_t seed = 1;
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean pairwise loss per epoch
};

// Embeddings i.i.d. uniform in [-1/sqrt(d), 1/sqrt(d)].
RecommenderModel init_model(size_t n_items, int dim, ModelRole role, uint64_t seed);

std::vector<double> encode(const RecommenderModel& model, std::span<const long> prefix);
double score(const RecommenderModel& model, std::span<const long> prefix, long item);
double score_encoded(const RecommenderModel& model, std::span<const double> enc, long item);

// Top-k items by score with the prefix excluded; ties break by ascending id.
std::vector<long> rank(const RecommenderModel& model, std::span<const long> prefix, size_t k);

// One weighted pairwise-logistic term: context scores positive above negative.
struct RankPair {
  std::vector<long> context;
  long positive = 0;
  long negative = 0;
  double weight = 1.0;
};

using SparseGrad = std::map<long, std::vector<double>>;

// Sum of weight * -log sigmoid(score(ctx,pos) - score(ctx,neg)) over pairs.
// When `grad` is non-null the gradient w.r.t. every touched embedding row is
// accumulated into it. Shared by base training and distillation so the
// finite-difference checks cover both.
double pairwise_loss(const RecommenderModel& model, std::span<const RankPair> pairs,
                     SparseGrad* grad = nullptr);

// Adam with lazy row updates: rows without gradient keep bit-identical values.
class AdamOptimizer {
 public:
  AdamOptimizer(size_t n_items, int dim, double lr);
  void apply(RecommenderModel& model, const SparseGrad& grad);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  int dim_;
  std::vector<double> m_, v_;
};

// Pairwise training over sliding (prefix, next-item) pairs of the train
// split, uniform negatives outside the session. Deterministic per cfg.seed.
TrainStats train_bpr(RecommenderModel& model, const SessionDataset& dataset,
                     const TrainConfig& cfg);

void save_model(const std::filesystem::path& path, const RecommenderModel& model);
RecommenderModel load_model(const std::filesystem::path& path);

}  // namespace alkd
