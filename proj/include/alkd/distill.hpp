#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include "alkd/backbone.hpp"
#include "alkd/dataset.hpp"
#include "alkd/teacher.hpp"

namespace alkd {

struct DistillConfig {
  int epochs = 50;
  double learning_rate = 1e-3;
  int negatives_per_positive = 1;
  std::array<double, 3> alpha = {3.0, 2.0, 1.0};  // positions [1,5], (5,15], (15,25]
  int patience = 5;
  size_t batch_size = 1024;
  uint64_t seed = 1;
};

// Position weight of a teacher-ranked item; zero beyond the 25-item list.
double alpha_weight(int position, const std::array<double, 3>& alpha = {3.0, 2.0, 1.0});

// Position-weighted pairwise imitation loss of one instance against its
// teacher ranking. `negatives` maps each ranked item to its negative, which
// must lie outside the session and the ranking.
double distill_loss(const RecommenderModel& student, const EvalInstance& instance,
                    const TeacherRanking& ranking, const std::map<long, long>& negatives,
                    const std::array<double, 3>& alpha = {3.0, 2.0, 1.0});

// The RankPairs underlying distill_loss; exposed for the gradient checks.
std::vector<RankPair> distill_pairs(const EvalInstance& instance,
                                    const TeacherRanking& ranking,
                                    const std::map<long, long>& negatives,
                                    const std::array<double, 3>& alpha);

// Fine-tune a base-trained student on the selected batch's rankings with
// fresh uniform negatives per epoch. When `validation_metric` is given, the
// best-scoring model (the initial one included) is kept and training stops
// after `patience` epochs without improvement.
RecommenderModel finetune(
    RecommenderModel student, std::span<const TeacherRanking> rankings,
    const SessionDataset& dataset, const DistillConfig& cfg,
    const std::function<double(const RecommenderModel&)>& validation_metric = nullptr);

}  // namespace alkd
