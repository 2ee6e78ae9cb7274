#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "alkd/backbone.hpp"
#include "alkd/distill.hpp"
#include "alkd/profiling.hpp"
#include "alkd/teacher.hpp"

namespace alkd {

enum class SelectStrategy { Active, Random, Easiest, Hardest };

SelectStrategy strategy_from_name(const std::string& name);
const char* strategy_name(SelectStrategy s);

// Full experiment configuration; the defaults are the reference
// hyper-parameters the pipeline was tuned with.
struct ExperimentConfig {
  std::filesystem::path interactions;  // TSV user\titem\ttimestamp
  std::filesystem::path catalog;       // TSV item\ttitle
  std::filesystem::path out_dir = "out";

  int window_hours = 24;
  int min_session_len = 5;
  std::array<long, 3> split_ratios = {6, 2, 2};
  uint64_t split_seed = 42;

  int teacher_dim = 100;
  int student_dim = 10;
  TrainConfig train;  // lr 1e-3, batch 1024

  double mu = 10.0;
  RankDirection rank_direction = RankDirection::HardFirst;
  std::array<long, 3> ratio = {1, 5, 4};  // effective : similar : incorrect
  size_t kappa = 50;
  size_t tau = 500;
  SelectStrategy strategy = SelectStrategy::Active;

  TeachMode teacher_mode = TeachMode::Simulate;
  SimScheme sim_scheme = SimScheme::Banded;
  EndpointConfig endpoint;
  int summary_cases = 20;

  DistillConfig distill;  // alpha 3/2/1, lr 1e-3
  bool last_item_boost = false;

  std::vector<size_t> eval_ks = {5, 10};
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
};

// Flat key=value file with '#' comments; unknown keys are an error.
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);

}  // namespace alkd
