#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "alkd/config.hpp"
#include "alkd/dataset.hpp"
#include "alkd/metrics.hpp"
#include "alkd/policy.hpp"
#include "alkd/profiling.hpp"
#include "alkd/teacher.hpp"

namespace alkd {

// Artifact locations inside cfg.out_dir. Stages are skipped when their
// outputs exist and are newer than their inputs, so deleting one artifact
// recomputes exactly its downstream closure.
struct ArtifactPaths {
  std::filesystem::path dir;

  std::filesystem::path sessions() const { return dir / "sessions.jsonl"; }
  std::filesystem::path id_map() const { return dir / "id_map.tsv"; }
  std::filesystem::path catalog() const { return dir / "catalog.tsv"; }
  std::filesystem::path split() const { return dir / "split.tsv"; }
  std::filesystem::path model(ModelRole role, uint64_t seed) const;
  std::filesystem::path profiles(uint64_t seed) const;
  std::filesystem::path policy(uint64_t seed) const;
  std::filesystem::path batch(SelectStrategy s, uint64_t seed) const;
  std::filesystem::path rankings(SelectStrategy s, uint64_t seed) const;
  std::filesystem::path distilled(SelectStrategy s, uint64_t seed) const;
  std::filesystem::path report_json(SelectStrategy s) const;
  std::filesystem::path report_txt(SelectStrategy s) const;
};

bool stage_fresh(const std::vector<std::filesystem::path>& outputs,
                 const std::vector<std::filesystem::path>& inputs);

// Uniform / easiest / hardest reference selectors.
Batch baseline_select(SelectStrategy strategy, std::span<const InstanceProfile> profiles,
                      size_t tau, uint64_t seed);

struct ExperimentResult {
  SeededMetrics teacher;
  SeededMetrics student;    // base-trained, not distilled
  SeededMetrics distilled;
  std::vector<size_t> ks;
  ArtifactPaths paths;
};

// prep -> train teacher -> train student -> profile -> select -> teach ->
// distill -> evaluate, per seed, resuming from existing artifacts.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Individual stages (shared by run_experiment and the CLI subcommands).
SessionDataset prep_stage(const ExperimentConfig& cfg);
RecommenderModel train_stage(const ExperimentConfig& cfg, const SessionDataset& dataset,
                             ModelRole role, uint64_t run_seed);
std::vector<InstanceProfile> profile_stage(const ExperimentConfig& cfg,
                                           const SessionDataset& dataset,
                                           const RecommenderModel& teacher,
                                           uint64_t run_seed);
Batch select_stage(const ExperimentConfig& cfg, std::span<const InstanceProfile> profiles,
                   uint64_t run_seed);
std::vector<TeacherRanking> teach_stage(const ExperimentConfig& cfg,
                                        const SessionDataset& dataset,
                                        const RecommenderModel& teacher,
                                        std::span<const InstanceProfile> profiles,
                                        const Batch& batch, uint64_t run_seed);
RecommenderModel distill_stage(const ExperimentConfig& cfg, const SessionDataset& dataset,
                               const RecommenderModel& student,
                               std::span<const TeacherRanking> rankings,
                               uint64_t run_seed);

std::vector<EvalInstance> instances_of(const SessionDataset& dataset, Split split);

void write_reports(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace alkd
