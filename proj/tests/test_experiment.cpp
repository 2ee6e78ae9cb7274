#include <doctest.h>

#include <filesystem>
#include <set>

#include "alkd/experiment.hpp"
#include "alkd/io.hpp"
#include "alkd/synth.hpp"

using namespace alkd;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const fs::path& dir, uint64_t synth_seed = 3) {
  SynthConfig sc;
  sc.n_sessions = 120;
  sc.n_items = 90;
  sc.seed = synth_seed;
  SynthFiles files = write_synth_dataset(dir / "data", sc);

  ExperimentConfig cfg;
  cfg.interactions = files.interactions;
  cfg.catalog = files.catalog;
  cfg.out_dir = dir / "out";
  cfg.teacher_dim = 16;
  cfg.student_dim = 4;
  cfg.train.epochs = 3;
  cfg.distill.epochs = 3;
  cfg.distill.patience = 2;
  cfg.tau = 8;
  cfg.seeds = {1};
  return cfg;
}

fs::path scratch_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("alkd_exp_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("baseline selectors") {
  std::vector<std::pair<long, double>> dfs;
  for (long sid = 0; sid < 12; ++sid)
    dfs.emplace_back(sid, -0.9 + 0.05 * static_cast<double>(sid));
  auto profiles = assign_gains(dfs, 10.0);

  // hardest = largest difficulty values = largest sids here
  Batch hardest = baseline_select(SelectStrategy::Hardest, profiles, 3, 1);
  CHECK(hardest.sids == std::vector<long>{11, 10, 9});
  Batch easiest = baseline_select(SelectStrategy::Easiest, profiles, 3, 1);
  CHECK(easiest.sids == std::vector<long>{0, 1, 2});

  // disjoint extremes when 2*tau <= pool
  std::set<long> h(hardest.sids.begin(), hardest.sids.end());
  for (long sid : easiest.sids) CHECK(h.count(sid) == 0);

  Batch r1 = baseline_select(SelectStrategy::Random, profiles, 5, 42);
  Batch r2 = baseline_select(SelectStrategy::Random, profiles, 5, 42);
  CHECK(r1.sids == r2.sids);
  std::set<long> distinct(r1.sids.begin(), r1.sids.end());
  CHECK(distinct.size() == 5);

  CHECK_THROWS_AS(baseline_select(SelectStrategy::Random, profiles, 99, 1),
                  std::runtime_error);
}

TEST_CASE("stage freshness follows mtimes") {
  fs::path dir = scratch_dir("fresh");
  fs::path in = dir / "in.txt";
  fs::path out = dir / "out.txt";
  write_file_atomic(in, "1");
  CHECK(!stage_fresh({out}, {in}));
  write_file_atomic(out, "2");
  CHECK(stage_fresh({out}, {in}));
  // touching the input makes the output stale
  fs::last_write_time(in, fs::last_write_time(out) + std::chrono::seconds(1));
  CHECK(!stage_fresh({out}, {in}));
}

TEST_CASE("pipeline runs end to end, resumes, and recomputes downstream of deletions") {
  fs::path dir = scratch_dir("resume");
  ExperimentConfig cfg = small_config(dir);
  ExperimentResult first = run_experiment(cfg);
  REQUIRE(first.distilled.per_seed.size() == 1);

  ArtifactPaths paths{cfg.out_dir};
  const fs::path teacher_bin = paths.model(ModelRole::Teacher, 1);
  const fs::path profiles = paths.profiles(1);
  const fs::path batch = paths.batch(cfg.strategy, 1);
  REQUIRE(fs::exists(teacher_bin));
  REQUIRE(fs::exists(profiles));
  REQUIRE(fs::exists(batch));
  REQUIRE(fs::exists(paths.policy(1)));
  REQUIRE(fs::exists(paths.rankings(cfg.strategy, 1)));
  REQUIRE(fs::exists(paths.distilled(cfg.strategy, 1)));
  REQUIRE(fs::exists(paths.report_json(cfg.strategy)));

  // a full re-run recomputes nothing
  const auto teacher_time = fs::last_write_time(teacher_bin);
  const auto profiles_time = fs::last_write_time(profiles);
  run_experiment(cfg);
  CHECK(fs::last_write_time(teacher_bin) == teacher_time);
  CHECK(fs::last_write_time(profiles) == profiles_time);

  // deleting the teacher model recomputes it and its downstream closure,
  // but not the prep artifacts
  const auto sessions_time = fs::last_write_time(paths.sessions());
  fs::remove(teacher_bin);
  run_experiment(cfg);
  CHECK(fs::exists(teacher_bin));
  CHECK(fs::last_write_time(teacher_bin) > teacher_time);
  CHECK(fs::last_write_time(profiles) > profiles_time);
  CHECK(fs::last_write_time(paths.sessions()) == sessions_time);
}

TEST_CASE("simulate-mode pipeline is deterministic across fresh runs") {
  fs::path dir_a = scratch_dir("det_a");
  fs::path dir_b = scratch_dir("det_b");
  ExperimentConfig a = small_config(dir_a);
  ExperimentConfig b = small_config(dir_b);
  ExperimentResult ra = run_experiment(a);
  ExperimentResult rb = run_experiment(b);
  CHECK(ra.distilled.per_seed[0].second.ndcg == rb.distilled.per_seed[0].second.ndcg);
  CHECK(ra.student.per_seed[0].second.recall == rb.student.per_seed[0].second.recall);
  CHECK(read_file(ArtifactPaths{a.out_dir}.report_json(a.strategy)) ==
        read_file(ArtifactPaths{b.out_dir}.report_json(b.strategy)));
}

TEST_CASE("an oversized tau fails at the select stage with insufficient support") {
  fs::path dir = scratch_dir("tau");
  ExperimentConfig cfg = small_config(dir);
  // ratio (k-1, 0, 1) with rank 1 present drives k* to 1, so the support
  // cannot cover tau
  cfg.ratio = {71, 0, 1};
  cfg.tau = 8;
  CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("insufficient support"),
                       std::runtime_error);
}

TEST_CASE("strategies share prep and training artifacts") {
  fs::path dir = scratch_dir("share");
  ExperimentConfig cfg = small_config(dir);
  run_experiment(cfg);
  ArtifactPaths paths{cfg.out_dir};
  const auto teacher_time = fs::last_write_time(paths.model(ModelRole::Teacher, 1));

  cfg.strategy = SelectStrategy::Random;
  ExperimentResult random_run = run_experiment(cfg);
  CHECK(fs::last_write_time(paths.model(ModelRole::Teacher, 1)) == teacher_time);
  CHECK(fs::exists(paths.batch(SelectStrategy::Random, 1)));
  CHECK(fs::exists(paths.report_json(SelectStrategy::Random)));
  CHECK(random_run.distilled.per_seed.size() == 1);
}
