// Command-line driver for the active-distillation pipeline: dataset prep,
// backbone training, instance profiling, batch selection, teacher labeling,
// student distillation, evaluation, and the saddle-point verifier.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "alkd/config.hpp"
#include "alkd/distill.hpp"
#include "alkd/experiment.hpp"
#include "alkd/io.hpp"
#include "alkd/saddle.hpp"
#include "alkd/synth.hpp"

namespace {

using namespace alkd;

ExperimentConfig load_cfg_or_default(const std::string& config_path) {
  if (config_path.empty()) return ExperimentConfig{};
  return load_config(config_path);
}

void require_data(const ExperimentConfig& cfg) {
  if (cfg.interactions.empty() || cfg.catalog.empty())
    throw std::runtime_error(
        "no dataset configured; set interactions/catalog in the config file or "
        "generate one with `alkdrec synth`");
}

nlohmann::json saddle_report_json(const SaddleReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["counts"] = {r.counts.k_ef, r.counts.k_si, r.counts.k_in};
  j["k_star"] = r.k_star;
  j["gamma"] = r.gamma_closed_form;
  j["lower_value"] = r.lower_value;
  if (std::isfinite(r.upper_value)) j["upper_value"] = r.upper_value;
  j["theorem1_ok"] = r.theorem1_ok;
  j["c_hat_feasible"] = r.c_hat_feasible;
  if (r.c_hat_feasible)
    j["c_hat_type_sums"] = {r.c_hat_type_sums[0], r.c_hat_type_sums[1],
                            r.c_hat_type_sums[2]};
  j["upper_ok"] = r.upper_ok;
  j["tail_ok"] = r.tail_ok;
  j["proof_inequality_ok"] = r.proof_inequality_ok;
  j["pass"] = r.pass;
  if (!r.reason.empty()) j["reason"] = r.reason;
  std::string worst;
  for (InstanceType t : r.worst_assignment)
    worst += t == InstanceType::Effective ? 'E' : t == InstanceType::Similar ? 'S' : 'I';
  j["worst_assignment"] = worst;
  return j;
}

uint64_t pick_seed(const ExperimentConfig& cfg, int64_t flag) {
  if (flag >= 0) return static_cast<uint64_t>(flag);
  return cfg.seeds.empty() ? 1 : cfg.seeds.front();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active LLM-distillation pipeline for session-based recommendation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "config file (key=value)")->capture_default_str();

  // ---- synth ----
  auto* synth_cmd = app.add_subcommand("synth", "generate the planted synthetic dataset");
  std::string synth_out = "data/synth";
  SynthConfig synth_cfg;
  synth_cmd->add_option("--out", synth_out, "output directory");
  synth_cmd->add_option("--seed", synth_cfg.seed, "generator seed");
  synth_cmd->add_option("--sessions", synth_cfg.n_sessions, "session count");
  synth_cmd->add_option("--items", synth_cfg.n_items, "item count");
  synth_cmd->add_option("--p-next", synth_cfg.p_next, "planted transition probability");

  // ---- stage commands ----
  auto* prep_cmd = app.add_subcommand("prep", "ingest, sessionize, filter, split");
  std::string prep_interactions, prep_catalog, prep_out;
  prep_cmd->add_option("--interactions", prep_interactions, "interactions TSV");
  prep_cmd->add_option("--catalog", prep_catalog, "catalog TSV");
  prep_cmd->add_option("--out", prep_out, "artifact directory");

  auto* train_cmd = app.add_subcommand("train", "train a backbone recommender");
  std::string train_role = "teacher";
  int64_t train_seed = -1;
  train_cmd->add_option("--role", train_role, "teacher|student")->capture_default_str();
  train_cmd->add_option("--seed", train_seed, "run seed");

  auto* profile_cmd = app.add_subcommand("profile", "difficulties and gains of the pool");
  int64_t profile_seed = -1;
  profile_cmd->add_option("--seed", profile_seed, "run seed");

  auto* select_cmd = app.add_subcommand("select", "choose the distillation batch");
  std::string select_strategy;
  int64_t select_tau = -1, select_seed = -1;
  select_cmd->add_option("--strategy", select_strategy, "active|random|easiest|hardest");
  select_cmd->add_option("--tau", select_tau, "batch size");
  select_cmd->add_option("--seed", select_seed, "run seed");

  auto* teach_cmd = app.add_subcommand("teach", "produce teacher rankings for the batch");
  std::string teach_mode;
  int64_t teach_seed = -1;
  teach_cmd->add_option("--mode", teach_mode, "simulate|http");
  teach_cmd->add_option("--seed", teach_seed, "run seed");

  auto* distill_cmd = app.add_subcommand("distill", "fine-tune the student on the batch");
  int64_t distill_seed = -1;
  distill_cmd->add_option("--seed", distill_seed, "run seed");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate models on the test split");
  std::string eval_ks = "5,10";
  int64_t eval_seed = -1;
  eval_cmd->add_option("--k", eval_ks, "comma-separated cutoffs")->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "run seed");

  auto* run_cmd = app.add_subcommand("run", "full pipeline over all configured seeds");

  // ---- verify-theory ----
  auto* verify_cmd = app.add_subcommand("verify-theory",
                                        "certify the selection game numerically");
  size_t trials = 200, nmax = 12, nmin = 6;
  double tol = 1e-9;
  uint64_t verify_seed = 42;
  int rank_max = 30;
  std::string verify_out;
  verify_cmd->add_option("--trials", trials, "trial count")->capture_default_str();
  verify_cmd->add_option("--nmax", nmax, "largest pool size")->capture_default_str();
  verify_cmd->add_option("--nmin", nmin, "smallest pool size")->capture_default_str();
  verify_cmd->add_option("--tol", tol, "absolute tolerance")->capture_default_str();
  verify_cmd->add_option("--seed", verify_seed, "campaign seed")->capture_default_str();
  verify_cmd->add_option("--rank-max", rank_max, "ranks drawn from [1, rank-max]")
      ->capture_default_str();
  verify_cmd->add_option("--out", verify_out, "write the JSON report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) {
      SynthFiles files = write_synth_dataset(synth_out, synth_cfg);
      std::printf("wrote %s and %s\n", files.interactions.c_str(), files.catalog.c_str());
      return 0;
    }

    if (verify_cmd->parsed()) {
      TheoryCampaign campaign =
          run_verify_theory(trials, nmax, tol, verify_seed, nmin, rank_max);
      nlohmann::json reports = nlohmann::json::array();
      for (const SaddleReport& r : campaign.reports) reports.push_back(saddle_report_json(r));
      if (verify_out.empty())
        std::cout << reports.dump(2) << "\n";
      else
        write_file_atomic(verify_out, reports.dump(2) + "\n");
      std::printf(
          "passed %zu/%zu (c-hat infeasible: %zu, other failures: %zu, theorem1: "
          "%zu/%zu, proof-inequality violations: %zu) in %.2fs\n",
          campaign.saddle_passed, campaign.trials, campaign.c_hat_infeasible,
          campaign.failures, campaign.theorem1_passed, campaign.trials,
          campaign.proof_inequality_violations, campaign.seconds);
      const bool ok = campaign.theorem1_passed == campaign.trials && campaign.failures == 0;
      return ok ? 0 : 1;
    }

    ExperimentConfig cfg = load_cfg_or_default(config_path);

    if (prep_cmd->parsed()) {
      if (!prep_interactions.empty()) cfg.interactions = prep_interactions;
      if (!prep_catalog.empty()) cfg.catalog = prep_catalog;
      if (!prep_out.empty()) cfg.out_dir = prep_out;
      require_data(cfg);
      SessionDataset dataset = prep_stage(cfg);
      std::printf("sessions: %zu, items: %zu\n", dataset.sessions.size(),
                  dataset.item_count());
      return 0;
    }

    require_data(cfg);
    SessionDataset dataset = prep_stage(cfg);

    if (train_cmd->parsed()) {
      const ModelRole role =
          train_role == "teacher" ? ModelRole::Teacher : ModelRole::Student;
      train_stage(cfg, dataset, role, pick_seed(cfg, train_seed));
      return 0;
    }

    auto chain_to_profiles = [&](uint64_t seed) {
      RecommenderModel teacher = train_stage(cfg, dataset, ModelRole::Teacher, seed);
      std::vector<InstanceProfile> profiles = profile_stage(cfg, dataset, teacher, seed);
      return std::make_pair(std::move(teacher), std::move(profiles));
    };

    if (profile_cmd->parsed()) {
      chain_to_profiles(pick_seed(cfg, profile_seed));
      return 0;
    }

    if (select_cmd->parsed()) {
      if (!select_strategy.empty()) cfg.strategy = strategy_from_name(select_strategy);
      if (select_tau >= 0) cfg.tau = static_cast<size_t>(select_tau);
      const uint64_t seed = pick_seed(cfg, select_seed);
      auto [teacher, profiles] = chain_to_profiles(seed);
      Batch batch = select_stage(cfg, profiles, seed);
      std::printf("selected %zu instances\n", batch.sids.size());
      return 0;
    }

    if (teach_cmd->parsed()) {
      if (!teach_mode.empty())
        cfg.teacher_mode = teach_mode == "http" ? TeachMode::Http : TeachMode::Simulate;
      const uint64_t seed = pick_seed(cfg, teach_seed);
      auto [teacher, profiles] = chain_to_profiles(seed);
      Batch batch = select_stage(cfg, profiles, seed);
      teach_stage(cfg, dataset, teacher, profiles, batch, seed);
      return 0;
    }

    if (distill_cmd->parsed()) {
      const uint64_t seed = pick_seed(cfg, distill_seed);
      auto [teacher, profiles] = chain_to_profiles(seed);
      RecommenderModel student = train_stage(cfg, dataset, ModelRole::Student, seed);
      Batch batch = select_stage(cfg, profiles, seed);
      std::vector<TeacherRanking> rankings =
          teach_stage(cfg, dataset, teacher, profiles, batch, seed);
      distill_stage(cfg, dataset, student, rankings, seed);
      return 0;
    }

    if (eval_cmd->parsed()) {
      cfg.eval_ks.clear();
      std::istringstream in(eval_ks);
      std::string part;
      while (std::getline(in, part, ','))
        cfg.eval_ks.push_back(static_cast<size_t>(std::stoul(part)));
      const uint64_t seed = pick_seed(cfg, eval_seed);
      auto [teacher, profiles] = chain_to_profiles(seed);
      RecommenderModel student = train_stage(cfg, dataset, ModelRole::Student, seed);
      Batch batch = select_stage(cfg, profiles, seed);
      std::vector<TeacherRanking> rankings =
          teach_stage(cfg, dataset, teacher, profiles, batch, seed);
      RecommenderModel distilled = distill_stage(cfg, dataset, student, rankings, seed);
      std::vector<EvalInstance> test = instances_of(dataset, Split::Test);
      std::vector<std::pair<std::string, MetricsReport>> rows = {
          {"teacher", evaluate(teacher, test, cfg.eval_ks)},
          {"student", evaluate(student, test, cfg.eval_ks)},
          {std::string("distilled(") + strategy_name(cfg.strategy) + ")",
           evaluate(distilled, test, cfg.eval_ks)},
      };
      std::cout << metrics_table(rows, cfg.eval_ks);
      return 0;
    }

    if (run_cmd->parsed()) {
      ExperimentResult result = run_experiment(cfg);
      std::vector<std::pair<std::string, MetricsReport>> rows = {
          {"teacher", result.teacher.mean()},
          {"student", result.student.mean()},
          {std::string("distilled(") + strategy_name(cfg.strategy) + ")",
           result.distilled.mean()},
      };
      std::cout << metrics_table(rows, result.ks);
      std::printf("reports written to %s\n",
                  result.paths.report_json(cfg.strategy).c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
