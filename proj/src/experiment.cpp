#include "alkd/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "alkd/distill.hpp"
#include "alkd/io.hpp"
#include "alkd/rng.hpp"

namespace alkd {

namespace {

void log_stage(const std::string& msg) { std::fprintf(stderr, "[alkdrec] %s\n", msg.c_str()); }

template <typename F>
auto guarded(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw std::runtime_error("stage " + stage + " failed: " + e.what());
  }
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  for (const auto& [k, v] : report.recall) j["recall"][std::to_string(k)] = v;
  for (const auto& [k, v] : report.ndcg) j["ndcg"][std::to_string(k)] = v;
  j["n_instances"] = report.n_instances;
  return j;
}

nlohmann::json seeded_to_json(const SeededMetrics& metrics) {
  nlohmann::json j;
  for (const auto& [seed, report] : metrics.per_seed)
    j["per_seed"][std::to_string(seed)] = report_to_json(report);
  j["mean"] = report_to_json(metrics.mean());
  return j;
}

}  // namespace

std::filesystem::path ArtifactPaths::model(ModelRole role, uint64_t seed) const {
  const char* name = role == ModelRole::Teacher ? "teacher" : "student";
  return dir / (std::string(name) + "_seed" + std::to_string(seed) + ".bin");
}
std::filesystem::path ArtifactPaths::profiles(uint64_t seed) const {
  return dir / ("profiles_seed" + std::to_string(seed) + ".jsonl");
}
std::filesystem::path ArtifactPaths::policy(uint64_t seed) const {
  return dir / ("policy_seed" + std::to_string(seed) + ".json");
}
std::filesystem::path ArtifactPaths::batch(SelectStrategy s, uint64_t seed) const {
  return dir / ("batch_" + std::string(strategy_name(s)) + "_seed" + std::to_string(seed) +
                ".jsonl");
}
std::filesystem::path ArtifactPaths::rankings(SelectStrategy s, uint64_t seed) const {
  return dir / ("rankings_" + std::string(strategy_name(s)) + "_seed" +
                std::to_string(seed) + ".jsonl");
}
std::filesystem::path ArtifactPaths::distilled(SelectStrategy s, uint64_t seed) const {
  return dir / ("distilled_" + std::string(strategy_name(s)) + "_seed" +
                std::to_string(seed) + ".bin");
}
std::filesystem::path ArtifactPaths::report_json(SelectStrategy s) const {
  return dir / ("report_" + std::string(strategy_name(s)) + ".json");
}
std::filesystem::path ArtifactPaths::report_txt(SelectStrategy s) const {
  return dir / ("report_" + std::string(strategy_name(s)) + ".txt");
}

bool stage_fresh(const std::vector<std::filesystem::path>& outputs,
                 const std::vector<std::filesystem::path>& inputs) {
  namespace fs = std::filesystem;
  fs::file_time_type oldest_output = fs::file_time_type::max();
  for (const fs::path& out : outputs) {
    if (!fs::exists(out)) return false;
    oldest_output = std::min(oldest_output, fs::last_write_time(out));
  }
  for (const fs::path& in : inputs) {
    if (!fs::exists(in)) continue;
    if (fs::last_write_time(in) > oldest_output) return false;
  }
  return true;
}

std::vector<EvalInstance> instances_of(const SessionDataset& dataset, Split split) {
  std::vector<EvalInstance> instances;
  for (const Session* s : dataset.sessions_in(split)) instances.push_back(leave_one_out(*s));
  return instances;
}

SessionDataset prep_stage(const ExperimentConfig& cfg) {
  return guarded("prep", [&] {
    ArtifactPaths paths{cfg.out_dir};
    std::filesystem::create_directories(paths.dir);
    const std::vector<std::filesystem::path> outputs = {paths.sessions(), paths.id_map(),
                                                        paths.catalog(), paths.split()};
    const std::vector<std::filesystem::path> inputs = {cfg.interactions, cfg.catalog};
    SessionDataset dataset;
    if (stage_fresh(outputs, inputs)) {
      log_stage("prep: artifacts fresh, skipping");
      dataset.sessions = load_sessions_jsonl(paths.sessions());
      dataset.catalog = load_catalog(paths.catalog());
      load_split(paths.split(), dataset);
      return dataset;
    }
    log_stage("prep: building dataset");
    InteractionLog log = load_interactions(cfg.interactions);
    ItemCatalog raw_catalog = load_catalog(cfg.catalog);
    std::vector<Session> sessions = sessionize(log, cfg.window_hours);
    FilterResult filtered = filter_short(sessions, cfg.min_session_len);
    dataset = split_sessions(std::move(filtered.sessions), cfg.split_ratios, cfg.split_seed);
    dataset.catalog = remap_catalog(raw_catalog, filtered.id_map);
    save_sessions_jsonl(paths.sessions(), dataset.sessions);
    save_id_map(paths.id_map(), filtered.id_map);
    save_catalog(paths.catalog(), dataset.catalog);
    save_split(paths.split(), dataset);
    return dataset;
  });
}

RecommenderModel train_stage(const ExperimentConfig& cfg, const SessionDataset& dataset,
                             ModelRole role, uint64_t run_seed) {
  const std::string name = role == ModelRole::Teacher ? "train-teacher" : "train-student";
  return guarded(name, [&] {
    ArtifactPaths paths{cfg.out_dir};
    const std::filesystem::path out = paths.model(role, run_seed);
    if (stage_fresh({out}, {paths.sessions(), paths.split()})) {
      log_stage(name + ": artifact fresh, skipping");
      return load_model(out);
    }
    log_stage(name + ": training");
    const int dim = role == ModelRole::Teacher ? cfg.teacher_dim : cfg.student_dim;
    const uint64_t tag = role == ModelRole::Teacher ? 1 : 2;
    RecommenderModel model =
        init_model(dataset.item_count(), dim, role, mix_seed(run_seed, tag));
    model.last_item_boost = cfg.last_item_boost;
    TrainConfig tc = cfg.train;
    tc.seed = mix_seed(run_seed, tag + 16);
    train_bpr(model, dataset, tc);
    save_model(out, model);
    return model;
  });
}

std::vector<InstanceProfile> profile_stage(const ExperimentConfig& cfg,
                                           const SessionDataset& dataset,
                                           const RecommenderModel& teacher,
                                           uint64_t run_seed) {
  return guarded("profile", [&] {
    ArtifactPaths paths{cfg.out_dir};
    const std::filesystem::path out = paths.profiles(run_seed);
    if (stage_fresh({out}, {paths.model(ModelRole::Teacher, run_seed)})) {
      log_stage("profile: artifact fresh, skipping");
      return load_profiles_jsonl(out);
    }
    log_stage("profile: computing difficulties");
    std::vector<std::pair<long, double>> difficulties;
    for (const Session* s : dataset.sessions_in(Split::Train))
      difficulties.emplace_back(s->sid, difficulty(teacher, *s));
    std::vector<InstanceProfile> profiles =
        assign_gains(difficulties, cfg.mu, cfg.rank_direction);
    save_profiles_jsonl(out, profiles);
    return profiles;
  });
}

Batch baseline_select(SelectStrategy strategy, std::span<const InstanceProfile> profiles,
                      size_t tau, uint64_t seed) {
  if (tau > profiles.size())
    throw std::runtime_error("tau=" + std::to_string(tau) + " exceeds pool of " +
                             std::to_string(profiles.size()));
  Batch batch;
  batch.seed = seed;
  switch (strategy) {
    case SelectStrategy::Random: {
      std::vector<long> sids;
      for (const InstanceProfile& p : profiles) sids.push_back(p.sid);
      std::mt19937_64 eng = make_engine(seed);
      shuffle_inplace(sids, eng);
      batch.sids.assign(sids.begin(), sids.begin() + tau);
      break;
    }
    case SelectStrategy::Easiest:
    case SelectStrategy::Hardest: {
      std::vector<std::pair<double, long>> by_df;
      for (const InstanceProfile& p : profiles) by_df.emplace_back(p.difficulty, p.sid);
      const bool hardest = strategy == SelectStrategy::Hardest;
      std::sort(by_df.begin(), by_df.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return hardest ? a.first > b.first : a.first < b.first;
        return a.second < b.second;
      });
      for (size_t i = 0; i < tau; ++i) batch.sids.push_back(by_df[i].second);
      break;
    }
    case SelectStrategy::Active:
      throw std::invalid_argument("active selection uses the policy sampler");
  }
  return batch;
}

Batch select_stage(const ExperimentConfig& cfg, std::span<const InstanceProfile> profiles,
                   uint64_t run_seed) {
  return guarded("select", [&] {
    ArtifactPaths paths{cfg.out_dir};
    const std::filesystem::path out = paths.batch(cfg.strategy, run_seed);
    if (stage_fresh({out}, {paths.profiles(run_seed)})) {
      log_stage("select: artifact fresh, skipping");
      return load_batch_jsonl(out);
    }
    log_stage(std::string("select: strategy ") + strategy_name(cfg.strategy));
    Batch batch;
    if (cfg.strategy == SelectStrategy::Active) {
      TypeCounts counts = type_counts(profiles.size(), cfg.ratio);
      SelectionPolicy policy = build_policy(profiles, counts);
      save_policy_json(paths.policy(run_seed), policy);
      batch = sample_batch(policy, cfg.tau, mix_seed(run_seed, 3));
    } else {
      batch = baseline_select(cfg.strategy, profiles, cfg.tau, mix_seed(run_seed, 3));
    }
    save_batch_jsonl(out, batch);
    return batch;
  });
}

std::vector<TeacherRanking> teach_stage(const ExperimentConfig& cfg,
                                        const SessionDataset& dataset,
                                        const RecommenderModel& teacher,
                                        std::span<const InstanceProfile> profiles,
                                        const Batch& batch, uint64_t run_seed) {
  return guarded("teach", [&] {
    ArtifactPaths paths{cfg.out_dir};
    const std::filesystem::path out = paths.rankings(cfg.strategy, run_seed);
    if (stage_fresh({out}, {paths.batch(cfg.strategy, run_seed),
                            paths.model(ModelRole::Teacher, run_seed)})) {
      log_stage("teach: artifact fresh, skipping");
      return load_rankings_jsonl(out);
    }
    log_stage(cfg.teacher_mode == TeachMode::Simulate ? "teach: simulating"
                                                      : "teach: querying endpoint");

    TeachContext ctx;
    ctx.catalog = &dataset.catalog;
    ctx.kappa = cfg.kappa;

    SimProfile sim;
    ChatClient client(cfg.endpoint);
    if (cfg.teacher_mode == TeachMode::Simulate) {
      TypeCounts counts = type_counts(profiles.size(), cfg.ratio);
      sim = make_sim_profile(profiles, counts, cfg.sim_scheme, mix_seed(run_seed, 4));
      ctx.sim = &sim;
    } else {
      ctx.client = &client;
      // domain hints summarized from seeded train cases
      std::vector<const Session*> train = dataset.sessions_in(Split::Train);
      std::mt19937_64 eng = make_engine(mix_seed(run_seed, 5));
      std::vector<size_t> order(train.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      shuffle_inplace(order, eng);
      std::vector<SummaryCase> cases;
      for (size_t i = 0; i < order.size() && cases.size() < static_cast<size_t>(cfg.summary_cases); ++i) {
        const Session* s = train[order[i]];
        EvalInstance inst = leave_one_out(*s);
        if (inst.prefix.size() + 20 > dataset.item_count()) continue;
        SummaryCase c;
        c.interactions = titled(dataset.catalog, inst.prefix);
        c.recommendations = titled(dataset.catalog, rank(teacher, inst.prefix, 20));
        cases.push_back(std::move(c));
      }
      ctx.hints = summarize_hints(client, cases);
    }

    std::vector<EvalInstance> instances;
    std::vector<std::vector<long>> rec_rankings;
    const size_t rank_len = std::max(cfg.kappa, kRankingLen);
    for (long sid : batch.sids) {
      EvalInstance inst = leave_one_out(dataset.session_by_sid(sid));
      rec_rankings.push_back(rank(teacher, inst.prefix, rank_len));
      instances.push_back(std::move(inst));
    }
    std::vector<TeacherRanking> rankings =
        teach_all(instances, rec_rankings, cfg.teacher_mode, ctx);
    save_rankings_jsonl(out, rankings);
    return rankings;
  });
}

RecommenderModel distill_stage(const ExperimentConfig& cfg, const SessionDataset& dataset,
                               const RecommenderModel& student,
                               std::span<const TeacherRanking> rankings,
                               uint64_t run_seed) {
  return guarded("distill", [&] {
    ArtifactPaths paths{cfg.out_dir};
    const std::filesystem::path out = paths.distilled(cfg.strategy, run_seed);
    if (stage_fresh({out}, {paths.rankings(cfg.strategy, run_seed),
                            paths.model(ModelRole::Student, run_seed)})) {
      log_stage("distill: artifact fresh, skipping");
      return load_model(out);
    }
    log_stage("distill: fine-tuning student");
    std::vector<EvalInstance> valid = instances_of(dataset, Split::Valid);
    DistillConfig dc = cfg.distill;
    dc.seed = mix_seed(run_seed, 6);
    std::function<double(const RecommenderModel&)> validation;
    if (!valid.empty())
      validation = [&valid](const RecommenderModel& m) {
        return evaluate(m, valid, {10}).ndcg.at(10);
      };
    RecommenderModel distilled = finetune(student, rankings, dataset, dc, validation);
    save_model(out, distilled);
    return distilled;
  });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult result;
  result.ks = cfg.eval_ks;
  result.paths = ArtifactPaths{cfg.out_dir};

  SessionDataset dataset = prep_stage(cfg);
  std::vector<EvalInstance> test = instances_of(dataset, Split::Test);
  if (test.empty()) throw std::runtime_error("test split is empty");

  for (uint64_t seed : cfg.seeds) {
    log_stage("run: seed " + std::to_string(seed));
    RecommenderModel teacher = train_stage(cfg, dataset, ModelRole::Teacher, seed);
    RecommenderModel student = train_stage(cfg, dataset, ModelRole::Student, seed);
    std::vector<InstanceProfile> profiles = profile_stage(cfg, dataset, teacher, seed);
    Batch batch = select_stage(cfg, profiles, seed);
    std::vector<TeacherRanking> rankings =
        teach_stage(cfg, dataset, teacher, profiles, batch, seed);
    RecommenderModel distilled = distill_stage(cfg, dataset, student, rankings, seed);

    result.teacher.per_seed.emplace_back(seed, evaluate(teacher, test, cfg.eval_ks));
    result.student.per_seed.emplace_back(seed, evaluate(student, test, cfg.eval_ks));
    result.distilled.per_seed.emplace_back(seed, evaluate(distilled, test, cfg.eval_ks));
  }

  write_reports(cfg, result);
  return result;
}

void write_reports(const ExperimentConfig& cfg, const ExperimentResult& result) {
  ArtifactPaths paths{cfg.out_dir};
  nlohmann::json j;
  j["strategy"] = strategy_name(cfg.strategy);
  j["tau"] = cfg.tau;
  j["ratio"] = {cfg.ratio[0], cfg.ratio[1], cfg.ratio[2]};
  j["mu"] = cfg.mu;
  j["kappa"] = cfg.kappa;
  j["dims"] = {cfg.teacher_dim, cfg.student_dim};
  j["models"]["teacher"] = seeded_to_json(result.teacher);
  j["models"]["student"] = seeded_to_json(result.student);
  j["models"]["distilled"] = seeded_to_json(result.distilled);
  write_file_atomic(paths.report_json(cfg.strategy), j.dump(2) + "\n");

  std::vector<std::pair<std::string, MetricsReport>> rows = {
      {"teacher", result.teacher.mean()},
      {"student", result.student.mean()},
      {std::string("distilled(") + strategy_name(cfg.strategy) + ")",
       result.distilled.mean()},
  };
  write_file_atomic(paths.report_txt(cfg.strategy), metrics_table(rows, result.ks));
}

}  // namespace alkd
