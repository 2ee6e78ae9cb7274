#include "alkd/config.hpp"

#include <sstream>
#include <stdexcept>

#include "alkd/io.hpp"

namespace alkd {

SelectStrategy strategy_from_name(const std::string& name) {
  if (name == "active") return SelectStrategy::Active;
  if (name == "random") return SelectStrategy::Random;
  if (name == "easiest") return SelectStrategy::Easiest;
  if (name == "hardest") return SelectStrategy::Hardest;
  throw std::runtime_error("unknown selection strategy: " + name);
}

const char* strategy_name(SelectStrategy s) {
  switch (s) {
    case SelectStrategy::Active: return "active";
    case SelectStrategy::Random: return "random";
    case SelectStrategy::Easiest: return "easiest";
    case SelectStrategy::Hardest: return "hardest";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(trim(part));
  return out;
}

std::array<long, 3> parse_triple(const std::string& value, const std::string& key) {
  std::vector<std::string> parts = split_commas(value);
  if (parts.size() != 3)
    throw std::runtime_error(key + " needs 3 comma-separated values, got '" + value + "'");
  return {parse_long(parts[0], key), parse_long(parts[1], key), parse_long(parts[2], key)};
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig cfg;
  size_t lineno = 0;
  for (const std::string& raw : read_lines(path)) {
    ++lineno;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               " is not key=value: " + raw);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "interactions") cfg.interactions = value;
    else if (key == "catalog") cfg.catalog = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "window_hours") cfg.window_hours = static_cast<int>(parse_long(value, key));
    else if (key == "min_session_len") cfg.min_session_len = static_cast<int>(parse_long(value, key));
    else if (key == "split_ratios") cfg.split_ratios = parse_triple(value, key);
    else if (key == "split_seed") cfg.split_seed = static_cast<uint64_t>(parse_long(value, key));
    else if (key == "teacher_dim") cfg.teacher_dim = static_cast<int>(parse_long(value, key));
    else if (key == "student_dim") cfg.student_dim = static_cast<int>(parse_long(value, key));
    else if (key == "lr") cfg.train.learning_rate = parse_double(value, key);
    else if (key == "batch_size") cfg.train.batch_size = static_cast<size_t>(parse_long(value, key));
    else if (key == "epochs") cfg.train.epochs = static_cast<int>(parse_long(value, key));
    else if (key == "negatives") cfg.train.negatives_per_positive = static_cast<int>(parse_long(value, key));
    else if (key == "mu") cfg.mu = parse_double(value, key);
    else if (key == "rank_direction") {
      if (value == "hard-first") cfg.rank_direction = RankDirection::HardFirst;
      else if (value == "easy-first") cfg.rank_direction = RankDirection::EasyFirst;
      else throw std::runtime_error("rank_direction must be hard-first or easy-first");
    }
    else if (key == "ratio") cfg.ratio = parse_triple(value, key);
    else if (key == "kappa") cfg.kappa = static_cast<size_t>(parse_long(value, key));
    else if (key == "tau") cfg.tau = static_cast<size_t>(parse_long(value, key));
    else if (key == "strategy") cfg.strategy = strategy_from_name(value);
    else if (key == "teacher_mode") {
      if (value == "simulate") cfg.teacher_mode = TeachMode::Simulate;
      else if (value == "http") cfg.teacher_mode = TeachMode::Http;
      else throw std::runtime_error("teacher_mode must be simulate or http");
    }
    else if (key == "sim_scheme") cfg.sim_scheme = sim_scheme_from_name(value);
    else if (key == "endpoint_base_url") cfg.endpoint.base_url = value;
    else if (key == "endpoint_model") cfg.endpoint.model = value;
    else if (key == "endpoint_api_key_env") cfg.endpoint.api_key_env = value;
    else if (key == "endpoint_timeout_s") cfg.endpoint.timeout_s = static_cast<int>(parse_long(value, key));
    else if (key == "endpoint_max_inflight") cfg.endpoint.max_inflight = static_cast<int>(parse_long(value, key));
    else if (key == "endpoint_retry_limit") cfg.endpoint.retry_limit = static_cast<int>(parse_long(value, key));
    else if (key == "endpoint_cache_dir") cfg.endpoint.cache_dir = value;
    else if (key == "summary_cases") cfg.summary_cases = static_cast<int>(parse_long(value, key));
    else if (key == "distill_epochs") cfg.distill.epochs = static_cast<int>(parse_long(value, key));
    else if (key == "distill_lr") cfg.distill.learning_rate = parse_double(value, key);
    else if (key == "distill_negatives") cfg.distill.negatives_per_positive = static_cast<int>(parse_long(value, key));
    else if (key == "distill_patience") cfg.distill.patience = static_cast<int>(parse_long(value, key));
    else if (key == "distill_batch_size") cfg.distill.batch_size = static_cast<size_t>(parse_long(value, key));
    else if (key == "alpha") {
      std::array<long, 3> a = parse_triple(value, key);
      cfg.distill.alpha = {static_cast<double>(a[0]), static_cast<double>(a[1]),
                           static_cast<double>(a[2])};
    }
    else if (key == "last_item_boost") cfg.last_item_boost = (value == "on" || value == "true" || value == "1");
    else if (key == "eval_ks") {
      cfg.eval_ks.clear();
      for (const std::string& part : split_commas(value))
        cfg.eval_ks.push_back(static_cast<size_t>(parse_long(part, key)));
    }
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const std::string& part : split_commas(value))
        cfg.seeds.push_back(static_cast<uint64_t>(parse_long(part, key)));
    }
    else throw std::runtime_error("unknown config key '" + key + "' at line " +
                                  std::to_string(lineno));
  }
  return cfg;
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "# paths\n";
  out << "interactions = " << cfg.interactions.string() << "\n";
  out << "catalog = " << cfg.catalog.string() << "\n";
  out << "out_dir = " << cfg.out_dir.string() << "\n";
  out << "\n# preprocessing\n";
  out << "window_hours = " << cfg.window_hours << "\n";
  out << "min_session_len = " << cfg.min_session_len << "\n";
  out << "split_ratios = " << cfg.split_ratios[0] << "," << cfg.split_ratios[1] << ","
      << cfg.split_ratios[2] << "\n";
  out << "split_seed = " << cfg.split_seed << "\n";
  out << "\n# backbone\n";
  out << "teacher_dim = " << cfg.teacher_dim << "\n";
  out << "student_dim = " << cfg.student_dim << "\n";
  out << "lr = " << cfg.train.learning_rate << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "negatives = " << cfg.train.negatives_per_positive << "\n";
  out << "last_item_boost = " << (cfg.last_item_boost ? "on" : "off") << "\n";
  out << "\n# selection\n";
  out << "mu = " << cfg.mu << "\n";
  out << "rank_direction = "
      << (cfg.rank_direction == RankDirection::HardFirst ? "hard-first" : "easy-first")
      << "\n";
  out << "ratio = " << cfg.ratio[0] << "," << cfg.ratio[1] << "," << cfg.ratio[2] << "\n";
  out << "kappa = " << cfg.kappa << "\n";
  out << "tau = " << cfg.tau << "\n";
  out << "strategy = " << strategy_name(cfg.strategy) << "\n";
  out << "\n# teacher\n";
  out << "teacher_mode = " << (cfg.teacher_mode == TeachMode::Simulate ? "simulate" : "http")
      << "\n";
  out << "sim_scheme = "
      << (cfg.sim_scheme == SimScheme::Banded
              ? "banded"
              : cfg.sim_scheme == SimScheme::Adversarial ? "adversarial" : "uniform")
      << "\n";
  out << "endpoint_base_url = " << cfg.endpoint.base_url << "\n";
  out << "endpoint_model = " << cfg.endpoint.model << "\n";
  out << "endpoint_api_key_env = " << cfg.endpoint.api_key_env << "\n";
  out << "endpoint_cache_dir = " << cfg.endpoint.cache_dir << "\n";
  out << "summary_cases = " << cfg.summary_cases << "\n";
  out << "\n# distillation\n";
  out << "distill_epochs = " << cfg.distill.epochs << "\n";
  out << "distill_lr = " << cfg.distill.learning_rate << "\n";
  out << "distill_negatives = " << cfg.distill.negatives_per_positive << "\n";
  out << "distill_patience = " << cfg.distill.patience << "\n";
  out << "distill_batch_size = " << cfg.distill.batch_size << "\n";
  out << "alpha = " << cfg.distill.alpha[0] << "," << cfg.distill.alpha[1] << ","
      << cfg.distill.alpha[2] << "\n";
  out << "\n# evaluation\n";
  out << "eval_ks = ";
  for (size_t i = 0; i < cfg.eval_ks.size(); ++i)
    out << (i ? "," : "") << cfg.eval_ks[i];
  out << "\nseeds = ";
  for (size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
  out << "\n";
  write_file_atomic(path, out.str());
}

}  // namespace alkd
