#include "alkd/profiling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "alkd/io.hpp"

namespace alkd {

double difficulty(const RecommenderModel& teacher, const Session& session) {
  if (session.items.empty())
    throw std::runtime_error("difficulty of empty session " + std::to_string(session.sid));
  std::vector<double> enc = encode(teacher, session.items);
  double total = 0.0;
  for (long item : session.items) {
    double s = score_encoded(teacher, enc, item);
    total += 1.0 / (1.0 + std::exp(-s));
  }
  return -total / static_cast<double>(session.items.size());
}

std::vector<InstanceProfile> assign_gains(
    const std::vector<std::pair<long, double>>& difficulties, double mu,
    RankDirection direction) {
  if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
  for (const auto& [sid, df] : difficulties)
    if (!std::isfinite(df))
      throw std::invalid_argument("non-finite difficulty for sid " + std::to_string(sid));

  std::vector<std::pair<long, double>> sorted = difficulties;
  std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second)
      return direction == RankDirection::HardFirst ? a.second > b.second
                                                   : a.second < b.second;
    return a.first < b.first;
  });

  std::vector<InstanceProfile> profiles;
  profiles.reserve(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    InstanceProfile p;
    p.sid = sorted[i].first;
    p.difficulty = sorted[i].second;
    p.sort_rank = static_cast<int>(i + 1);
    p.g_ef = std::pow(static_cast<double>(p.sort_rank), -mu);
    p.g_si = p.g_ef / 2.0;
    p.g_in = p.g_ef / 2.0;
    profiles.push_back(p);
  }
  return profiles;
}

TypeCounts type_counts(size_t n, std::array<long, 3> ratio) {
  long total = 0;
  for (long r : ratio) {
    if (r < 0) throw std::invalid_argument("ratio parts must be non-negative");
    total += r;
  }
  if (total == 0) throw std::invalid_argument("ratio must not be all zero");
  TypeCounts counts;
  counts.k_ef = n * static_cast<size_t>(ratio[0]) / static_cast<size_t>(total);
  counts.k_si = n * static_cast<size_t>(ratio[1]) / static_cast<size_t>(total);
  counts.k_in = n * static_cast<size_t>(ratio[2]) / static_cast<size_t>(total);
  size_t rem = n - counts.pool();
  // remainder order: k_si, k_in, k_ef
  size_t* order[3] = {&counts.k_si, &counts.k_in, &counts.k_ef};
  for (size_t i = 0; rem > 0; i = (i + 1) % 3) {
    ++*order[i];
    --rem;
  }
  return counts;
}

void save_profiles_jsonl(const std::filesystem::path& path,
                         const std::vector<InstanceProfile>& profiles) {
  std::ostringstream out;
  for (const InstanceProfile& p : profiles) {
    nlohmann::json j;
    j["sid"] = p.sid;
    j["df"] = p.difficulty;
    j["rank"] = p.sort_rank;
    j["g_ef"] = p.g_ef;
    j["g_si"] = p.g_si;
    j["g_in"] = p.g_in;
    out << j.dump() << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<InstanceProfile> load_profiles_jsonl(const std::filesystem::path& path) {
  std::vector<InstanceProfile> profiles;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    InstanceProfile p;
    p.sid = j.at("sid").get<long>();
    p.difficulty = j.at("df").get<double>();
    p.sort_rank = j.at("rank").get<int>();
    p.g_ef = j.at("g_ef").get<double>();
    p.g_si = j.at("g_si").get<double>();
    p.g_in = j.at("g_in").get<double>();
    profiles.push_back(p);
  }
  return profiles;
}

}  // namespace alkd
