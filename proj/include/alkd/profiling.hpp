#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "alkd/backbone.hpp"
#include "alkd/dataset.hpp"

namespace alkd {

// Per-instance difficulty and modeled distillation gains, in sort order.
struct InstanceProfile {
  long sid = 0;
  double difficulty = 0.0;  // in (-1, 0)
  int sort_rank = 0;        // 1-based
  double g_ef = 0.0;
  double g_si = 0.0;
  double g_in = 0.0;
};

struct TypeCounts {
  size_t k_ef = 0;
  size_t k_si = 0;
  size_t k_in = 0;

  size_t pool() const { return k_ef + k_si + k_in; }
};

enum class RankDirection { HardFirst, EasyFirst };

// Negative mean logistic consistency between the session encoding and the
// session's items under the teacher.
double difficulty(const RecommenderModel& teacher, const Session& session);

// Sort by difficulty (hardest first by default, ties by ascending sid) and
// fill gains: g_ef = rank^-mu, g_si = g_in = g_ef / 2.
std::vector<InstanceProfile> assign_gains(
    const std::vector<std::pair<long, double>>& difficulties, double mu = 10.0,
    RankDirection direction = RankDirection::HardFirst);

// Floor allocation of pool size n by ratio; remainder to k_si, then k_in,
// then k_ef.
TypeCounts type_counts(size_t n, std::array<long, 3> ratio = {1, 5, 4});

void save_profiles_jsonl(const std::filesystem::path& path,
                         const std::vector<InstanceProfile>& profiles);
std::vector<InstanceProfile> load_profiles_jsonl(const std::filesystem::path& path);

}  // namespace alkd
