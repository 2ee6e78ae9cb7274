#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "alkd/profiling.hpp"

namespace alkd {

// Gains of one position in the difficulty-sorted order.
struct GainTriple {
  double ef = 0.0;
  double si = 0.0;
  double in = 0.0;
};

// g_ef = rank^-mu, g_si = g_in = g_ef/2 for explicit rank values; handy for
// tests and the randomized theory campaign.
std::vector<GainTriple> gains_from_ranks(const std::vector<int>& ranks, double mu = 10.0);

std::vector<GainTriple> gains_of(std::span<const InstanceProfile> profiles);

// Closed-form minimax selection policy over positions 1..N sorted by g_ef
// descending. The support is cut at k_star; gamma is the guaranteed minimal
// expected gain.
struct SelectionPolicy {
  std::vector<long> order;  // sid per position (empty if built from raw gains)
  std::vector<double> H;    // H[k-1] = H_k
  std::vector<double> G;    // G[k-1] = G_k
  size_t k_star = 0;
  double gamma = 0.0;
  std::vector<double> p;    // per position
  TypeCounts counts;
  size_t n_underflowed = 0;  // positions dropped from the support

  std::vector<size_t> support() const;  // 0-based positions with p > 0
};

// Prefix arrays over the full range [1, N]: denominators g_si+g_in up to
// k_si+k_in, g_ef+g_in after. Throws on a non-positive denominator.
std::pair<std::vector<double>, std::vector<double>> prefix_sums(
    std::span<const GainTriple> gains, const TypeCounts& counts);

// argmax over s in [max(1, k_si+k_in), N] of (g_s^ef + k_ef + k_si - N)/H_s;
// ties resolve to the smallest s. Returns the 1-based cutoff.
size_t find_k_star(std::span<const GainTriple> gains, const TypeCounts& counts,
                   std::span<const double> H);

SelectionPolicy build_policy(std::span<const GainTriple> gains, const TypeCounts& counts);
SelectionPolicy build_policy(std::span<const InstanceProfile> profiles,
                             const TypeCounts& counts);

struct Batch {
  std::vector<long> sids;  // in selection order
  uint64_t seed = 0;
};

// Rejection sampling per the selection algorithm: draw s ~ p until tau
// distinct instances are collected. Requires tau <= |support|.
Batch sample_batch(const SelectionPolicy& policy, size_t tau, uint64_t seed);

void save_policy_json(const std::filesystem::path& path, const SelectionPolicy& policy);
void save_batch_jsonl(const std::filesystem::path& path, const Batch& batch);
Batch load_batch_jsonl(const std::filesystem::path& path);

}  // namespace alkd
