#include "alkd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "alkd/io.hpp"
#include "alkd/rng.hpp"

namespace alkd {

namespace {

constexpr double kDenomFloor = 1e-300;

// Strictly decreasing g_ef, except that a flat underflowed-to-zero tail is
// tolerated (build_policy drops it from the support).
void check_sorted(std::span<const GainTriple> gains) {
  for (size_t i = 1; i < gains.size(); ++i) {
    const bool ok = gains[i - 1].ef > gains[i].ef ||
                    (gains[i - 1].ef == gains[i].ef && gains[i].ef == 0.0);
    if (!ok) throw std::invalid_argument("gains must be strictly decreasing in g_ef");
  }
}

}  // namespace

std::vector<GainTriple> gains_from_ranks(const std::vector<int>& ranks, double mu) {
  std::vector<int> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  std::vector<GainTriple> gains;
  gains.reserve(sorted.size());
  for (int r : sorted) {
    if (r < 1) throw std::invalid_argument("ranks must be >= 1");
    GainTriple g;
    g.ef = std::pow(static_cast<double>(r), -mu);
    g.si = g.ef / 2.0;
    g.in = g.ef / 2.0;
    gains.push_back(g);
  }
  return gains;
}

std::vector<GainTriple> gains_of(std::span<const InstanceProfile> profiles) {
  std::vector<GainTriple> gains;
  gains.reserve(profiles.size());
  for (const InstanceProfile& p : profiles) gains.push_back({p.g_ef, p.g_si, p.g_in});
  return gains;
}

std::pair<std::vector<double>, std::vector<double>> prefix_sums(
    std::span<const GainTriple> gains, const TypeCounts& counts) {
  check_sorted(gains);
  const size_t n = gains.size();
  if (counts.pool() != n) throw std::invalid_argument("counts must sum to the pool size");
  const size_t m = counts.k_si + counts.k_in;
  std::vector<double> H(n), G(n);
  double h = 0.0, g = 0.0;
  for (size_t s = 1; s <= n; ++s) {
    const GainTriple& gs = gains[s - 1];
    const double denom = s <= m ? gs.si + gs.in : gs.ef + gs.in;
    if (denom <= 0.0)
      throw std::runtime_error("non-positive gain denominator at position " +
                               std::to_string(s));
    const double numer = s <= m ? gs.si : gs.ef;
    h += 1.0 / denom;
    g += numer / denom;
    H[s - 1] = h;
    G[s - 1] = g;
  }
  return {std::move(H), std::move(G)};
}

size_t find_k_star(std::span<const GainTriple> gains, const TypeCounts& counts,
                   std::span<const double> H) {
  const size_t n = gains.size();
  if (H.size() != n) throw std::invalid_argument("H must cover the full range");
  const size_t m = counts.k_si + counts.k_in;
  const double shift = static_cast<double>(counts.k_ef) + static_cast<double>(counts.k_si) -
                       static_cast<double>(n);
  size_t best = 0;
  double best_ratio = 0.0;
  for (size_t s = std::max<size_t>(1, m); s <= n; ++s) {
    const double ratio = (gains[s - 1].ef + shift) / H[s - 1];
    if (best == 0 || ratio > best_ratio) {
      best = s;
      best_ratio = ratio;
    }
  }
  return best;
}

SelectionPolicy build_policy(std::span<const GainTriple> gains, const TypeCounts& counts) {
  check_sorted(gains);
  const size_t n = gains.size();
  if (n == 0) throw std::invalid_argument("empty gain pool");
  if (counts.pool() != n) throw std::invalid_argument("counts must sum to the pool size");
  const size_t m = counts.k_si + counts.k_in;

  // With mu = 10 a huge pool underflows the tail gains to zero; clamp the
  // denominators so H/G stay finite and drop those positions from the
  // support afterwards.
  size_t n_underflowed = 0;
  std::vector<GainTriple> work(gains.begin(), gains.end());
  for (GainTriple& g : work) {
    if (g.ef == 0.0) ++n_underflowed;
    if (g.si + g.in < kDenomFloor) g.si = g.in = kDenomFloor / 2.0;
  }
  if (n_underflowed > 0)
    std::fprintf(stderr,
                 "warning: %zu positions with underflowed gains excluded from the "
                 "selection support\n",
                 n_underflowed);

  auto [H, G] = prefix_sums(work, counts);
  const size_t k_star = find_k_star(work, counts, H);

  SelectionPolicy policy;
  policy.H = std::move(H);
  policy.G = std::move(G);
  policy.k_star = k_star;
  policy.counts = counts;
  policy.n_underflowed = n_underflowed;
  policy.gamma = (static_cast<double>(counts.k_ef) + static_cast<double>(counts.k_si) -
                  static_cast<double>(n) + policy.G[k_star - 1]) /
                 policy.H[k_star - 1];

  policy.p.assign(n, 0.0);
  const double h_star = policy.H[k_star - 1];
  for (size_t s = 1; s <= k_star; ++s) {
    const GainTriple& g = work[s - 1];
    const double denom = s <= m ? g.si + g.in : g.ef + g.in;
    policy.p[s - 1] = 1.0 / (h_star * denom);
  }
  if (n_underflowed > 0) {
    double kept = 0.0;
    for (size_t s = 1; s <= k_star; ++s) {
      if (gains[s - 1].ef == 0.0)
        policy.p[s - 1] = 0.0;
      else
        kept += policy.p[s - 1];
    }
    if (kept <= 0.0) throw std::runtime_error("entire selection support underflowed");
    for (double& v : policy.p) v /= kept;
  }
  return policy;
}

SelectionPolicy build_policy(std::span<const InstanceProfile> profiles,
                             const TypeCounts& counts) {
  SelectionPolicy policy = build_policy(gains_of(profiles), counts);
  policy.order.reserve(profiles.size());
  for (const InstanceProfile& p : profiles) policy.order.push_back(p.sid);
  return policy;
}

std::vector<size_t> SelectionPolicy::support() const {
  std::vector<size_t> out;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) out.push_back(i);
  return out;
}

Batch sample_batch(const SelectionPolicy& policy, size_t tau, uint64_t seed) {
  std::vector<size_t> support = policy.support();
  if (tau > support.size())
    throw std::runtime_error("insufficient support: tau=" + std::to_string(tau) +
                             " exceeds " + std::to_string(support.size()) +
                             " selectable instances");
  Batch batch;
  batch.seed = seed;
  if (tau == 0) return batch;

  std::vector<double> cdf(policy.p.size());
  double acc = 0.0;
  for (size_t i = 0; i < policy.p.size(); ++i) {
    acc += policy.p[i];
    cdf[i] = acc;
  }

  std::mt19937_64 eng = make_engine(seed);
  std::vector<bool> taken(policy.p.size(), false);
  std::vector<size_t> picked;
  const size_t max_draws = std::max<size_t>(10'000'000, 1000 * tau);
  size_t draws = 0;
  while (picked.size() < tau) {
    if (++draws > max_draws)
      throw std::runtime_error("sampling stalled: support probabilities too small for tau=" +
                               std::to_string(tau));
    const double u = uniform_double(eng) * acc;
    size_t idx = static_cast<size_t>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (idx >= policy.p.size()) idx = policy.p.size() - 1;
    if (policy.p[idx] <= 0.0 || taken[idx]) continue;
    taken[idx] = true;
    picked.push_back(idx);
  }
  for (size_t idx : picked)
    batch.sids.push_back(policy.order.empty() ? static_cast<long>(idx)
                                              : policy.order[idx]);
  return batch;
}

void save_policy_json(const std::filesystem::path& path, const SelectionPolicy& policy) {
  nlohmann::json j;
  j["k_star"] = policy.k_star;
  j["gamma"] = policy.gamma;
  j["counts"] = {policy.counts.k_ef, policy.counts.k_si, policy.counts.k_in};
  nlohmann::json probs = nlohmann::json::array();
  for (size_t i = 0; i < policy.p.size(); ++i) {
    nlohmann::json entry;
    entry["sid"] = policy.order.empty() ? static_cast<long>(i) : policy.order[i];
    entry["prob"] = policy.p[i];
    probs.push_back(entry);
  }
  j["p"] = probs;
  write_file_atomic(path, j.dump(2) + "\n");
}

void save_batch_jsonl(const std::filesystem::path& path, const Batch& batch) {
  std::ostringstream out;
  for (long sid : batch.sids) out << sid << '\n';
  write_file_atomic(path, out.str());
}

Batch load_batch_jsonl(const std::filesystem::path& path) {
  Batch batch;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    batch.sids.push_back(parse_long(line, "sid"));
  }
  return batch;
}

}  // namespace alkd
