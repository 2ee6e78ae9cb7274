#include "alkd/saddle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "alkd/rng.hpp"

namespace alkd {

namespace {

constexpr size_t kEnumerationCap = 14;

void check_dims(size_t p_size, size_t gains_size) {
  if (p_size != gains_size)
    throw std::invalid_argument("probability vector and gains differ in length");
}

}  // namespace

std::array<double, 3> FractionalAssignment::type_sums() const {
  std::array<double, 3> sums{0.0, 0.0, 0.0};
  for (size_t i = 0; i < ef.size(); ++i) {
    sums[0] += ef[i];
    sums[1] += si[i];
    sums[2] += in[i];
  }
  return sums;
}

double expected_gain(std::span<const double> p, const Assignment& c,
                     std::span<const GainTriple> gains) {
  check_dims(p.size(), gains.size());
  if (c.size() != gains.size())
    throw std::invalid_argument("assignment and gains differ in length");
  double z = 0.0;
  for (size_t s = 0; s < c.size(); ++s) {
    switch (c[s]) {
      case InstanceType::Effective: z += p[s] * gains[s].ef; break;
      case InstanceType::Similar: z += p[s] * gains[s].si; break;
      case InstanceType::Incorrect: z -= p[s] * gains[s].in; break;
    }
  }
  return z;
}

double expected_gain(std::span<const double> p, const FractionalAssignment& c,
                     std::span<const GainTriple> gains) {
  check_dims(p.size(), gains.size());
  if (c.size() != gains.size())
    throw std::invalid_argument("assignment and gains differ in length");
  double z = 0.0;
  for (size_t s = 0; s < c.size(); ++s)
    z += p[s] * (c.ef[s] * gains[s].ef + c.si[s] * gains[s].si - c.in[s] * gains[s].in);
  return z;
}

void enumerate_assignments(size_t n, const TypeCounts& counts,
                           const std::function<void(const Assignment&)>& visit) {
  if (counts.pool() != n)
    throw std::invalid_argument("counts must sum to the pool size");
  if (n > kEnumerationCap)
    throw std::invalid_argument(
        "pool of " + std::to_string(n) + " exceeds the enumeration cap of " +
        std::to_string(kEnumerationCap) +
        "; an exact LP over the transportation polytope is out of scope");
  Assignment a;
  a.insert(a.end(), counts.k_ef, InstanceType::Effective);
  a.insert(a.end(), counts.k_si, InstanceType::Similar);
  a.insert(a.end(), counts.k_in, InstanceType::Incorrect);
  do {
    visit(a);
  } while (std::next_permutation(a.begin(), a.end()));
}

size_t count_assignments(size_t n, const TypeCounts& counts) {
  size_t count = 0;
  enumerate_assignments(n, counts, [&](const Assignment&) { ++count; });
  return count;
}

std::pair<double, Assignment> min_gain(std::span<const double> p,
                                       std::span<const GainTriple> gains,
                                       const TypeCounts& counts) {
  double best = std::numeric_limits<double>::infinity();
  Assignment witness;
  enumerate_assignments(gains.size(), counts, [&](const Assignment& a) {
    const double z = expected_gain(p, a, gains);
    if (z < best) {
      best = z;
      witness = a;
    }
  });
  return {best, witness};
}

FractionalAssignment build_c_hat(std::span<const GainTriple> gains,
                                 const TypeCounts& counts, size_t k_star, double gamma) {
  const size_t n = gains.size();
  if (counts.pool() != n)
    throw std::invalid_argument("counts must sum to the pool size");
  if (k_star < 1 || k_star > n) throw std::invalid_argument("k_star out of range");
  const size_t m = counts.k_si + counts.k_in;

  FractionalAssignment c;
  c.ef.assign(n, 0.0);
  c.si.assign(n, 0.0);
  c.in.assign(n, 0.0);

  // Branch values equalize the per-position payoff at gamma: on the first
  // branch c_si (g_si + g_in) - g_in = gamma, on the second c_ef (g_ef +
  // g_in) - g_in = gamma.
  for (size_t s = 1; s <= std::min(m, k_star); ++s)
    c.si[s - 1] = (gamma + gains[s - 1].in) / (gains[s - 1].si + gains[s - 1].in);
  for (size_t s = m + 1; s <= k_star; ++s)
    c.ef[s - 1] = (gamma + gains[s - 1].in) / (gains[s - 1].ef + gains[s - 1].in);

  if (k_star < n) {
    double mid_ef = 0.0, top_si = 0.0;
    for (size_t s = m + 1; s <= k_star; ++s) mid_ef += c.ef[s - 1];
    for (size_t s = 1; s <= std::min(m, k_star); ++s) top_si += c.si[s - 1];
    const double rem = static_cast<double>(n - k_star);
    const double tail_ef = (static_cast<double>(counts.k_ef) - mid_ef) / rem;
    const double tail_si = (static_cast<double>(counts.k_si) - top_si) / rem;
    for (size_t s = k_star + 1; s <= n; ++s) {
      c.ef[s - 1] = tail_ef;
      c.si[s - 1] = tail_si;
    }
  }
  for (size_t s = 0; s < n; ++s) c.in[s] = 1.0 - c.ef[s] - c.si[s];

  constexpr double eps = 1e-12;
  for (size_t s = 0; s < n; ++s) {
    for (double v : {c.ef[s], c.si[s], c.in[s]}) {
      if (v < -eps || v > 1.0 + eps)
        throw InfeasibleCHat(s + 1, "infeasible c_hat entry " + std::to_string(v) +
                                        " at position " + std::to_string(s + 1));
    }
  }
  return c;
}

MaxGainResult max_gain_under_c_hat(const FractionalAssignment& c_hat,
                                   std::span<const GainTriple> gains) {
  if (c_hat.size() != gains.size())
    throw std::invalid_argument("assignment and gains differ in length");
  MaxGainResult result;
  result.payoffs.resize(gains.size());
  result.value = -std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < gains.size(); ++s) {
    const double t = c_hat.ef[s] * (gains[s].ef + gains[s].in) +
                     c_hat.si[s] * (gains[s].si + gains[s].in) - gains[s].in;
    result.payoffs[s] = t;
    if (t > result.value) result.value = t;
  }
  constexpr double support_eps = 1e-12;
  for (size_t s = 0; s < gains.size(); ++s)
    if (result.payoffs[s] >= result.value - support_eps) result.support.push_back(s);
  return result;
}

SaddleReport verify_saddle(std::span<const GainTriple> gains, const TypeCounts& counts,
                           double tol) {
  SaddleReport report;
  report.n = gains.size();
  report.counts = counts;
  report.tolerance = tol;
  report.upper_value = std::numeric_limits<double>::quiet_NaN();

  SelectionPolicy policy = build_policy(gains, counts);
  report.k_star = policy.k_star;
  report.gamma_closed_form = policy.gamma;

  auto [lower, worst] = min_gain(policy.p, gains, counts);
  report.lower_value = lower;
  report.worst_assignment = std::move(worst);
  report.theorem1_ok = std::abs(lower - policy.gamma) <= tol;

  if (policy.k_star < gains.size())
    report.proof_inequality_ok = policy.gamma >= gains[policy.k_star].ef - 1e-12;

  try {
    FractionalAssignment c_hat = build_c_hat(gains, counts, policy.k_star, policy.gamma);
    report.c_hat_feasible = true;
    report.c_hat_type_sums = c_hat.type_sums();
    MaxGainResult mx = max_gain_under_c_hat(c_hat, gains);
    report.upper_value = mx.value;
    report.upper_ok = std::abs(mx.value - policy.gamma) <= tol;
    for (size_t s = policy.k_star; s < gains.size(); ++s)
      if (mx.payoffs[s] > policy.gamma + tol) report.tail_ok = false;
    if (!report.theorem1_ok)
      report.reason = "lower bound does not match gamma";
    else if (!report.upper_ok)
      report.reason = "upper bound does not match gamma";
  } catch (const InfeasibleCHat& e) {
    report.c_hat_feasible = false;
    report.reason = e.what();
  }

  report.pass = report.theorem1_ok && report.c_hat_feasible && report.upper_ok;
  return report;
}

TheoryCampaign run_verify_theory(size_t trials, size_t n_max, double tol, uint64_t seed,
                                 size_t n_min, int rank_max) {
  if (n_max > kEnumerationCap)
    throw std::invalid_argument("n_max exceeds the enumeration cap of " +
                                std::to_string(kEnumerationCap));
  if (n_min < 1 || n_min > n_max) throw std::invalid_argument("invalid [n_min, n_max]");

  const auto start = std::chrono::steady_clock::now();
  TheoryCampaign campaign;
  if (trials == 0) return campaign;
  std::mt19937_64 eng = make_engine(seed);

  auto record = [&](const SaddleReport& report) {
    campaign.reports.push_back(report);
    ++campaign.trials;
    if (report.theorem1_ok) ++campaign.theorem1_passed;
    if (report.pass)
      ++campaign.saddle_passed;
    else if (!report.c_hat_feasible && report.theorem1_ok)
      ++campaign.c_hat_infeasible;
    else
      ++campaign.failures;
    if (!report.proof_inequality_ok) ++campaign.proof_inequality_violations;
  };

  // the worked 3-instance micro-example always leads the report
  record(verify_saddle(gains_from_ranks({1, 2, 3}), TypeCounts{1, 1, 1}, tol));

  for (size_t trial = 1; trial < trials; ++trial) {
    const size_t n = n_min + uniform_index(eng, n_max - n_min + 1);
    TypeCounts counts;
    do {
      counts.k_ef = uniform_index(eng, n + 1);
      counts.k_si = uniform_index(eng, n - counts.k_ef + 1);
      counts.k_in = n - counts.k_ef - counts.k_si;
    } while (counts.k_si + counts.k_in < 1);

    std::set<int> rank_set;
    while (rank_set.size() < n)
      rank_set.insert(1 + static_cast<int>(uniform_index(eng, rank_max)));
    std::vector<int> ranks(rank_set.begin(), rank_set.end());

    record(verify_saddle(gains_from_ranks(ranks), counts, tol));
  }

  campaign.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return campaign;
}

}  // namespace alkd
