#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "alkd/policy.hpp"
#include "alkd/profiling.hpp"

namespace alkd {

enum class InstanceType : uint8_t { Effective = 0, Similar = 1, Incorrect = 2 };

// Integer type assignment, one label per position; per-type counts fixed.
using Assignment = std::vector<InstanceType>;

// Point in the transportation polytope: per-position soft type memberships
// summing to one, per-type totals matching the counts.
struct FractionalAssignment {
  std::vector<double> ef;
  std::vector<double> si;
  std::vector<double> in;

  size_t size() const { return ef.size(); }
  // per-type totals (ef, si, in)
  std::array<double, 3> type_sums() const;
};

double expected_gain(std::span<const double> p, const Assignment& c,
                     std::span<const GainTriple> gains);
double expected_gain(std::span<const double> p, const FractionalAssignment& c,
                     std::span<const GainTriple> gains);

// Visits every distinct assignment with the given counts exactly once, in
// lexicographic order (Effective < Similar < Incorrect). Guarded at n <= 14;
// beyond that an exact LP would be needed, which is out of scope here.
void enumerate_assignments(size_t n, const TypeCounts& counts,
                           const std::function<void(const Assignment&)>& visit);

size_t count_assignments(size_t n, const TypeCounts& counts);

// Exact minimum of z(p, .) over all integer assignments, with the first
// minimizing assignment in enumeration order as witness.
std::pair<double, Assignment> min_gain(std::span<const double> p,
                                       std::span<const GainTriple> gains,
                                       const TypeCounts& counts);

struct InfeasibleCHat : std::runtime_error {
  size_t position;  // 1-based offending position
  InfeasibleCHat(size_t pos, const std::string& msg)
      : std::runtime_error(msg), position(pos) {}
};

// The equalizing combination: its per-position payoff equals gamma on
// [1, k_star]; beyond k_star the leftover type mass is spread uniformly.
// Throws InfeasibleCHat when an entry leaves [0, 1] (the construction is not
// guaranteed feasible for every gain profile).
FractionalAssignment build_c_hat(std::span<const GainTriple> gains,
                                 const TypeCounts& counts, size_t k_star, double gamma);

// Per-position payoffs t(s) under a fractional assignment and the maximizing
// positions; any p supported on the argmax attains the value.
struct MaxGainResult {
  double value = 0.0;
  std::vector<size_t> support;   // 0-based argmax positions
  std::vector<double> payoffs;   // t(s) per position
};
MaxGainResult max_gain_under_c_hat(const FractionalAssignment& c_hat,
                                   std::span<const GainTriple> gains);

struct SaddleReport {
  size_t n = 0;
  TypeCounts counts;
  size_t k_star = 0;
  double gamma_closed_form = 0.0;
  double lower_value = 0.0;              // min_c z(p*, c) by enumeration
  double upper_value = 0.0;              // max_s t(s) under c_hat (NaN if infeasible)
  Assignment worst_assignment;
  bool theorem1_ok = false;              // |lower - gamma| <= tol
  bool c_hat_feasible = false;
  bool upper_ok = false;                 // |upper - gamma| <= tol
  bool tail_ok = true;                   // t(s) <= gamma + tol for s > k_star
  bool proof_inequality_ok = true;       // gamma >= g_ef(k*+1) - 1e-12 when k* < n
  bool pass = false;                     // theorem1_ok && c_hat_feasible && upper_ok
  double tolerance = 0.0;
  std::string reason;
  std::array<double, 3> c_hat_type_sums{0.0, 0.0, 0.0};
};

SaddleReport verify_saddle(std::span<const GainTriple> gains, const TypeCounts& counts,
                           double tol = 1e-9);

// Randomized certification campaign: each trial draws a pool size in
// [n_min, n_max], valid counts with k_si + k_in >= 1, and gains from random
// distinct ranks. The worked 3-instance example always runs first.
struct TheoryCampaign {
  std::vector<SaddleReport> reports;
  size_t trials = 0;
  size_t theorem1_passed = 0;
  size_t saddle_passed = 0;
  size_t c_hat_infeasible = 0;
  size_t failures = 0;                   // neither passed nor infeasible-c_hat
  size_t proof_inequality_violations = 0;
  double seconds = 0.0;
};

TheoryCampaign run_verify_theory(size_t trials, size_t n_max, double tol,
                                 uint64_t seed = 42, size_t n_min = 6,
                                 int rank_max = 30);

}  // namespace alkd
