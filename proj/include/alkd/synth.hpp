#pragma once

#include <cstdint>
#include <filesystem>

#include "alkd/dataset.hpp"

namespace alkd {

// Planted next-item structure: each session is a walk where item i is
// followed by (i+1) mod n_items with probability p_next, otherwise by a
// uniform item. Lengths uniform in [len_min, len_max].
struct SynthConfig {
  size_t n_sessions = 2000;
  size_t n_items = 500;
  double p_next = 0.8;
  int len_min = 5;
  int len_max = 15;
  uint64_t seed = 1;
};

// Raw interaction log plus catalog; one synthetic user per session, all of a
// user's interactions a minute apart so the standard preprocessing
// reconstructs the planted sessions unchanged.
struct SynthFiles {
  std::filesystem::path interactions;
  std::filesystem::path catalog;
};

SynthFiles write_synth_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg);

// In-memory variant for tests.
std::vector<Session> make_planted_sessions(const SynthConfig& cfg);

}  // namespace alkd
