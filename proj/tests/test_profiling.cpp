#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "alkd/profiling.hpp"

using namespace alkd;

TEST_CASE("difficulty of a zero model is -sigmoid(0)") {
  RecommenderModel m = init_model(5, 4, ModelRole::Teacher, 1);
  std::fill(m.weights.begin(), m.weights.end(), 0.0);
  Session s{0, {1, 2, 3}};
  CHECK(difficulty(m, s) == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("difficulty hits -0.75 when the self-consistency is ln 3") {
  // single-item session: df = -sigmoid(||e||^2); pick ||e||^2 = ln 3
  RecommenderModel m = init_model(2, 1, ModelRole::Teacher, 1);
  m.weights = {std::sqrt(std::log(3.0)), 0.0};
  Session s{0, {0}};
  CHECK(difficulty(m, s) == doctest::Approx(-0.75).epsilon(1e-12));
}

TEST_CASE("difficulty stays inside (-1, 0)") {
  RecommenderModel m = init_model(40, 8, ModelRole::Teacher, 5);
  for (long sid = 0; sid < 20; ++sid) {
    Session s{sid, {sid, (sid + 3) % 40, (sid + 11) % 40, (sid + 17) % 40}};
    const double df = difficulty(m, s);
    CHECK(df > -1.0);
    CHECK(df < 0.0);
  }
  Session empty{99, {}};
  CHECK_THROWS_AS(difficulty(m, empty), std::runtime_error);
}

TEST_CASE("assign_gains ranks hardest first and fills the power-law gains") {
  std::vector<std::pair<long, double>> dfs = {{10, -0.7}, {11, -0.2}, {12, -0.5}};
  auto profiles = assign_gains(dfs, 10.0);
  REQUIRE(profiles.size() == 3);
  // hardest = largest df = -0.2 (sid 11)
  CHECK(profiles[0].sid == 11);
  CHECK(profiles[0].sort_rank == 1);
  CHECK(profiles[0].g_ef == 1.0);
  CHECK(profiles[0].g_si == 0.5);
  CHECK(profiles[0].g_in == 0.5);
  CHECK(profiles[1].sid == 12);
  CHECK(profiles[1].g_ef == doctest::Approx(0.0009765625).epsilon(1e-15));
  CHECK(profiles[2].sid == 10);

  // strictly decreasing g_ef
  for (size_t i = 1; i < profiles.size(); ++i) CHECK(profiles[i - 1].g_ef > profiles[i].g_ef);
}

TEST_CASE("assign_gains breaks difficulty ties by ascending sid") {
  std::vector<std::pair<long, double>> dfs = {{22, -0.4}, {21, -0.4}, {23, -0.6}};
  auto profiles = assign_gains(dfs, 10.0);
  CHECK(profiles[0].sid == 21);
  CHECK(profiles[1].sid == 22);
  CHECK(profiles[2].sid == 23);
}

TEST_CASE("assign_gains honors the easy-first flag") {
  std::vector<std::pair<long, double>> dfs = {{1, -0.7}, {2, -0.2}};
  auto easy = assign_gains(dfs, 10.0, RankDirection::EasyFirst);
  CHECK(easy[0].sid == 1);  // easiest = most negative df
}

TEST_CASE("assign_gains is a bijection over sids") {
  std::vector<std::pair<long, double>> dfs;
  for (long sid = 0; sid < 50; ++sid)
    dfs.emplace_back(sid * 3 + 1, -0.2 - 0.01 * static_cast<double>(sid % 7));
  auto profiles = assign_gains(dfs, 10.0);
  std::set<long> in, out;
  for (const auto& [sid, df] : dfs) in.insert(sid);
  for (const InstanceProfile& p : profiles) out.insert(p.sid);
  CHECK(in == out);
  // g_si + g_in == g_ef under the halving rule
  for (const InstanceProfile& p : profiles)
    CHECK(p.g_si + p.g_in == doctest::Approx(p.g_ef).epsilon(1e-15));
}

TEST_CASE("type_counts allocates by floor with remainder to si, in, ef") {
  TypeCounts c = type_counts(500, {1, 5, 4});
  CHECK(c.k_ef == 50);
  CHECK(c.k_si == 250);
  CHECK(c.k_in == 200);

  TypeCounts ten = type_counts(10, {1, 5, 4});
  CHECK(ten.k_ef == 1);
  CHECK(ten.k_si == 5);
  CHECK(ten.k_in == 4);

  TypeCounts seven = type_counts(7, {1, 1, 1});
  CHECK(seven.k_ef == 2);
  CHECK(seven.k_si == 3);
  CHECK(seven.k_in == 2);
  CHECK(seven.pool() == 7);

  CHECK_THROWS_AS(type_counts(5, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("profiles round-trip through jsonl") {
  std::vector<std::pair<long, double>> dfs = {{4, -0.3}, {9, -0.6}};
  auto profiles = assign_gains(dfs, 10.0);
  auto path = std::filesystem::temp_directory_path() / "alkd_profiles_test.jsonl";
  save_profiles_jsonl(path, profiles);
  auto loaded = load_profiles_jsonl(path);
  REQUIRE(loaded.size() == profiles.size());
  for (size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded[i].sid == profiles[i].sid);
    CHECK(loaded[i].difficulty == profiles[i].difficulty);
    CHECK(loaded[i].sort_rank == profiles[i].sort_rank);
    CHECK(loaded[i].g_ef == profiles[i].g_ef);
  }
  std::filesystem::remove(path);
}
