#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <functional>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "alkd/io.hpp"
#include "alkd/teacher.hpp"

using namespace alkd;
namespace fs = std::filesystem;

namespace {

fs::path golden(const std::string& name) {
  return fs::path(ALKD_TEST_DATA_DIR) / name;
}

fs::path fresh_cache_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("alkd_cache_" + tag);
  fs::remove_all(dir);
  return dir;
}

// minimal chat-completion endpoint for the client tests
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::function<std::pair<int, std::string>(const std::string&)> handler)
      : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   ++hits_;
                   nlohmann::json body = nlohmann::json::parse(req.body);
                   const std::string prompt =
                       body.at("messages").at(0).at("content").get<std::string>();
                   auto [status, content] = handler_(prompt);
                   res.status = status;
                   if (status == 200) {
                     nlohmann::json reply;
                     reply["choices"] = nlohmann::json::array(
                         {{{"message", {{"role", "assistant"}, {"content", content}}}}});
                     res.set_content(reply.dump(), "application/json");
                   } else {
                     res.set_content("boom", "text/plain");
                   }
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int hits() const { return hits_.load(); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::function<std::pair<int, std::string>(const std::string&)> handler_;
};

EndpointConfig test_endpoint(const FakeEndpoint& server, const std::string& cache_tag) {
  EndpointConfig cfg;
  cfg.base_url = server.url();
  cfg.model = "test-model";
  cfg.timeout_s = 5;
  cfg.retry_limit = 2;
  cfg.initial_backoff_ms = 1;
  cfg.cache_dir = fresh_cache_dir(cache_tag).string();
  return cfg;
}

std::string ranking_text(const std::vector<long>& ids) {
  std::string out = "[";
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ",";
    out += "<ID" + std::to_string(ids[i]) + ">";
  }
  return out + "]";
}

}  // namespace

TEST_CASE("candidate_set truncates the conventional ranking") {
  std::vector<long> ranking(100);
  for (size_t i = 0; i < ranking.size(); ++i) ranking[i] = static_cast<long>(i + 1000);
  auto c = candidate_set(ranking, 50);
  REQUIRE(c.size() == 50);
  CHECK(c.front() == 1000);
  CHECK(c.back() == 1049);

  CHECK(candidate_set(ranking, 1).size() == 1);
  CHECK_THROWS_AS(candidate_set(ranking, 0), std::invalid_argument);
  std::vector<long> short_ranking(10);
  CHECK_THROWS_AS(candidate_set(short_ranking, 50), std::runtime_error);
}

TEST_CASE("recommendation prompt matches the golden file") {
  std::vector<std::pair<long, std::string>> prefix = {{1, "Casino Royale"}, {2, "Batman"}};
  Hints hints;
  hints.lines = {"Sequel and Franchise Continuity: users stay inside a series.",
                 "Genre Affinity: same-genre titles follow."};
  std::vector<std::pair<long, std::string>> candidates = {
      {10, "Heat"}, {11, "Ronin"}, {12, "Spectre"}};
  CHECK(build_rec_prompt(prefix, hints, candidates) ==
        read_file(golden("prompt_dst_fixture.txt")));
}

TEST_CASE("recommendation prompt stays valid with empty hints and sanitizes tabs") {
  std::vector<std::pair<long, std::string>> prefix = {{1, "A"}};
  std::vector<std::pair<long, std::string>> candidates = {{2, "With\tTab"}};
  std::string prompt = build_rec_prompt(prefix, Hints{}, candidates);
  CHECK(prompt.find("hints for recommendation: {}") != std::string::npos);
  CHECK(prompt.find("<ID2:With Tab>") != std::string::npos);
  CHECK(prompt.find('\t') == std::string::npos);

  CHECK_THROWS_AS(build_rec_prompt(prefix, Hints{}, {}), std::invalid_argument);
}

TEST_CASE("summary prompt matches the golden file") {
  std::vector<SummaryCase> cases(2);
  cases[0].interactions = {{1, "Casino Royale"}, {2, "Batman"}};
  cases[0].recommendations = {{3, "Skyfall"}, {4, "Goldfinger"}};
  cases[1].interactions = {{5, "Alien"}};
  cases[1].recommendations = {{6, "Aliens"}};
  CHECK(build_summary_prompt(cases) == read_file(golden("prompt_smr_fixture.txt")));

  std::vector<SummaryCase> single(cases.begin(), cases.begin() + 1);
  std::string prompt = build_summary_prompt(single);
  CHECK(prompt.find("We provide {1} cases") != std::string::npos);
  CHECK(prompt.find("For case {2}") == std::string::npos);

  CHECK_THROWS_AS(build_summary_prompt({}), std::invalid_argument);
}

TEST_CASE("titled resolves ids and names missing ones") {
  ItemCatalog catalog;
  catalog.titles[1] = "A";
  std::vector<long> ids = {1};
  CHECK(titled(catalog, ids)[0].second == "A");
  std::vector<long> missing = {7};
  CHECK_THROWS_WITH_AS(titled(catalog, missing), doctest::Contains("7"),
                       std::runtime_error);
}

TEST_CASE("parse_ranking extracts candidate ids in order") {
  std::vector<long> candidates;
  for (long i = 0; i < 50; ++i) candidates.push_back(5000 + i);

  std::vector<long> listed(candidates.begin(), candidates.begin() + 25);
  auto parsed = parse_ranking(ranking_text(listed), candidates);
  CHECK(parsed == listed);

  // duplicates collapse to the first occurrence; extra ids fill up the list
  std::vector<long> with_dup = listed;
  with_dup.insert(with_dup.begin() + 3, listed[0]);
  with_dup.push_back(5040);
  auto deduped = parse_ranking(ranking_text(with_dup), candidates);
  REQUIRE(deduped.size() == 25);
  CHECK(deduped == listed);

  // non-candidate ids only
  std::string junk = "[<ID1>,<ID2>,<ID3>]";
  CHECK_THROWS_AS(parse_ranking(junk, candidates), MalformedResponse);
  // too few
  std::vector<long> few(candidates.begin(), candidates.begin() + 10);
  CHECK_THROWS_AS(parse_ranking(ranking_text(few), candidates), MalformedResponse);
}

TEST_CASE("chat responses are cached by prompt hash") {
  FakeEndpoint server([](const std::string&) { return std::make_pair(200, "hello"); });
  ChatClient client(test_endpoint(server, "hit"));
  CHECK(client.chat_complete("prompt one") == "hello");
  CHECK(client.network_calls() == 1);
  CHECK(client.chat_complete("prompt one") == "hello");
  CHECK(client.network_calls() == 1);  // served from cache
  CHECK(server.hits() == 1);
  CHECK(fs::exists(fs::path(client.config().cache_dir)));
}

TEST_CASE("persistent 500s exhaust the retry budget") {
  FakeEndpoint server([](const std::string&) { return std::make_pair(500, ""); });
  ChatClient client(test_endpoint(server, "fail"));
  CHECK_THROWS_WITH_AS(client.chat_complete("will fail"), doctest::Contains("attempts"),
                       std::runtime_error);
  CHECK(server.hits() == 3);  // 1 try + 2 retries
}

TEST_CASE("summarize_hints splits the reply into lines and flags failures") {
  FakeEndpoint server([](const std::string&) {
    return std::make_pair(200, std::string("Hint one.\n\n  Hint two.\n"));
  });
  ChatClient client(test_endpoint(server, "hints"));
  std::vector<SummaryCase> cases(1);
  cases[0].interactions = {{1, "A"}};
  cases[0].recommendations = {{2, "B"}};
  Hints hints = summarize_hints(client, cases);
  CHECK(!hints.fallback);
  REQUIRE(hints.lines.size() == 2);
  CHECK(hints.lines[0] == "Hint one.");
  CHECK(hints.lines[1] == "Hint two.");
  CHECK(hints.case_count == 1);

  FakeEndpoint broken([](const std::string&) { return std::make_pair(500, ""); });
  ChatClient failing(test_endpoint(broken, "hints_fail"));
  Hints fallback = summarize_hints(failing, cases);
  CHECK(fallback.fallback);
  CHECK(fallback.lines.empty());
}

TEST_CASE("simulator produces the three outcome shapes deterministically") {
  const size_t n_items = 80;
  std::vector<long> rec_ranking;
  for (size_t i = 0; i < n_items; ++i) rec_ranking.push_back(static_cast<long>(i));

  EvalInstance inst;
  inst.sid = 42;
  inst.prefix = {70, 71, 72};
  inst.target = 3;  // inside the candidate top-50

  TeachContext ctx;
  ctx.kappa = 50;
  SimProfile sim;
  sim.seed = 9;
  ctx.sim = &sim;

  auto candidates = candidate_set(rec_ranking, 50);
  std::set<long> candidate_pool(candidates.begin(), candidates.end());

  sim.hidden[42] = InstanceType::Effective;
  TeacherRanking effective = teach(inst, rec_ranking, TeachMode::Simulate, ctx);
  CHECK(effective.source == TeacherRanking::Source::Sim);
  REQUIRE(effective.items.size() == kRankingLen);
  CHECK(effective.items[0] == inst.target);

  sim.hidden[42] = InstanceType::Similar;
  TeacherRanking similar = teach(inst, rec_ranking, TeachMode::Simulate, ctx);
  CHECK(similar.items == std::vector<long>(rec_ranking.begin(), rec_ranking.begin() + 25));

  sim.hidden[42] = InstanceType::Incorrect;
  TeacherRanking incorrect = teach(inst, rec_ranking, TeachMode::Simulate, ctx);
  CHECK(std::find(incorrect.items.begin(), incorrect.items.end(), inst.target) ==
        incorrect.items.end());
  TeacherRanking incorrect2 = teach(inst, rec_ranking, TeachMode::Simulate, ctx);
  CHECK(incorrect.items == incorrect2.items);  // same sim seed, same shuffle

  // all outputs: 25 distinct items from the candidate set (plus the target
  // in the effective case)
  for (const TeacherRanking* r : {&effective, &similar, &incorrect}) {
    std::set<long> distinct(r->items.begin(), r->items.end());
    CHECK(distinct.size() == kRankingLen);
    for (long item : r->items)
      CHECK((candidate_pool.count(item) == 1 || item == inst.target));
  }
}

TEST_CASE("sim profiles respect the type counts under every scheme") {
  std::vector<std::pair<long, double>> dfs;
  for (long sid = 0; sid < 20; ++sid) dfs.emplace_back(sid, -0.2 - 0.01 * sid);
  auto profiles = assign_gains(dfs, 10.0);
  TypeCounts counts = type_counts(20, {1, 5, 4});  // (2, 10, 8)

  for (SimScheme scheme : {SimScheme::Banded, SimScheme::Adversarial, SimScheme::Uniform}) {
    SimProfile sim = make_sim_profile(profiles, counts, scheme, 3);
    size_t ef = 0, si = 0, in = 0;
    for (const auto& [sid, type] : sim.hidden) {
      ef += type == InstanceType::Effective;
      si += type == InstanceType::Similar;
      in += type == InstanceType::Incorrect;
    }
    CHECK(ef == counts.k_ef);
    CHECK(si == counts.k_si);
    CHECK(in == counts.k_in);
  }

  // banded: hardest ranks are incorrect, the middle band is effective
  SimProfile banded = make_sim_profile(profiles, counts, SimScheme::Banded, 3);
  CHECK(banded.hidden.at(profiles[0].sid) == InstanceType::Incorrect);
  CHECK(banded.hidden.at(profiles[counts.k_in].sid) == InstanceType::Effective);
  CHECK(banded.hidden.at(profiles[19].sid) == InstanceType::Similar);
}

TEST_CASE("http teaching parses a well-formed reply") {
  std::vector<long> rec_ranking;
  for (long i = 0; i < 60; ++i) rec_ranking.push_back(i);
  std::vector<long> reply_ids;
  for (long i = 49; i >= 25; --i) reply_ids.push_back(i);  // valid candidates, reversed

  FakeEndpoint server(
      [&](const std::string&) { return std::make_pair(200, ranking_text(reply_ids)); });
  ChatClient client(test_endpoint(server, "teach_ok"));

  ItemCatalog catalog;
  for (long i = 0; i < 60; ++i) catalog.titles[i] = "Title " + std::to_string(i);

  TeachContext ctx;
  ctx.catalog = &catalog;
  ctx.client = &client;
  ctx.kappa = 50;

  EvalInstance inst;
  inst.sid = 7;
  inst.prefix = {55, 56};
  inst.target = 1;
  TeacherRanking r = teach(inst, rec_ranking, TeachMode::Http, ctx);
  CHECK(r.source == TeacherRanking::Source::Llm);
  CHECK(r.items == reply_ids);
}

TEST_CASE("malformed replies fall back to the conventional top 25") {
  FakeEndpoint server([](const std::string&) {
    return std::make_pair(200, std::string("no ids at all"));
  });
  ChatClient client(test_endpoint(server, "teach_bad"));

  ItemCatalog catalog;
  for (long i = 0; i < 60; ++i) catalog.titles[i] = "Title " + std::to_string(i);

  TeachContext ctx;
  ctx.catalog = &catalog;
  ctx.client = &client;
  ctx.kappa = 50;

  std::vector<long> rec_ranking;
  for (long i = 0; i < 60; ++i) rec_ranking.push_back(i);
  std::vector<EvalInstance> instances(3);
  for (long i = 0; i < 3; ++i) {
    instances[i].sid = i;
    instances[i].prefix = {55 + i};  // distinct prompts, no cross-instance cache hits
    instances[i].target = 2;
  }
  std::vector<std::vector<long>> rankings(3, rec_ranking);

  auto out = teach_all(instances, rankings, TeachMode::Http, ctx);
  REQUIRE(out.size() == 3);  // a batch of M instances always yields M rankings
  for (const TeacherRanking& r : out) {
    CHECK(r.source == TeacherRanking::Source::Rec);
    CHECK(r.items == std::vector<long>(rec_ranking.begin(), rec_ranking.begin() + 25));
  }
  // each instance: 3 asks (initial + 2 re-asks), distinct cache keys
  CHECK(server.hits() == 9);
}

TEST_CASE("rankings round-trip through jsonl") {
  std::vector<TeacherRanking> rankings(2);
  rankings[0].sid = 5;
  rankings[0].source = TeacherRanking::Source::Sim;
  rankings[1].sid = 9;
  rankings[1].source = TeacherRanking::Source::Llm;
  for (long i = 0; i < 25; ++i) {
    rankings[0].items.push_back(i);
    rankings[1].items.push_back(100 + i);
  }
  auto path = fs::temp_directory_path() / "alkd_rankings_test.jsonl";
  save_rankings_jsonl(path, rankings);
  auto loaded = load_rankings_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].source == TeacherRanking::Source::Sim);
  CHECK(loaded[1].items == rankings[1].items);
  fs::remove(path);
}
