#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "alkd/dataset.hpp"
#include "alkd/profiling.hpp"
#include "alkd/saddle.hpp"

namespace alkd {

constexpr size_t kRankingLen = 25;

struct TeacherRanking {
  enum class Source { Rec, Llm, Sim };
  long sid = 0;
  Source source = Source::Rec;
  std::vector<long> items;  // exactly kRankingLen distinct ids
};

const char* source_name(TeacherRanking::Source s);
TeacherRanking::Source source_from_name(const std::string& name);

struct Hints {
  std::vector<std::string> lines;
  int case_count = 0;
  bool fallback = false;  // summarization failed or was skipped
};

struct EndpointConfig {
  std::string base_url;         // scheme://host[:port]
  std::string model;
  std::string api_key_env;      // name of the env var holding the key
  int timeout_s = 60;
  int max_inflight = 4;
  int retry_limit = 3;
  int initial_backoff_ms = 500;
  std::string cache_dir = "cache";
};

// Hidden per-instance outcome used by the offline simulator.
struct SimProfile {
  std::unordered_map<long, InstanceType> hidden;
  uint64_t seed = 0;
};

enum class SimScheme {
  Banded,       // hardest -> incorrect, middle -> effective, easiest -> similar
  Adversarial,  // the minimizing assignment of the selection game
  Uniform,      // seeded shuffle
};

SimScheme sim_scheme_from_name(const std::string& name);

// `profiles` in sort order (hardest first); type counts fixed by `counts`.
SimProfile make_sim_profile(std::span<const InstanceProfile> profiles,
                            const TypeCounts& counts, SimScheme scheme, uint64_t seed);

// Top-kappa of the conventional teacher's ranking.
std::vector<long> candidate_set(std::span<const long> rec_ranking, size_t kappa = 50);

struct SummaryCase {
  std::vector<std::pair<long, std::string>> interactions;     // (id, title)
  std::vector<std::pair<long, std::string>> recommendations;  // rec top-20
};

std::string build_summary_prompt(std::span<const SummaryCase> cases);
std::string build_rec_prompt(std::span<const std::pair<long, std::string>> prefix_titles,
                             const Hints& hints,
                             std::span<const std::pair<long, std::string>> candidates);

// (id, title) pairs for the given ids; throws naming the id if a title is
// missing. Tabs in titles are replaced by spaces.
std::vector<std::pair<long, std::string>> titled(const ItemCatalog& catalog,
                                                 std::span<const long> ids);

struct MalformedResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Extract <ID...> tokens in order, keep candidate ids, drop duplicates, and
// return the first 25; fewer than 25 valid ids is a malformed response.
std::vector<long> parse_ranking(const std::string& response,
                                std::span<const long> candidates);

// Chat-completion client with on-disk response cache (keyed by prompt hash)
// and exponential-backoff retries. Safe to call from several threads.
class ChatClient {
 public:
  explicit ChatClient(EndpointConfig cfg);

  std::string chat_complete(const std::string& prompt);
  size_t network_calls() const { return network_calls_.load(); }
  const EndpointConfig& config() const { return cfg_; }

 private:
  std::string post_once(const std::string& prompt);

  EndpointConfig cfg_;
  std::atomic<size_t> network_calls_{0};
};

Hints summarize_hints(ChatClient& client, std::span<const SummaryCase> cases);

enum class TeachMode { Http, Simulate };

struct TeachContext {
  const ItemCatalog* catalog = nullptr;
  Hints hints;
  size_t kappa = 50;
  ChatClient* client = nullptr;     // http mode
  const SimProfile* sim = nullptr;  // simulate mode
};

// One instance -> one 25-item ranking. Http mode re-asks twice on malformed
// output and finally falls back to the conventional teacher's top 25, so a
// batch always completes.
TeacherRanking teach(const EvalInstance& instance, std::span<const long> rec_ranking,
                     TeachMode mode, const TeachContext& ctx);

std::vector<TeacherRanking> teach_all(std::span<const EvalInstance> instances,
                                      const std::vector<std::vector<long>>& rec_rankings,
                                      TeachMode mode, const TeachContext& ctx);

void save_rankings_jsonl(const std::filesystem::path& path,
                         const std::vector<TeacherRanking>& rankings);
std::vector<TeacherRanking> load_rankings_jsonl(const std::filesystem::path& path);

}  // namespace alkd
