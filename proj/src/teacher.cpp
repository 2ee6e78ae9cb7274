#include "alkd/teacher.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "alkd/io.hpp"
#include "alkd/rng.hpp"

namespace alkd {

const char* source_name(TeacherRanking::Source s) {
  switch (s) {
    case TeacherRanking::Source::Rec: return "rec";
    case TeacherRanking::Source::Llm: return "llm";
    case TeacherRanking::Source::Sim: return "sim";
  }
  return "?";
}

TeacherRanking::Source source_from_name(const std::string& name) {
  if (name == "rec") return TeacherRanking::Source::Rec;
  if (name == "llm") return TeacherRanking::Source::Llm;
  if (name == "sim") return TeacherRanking::Source::Sim;
  throw std::runtime_error("unknown ranking source: " + name);
}

SimScheme sim_scheme_from_name(const std::string& name) {
  if (name == "banded") return SimScheme::Banded;
  if (name == "adversarial") return SimScheme::Adversarial;
  if (name == "uniform") return SimScheme::Uniform;
  throw std::runtime_error("unknown sim scheme: " + name);
}

SimProfile make_sim_profile(std::span<const InstanceProfile> profiles,
                            const TypeCounts& counts, SimScheme scheme, uint64_t seed) {
  if (counts.pool() != profiles.size())
    throw std::invalid_argument("type counts must sum to the pool size");
  SimProfile profile;
  profile.seed = seed;
  const size_t n = profiles.size();
  std::vector<InstanceType> types(n);

  switch (scheme) {
    case SimScheme::Banded:
      // difficulty-correlated outcomes: the teacher LLM fails on the hardest
      // sessions, adds signal on the middle band, and mirrors the
      // conventional teacher on the easy bulk
      for (size_t i = 0; i < n; ++i) {
        if (i < counts.k_in)
          types[i] = InstanceType::Incorrect;
        else if (i < counts.k_in + counts.k_ef)
          types[i] = InstanceType::Effective;
        else
          types[i] = InstanceType::Similar;
      }
      break;
    case SimScheme::Adversarial:
      // the assignment that minimizes the selection game's expected gain
      for (size_t i = 0; i < n; ++i) {
        if (i < counts.k_si)
          types[i] = InstanceType::Similar;
        else if (i < counts.k_si + counts.k_in)
          types[i] = InstanceType::Incorrect;
        else
          types[i] = InstanceType::Effective;
      }
      break;
    case SimScheme::Uniform: {
      for (size_t i = 0; i < n; ++i) {
        if (i < counts.k_ef)
          types[i] = InstanceType::Effective;
        else if (i < counts.k_ef + counts.k_si)
          types[i] = InstanceType::Similar;
        else
          types[i] = InstanceType::Incorrect;
      }
      std::mt19937_64 eng = make_engine(seed);
      shuffle_inplace(types, eng);
      break;
    }
  }
  for (size_t i = 0; i < n; ++i) profile.hidden[profiles[i].sid] = types[i];
  return profile;
}

std::vector<long> candidate_set(std::span<const long> rec_ranking, size_t kappa) {
  if (kappa == 0) throw std::invalid_argument("kappa must be >= 1");
  if (rec_ranking.size() < kappa)
    throw std::runtime_error("ranking of " + std::to_string(rec_ranking.size()) +
                             " items is shorter than kappa=" + std::to_string(kappa));
  return {rec_ranking.begin(), rec_ranking.begin() + kappa};
}

namespace {

std::string sanitize(const std::string& title) {
  std::string out = title;
  std::replace(out.begin(), out.end(), '\t', ' ');
  return out;
}

std::string title_list(std::span<const std::pair<long, std::string>> entries) {
  std::ostringstream out;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) out << ' ';
    out << '<' << "ID" << entries[i].first << ':' << sanitize(entries[i].second) << '>';
  }
  return out.str();
}

}  // namespace

std::vector<std::pair<long, std::string>> titled(const ItemCatalog& catalog,
                                                 std::span<const long> ids) {
  std::vector<std::pair<long, std::string>> out;
  out.reserve(ids.size());
  for (long id : ids) {
    auto it = catalog.titles.find(id);
    if (it == catalog.titles.end())
      throw std::runtime_error("no title for item " + std::to_string(id));
    out.emplace_back(id, it->second);
  }
  return out;
}

std::string build_summary_prompt(std::span<const SummaryCase> cases) {
  if (cases.empty()) throw std::invalid_argument("need at least one summarization case");
  std::ostringstream out;
  out << "You are an AI assistant, please STRICTLY summarize the main logic of the "
         "recommendation results provided by MY recommender system based on users' "
         "behaviors. Specifically, the users have interacted with several movies/games "
         "(i.e., users' behaviors). The recommender system provides Top-20 items (i.e., "
         "recommendation results) based on users' behaviors, where the item in the top "
         "position indicates the higher recommendation intent. We provide {"
      << cases.size()
      << "} cases for you to summarize the relationship between users' behaviors and "
         "recommendation results:\n";
  for (size_t i = 0; i < cases.size(); ++i) {
    out << "For case {" << (i + 1) << "}, the user's interactions are {"
        << title_list(cases[i].interactions) << "}. The recommendation results are {"
        << title_list(cases[i].recommendations) << "}.\n";
  }
  out << "Do not output the detailed analysis of specific items, and make high-level "
         "summarization JUST WITH PROVIDED CASES, e.g.,\n"
         "1. Ignore diversity in genres or series. For example, Although the user "
         "already owns this one, there would still be interest in the same one, e.g., "
         "its the special version.\n";
  return out.str();
}

std::string build_rec_prompt(std::span<const std::pair<long, std::string>> prefix_titles,
                             const Hints& hints,
                             std::span<const std::pair<long, std::string>> candidates) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  std::ostringstream out;
  out << "You are an AI recommender system, please make accurate recommendations to "
         "the user according to his/her behaviors.\n"
         "There are some hints for recommendation: {";
  for (size_t i = 0; i < hints.lines.size(); ++i) {
    if (i > 0) out << "; ";
    out << hints.lines[i];
  }
  out << "}\n";
  out << "The user has bought/watched {" << prefix_titles.size()
      << "} movies, whose titles are namely {" << title_list(prefix_titles)
      << "} (e.g., <ID1:Casino Royale> <ID2:Batman>).\n";
  out << "Based on these interactions, recommend a ranking list of items for the user "
         "from a candidate set: {"
      << title_list(candidates) << "}.\n";
  out << "Specifically, rank ALL these candidate items and provide EXACTLY 25 items "
         "for recommendations, where the item in the top position indicates the "
         "higher recommendation intent.\n"
         "Just output WITHOUT ANY OTHER MESSAGE: [<ID1>,...,<ID25>] with <ID?> "
         "surrounding JUST the ID WITHOUT title and split all IDs with a comma.\n";
  return out.str();
}

std::vector<long> parse_ranking(const std::string& response,
                                std::span<const long> candidates) {
  std::unordered_set<long> candidate_set(candidates.begin(), candidates.end());
  std::vector<long> picked;
  std::unordered_set<long> seen;
  size_t pos = 0;
  while ((pos = response.find("<ID", pos)) != std::string::npos) {
    size_t digits = pos + 3;
    size_t end = digits;
    while (end < response.size() && std::isdigit(static_cast<unsigned char>(response[end])))
      ++end;
    if (end > digits && end < response.size() && response[end] == '>') {
      long id = std::stol(response.substr(digits, end - digits));
      if (candidate_set.count(id) && seen.insert(id).second) {
        picked.push_back(id);
        if (picked.size() == kRankingLen) return picked;
      }
      pos = end + 1;
    } else {
      pos = digits;
    }
  }
  throw MalformedResponse("only " + std::to_string(picked.size()) +
                          " valid candidate ids in response, need " +
                          std::to_string(kRankingLen));
}

ChatClient::ChatClient(EndpointConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.retry_limit < 0) throw std::invalid_argument("retry limit must be >= 0");
  if (cfg_.max_inflight < 1) throw std::invalid_argument("max in-flight must be >= 1");
}

std::string ChatClient::post_once(const std::string& prompt) {
  httplib::Client http(cfg_.base_url);
  http.set_connection_timeout(cfg_.timeout_s);
  http.set_read_timeout(cfg_.timeout_s);
  if (!cfg_.api_key_env.empty()) {
    const char* key = std::getenv(cfg_.api_key_env.c_str());
    if (key == nullptr)
      throw std::runtime_error("API key env var not set: " + cfg_.api_key_env);
    http.set_bearer_token_auth(key);
  }
  nlohmann::json body;
  body["model"] = cfg_.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = 0;

  ++network_calls_;
  httplib::Result res = http.Post("/v1/chat/completions", body.dump(), "application/json");
  if (!res)
    throw std::runtime_error("chat request failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw std::runtime_error("chat endpoint returned HTTP " + std::to_string(res->status));
  nlohmann::json reply = nlohmann::json::parse(res->body);
  return reply.at("choices").at(0).at("message").at("content").get<std::string>();
}

std::string ChatClient::chat_complete(const std::string& prompt) {
  const std::filesystem::path cache_file =
      std::filesystem::path(cfg_.cache_dir) / (sha256_hex(prompt) + ".txt");
  if (std::filesystem::exists(cache_file)) return read_file(cache_file);

  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.retry_limit; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(cfg_.initial_backoff_ms << (attempt - 1)));
    try {
      std::string reply = post_once(prompt);
      write_file_atomic(cache_file, reply);
      return reply;
    } catch (const std::exception& e) {
      last_error = e.what();
    }
  }
  throw std::runtime_error("chat failed after " + std::to_string(cfg_.retry_limit + 1) +
                           " attempts: " + last_error);
}

Hints summarize_hints(ChatClient& client, std::span<const SummaryCase> cases) {
  Hints hints;
  hints.case_count = static_cast<int>(cases.size());
  try {
    std::string reply = client.chat_complete(build_summary_prompt(cases));
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      size_t start = line.find_first_not_of(" \t");
      if (start == std::string::npos) continue;
      hints.lines.push_back(line.substr(start));
    }
  } catch (const std::exception&) {
    hints.fallback = true;
    hints.lines.clear();
  }
  if (hints.lines.empty()) hints.fallback = true;
  return hints;
}

namespace {

TeacherRanking simulate_ranking(const EvalInstance& instance,
                                std::span<const long> rec_ranking,
                                const std::vector<long>& candidates,
                                const TeachContext& ctx) {
  auto it = ctx.sim->hidden.find(instance.sid);
  if (it == ctx.sim->hidden.end())
    throw std::runtime_error("no hidden type for sid " + std::to_string(instance.sid));

  TeacherRanking out;
  out.sid = instance.sid;
  out.source = TeacherRanking::Source::Sim;

  std::vector<long> without_target;
  for (long id : candidates)
    if (id != instance.target) without_target.push_back(id);
  if (without_target.size() < kRankingLen)
    throw std::runtime_error("candidate set too small to simulate: need " +
                             std::to_string(kRankingLen) + " non-target items");

  switch (it->second) {
    case InstanceType::Effective:
      // the ground-truth next item leads, the rest keep candidate order
      out.items.push_back(instance.target);
      out.items.insert(out.items.end(), without_target.begin(),
                       without_target.begin() + (kRankingLen - 1));
      break;
    case InstanceType::Similar:
      out.items.assign(rec_ranking.begin(), rec_ranking.begin() + kRankingLen);
      break;
    case InstanceType::Incorrect: {
      std::mt19937_64 eng =
          make_engine(mix_seed(ctx.sim->seed, static_cast<uint64_t>(instance.sid)));
      shuffle_inplace(without_target, eng);
      out.items.assign(without_target.begin(), without_target.begin() + kRankingLen);
      break;
    }
  }
  return out;
}

}  // namespace

TeacherRanking teach(const EvalInstance& instance, std::span<const long> rec_ranking,
                     TeachMode mode, const TeachContext& ctx) {
  if (rec_ranking.size() < std::max(ctx.kappa, kRankingLen))
    throw std::runtime_error("conventional ranking too short for sid " +
                             std::to_string(instance.sid));
  std::vector<long> candidates = candidate_set(rec_ranking, ctx.kappa);

  if (mode == TeachMode::Simulate) {
    if (ctx.sim == nullptr) throw std::runtime_error("simulate mode needs a SimProfile");
    return simulate_ranking(instance, rec_ranking, candidates, ctx);
  }

  if (ctx.client == nullptr || ctx.catalog == nullptr)
    throw std::runtime_error("http mode needs a chat client and a catalog");
  auto prefix_titles = titled(*ctx.catalog, instance.prefix);
  auto candidate_titles = titled(*ctx.catalog, candidates);
  const std::string prompt = build_rec_prompt(prefix_titles, ctx.hints, candidate_titles);

  for (int attempt = 0; attempt < 3; ++attempt) {
    std::string ask = prompt;
    if (attempt > 0)
      ask += "\nYour previous output was invalid. Output EXACTLY 25 items in the "
             "specified format and nothing else. (attempt " +
             std::to_string(attempt + 1) + ")\n";
    try {
      TeacherRanking out;
      out.sid = instance.sid;
      out.source = TeacherRanking::Source::Llm;
      out.items = parse_ranking(ctx.client->chat_complete(ask), candidates);
      return out;
    } catch (const std::exception&) {
      // malformed output or transport failure; re-ask, then fall back
    }
  }
  TeacherRanking fallback;
  fallback.sid = instance.sid;
  fallback.source = TeacherRanking::Source::Rec;
  fallback.items.assign(rec_ranking.begin(), rec_ranking.begin() + kRankingLen);
  return fallback;
}

std::vector<TeacherRanking> teach_all(std::span<const EvalInstance> instances,
                                      const std::vector<std::vector<long>>& rec_rankings,
                                      TeachMode mode, const TeachContext& ctx) {
  if (instances.size() != rec_rankings.size())
    throw std::invalid_argument("instances and rankings differ in length");
  std::vector<TeacherRanking> out(instances.size());

  if (mode == TeachMode::Simulate) {
    for (size_t i = 0; i < instances.size(); ++i)
      out[i] = teach(instances[i], rec_rankings[i], mode, ctx);
    return out;
  }

  const size_t inflight = ctx.client == nullptr
                              ? 1
                              : static_cast<size_t>(ctx.client->config().max_inflight);
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(std::max<size_t>(inflight, 1));
  for (size_t w = 0; w < std::max<size_t>(inflight, 1); ++w) {
    workers.emplace_back([&, w] {
      try {
        while (true) {
          const size_t i = next.fetch_add(1);
          if (i >= instances.size()) break;
          out[i] = teach(instances[i], rec_rankings[i], mode, ctx);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : workers) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void save_rankings_jsonl(const std::filesystem::path& path,
                         const std::vector<TeacherRanking>& rankings) {
  std::ostringstream out;
  for (const TeacherRanking& r : rankings) {
    nlohmann::json j;
    j["sid"] = r.sid;
    j["source"] = source_name(r.source);
    j["items"] = r.items;
    out << j.dump() << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<TeacherRanking> load_rankings_jsonl(const std::filesystem::path& path) {
  std::vector<TeacherRanking> rankings;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    TeacherRanking r;
    r.sid = j.at("sid").get<long>();
    r.source = source_from_name(j.at("source").get<std::string>());
    r.items = j.at("items").get<std::vector<long>>();
    rankings.push_back(std::move(r));
  }
  return rankings;
}

}  // namespace alkd
