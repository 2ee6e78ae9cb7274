#include "alkd/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "alkd/io.hpp"
#include "alkd/rng.hpp"

namespace alkd {

const std::string& ItemCatalog::title(long item_id) const {
  auto it = titles.find(item_id);
  if (it == titles.end())
    throw std::runtime_error("item " + std::to_string(item_id) + " not in catalog");
  return it->second;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Valid: return "valid";
    case Split::Test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "valid") return Split::Valid;
  if (name == "test") return Split::Test;
  throw std::runtime_error("unknown split name: " + name);
}

std::vector<const Session*> SessionDataset::sessions_in(Split s) const {
  std::vector<const Session*> out;
  for (const Session& session : sessions) {
    auto it = split.find(session.sid);
    if (it != split.end() && it->second == s) out.push_back(&session);
  }
  return out;
}

const Session& SessionDataset::session_by_sid(long sid) const {
  for (const Session& session : sessions)
    if (session.sid == sid) return session;
  throw std::runtime_error("no session with sid " + std::to_string(sid));
}

InteractionLog load_interactions(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  InteractionLog log;
  size_t lineno = 0;
  for (const std::string& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 3)
      throw std::runtime_error("malformed row at line " + std::to_string(lineno) +
                               ": expected 3 tab-separated fields");
    try {
      Interaction rec;
      rec.user_id = parse_long(fields[0], "user_id");
      rec.item_id = parse_long(fields[1], "item_id");
      rec.timestamp = parse_long(fields[2], "timestamp");
      if (rec.timestamp < 0) throw std::runtime_error("negative timestamp");
      log.records.push_back(rec);
    } catch (const std::exception& e) {
      throw std::runtime_error("malformed row at line " + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  if (log.records.empty()) throw std::runtime_error("no interactions in " + path.string());
  return log;
}

InteractionLog load_hetrec_ratings(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  InteractionLog log;
  size_t lineno = 0;
  for (const std::string& line : lines) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;  // header
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() < 4)
      throw std::runtime_error("malformed HetRec row at line " + std::to_string(lineno));
    Interaction rec;
    rec.user_id = parse_long(fields[0], "userID");
    rec.item_id = parse_long(fields[1], "movieID");
    rec.timestamp = parse_long(fields[3], "timestamp") / 1000;  // ms -> s
    log.records.push_back(rec);
  }
  if (log.records.empty()) throw std::runtime_error("no interactions in " + path.string());
  return log;
}

ItemCatalog load_catalog(const std::filesystem::path& path) {
  std::vector<std::string> lines = read_lines(path);
  ItemCatalog catalog;
  size_t lineno = 0;
  for (const std::string& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2)
      throw std::runtime_error("malformed catalog row at line " + std::to_string(lineno));
    long id = parse_long(fields[0], "item_id");
    if (fields[1].empty())
      throw std::runtime_error("empty title for item " + std::to_string(id));
    if (!catalog.titles.emplace(id, fields[1]).second)
      throw std::runtime_error("duplicate item id " + std::to_string(id));
  }
  return catalog;
}

void save_catalog(const std::filesystem::path& path, const ItemCatalog& catalog) {
  std::map<long, std::string> sorted(catalog.titles.begin(), catalog.titles.end());
  std::ostringstream out;
  for (const auto& [id, title] : sorted) out << id << '\t' << title << '\n';
  write_file_atomic(path, out.str());
}

std::vector<Session> sessionize(const InteractionLog& log, int window_hours) {
  if (window_hours < 1) throw std::invalid_argument("window_hours must be >= 1");
  const long window = static_cast<long>(window_hours) * 3600;

  std::map<long, std::vector<Interaction>> by_user;
  for (const Interaction& rec : log.records) by_user[rec.user_id].push_back(rec);

  std::vector<Session> sessions;
  long next_sid = 0;
  for (auto& [user, records] : by_user) {
    std::stable_sort(records.begin(), records.end(),
                     [](const Interaction& a, const Interaction& b) {
                       return a.timestamp < b.timestamp;
                     });
    const long anchor = records.front().timestamp;
    long current_window = -1;
    for (const Interaction& rec : records) {
      long w = (rec.timestamp - anchor) / window;
      if (w != current_window) {
        sessions.push_back(Session{next_sid++, {}});
        current_window = w;
      }
      sessions.back().items.push_back(rec.item_id);
    }
  }
  return sessions;
}

FilterResult filter_short(const std::vector<Session>& sessions, int min_len) {
  if (min_len < 1) throw std::invalid_argument("min_len must be >= 1");
  FilterResult result;
  std::set<long> kept_items;
  for (const Session& s : sessions) {
    if (s.items.size() < static_cast<size_t>(min_len)) continue;
    result.sessions.push_back(s);
    result.interaction_count += s.items.size();
    kept_items.insert(s.items.begin(), s.items.end());
  }
  long dense = 0;
  for (long orig : kept_items) result.id_map[orig] = dense++;
  for (Session& s : result.sessions)
    for (long& item : s.items) item = result.id_map.at(item);
  return result;
}

ItemCatalog remap_catalog(const ItemCatalog& catalog, const std::map<long, long>& id_map) {
  ItemCatalog out;
  for (const auto& [orig, dense] : id_map) {
    auto it = catalog.titles.find(orig);
    if (it == catalog.titles.end())
      throw std::runtime_error("item " + std::to_string(orig) + " missing from catalog");
    out.titles[dense] = it->second;
  }
  return out;
}

SessionDataset split_sessions(std::vector<Session> sessions, std::array<long, 3> ratios,
                              uint64_t seed) {
  for (long r : ratios)
    if (r <= 0) throw std::invalid_argument("split ratios must be positive");
  if (sessions.size() < 3)
    throw std::runtime_error("need at least 3 sessions to split, got " +
                             std::to_string(sessions.size()));

  std::vector<size_t> order(sessions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 eng = make_engine(seed);
  shuffle_inplace(order, eng);

  const size_t n = sessions.size();
  const long total = ratios[0] + ratios[1] + ratios[2];
  size_t n_train = n * static_cast<size_t>(ratios[0]) / static_cast<size_t>(total);
  size_t n_valid = n * static_cast<size_t>(ratios[1]) / static_cast<size_t>(total);
  size_t n_test = n * static_cast<size_t>(ratios[2]) / static_cast<size_t>(total);
  n_train += n - (n_train + n_valid + n_test);  // remainder to train

  SessionDataset dataset;
  dataset.sessions = std::move(sessions);
  for (size_t pos = 0; pos < n; ++pos) {
    Split s = pos < n_train            ? Split::Train
              : pos < n_train + n_valid ? Split::Valid
                                        : Split::Test;
    dataset.split[dataset.sessions[order[pos]].sid] = s;
  }
  return dataset;
}

EvalInstance leave_one_out(const Session& session) {
  if (session.items.size() < 2)
    throw std::runtime_error("session " + std::to_string(session.sid) +
                             " too short for leave-one-out");
  EvalInstance inst;
  inst.sid = session.sid;
  inst.prefix.assign(session.items.begin(), session.items.end() - 1);
  inst.target = session.items.back();
  return inst;
}

void save_sessions_jsonl(const std::filesystem::path& path,
                         const std::vector<Session>& sessions) {
  std::ostringstream out;
  for (const Session& s : sessions) {
    nlohmann::json j;
    j["sid"] = s.sid;
    j["items"] = s.items;
    out << j.dump() << '\n';
  }
  write_file_atomic(path, out.str());
}

std::vector<Session> load_sessions_jsonl(const std::filesystem::path& path) {
  std::vector<Session> sessions;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    Session s;
    s.sid = j.at("sid").get<long>();
    s.items = j.at("items").get<std::vector<long>>();
    sessions.push_back(std::move(s));
  }
  return sessions;
}

void save_id_map(const std::filesystem::path& path, const std::map<long, long>& id_map) {
  std::ostringstream out;
  for (const auto& [orig, dense] : id_map) out << orig << '\t' << dense << '\n';
  write_file_atomic(path, out.str());
}

std::map<long, long> load_id_map(const std::filesystem::path& path) {
  std::map<long, long> id_map;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2) throw std::runtime_error("malformed id map line: " + line);
    id_map[parse_long(fields[0], "original_id")] = parse_long(fields[1], "dense_id");
  }
  return id_map;
}

void save_split(const std::filesystem::path& path, const SessionDataset& dataset) {
  std::map<long, Split> sorted(dataset.split.begin(), dataset.split.end());
  std::ostringstream out;
  for (const auto& [sid, s] : sorted) out << sid << '\t' << split_name(s) << '\n';
  write_file_atomic(path, out.str());
}

void load_split(const std::filesystem::path& path, SessionDataset& dataset) {
  dataset.split.clear();
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields.size() != 2) throw std::runtime_error("malformed split line: " + line);
    dataset.split[parse_long(fields[0], "sid")] = split_from_name(fields[1]);
  }
}

}  // namespace alkd
