#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace alkd {

struct Interaction {
  long user_id = 0;
  long item_id = 0;
  long timestamp = 0;  // unix seconds
};

struct InteractionLog {
  std::vector<Interaction> records;
};

struct ItemCatalog {
  std::unordered_map<long, std::string> titles;

  size_t size() const { return titles.size(); }
  const std::string& title(long item_id) const;
  bool has(long item_id) const { return titles.count(item_id) != 0; }
};

struct Session {
  long sid = 0;
  std::vector<long> items;

  size_t length() const { return items.size(); }
};

enum class Split { Train, Valid, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct SessionDataset {
  ItemCatalog catalog;
  std::vector<Session> sessions;
  std::unordered_map<long, Split> split;

  size_t item_count() const { return catalog.size(); }
  std::vector<const Session*> sessions_in(Split s) const;
  const Session& session_by_sid(long sid) const;
};

// One leave-one-out prediction instance: everything but the last item is the
// context, the last item is the target.
struct EvalInstance {
  long sid = 0;
  std::vector<long> prefix;
  long target = 0;
};

// TSV `user_id\titem_id\ttimestamp`, one interaction per row.
InteractionLog load_interactions(const std::filesystem::path& path);

// HetRec-2011 MovieLens ratings file (`userID\tmovieID\trating\ttimestamp`,
// header row, timestamps in milliseconds).
InteractionLog load_hetrec_ratings(const std::filesystem::path& path);

// TSV `item_id\ttitle`.
ItemCatalog load_catalog(const std::filesystem::path& path);
void save_catalog(const std::filesystem::path& path, const ItemCatalog& catalog);

// Per user: sort by timestamp, cut into fixed windows of `window_hours`
// anchored at the user's first interaction; each non-empty window is one
// session. Sids are assigned sequentially in (user, window-start) order.
std::vector<Session> sessionize(const InteractionLog& log, int window_hours = 24);

struct FilterResult {
  std::vector<Session> sessions;      // item ids re-indexed to 0..N-1
  std::map<long, long> id_map;        // original id -> dense id
  size_t interaction_count = 0;       // sum of retained session lengths
};

// Keep sessions with length >= min_len and re-index the surviving item ids
// densely (sorted original id order).
FilterResult filter_short(const std::vector<Session>& sessions, int min_len = 5);

ItemCatalog remap_catalog(const ItemCatalog& catalog, const std::map<long, long>& id_map);

// Seeded shuffle, then contiguous assignment with floor counts; the remainder
// goes to train.
SessionDataset split_sessions(std::vector<Session> sessions,
                              std::array<long, 3> ratios = {6, 2, 2},
                              uint64_t seed = 42);

EvalInstance leave_one_out(const Session& session);

// Artifact formats.
void save_sessions_jsonl(const std::filesystem::path& path, const std::vector<Session>& sessions);
std::vector<Session> load_sessions_jsonl(const std::filesystem::path& path);
void save_id_map(const std::filesystem::path& path, const std::map<long, long>& id_map);
std::map<long, long> load_id_map(const std::filesystem::path& path);
void save_split(const std::filesystem::path& path, const SessionDataset& dataset);
void load_split(const std::filesystem::path& path, SessionDataset& dataset);

}  // namespace alkd
