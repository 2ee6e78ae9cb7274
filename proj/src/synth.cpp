#include "alkd/synth.hpp"

#include <sstream>
#include <stdexcept>

#include "alkd/io.hpp"
#include "alkd/rng.hpp"

namespace alkd {

std::vector<Session> make_planted_sessions(const SynthConfig& cfg) {
  if (cfg.n_items < 2) throw std::invalid_argument("need at least 2 items");
  if (cfg.len_min < 2 || cfg.len_max < cfg.len_min)
    throw std::invalid_argument("invalid session length range");
  std::mt19937_64 eng = make_engine(cfg.seed);
  std::vector<Session> sessions;
  sessions.reserve(cfg.n_sessions);
  for (size_t s = 0; s < cfg.n_sessions; ++s) {
    const int len = cfg.len_min +
                    static_cast<int>(uniform_index(
                        eng, static_cast<uint64_t>(cfg.len_max - cfg.len_min + 1)));
    Session session;
    session.sid = static_cast<long>(s);
    long item = static_cast<long>(uniform_index(eng, cfg.n_items));
    session.items.push_back(item);
    for (int i = 1; i < len; ++i) {
      if (uniform_double(eng) < cfg.p_next)
        item = (item + 1) % static_cast<long>(cfg.n_items);
      else
        item = static_cast<long>(uniform_index(eng, cfg.n_items));
      session.items.push_back(item);
    }
    sessions.push_back(std::move(session));
  }
  return sessions;
}

SynthFiles write_synth_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg) {
  std::filesystem::create_directories(out_dir);
  std::vector<Session> sessions = make_planted_sessions(cfg);

  std::ostringstream interactions;
  for (const Session& s : sessions) {
    // one user per session; a minute between interactions keeps each
    // session inside one 24h window
    const long base = 1'000'000'000L + s.sid * 86'400L * 4;
    for (size_t i = 0; i < s.items.size(); ++i)
      interactions << s.sid << '\t' << s.items[i] << '\t' << base + static_cast<long>(i) * 60
                   << '\n';
  }
  std::ostringstream catalog;
  for (size_t item = 0; item < cfg.n_items; ++item)
    catalog << item << '\t' << "Title " << item << '\n';

  SynthFiles files;
  files.interactions = out_dir / "interactions.tsv";
  files.catalog = out_dir / "catalog.tsv";
  write_file_atomic(files.interactions, interactions.str());
  write_file_atomic(files.catalog, catalog.str());
  return files;
}

}  // namespace alkd
