#include "alkd/backbone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "alkd/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

namespace alkd {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -log sigmoid(x), stable for large |x|.
double softplus_neg(double x) { return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x)); }

void check_item(const RecommenderModel& model, long item) {
  if (item < 0 || static_cast<size_t>(item) >= model.n_items)
    throw std::runtime_error("unknown item id " + std::to_string(item));
}

// Aggregated encoder coefficients: mean weight per occurrence, plus an extra
// unit on the last item when the transition boost is on.
std::vector<std::pair<long, double>> context_coeffs(const RecommenderModel& model,
                                                    std::span<const long> prefix) {
  if (prefix.empty()) throw std::runtime_error("empty prefix");
  std::map<long, double> coeff;
  const double w = 1.0 / static_cast<double>(prefix.size());
  for (long item : prefix) {
    check_item(model, item);
    coeff[item] += w;
  }
  if (model.last_item_boost) coeff[prefix.back()] += 1.0;
  return {coeff.begin(), coeff.end()};
}

}  // namespace

RecommenderModel init_model(size_t n_items, int dim, ModelRole role, uint64_t seed) {
  if (n_items == 0) throw std::invalid_argument("item count must be >= 1");
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  RecommenderModel model;
  model.n_items = n_items;
  model.dim = dim;
  model.role = role;
  model.seed = seed;
  model.weights.resize(n_items * static_cast<size_t>(dim));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::mt19937_64 eng = make_engine(seed);
  for (double& w : model.weights) w = uniform_range(eng, -bound, bound);
  return model;
}

std::vector<double> encode(const RecommenderModel& model, std::span<const long> prefix) {
  std::vector<double> enc(model.dim, 0.0);
  for (const auto& [item, c] : context_coeffs(model, prefix)) {
    std::span<const double> e = model.row(item);
    for (int k = 0; k < model.dim; ++k) enc[k] += c * e[k];
  }
  return enc;
}

double score_encoded(const RecommenderModel& model, std::span<const double> enc, long item) {
  check_item(model, item);
  std::span<const double> e = model.row(item);
  double s = 0.0;
  for (int k = 0; k < model.dim; ++k) s += enc[k] * e[k];
  return s;
}

double score(const RecommenderModel& model, std::span<const long> prefix, long item) {
  return score_encoded(model, encode(model, prefix), item);
}

std::vector<long> rank(const RecommenderModel& model, std::span<const long> prefix, size_t k) {
  std::vector<double> enc = encode(model, prefix);
  std::unordered_set<long> excluded(prefix.begin(), prefix.end());
  if (k > model.n_items - excluded.size())
    throw std::runtime_error("rank: k=" + std::to_string(k) + " exceeds " +
                             std::to_string(model.n_items - excluded.size()) +
                             " rankable items");
  std::vector<std::pair<double, long>> scored;
  scored.reserve(model.n_items - excluded.size());
  for (long item = 0; item < static_cast<long>(model.n_items); ++item) {
    if (excluded.count(item)) continue;
    scored.emplace_back(score_encoded(model, enc, item), item);
  }
  auto better = [](const std::pair<double, long>& a, const std::pair<double, long>& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
  std::vector<long> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

double pairwise_loss(const RecommenderModel& model, std::span<const RankPair> pairs,
                     SparseGrad* grad) {
  double loss = 0.0;
  std::vector<double> enc(model.dim);
  for (const RankPair& pair : pairs) {
    auto coeffs = context_coeffs(model, pair.context);
    std::fill(enc.begin(), enc.end(), 0.0);
    for (const auto& [item, c] : coeffs) {
      std::span<const double> e = model.row(item);
      for (int k = 0; k < model.dim; ++k) enc[k] += c * e[k];
    }
    check_item(model, pair.positive);
    check_item(model, pair.negative);
    std::span<const double> ep = model.row(pair.positive);
    std::span<const double> en = model.row(pair.negative);
    double margin = 0.0;
    for (int k = 0; k < model.dim; ++k) margin += enc[k] * (ep[k] - en[k]);
    loss += pair.weight * softplus_neg(margin);
    if (grad == nullptr) continue;

    // d/dmargin of -log sigmoid(margin) = sigmoid(margin) - 1
    const double g = pair.weight * (sigmoid(margin) - 1.0);
    auto row_grad = [&](long item) -> std::vector<double>& {
      auto [it, inserted] = grad->try_emplace(item);
      if (inserted) it->second.assign(model.dim, 0.0);
      return it->second;
    };
    std::vector<double>& gp = row_grad(pair.positive);
    std::vector<double>& gn = row_grad(pair.negative);
    for (int k = 0; k < model.dim; ++k) {
      gp[k] += g * enc[k];
      gn[k] -= g * enc[k];
    }
    for (const auto& [item, c] : coeffs) {
      std::vector<double>& gc = row_grad(item);
      for (int k = 0; k < model.dim; ++k) gc[k] += g * c * (ep[k] - en[k]);
    }
  }
  return loss;
}

AdamOptimizer::AdamOptimizer(size_t n_items, int dim, double lr)
    : lr_(lr), dim_(dim), m_(n_items * static_cast<size_t>(dim), 0.0),
      v_(n_items * static_cast<size_t>(dim), 0.0) {}

void AdamOptimizer::apply(RecommenderModel& model, const SparseGrad& grad) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (const auto& [item, g] : grad) {
    const size_t base = static_cast<size_t>(item) * dim_;
    std::span<double> w = model.row_mut(item);
    for (int k = 0; k < dim_; ++k) {
      double& m = m_[base + k];
      double& v = v_[base + k];
      m = beta1_ * m + (1.0 - beta1_) * g[k];
      v = beta2_ * v + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + eps_);
    }
  }
}

TrainStats train_bpr(RecommenderModel& model, const SessionDataset& dataset,
                     const TrainConfig& cfg) {
  std::vector<const Session*> train = dataset.sessions_in(Split::Train);
  if (train.empty()) throw std::runtime_error("train split is empty");

  // Every position >= 1 in a train session makes a (prefix, next-item) pair.
  struct PairRef {
    const Session* session;
    size_t pos;
  };
  std::vector<PairRef> refs;
  for (const Session* s : train)
    for (size_t pos = 1; pos < s->items.size(); ++pos) refs.push_back({s, pos});
  if (refs.empty()) throw std::runtime_error("no training pairs in train split");

  AdamOptimizer opt(model.n_items, model.dim, cfg.learning_rate);
  std::mt19937_64 eng = make_engine(cfg.seed);
  TrainStats stats;

  std::vector<size_t> order(refs.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_inplace(order, eng);
    double epoch_loss = 0.0;
    size_t n_pairs = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<RankPair> batch;
      batch.reserve((stop - start) * cfg.negatives_per_positive);
      for (size_t i = start; i < stop; ++i) {
        const PairRef& ref = refs[order[i]];
        std::unordered_set<long> in_session(ref.session->items.begin(),
                                            ref.session->items.end());
        for (int rep = 0; rep < cfg.negatives_per_positive; ++rep) {
          long neg;
          do {
            neg = static_cast<long>(uniform_index(eng, model.n_items));
          } while (in_session.count(neg));
          RankPair pair;
          pair.context.assign(ref.session->items.begin(),
                              ref.session->items.begin() + ref.pos);
          pair.positive = ref.session->items[ref.pos];
          pair.negative = neg;
          batch.push_back(std::move(pair));
        }
      }
      SparseGrad grad;
      double batch_loss = pairwise_loss(model, batch, &grad);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("NaN/inf loss at epoch " + std::to_string(epoch) +
                                 ", batch offset " + std::to_string(start) +
                                 "; lr=" + std::to_string(cfg.learning_rate));
      epoch_loss += batch_loss;
      n_pairs += batch.size();
      opt.apply(model, grad);
    }
    stats.epoch_loss.push_back(epoch_loss / static_cast<double>(n_pairs));
  }
  return stats;
}

namespace {
constexpr char kModelMagic[8] = {'A', 'L', 'K', 'D', 'M', 'O', 'D', 'L'};
constexpr uint32_t kModelVersion = 1;
}  // namespace

void save_model(const std::filesystem::path& path, const RecommenderModel& model) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write model file: " + tmp.string());
    out.write(kModelMagic, sizeof(kModelMagic));
    uint32_t version = kModelVersion;
    uint64_t n = model.n_items;
    uint32_t d = static_cast<uint32_t>(model.dim);
    uint8_t role = static_cast<uint8_t>(model.role);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&d), sizeof(d));
    out.write(reinterpret_cast<const char*>(&role), sizeof(role));
    out.write(reinterpret_cast<const char*>(model.weights.data()),
              static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RecommenderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw std::runtime_error("not a model file: " + path.string());
  uint32_t version = 0;
  uint64_t n = 0;
  uint32_t d = 0;
  uint8_t role = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&d), sizeof(d));
  in.read(reinterpret_cast<char*>(&role), sizeof(role));
  if (!in || version != kModelVersion)
    throw std::runtime_error("unsupported model file version in " + path.string());
  RecommenderModel model;
  model.n_items = n;
  model.dim = static_cast<int>(d);
  model.role = static_cast<ModelRole>(role);
  model.weights.resize(n * static_cast<size_t>(d));
  in.read(reinterpret_cast<char*>(model.weights.data()),
          static_cast<std::streamsize>(model.weights.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated model file: " + path.string());
  return model;
}

}  // namespace alkd
