#include "svp/hnsw.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <random>

#include "svp/binary_io.hpp"
#include "svp/error.hpp"
#include "svp/kernels.hpp"

namespace svp {

namespace {

constexpr char kMagic[8] = {'S', 'V', 'P', 'H', 'N', 'S', 'W', '\0'};
constexpr std::uint32_t kVersion = 1;

struct Candidate {
  double score;
  std::uint32_t id;
};

// Higher score first; equal scores go to the smaller id.
bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.id < b.id;
}

struct WorstOnTop {
  bool operator()(const Candidate& a, const Candidate& b) const { return better(a, b); }
};
struct BestOnTop {
  bool operator()(const Candidate& a, const Candidate& b) const { return better(b, a); }
};

// Beam search on one layer. The scan only stops early once `ef` results are
// held, so ef >= number of nodes visits the whole reachable component.
template <typename ScoreFn>
std::vector<Candidate> search_layer(const std::vector<std::vector<std::vector<std::uint32_t>>>& links,
                                    std::span<const std::uint32_t> entries, int level,
                                    std::size_t ef, ScoreFn&& score,
                                    std::vector<std::uint32_t>& visited, std::uint32_t& epoch) {
  if (++epoch == 0) {
    std::fill(visited.begin(), visited.end(), 0);
    epoch = 1;
  }
  std::priority_queue<Candidate, std::vector<Candidate>, BestOnTop> candidates;
  std::priority_queue<Candidate, std::vector<Candidate>, WorstOnTop> results;
  for (std::uint32_t e : entries) {
    if (visited[e] == epoch) continue;
    visited[e] = epoch;
    Candidate c{score(e), e};
    candidates.push(c);
    results.push(c);
    if (results.size() > ef) results.pop();
  }
  while (!candidates.empty()) {
    const Candidate cur = candidates.top();
    candidates.pop();
    if (results.size() >= ef && better(results.top(), cur)) break;
    const auto& adj = links[cur.id][static_cast<std::size_t>(level)];
    for (std::uint32_t nb : adj) {
      if (visited[nb] == epoch) continue;
      visited[nb] = epoch;
      Candidate c{score(nb), nb};
      if (results.size() < ef || better(c, results.top())) {
        candidates.push(c);
        results.push(c);
        if (results.size() > ef) results.pop();
      }
    }
  }
  std::vector<Candidate> out;
  out.reserve(results.size());
  while (!results.empty()) {
    out.push_back(results.top());
    results.pop();
  }
  std::reverse(out.begin(), out.end());
  return out;
}

template <typename ScoreFn>
std::uint32_t greedy_descend(const std::vector<std::vector<std::vector<std::uint32_t>>>& links,
                             std::uint32_t start, int level, ScoreFn&& score) {
  Candidate cur{score(start), start};
  bool moved = true;
  while (moved) {
    moved = false;
    for (std::uint32_t nb : links[cur.id][static_cast<std::size_t>(level)]) {
      Candidate c{score(nb), nb};
      if (better(c, cur)) {
        cur = c;
        moved = true;
      }
    }
  }
  return cur.id;
}

// Similarity between stored class vectors during construction.
class BuildSimilarity {
 public:
  BuildSimilarity(const LinearModel& m, HnswSimilarity kind) : m_(m), aug_(m.num_outputs(), 0.0) {
    if (kind == HnswSimilarity::augmented_l2) {
      std::vector<double> norms(m.num_outputs());
      double phi2 = 0.0;
      for (std::size_t c = 0; c < m.num_outputs(); ++c) {
        double n = m.bias(c) * m.bias(c);
        for (double w : m.row(c)) n += w * w;
        norms[c] = n;
        phi2 = std::max(phi2, n);
      }
      for (std::size_t c = 0; c < m.num_outputs(); ++c) aug_[c] = std::sqrt(std::max(0.0, phi2 - norms[c]));
    }
  }

  // For augmented vectors of equal norm phi, ranking by -||a_i - a_j||^2 is
  // ranking by a_i . a_j, so both modes reduce to a dot product.
  double operator()(std::uint32_t i, std::uint32_t j) const {
    auto a = m_.row(i);
    auto b = m_.row(j);
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) s += a[d] * b[d];
    return s + m_.bias(i) * m_.bias(j) + aug_[i] * aug_[j];
  }

 private:
  const LinearModel& m_;
  std::vector<double> aug_;
};

using Links = std::vector<std::vector<std::vector<std::uint32_t>>>;

// Keeps the `cap` neighbours most similar to `node`.
void shrink(Links& links, std::uint32_t node, int level, std::size_t cap, const BuildSimilarity& sim) {
  auto& adj = links[node][static_cast<std::size_t>(level)];
  if (adj.size() <= cap) return;
  std::vector<Candidate> c;
  c.reserve(adj.size());
  for (std::uint32_t nb : adj) c.push_back({sim(node, nb), nb});
  std::sort(c.begin(), c.end(), better);
  adj.clear();
  for (std::size_t i = 0; i < cap; ++i) adj.push_back(c[i].id);
}

std::vector<char> reach(const Links& links, std::uint32_t from, bool reverse) {
  const std::size_t n = links.size();
  std::vector<std::vector<std::uint32_t>> radj;
  if (reverse) {
    radj.resize(n);
    for (std::uint32_t u = 0; u < n; ++u)
      for (std::uint32_t v : links[u][0]) radj[v].push_back(u);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    std::uint32_t u = stack.back();
    stack.pop_back();
    const auto& adj = reverse ? radj[u] : links[u][0];
    for (std::uint32_t v : adj) {
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

// Makes layer 0 strongly connected through the entry point: every node is
// reachable from it and can reach it. Edges are added where the degree cap
// allows; a full node gives up its least similar link.
void repair_connectivity(Links& links, std::uint32_t entry, std::size_t cap, const BuildSimilarity& sim) {
  const std::size_t n = links.size();
  auto replace_worst = [&](std::uint32_t owner, std::uint32_t target) {
    auto& adj = links[owner][0];
    if (adj.size() < cap) {
      adj.push_back(target);
      return;
    }
    auto worst = std::min_element(adj.begin(), adj.end(), [&](std::uint32_t a, std::uint32_t b) {
      return better(Candidate{sim(owner, b), b}, Candidate{sim(owner, a), a});
    });
    *worst = target;
  };

  for (int round = 0; round < 16; ++round) {
    bool changed = false;
    auto fwd = reach(links, entry, false);
    for (std::uint32_t u = 0; u < n; ++u) {
      if (fwd[u]) continue;
      // Best reachable node with spare capacity links to u.
      std::optional<Candidate> pick;
      std::optional<Candidate> pick_full;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (!fwd[v] || v == u) continue;
        Candidate c{sim(u, v), v};
        auto& slot = links[v][0].size() < cap ? pick : pick_full;
        if (!slot || better(c, *slot)) slot = c;
      }
      const std::uint32_t v = pick ? pick->id : pick_full->id;
      replace_worst(v, u);
      changed = true;
      fwd = reach(links, entry, false);
    }
    auto bwd = reach(links, entry, true);
    for (std::uint32_t u = 0; u < n; ++u) {
      if (bwd[u]) continue;
      std::optional<Candidate> pick;
      for (std::uint32_t v = 0; v < n; ++v) {
        if (!bwd[v] || v == u) continue;
        Candidate c{sim(u, v), v};
        if (!pick || better(c, *pick)) pick = c;
      }
      replace_worst(u, pick->id);
      changed = true;
      bwd = reach(links, entry, true);
    }
    if (!changed) return;
  }
}

}  // namespace

ScoreCache::ScoreCache(const LinearModel& model, const SparseVector& x)
    : model_(model), x_(x), scores_(model.num_outputs(), 0.0), known_(model.num_outputs(), 0) {}

double ScoreCache::score(std::uint32_t c) {
  if (!known_[c]) {
    scores_[c] = kernels::sparse_dot(model_.row(c), x_) + model_.bias(c);
    known_[c] = 1;
    ++computed_;
  }
  return scores_[c];
}

HnswIndex HnswIndex::build(const LinearModel& vectors, const HnswParams& params) {
  const std::size_t n = vectors.num_outputs();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no vectors to index");
  if (params.M < 2) throw Error(ErrorCode::InvalidParams, "M must be >= 2");
  if (params.ef_construction < 1) throw Error(ErrorCode::InvalidParams, "ef_construction must be >= 1");

  HnswIndex index;
  index.params_ = params;
  if (index.params_.level_lambda <= 0.0) {
    index.params_.level_lambda = 1.0 / std::log(static_cast<double>(params.M));
  }
  index.dim_ = vectors.dim();
  const BuildSimilarity sim(vectors, params.similarity);

  std::mt19937_64 rng(params.seed);
  auto& links = index.links_;
  links.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const int level = static_cast<int>(std::floor(-std::log(u) * index.params_.level_lambda));
    links[i].resize(static_cast<std::size_t>(level) + 1);
  }

  std::vector<std::uint32_t> visited(n, 0);
  std::uint32_t epoch = 0;
  for (std::uint32_t q = 0; q < n; ++q) {
    const int level = static_cast<int>(links[q].size()) - 1;
    if (q == 0) {
      index.entry_point_ = 0;
      index.max_level_ = level;
      continue;
    }
    auto score = [&](std::uint32_t c) { return sim(q, c); };
    std::uint32_t cur = index.entry_point_;
    for (int l = index.max_level_; l > level; --l) cur = greedy_descend(links, cur, l, score);
    std::vector<std::uint32_t> entries{cur};
    for (int l = std::min(level, index.max_level_); l >= 0; --l) {
      auto found = search_layer(links, entries, l, params.ef_construction, score, visited, epoch);
      auto& adj = links[q][static_cast<std::size_t>(l)];
      for (std::size_t i = 0; i < found.size() && adj.size() < params.M; ++i) adj.push_back(found[i].id);
      for (std::uint32_t nb : adj) {
        links[nb][static_cast<std::size_t>(l)].push_back(q);
        shrink(links, nb, l, index.max_degree(l), sim);
      }
      entries.clear();
      for (const auto& c : found) entries.push_back(c.id);
    }
    if (level > index.max_level_) {
      index.max_level_ = level;
      index.entry_point_ = q;
    }
  }

  if (n > 1) repair_connectivity(links, index.entry_point_, index.max_degree(0), sim);
  for (auto& node : links)
    for (auto& adj : node) std::sort(adj.begin(), adj.end());
  return index;
}

std::span<const std::uint32_t> HnswIndex::neighbors(std::uint32_t node, int level) const {
  return links_.at(node).at(static_cast<std::size_t>(level));
}

std::vector<Hit> HnswIndex::query(const LinearModel& vectors, const SparseVector& x, std::size_t k,
                                  std::size_t ef, ScoreCache* cache) const {
  if (vectors.num_outputs() != links_.size() || vectors.dim() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "model does not match the index");
  }
  vectors.check_input(x);
  if (k == 0 || links_.empty()) return {};
  std::optional<ScoreCache> local;
  if (!cache) cache = &local.emplace(vectors, x);
  auto score = [cache](std::uint32_t c) { return cache->score(c); };

  std::uint32_t cur = entry_point_;
  for (int l = max_level_; l > 0; --l) cur = greedy_descend(links_, cur, l, score);
  std::vector<std::uint32_t> visited(links_.size(), 0);
  std::uint32_t epoch = 0;
  const std::uint32_t entries[] = {cur};
  auto found = search_layer(links_, entries, 0, std::max(ef, k), score, visited, epoch);

  std::vector<Hit> out;
  const std::size_t take = std::min(k, found.size());
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({static_cast<ClassId>(found[i].id), found[i].score});
  return out;
}

void HnswIndex::save(std::ostream& os) const {
  os.write(kMagic, sizeof(kMagic));
  io::write_le<std::uint32_t>(os, kVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(dim_));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(links_.size()));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params_.M));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(params_.ef_construction));
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(num_levels()));
  io::write_le<std::uint64_t>(os, params_.seed);
  io::write_le<double>(os, params_.level_lambda);
  io::write_le<std::uint8_t>(os, static_cast<std::uint8_t>(params_.similarity));
  io::write_le<std::uint32_t>(os, entry_point_);
  for (int l = 0; l <= max_level_; ++l) {
    std::vector<std::uint32_t> nodes;
    for (std::uint32_t v = 0; v < links_.size(); ++v)
      if (level_of(v) >= l) nodes.push_back(v);
    io::write_varint(os, nodes.size());
    std::uint32_t prev = 0;
    for (std::uint32_t v : nodes) {
      io::write_varint(os, v - prev);
      prev = v;
      const auto& adj = links_[v][static_cast<std::size_t>(l)];
      io::write_varint(os, adj.size());
      std::uint32_t prev_nb = 0;
      for (std::uint32_t nb : adj) {
        io::write_varint(os, nb - prev_nb);
        prev_nb = nb;
      }
    }
  }
  if (!os) throw Error(ErrorCode::IoError, "failed writing index");
}

HnswIndex HnswIndex::load(std::istream& is) {
  io::expect_magic(is, kMagic, sizeof(kMagic));
  const auto version = io::read_le<std::uint32_t>(is);
  if (version != kVersion) {
    throw Error(ErrorCode::FormatError, "unsupported index version " + std::to_string(version));
  }
  HnswIndex index;
  index.dim_ = io::read_le<std::uint32_t>(is);
  const std::uint32_t n = io::read_le<std::uint32_t>(is);
  index.params_.M = io::read_le<std::uint32_t>(is);
  index.params_.ef_construction = io::read_le<std::uint32_t>(is);
  const std::uint32_t levels = io::read_le<std::uint32_t>(is);
  index.params_.seed = io::read_le<std::uint64_t>(is);
  index.params_.level_lambda = io::read_le<double>(is);
  const auto sim = io::read_le<std::uint8_t>(is);
  if (sim > 1) throw Error(ErrorCode::FormatError, "unknown similarity");
  index.params_.similarity = static_cast<HnswSimilarity>(sim);
  index.entry_point_ = io::read_le<std::uint32_t>(is);
  if (n == 0 || levels == 0 || index.entry_point_ >= n) throw Error(ErrorCode::FormatError, "bad index header");
  index.max_level_ = static_cast<int>(levels) - 1;
  index.links_.resize(n);
  for (std::uint32_t l = 0; l < levels; ++l) {
    const auto count = io::read_varint(is);
    std::uint64_t v = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
      v += io::read_varint(is);
      if (v >= n) throw Error(ErrorCode::FormatError, "node id out of range");
      auto& node = index.links_[v];
      if (node.size() != l) throw Error(ErrorCode::FormatError, "layer membership not nested");
      node.emplace_back();
      const auto degree = io::read_varint(is);
      std::uint64_t nb = 0;
      for (std::uint64_t j = 0; j < degree; ++j) {
        nb += io::read_varint(is);
        if (nb >= n) throw Error(ErrorCode::FormatError, "neighbour id out of range");
        node.back().push_back(static_cast<std::uint32_t>(nb));
      }
    }
  }
  for (const auto& node : index.links_) {
    if (node.empty()) throw Error(ErrorCode::FormatError, "node missing from layer 0");
  }
  return index;
}

HsgProvider::HsgProvider(const LinearModel& model, const HnswIndex& index, const SparseVector& x,
                         HsgOptions options)
    : model_(model),
      index_(index),
      x_(x),
      options_(options),
      cache_(model, x),
      seen_(model.num_outputs(), 0) {
  if (options_.k0 == 0) throw Error(ErrorCode::InvalidParams, "k0 must be positive");
  model.check_input(x);
  current_k_ = std::min(options_.k0, model.num_outputs());
  auto hits = index_.query(model_, x_, current_k_, std::max(options_.ef_search, current_k_), &cache_);
  query_sizes_.push_back(current_k_);
  if (!hits.empty()) shift_ = hits.front().score;
  for (const auto& h : hits) {
    seen_[static_cast<std::size_t>(h.id)] = 1;
    retrieved_.push_back({h.id, std::exp(h.score - shift_)});
  }
}

bool HsgProvider::extend() {
  const std::size_t k = model_.num_outputs();
  while (current_k_ < k) {
    current_k_ = std::min(2 * current_k_, k);
    query_sizes_.push_back(current_k_);
    auto hits = index_.query(model_, x_, current_k_, std::max(options_.ef_search, current_k_), &cache_);
    std::vector<ScoredClass> fresh;
    for (const auto& h : hits) {
      if (seen_[static_cast<std::size_t>(h.id)]) continue;
      seen_[static_cast<std::size_t>(h.id)] = 1;
      fresh.push_back({h.id, std::exp(h.score - shift_)});
    }
    if (fresh.empty()) continue;
    std::sort(fresh.begin(), fresh.end(), mass_order);
    const double ceiling = retrieved_.empty() ? fresh.front().mass : last_mass_;
    for (auto& f : fresh) {
      if (f.mass > ceiling) {
        ++late_finds_;
        f.mass = ceiling;
      }
      retrieved_.push_back(f);
    }
    return true;
  }
  return false;
}

std::optional<ScoredClass> HsgProvider::next() {
  if (cursor_ >= retrieved_.size() && !extend()) return std::nullopt;
  const ScoredClass out = retrieved_[cursor_++];
  last_mass_ = out.mass;
  return out;
}

}  // namespace svp
