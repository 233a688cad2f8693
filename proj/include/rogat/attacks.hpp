#pragma once

#include <set>

#include <nlohmann/json.hpp>

#include "rogat/graph.hpp"
#include "rogat/io.hpp"

// =============================================================================
/// @file attacks.hpp
/// @brief Graph poisoning generators and import of externally produced
/// poisoned graphs. All attacks are pure functions of (graph, rate, seed).
// =============================================================================

namespace rogat {

/// Difference between a poisoned graph and its clean origin. Pairs are stored
/// normalized (i < j); added pairs are non-edges of the clean graph, removed
/// pairs are edges of it, and the two sets are disjoint.
struct Perturbation {
  std::vector<std::pair<int, int>> added, removed;
  std::uint64_t seed = 0;
  double rate = 0.0;  ///< budget as a fraction of the clean edge count
};

namespace detail {

inline std::set<std::pair<int, int>> edge_set(const Mat& adjacency) {
  std::set<std::pair<int, int>> s;
  for (const auto& e : undirected_edges(adjacency)) s.insert(e);
  return s;
}

/// Draws `count` distinct pairs satisfying `admit` that are not edges and not
/// drawn before. Rejection sampling; `context` names the caller for errors.
template <typename Admit>
std::vector<std::pair<int, int>> sample_non_edges(const Graph& g, int count, Rng& rng,
                                                  Admit admit, const std::string& context) {
  std::int64_t candidates = 0;
  for (int i = 0; i < g.n_nodes; ++i)
    for (int j = i + 1; j < g.n_nodes; ++j)
      if (g.adjacency(i, j) == 0.0 && admit(i, j)) ++candidates;
  ROGAT_REQUIRE(candidates >= count, context + ": not enough candidate non-edges");
  std::set<std::pair<int, int>> chosen;
  std::vector<std::pair<int, int>> out;
  while (static_cast<int>(out.size()) < count) {
    int i = static_cast<int>(uniform_index(rng, g.n_nodes));
    int j = static_cast<int>(uniform_index(rng, g.n_nodes));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (g.adjacency(i, j) != 0.0 || !admit(i, j) || chosen.count({i, j})) continue;
    chosen.emplace(i, j);
    out.emplace_back(i, j);
  }
  return out;
}

}  // namespace detail

/// Random structural attack: floor(rate * |E|) edges added uniformly among
/// non-edges. With `flip` set, each budget unit instead toggles a uniformly
/// random pair (add if absent, remove if present) — a sensitivity variant.
inline Perturbation random_attack(const Graph& g, double rate, std::uint64_t seed,
                                  bool flip = false) {
  ROGAT_REQUIRE(rate >= 0.0, "random_attack: negative rate");
  const auto edges = undirected_edges(g.adjacency);
  const int budget = static_cast<int>(std::floor(rate * static_cast<double>(edges.size())));
  Perturbation p;
  p.seed = seed;
  p.rate = rate;
  Rng rng(mix_seed(seed, 31));
  if (!flip) {
    p.added = detail::sample_non_edges(g, budget, rng, [](int, int) { return true; },
                                       "random_attack");
    return p;
  }
  std::set<std::pair<int, int>> touched;
  while (static_cast<int>(touched.size()) < budget) {
    int i = static_cast<int>(uniform_index(rng, g.n_nodes));
    int j = static_cast<int>(uniform_index(rng, g.n_nodes));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (touched.count({i, j})) continue;
    touched.emplace(i, j);
    if (g.adjacency(i, j) != 0.0)
      p.removed.emplace_back(i, j);
    else
      p.added.emplace_back(i, j);
  }
  return p;
}

/// Label-aware attack lowering N1/N2: the budget floor(rate * |E|) is split
/// evenly between deleting same-label edges and adding different-label
/// non-edges. `add_only` spends the whole budget on additions, mirroring the
/// profile where N2 grows while N1 stays flat.
inline Perturbation dice_attack(const Graph& g, double rate, std::uint64_t seed,
                                bool add_only = false) {
  ROGAT_REQUIRE(rate >= 0.0 && rate <= 1.0, "dice_attack: rate outside [0,1]");
  for (int y : g.labels) ROGAT_REQUIRE(y >= 0, "dice_attack: unlabeled node");
  const auto edges = undirected_edges(g.adjacency);
  const int budget = static_cast<int>(std::floor(rate * static_cast<double>(edges.size())));
  const int n_del = add_only ? 0 : budget / 2;
  const int n_add = budget - n_del;

  Perturbation p;
  p.seed = seed;
  p.rate = rate;
  Rng rng(mix_seed(seed, 37));

  if (n_del > 0) {
    std::vector<std::pair<int, int>> same;
    for (const auto& [i, j] : edges)
      if (g.labels[i] == g.labels[j]) same.emplace_back(i, j);
    ROGAT_REQUIRE(static_cast<int>(same.size()) >= n_del,
                  "dice_attack: not enough same-label edges for the deletion budget");
    for (int k = static_cast<int>(same.size()) - 1; k > 0; --k)
      std::swap(same[k], same[uniform_index(rng, static_cast<std::uint64_t>(k) + 1)]);
    p.removed.assign(same.begin(), same.begin() + n_del);
  }
  p.added = detail::sample_non_edges(
      g, n_add, rng, [&g](int i, int j) { return g.labels[i] != g.labels[j]; }, "dice_attack");
  return p;
}

/// Applies a perturbation, returning a new graph with toggled edges and
/// untouched features, labels and masks.
inline Graph apply_perturbation(const Graph& g, const Perturbation& p) {
  Graph out = g;
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : p.added) {
    ROGAT_REQUIRE(i >= 0 && j >= 0 && i < g.n_nodes && j < g.n_nodes && i != j,
                  "apply_perturbation: bad added pair");
    ROGAT_REQUIRE(g.adjacency(i, j) == 0.0, "apply_perturbation: added pair already an edge");
    ROGAT_REQUIRE(seen.emplace(std::min(i, j), std::max(i, j)).second,
                  "apply_perturbation: duplicate pair");
    out.adjacency(i, j) = out.adjacency(j, i) = 1.0;
  }
  for (const auto& [i, j] : p.removed) {
    ROGAT_REQUIRE(i >= 0 && j >= 0 && i < g.n_nodes && j < g.n_nodes && i != j,
                  "apply_perturbation: bad removed pair");
    ROGAT_REQUIRE(g.adjacency(i, j) != 0.0, "apply_perturbation: removed pair is not an edge");
    ROGAT_REQUIRE(seen.emplace(std::min(i, j), std::max(i, j)).second,
                  "apply_perturbation: duplicate pair");
    out.adjacency(i, j) = out.adjacency(j, i) = 0.0;
  }
  return out;
}

/// Reads a full poisoned edge list and diffs it against the clean graph,
/// recovering the perturbation (e.g. for externally produced metattack or
/// nettack outputs).
inline std::pair<Graph, Perturbation> load_perturbed(const Graph& clean,
                                                     const std::string& edges_path) {
  Graph poisoned = clean;
  poisoned.adjacency = load_edges_csv(edges_path, clean.n_nodes);
  const auto before = detail::edge_set(clean.adjacency);
  const auto after = detail::edge_set(poisoned.adjacency);
  Perturbation p;
  for (const auto& e : after)
    if (!before.count(e)) p.added.push_back(e);
  for (const auto& e : before)
    if (!after.count(e)) p.removed.push_back(e);
  p.rate = before.empty() ? 0.0
                          : static_cast<double>(p.added.size() + p.removed.size()) /
                                static_cast<double>(before.size());
  return {std::move(poisoned), std::move(p)};
}

// -----------------------------------------------------------------------------
// Perturbation JSON
// -----------------------------------------------------------------------------

inline void save_perturbation(const Perturbation& p, const std::string& path) {
  nlohmann::json j;
  j["added"] = p.added;
  j["removed"] = p.removed;
  j["rate"] = p.rate;
  j["seed"] = p.seed;
  std::ofstream out(path);
  ROGAT_REQUIRE(out.good(), "save_perturbation: cannot write " + path);
  out << j.dump(2) << '\n';
}

inline Perturbation load_perturbation(const std::string& path) {
  std::ifstream in(path);
  ROGAT_REQUIRE(in.good(), "load_perturbation: cannot read " + path);
  const auto j = nlohmann::json::parse(in);
  Perturbation p;
  for (const auto& e : j.at("added")) p.added.emplace_back(e.at(0), e.at(1));
  for (const auto& e : j.at("removed")) p.removed.emplace_back(e.at(0), e.at(1));
  p.rate = j.at("rate");
  p.seed = j.at("seed");
  return p;
}

}  // namespace rogat
