#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rogat/common.hpp"

// =============================================================================
/// @file graph.hpp
/// @brief Graph representation, synthetic generators and structural statistics.
///
/// Graphs are small (a few thousand nodes), so the adjacency is stored dense
/// and symmetric with entries in [0,1] and a zero diagonal; self-loop handling
/// belongs to the models, not the data. Edge lists are derived on demand.
// =============================================================================

namespace rogat {

struct Graph {
  int n_nodes = 0;
  Mat adjacency;            ///< n x n, symmetric, entries in [0,1], zero diagonal
  Mat features;             ///< n x d
  std::vector<int> labels;  ///< class index in [0, n_classes); -1 = unknown
  int n_classes = 0;
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;

  int feature_dim() const { return static_cast<int>(features.cols()); }

  /// Throws if a structural invariant is violated.
  void validate() const {
    ROGAT_REQUIRE(adjacency.rows() == n_nodes && adjacency.cols() == n_nodes,
                  "graph: adjacency shape mismatch");
    ROGAT_REQUIRE(features.rows() == n_nodes, "graph: feature row count != n_nodes");
    ROGAT_REQUIRE(static_cast<int>(labels.size()) == n_nodes, "graph: label count != n_nodes");
    for (int i = 0; i < n_nodes; ++i) {
      ROGAT_REQUIRE(adjacency(i, i) == 0.0, "graph: nonzero diagonal");
      for (int j = i + 1; j < n_nodes; ++j) {
        const double w = adjacency(i, j);
        ROGAT_REQUIRE(w == adjacency(j, i), "graph: adjacency not symmetric");
        ROGAT_REQUIRE(w >= 0.0 && w <= 1.0, "graph: adjacency entry outside [0,1]");
      }
    }
    ROGAT_REQUIRE(train_mask.size() == val_mask.size() && val_mask.size() == test_mask.size() &&
                      static_cast<int>(train_mask.size()) == n_nodes,
                  "graph: mask size mismatch");
    for (int i = 0; i < n_nodes; ++i)
      ROGAT_REQUIRE(train_mask[i] + val_mask[i] + test_mask[i] <= 1, "graph: masks overlap");
  }

  void reset_masks() {
    train_mask.assign(n_nodes, 0);
    val_mask.assign(n_nodes, 0);
    test_mask.assign(n_nodes, 0);
  }
};

/// Undirected edge list (i < j) of the strictly positive adjacency entries.
inline std::vector<std::pair<int, int>> undirected_edges(const Mat& adjacency) {
  std::vector<std::pair<int, int>> edges;
  const int n = static_cast<int>(adjacency.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adjacency(i, j) > 0.0) edges.emplace_back(i, j);
  return edges;
}

inline std::size_t edge_count(const Graph& g) { return undirected_edges(g.adjacency).size(); }

// -----------------------------------------------------------------------------
// Link statistics (same-label vs different-label edge counts)
// -----------------------------------------------------------------------------

/// Edge counts split by endpoint-label equality. Each undirected edge is
/// counted once; `*_directed()` exposes the doubled ordered-pair view so both
/// counting conventions are inspectable. The ratio is convention-invariant.
struct LinkStats {
  std::int64_t n_same = 0;
  std::int64_t n_diff = 0;

  std::int64_t n_same_directed() const { return 2 * n_same; }
  std::int64_t n_diff_directed() const { return 2 * n_diff; }

  /// n_same / n_diff; empty when no different-label edge exists.
  std::optional<double> ratio() const {
    if (n_diff == 0) return std::nullopt;
    return static_cast<double>(n_same) / static_cast<double>(n_diff);
  }
};

inline LinkStats link_ratio(const Graph& g) {
  LinkStats stats;
  for (const auto& [i, j] : undirected_edges(g.adjacency)) {
    ROGAT_REQUIRE(g.labels[i] >= 0 && g.labels[j] >= 0, "link_ratio: edge endpoint without label");
    if (g.labels[i] == g.labels[j])
      ++stats.n_same;
    else
      ++stats.n_diff;
  }
  return stats;
}

// -----------------------------------------------------------------------------
// Largest connected component
// -----------------------------------------------------------------------------

/// Induced subgraph on the largest connected component, nodes reindexed
/// contiguously in ascending original order. Ties go to the component with the
/// smallest original node index. Labels, features and masks carry over.
inline Graph extract_lcc(const Graph& g) {
  const int n = g.n_nodes;
  std::vector<int> component(n, -1);
  int n_components = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    const int c = n_components++;
    stack.push_back(s);
    component[s] = c;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v)
        if (g.adjacency(u, v) > 0.0 && component[v] < 0) {
          component[v] = c;
          stack.push_back(v);
        }
    }
  }
  std::vector<int> size(n_components, 0);
  for (int i = 0; i < n; ++i) ++size[component[i]];
  const int best = static_cast<int>(
      std::max_element(size.begin(), size.end()) - size.begin());

  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (component[i] == best) keep.push_back(i);

  Graph out;
  out.n_nodes = static_cast<int>(keep.size());
  out.n_classes = g.n_classes;
  out.adjacency = Mat::Zero(out.n_nodes, out.n_nodes);
  out.features = Mat(out.n_nodes, g.features.cols());
  out.labels.resize(out.n_nodes);
  out.reset_masks();
  for (int a = 0; a < out.n_nodes; ++a) {
    const int i = keep[a];
    out.features.row(a) = g.features.row(i);
    out.labels[a] = g.labels[i];
    if (!g.train_mask.empty()) {
      out.train_mask[a] = g.train_mask[i];
      out.val_mask[a] = g.val_mask[i];
      out.test_mask[a] = g.test_mask[i];
    }
    for (int b = a + 1; b < out.n_nodes; ++b)
      out.adjacency(a, b) = out.adjacency(b, a) = g.adjacency(i, keep[b]);
  }
  return out;
}

// -----------------------------------------------------------------------------
// Train / val / test split
// -----------------------------------------------------------------------------

/// Assigns masks by a seeded shuffle: floor(train_frac*n) training nodes,
/// floor(val_frac*n) validation nodes, the remainder test.
inline Graph random_split(const Graph& g, double train_frac, double val_frac,
                          std::uint64_t seed) {
  ROGAT_REQUIRE(train_frac > 0.0, "random_split: train fraction must be positive");
  ROGAT_REQUIRE(val_frac >= 0.0, "random_split: negative val fraction");
  ROGAT_REQUIRE(train_frac + val_frac <= 1.0, "random_split: fractions sum > 1");
  Graph out = g;
  out.reset_masks();
  std::vector<int> order(g.n_nodes);
  for (int i = 0; i < g.n_nodes; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0));
  for (int i = g.n_nodes - 1; i > 0; --i)
    std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
  const int n_train = static_cast<int>(std::floor(train_frac * g.n_nodes));
  const int n_val = static_cast<int>(std::floor(val_frac * g.n_nodes));
  ROGAT_REQUIRE(n_train > 0, "random_split: empty training set");
  for (int k = 0; k < g.n_nodes; ++k) {
    if (k < n_train)
      out.train_mask[order[k]] = 1;
    else if (k < n_train + n_val)
      out.val_mask[order[k]] = 1;
    else
      out.test_mask[order[k]] = 1;
  }
  return out;
}

// -----------------------------------------------------------------------------
// Stochastic block model
// -----------------------------------------------------------------------------

/// Two-parameter SBM with classes sized as equally as divisibility allows and
/// class-conditional spherical Gaussian features (unit variance, class means
/// separated by feature_signal).
struct SbmSpec {
  int n_nodes = 1000;
  int n_classes = 2;
  double p_same = 0.02;  ///< intra-class link probability
  double p_diff = 0.02;  ///< inter-class link probability
  int feature_dim = 16;
  double feature_signal = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    ROGAT_REQUIRE(n_nodes > 0 && n_classes > 0 && n_classes <= n_nodes, "sbm: bad sizes");
    ROGAT_REQUIRE(p_same >= 0.0 && p_same <= 1.0 && p_diff >= 0.0 && p_diff <= 1.0,
                  "sbm: probabilities outside [0,1]");
    ROGAT_REQUIRE(feature_dim > 0, "sbm: feature_dim must be positive");
  }
};

inline Graph sbm_generate(const SbmSpec& spec) {
  spec.validate();
  Graph g;
  g.n_nodes = spec.n_nodes;
  g.n_classes = spec.n_classes;
  g.labels.resize(spec.n_nodes);
  for (int i = 0; i < spec.n_nodes; ++i) g.labels[i] = i % spec.n_classes;

  Rng rng(mix_seed(spec.seed, 1));
  g.adjacency = Mat::Zero(spec.n_nodes, spec.n_nodes);
  for (int i = 0; i < spec.n_nodes; ++i)
    for (int j = i + 1; j < spec.n_nodes; ++j) {
      const double p = g.labels[i] == g.labels[j] ? spec.p_same : spec.p_diff;
      if (uniform01(rng) < p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
    }

  // Class mean c sits at (s/sqrt(2)) * e_{c mod d}, so any two means are
  // exactly feature_signal apart.
  Rng frng(mix_seed(spec.seed, 2));
  g.features = Mat(spec.n_nodes, spec.feature_dim);
  const double lift = spec.feature_signal / std::sqrt(2.0);
  for (int i = 0; i < spec.n_nodes; ++i) {
    for (int k = 0; k < spec.feature_dim; ++k) g.features(i, k) = normal01(frng);
    g.features(i, g.labels[i] % spec.feature_dim) += lift;
  }
  g.reset_masks();
  return g;
}

/// Expected same/different-label edge counts for an SBM spec (binomial means).
inline std::pair<double, double> sbm_expected_links(const SbmSpec& spec) {
  std::vector<std::int64_t> size(spec.n_classes, 0);
  for (int i = 0; i < spec.n_nodes; ++i) ++size[i % spec.n_classes];
  double intra_pairs = 0.0, cross_pairs = 0.0;
  for (int a = 0; a < spec.n_classes; ++a) {
    intra_pairs += 0.5 * static_cast<double>(size[a]) * static_cast<double>(size[a] - 1);
    for (int b = a + 1; b < spec.n_classes; ++b)
      cross_pairs += static_cast<double>(size[a]) * static_cast<double>(size[b]);
  }
  return {spec.p_same * intra_pairs, spec.p_diff * cross_pairs};
}

// -----------------------------------------------------------------------------
// Feature smoothness
// -----------------------------------------------------------------------------

/// tr(X^T L X) with L = D - A, equal to the undirected edge sum
/// sum_{(i,j) in E} A_ij * ||x_i - x_j||^2 (half the full double sum).
inline double laplacian_smoothness(const Mat& adjacency, const Mat& features) {
  ROGAT_REQUIRE(adjacency.rows() == adjacency.cols(), "laplacian_smoothness: adjacency not square");
  ROGAT_REQUIRE(adjacency.rows() == features.rows(),
                "laplacian_smoothness: adjacency/features shape mismatch");
  double total = 0.0;
  const int n = static_cast<int>(adjacency.rows());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (adjacency(i, j) != 0.0)
        total += adjacency(i, j) * (features.row(i) - features.row(j)).squaredNorm();
  return total;
}

// -----------------------------------------------------------------------------
// Synthetic citation benchmark
// -----------------------------------------------------------------------------

/// Citation-style benchmark generator. Classes split into subfields
/// (contiguous subgroups) that own a narrow vocabulary slice inside the class
/// topic block; same-class edges concentrate within subgroups, so connected
/// documents share noticeably more words than random same-class pairs, the
/// way citing papers do. The link budget is set by a target edge count and a
/// same/different link ratio; features are sparse binary bags of words with
/// Poisson lengths. Used for desk-scale experiments when the real citation
/// datasets are not on disk.
struct CitationSpec {
  int n_nodes = 2485;
  int n_classes = 7;
  std::vector<double> class_weights = {0.30, 0.16, 0.15, 0.13, 0.11, 0.08, 0.07};
  double target_edges = 5069.0;
  double target_link_ratio = 4.1;
  int feature_dim = 1433;
  int words_per_doc = 18;       ///< Poisson mean word count (at least 2 per doc)
  int topic_width = 24;         ///< vocabulary block owned by each class
  double topic_signal = 0.25;   ///< P(word from the own-class block)
  double topic_overlap = 0.5;   ///< fraction of a block shared with the next class
  int subgroup_size = 60;       ///< target nodes per subfield
  int subgroup_width = 8;       ///< words in a subfield slice of the class block
  double subgroup_focus = 0.45; ///< P(word from the own-subfield slice)
  double intra_subgroup = 0.7;  ///< fraction of same-class edges inside subfields
  std::uint64_t seed = 0;

  void validate() const {
    ROGAT_REQUIRE(n_nodes > 0 && n_classes > 0, "citation: bad sizes");
    ROGAT_REQUIRE(static_cast<int>(class_weights.size()) == n_classes,
                  "citation: class_weights size != n_classes");
    ROGAT_REQUIRE(topic_overlap >= 0.0 && topic_overlap < 1.0, "citation: bad topic_overlap");
    const int stride = static_cast<int>(std::lround(topic_width * (1.0 - topic_overlap)));
    ROGAT_REQUIRE((n_classes - 1) * stride + topic_width <= feature_dim,
                  "citation: topics exceed vocabulary");
    ROGAT_REQUIRE(topic_signal >= 0.0 && subgroup_focus >= 0.0 &&
                      topic_signal + subgroup_focus <= 1.0,
                  "citation: topic_signal + subgroup_focus must stay within [0,1]");
    ROGAT_REQUIRE(subgroup_size >= 2 && subgroup_width >= 1 &&
                      subgroup_width <= topic_width,
                  "citation: bad subgroup geometry");
    ROGAT_REQUIRE(intra_subgroup >= 0.0 && intra_subgroup <= 1.0,
                  "citation: bad intra_subgroup fraction");
    ROGAT_REQUIRE(target_link_ratio > 0.0, "citation: bad link ratio");
  }
};

/// Knuth Poisson sampler, adequate for small means.
inline int poisson_draw(Rng& rng, double mean) {
  const double limit = std::exp(-mean);
  double p = 1.0;
  int k = 0;
  do {
    ++k;
    p *= uniform01(rng);
  } while (p > limit);
  return k - 1;
}

inline Graph citation_generate(const CitationSpec& spec) {
  spec.validate();
  Graph g;
  g.n_nodes = spec.n_nodes;
  g.n_classes = spec.n_classes;

  // Largest-remainder apportionment of class sizes.
  double wsum = 0.0;
  for (double w : spec.class_weights) wsum += w;
  std::vector<int> size(spec.n_classes, 0);
  std::vector<std::pair<double, int>> rem;
  int assigned = 0;
  for (int c = 0; c < spec.n_classes; ++c) {
    const double exact = spec.class_weights[c] / wsum * spec.n_nodes;
    size[c] = static_cast<int>(std::floor(exact));
    assigned += size[c];
    rem.emplace_back(exact - size[c], c);
  }
  std::sort(rem.rbegin(), rem.rend());
  for (int k = 0; k < spec.n_nodes - assigned; ++k) ++size[rem[k % rem.size()].second];

  g.labels.resize(spec.n_nodes);
  {
    int i = 0;
    for (int c = 0; c < spec.n_classes; ++c)
      for (int k = 0; k < size[c]; ++k) g.labels[i++] = c;
  }

  double intra_pairs = 0.0, cross_pairs = 0.0;
  for (int a = 0; a < spec.n_classes; ++a) {
    intra_pairs += 0.5 * static_cast<double>(size[a]) * (size[a] - 1);
    for (int b = a + 1; b < spec.n_classes; ++b)
      cross_pairs += static_cast<double>(size[a]) * size[b];
  }
  const double r = spec.target_link_ratio;
  const double p_same = std::min(1.0, r / (1.0 + r) * spec.target_edges / intra_pairs);
  const double p_diff = std::min(1.0, 1.0 / (1.0 + r) * spec.target_edges / cross_pairs);

  Rng rng(mix_seed(spec.seed, 11));
  g.adjacency = Mat::Zero(spec.n_nodes, spec.n_nodes);
  for (int i = 0; i < spec.n_nodes; ++i)
    for (int j = i + 1; j < spec.n_nodes; ++j) {
      const double p = g.labels[i] == g.labels[j] ? p_same : p_diff;
      if (uniform01(rng) < p) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
    }

  // Topic blocks of adjacent classes share a `topic_overlap` fraction of
  // their vocabulary; document lengths are Poisson with a floor of 2 words.
  Rng frng(mix_seed(spec.seed, 12));
  g.features = Mat::Zero(spec.n_nodes, spec.feature_dim);
  const int stride = static_cast<int>(std::lround(spec.topic_width * (1.0 - spec.topic_overlap)));
  for (int i = 0; i < spec.n_nodes; ++i) {
    const int base = g.labels[i] * stride;
    const int n_words = std::max(2, poisson_draw(frng, spec.words_per_doc));
    for (int w = 0; w < n_words; ++w) {
      int word;
      if (uniform01(frng) < spec.topic_signal)
        word = base + static_cast<int>(uniform_index(frng, spec.topic_width));
      else
        word = static_cast<int>(uniform_index(frng, spec.feature_dim));
      g.features(i, word) = 1.0;
    }
  }
  g.reset_masks();
  return g;
}

// -----------------------------------------------------------------------------
// Feature preprocessing
// -----------------------------------------------------------------------------

/// Rescales every nonzero feature row to the given l2 norm. Zero rows stay.
inline Mat normalize_rows(const Mat& features, double target_norm) {
  Mat out = features;
  for (int i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) *= target_norm / norm;
  }
  return out;
}

}  // namespace rogat
