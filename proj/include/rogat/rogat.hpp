#pragma once

#include <cmath>
#include <set>

#include "rogat/gat.hpp"
#include "rogat/io.hpp"

// =============================================================================
/// @file rogat.hpp
/// @brief Robust GAT: attention rescaled by a jointly optimized adjacency.
///
/// The model keeps a revised state (Ā, X̄) next to the network parameters and
/// alternates three updates: a projected gradient step on the edge weights Ā
/// (reconstruction + feature-smoothness objective), a projected gradient step
/// on the features X̄ (reconstruction + smoothness + task loss), and T2 epochs
/// of parameter training. Every attention coefficient is multiplied by its
/// edge weight (revised attention), so down-weighted edges lose influence and
/// a zero weight silences the edge entirely: the attention neighbor set is the
/// support of the current Ā.
///
/// Ā lives only on the support of the input adjacency (plus fixed unit
/// self-loops) and stays symmetric because one weight is stored per undirected
/// edge. Edge addition is out of scope.
// =============================================================================

namespace rogat {

struct RogatConfig {
  double alpha = 1.0;    ///< structure-step smoothness weight
  double beta = 1.0;     ///< feature reconstruction weight
  double gamma = 1.0;    ///< feature smoothness weight
  double lambda = 1.0;   ///< task-loss weight in the feature step
  double eta1 = 0.01;    ///< structure step size
  double eta2 = 0.01;    ///< feature step size
  int t1 = 10;           ///< outer iterations
  int t2 = 10;           ///< parameter epochs per outer iteration
  bool enable_structure = true;
  bool enable_feature = true;
  GatConfig gat;

  void validate() const {
    ROGAT_REQUIRE(alpha >= 0 && beta >= 0 && gamma >= 0 && lambda >= 0,
                  "rogat config: weights must be nonnegative");
    ROGAT_REQUIRE(t1 >= 1 && t2 >= 1, "rogat config: t1 and t2 must be >= 1");
    gat.validate();
  }
};

/// Revised structure and features. Weights are stored once per undirected
/// support edge, so Ā is symmetric by construction; self-loops are implicit
/// with fixed weight 1 and never reweighted.
struct RevisedState {
  std::vector<std::pair<int, int>> support;  ///< undirected edges of the input graph
  std::vector<double> a_input;               ///< input adjacency values on the support
  std::vector<double> a_bar;                 ///< revised weights, each in [0,1]
  Mat x_bar;
  Vec col_lo, col_hi;                        ///< feature projection box per column

  void project_weights() {
    for (double& w : a_bar) w = clamp01(w);
  }

  void project_features() {
    for (int j = 0; j < x_bar.cols(); ++j)
      for (int i = 0; i < x_bar.rows(); ++i)
        x_bar(i, j) = std::min(col_hi(j), std::max(col_lo(j), x_bar(i, j)));
  }
};

inline RevisedState init_state(const Graph& g) {
  RevisedState s;
  s.support = undirected_edges(g.adjacency);
  s.a_input.reserve(s.support.size());
  for (const auto& [i, j] : s.support) s.a_input.push_back(g.adjacency(i, j));
  s.a_bar = s.a_input;
  s.x_bar = g.features;
  s.col_lo = g.features.colwise().minCoeff();
  s.col_hi = g.features.colwise().maxCoeff();
  return s;
}

/// Edge index over the strictly positive part of Ā. Rebuild after every
/// structure step; a weight clamped to zero drops out of every neighborhood
/// (and can re-enter later if its weight recovers).
inline ad::EdgeIndex state_edge_index(const RevisedState& state, int n_nodes,
                                      bool self_loops = true) {
  return build_edge_index(n_nodes, state.support, &state.a_bar, self_loops);
}

// -----------------------------------------------------------------------------
// Revised attention
// -----------------------------------------------------------------------------

/// Per-edge product of attention coefficients with the revised edge weights,
/// no renormalization; self-loops keep weight 1. `alpha` columns are aligned
/// with `edges`, whose undirected ids index into the state's support.
inline Vec revised_attention(const Vec& alpha, const ad::EdgeIndex& edges,
                             const RevisedState& state) {
  ROGAT_REQUIRE(alpha.size() == edges.n_edges(), "revised_attention: support mismatch");
  Vec out(alpha.size());
  for (int e = 0; e < edges.n_edges(); ++e) {
    const int uid = edges.undirected_id[e];
    out(e) = uid < 0 ? alpha(e) : state.a_bar[uid] * alpha(e);
  }
  return out;
}

/// Dropout-off logits of the revised model (GAT forward with every
/// coefficient scaled by its edge weight).
inline Mat rogat_logits(const GatParams& params, const GatConfig& cfg,
                        const RevisedState& state, const ad::EdgeIndex& edges) {
  return eval_logits(state.x_bar, params, cfg, edges, &state.a_bar);
}

// -----------------------------------------------------------------------------
// Structure step (Eq. 8/9): projected gradient on the edge weights
// -----------------------------------------------------------------------------

/// One projected step per supported edge:
///   grad = 2(a_bar - a_input) + (alpha/2)||x_bar_i - x_bar_j||^2
///   a_bar <- clamp_[0,1](a_bar - eta1 * grad)
/// Both orientations share the stored weight, so symmetry is preserved.
inline void structure_step(RevisedState& state, const RogatConfig& cfg) {
  for (std::size_t e = 0; e < state.support.size(); ++e) {
    const auto& [i, j] = state.support[e];
    const double d2 = (state.x_bar.row(i) - state.x_bar.row(j)).squaredNorm();
    const double grad = 2.0 * (state.a_bar[e] - state.a_input[e]) + 0.5 * cfg.alpha * d2;
    state.a_bar[e] = clamp01(state.a_bar[e] - cfg.eta1 * grad);
  }
}

/// Single-orientation structure objective whose entrywise gradient is exactly
/// the step formula above (the full Frobenius double sum doubles both terms).
inline double structure_objective(const RevisedState& state, const RogatConfig& cfg) {
  double total = 0.0;
  for (std::size_t e = 0; e < state.support.size(); ++e) {
    const auto& [i, j] = state.support[e];
    const double diff = state.a_bar[e] - state.a_input[e];
    const double d2 = (state.x_bar.row(i) - state.x_bar.row(j)).squaredNorm();
    total += diff * diff + 0.5 * cfg.alpha * state.a_bar[e] * d2;
  }
  return total;
}

// -----------------------------------------------------------------------------
// Feature step (Eq. 10/11): projected gradient on the features
// -----------------------------------------------------------------------------

/// Laplacian product (D_bar - A_bar) X_bar over the weighted support.
inline Mat weighted_laplacian_product(const RevisedState& state) {
  Mat out = Mat::Zero(state.x_bar.rows(), state.x_bar.cols());
  for (std::size_t e = 0; e < state.support.size(); ++e) {
    const double w = state.a_bar[e];
    if (w == 0.0) continue;
    const auto& [i, j] = state.support[e];
    const auto diff = (state.x_bar.row(i) - state.x_bar.row(j)).eval();
    out.row(i) += w * diff;
    out.row(j) -= w * diff;
  }
  return out;
}

/// Task-loss gradient with respect to X_bar: reverse-mode sweep through the
/// revised forward, sum-reduced NLL over the training mask (Eq. 4 literal).
inline Mat task_feature_gradient(const RevisedState& state, const GatParams& params,
                                 const Graph& g, const GatConfig& cfg,
                                 const ad::EdgeIndex& edges) {
  ad::Tape tape;
  ad::Tensor x_leaf = tape.input(state.x_bar, true);
  auto leaves = make_param_leaves(tape, params, false);
  auto fwd = model_forward(tape, x_leaf, leaves, cfg, edges, &state.a_bar, false, 0);
  auto loss =
      ad::masked_nll_loss(ad::row_log_softmax(fwd.logits), g.labels, g.train_mask, false);
  tape.backward(loss);
  return x_leaf.grad();
}

/// One projected feature step:
///   grad = 2*beta*(X_bar - X) + 2*gamma*L_bar X_bar + lambda * dL/dX_bar
///   X_bar <- P_X(X_bar - eta2 * grad)
/// with P_X clamping each column to the input-feature column range.
inline void feature_step(RevisedState& state, const Mat& x_input, const GatParams& params,
                         const Graph& g, const RogatConfig& cfg, const ad::EdgeIndex& edges) {
  Mat grad = 2.0 * cfg.beta * (state.x_bar - x_input);
  if (cfg.gamma != 0.0) grad += 2.0 * cfg.gamma * weighted_laplacian_product(state);
  if (cfg.lambda != 0.0)
    grad += cfg.lambda * task_feature_gradient(state, params, g, cfg.gat, edges);
  ROGAT_REQUIRE(grad.allFinite(), "feature_step: non-finite gradient");
  state.x_bar -= cfg.eta2 * grad;
  state.project_features();
}

/// Eq. (11) objective as a plain function of the current state (reconstruction
/// + weighted smoothness + lambda * sum-NLL of the revised forward).
inline double feature_objective(const RevisedState& state, const Mat& x_input,
                                const GatParams& params, const Graph& g,
                                const RogatConfig& cfg, const ad::EdgeIndex& edges) {
  double total = cfg.beta * (state.x_bar - x_input).squaredNorm();
  for (std::size_t e = 0; e < state.support.size(); ++e) {
    const auto& [i, j] = state.support[e];
    total += cfg.gamma * state.a_bar[e] *
             (state.x_bar.row(i) - state.x_bar.row(j)).squaredNorm();
  }
  if (cfg.lambda != 0.0) {
    const Mat logits = rogat_logits(params, cfg.gat, state, edges);
    int count = 0;
    for (auto b : g.train_mask) count += b != 0;
    total += cfg.lambda * masked_nll(logits, g.labels, g.train_mask) * count;
  }
  return total;
}

// -----------------------------------------------------------------------------
// Fake/real edge-weight ratio (§5.4 diagnostic)
// -----------------------------------------------------------------------------

/// Mean revised weight over attack-added edges divided by the mean over the
/// remaining (original) support edges. Exactly 1 at initialization of a
/// binary poisoned graph.
inline double fake_real_ratio(const RevisedState& state,
                              const std::vector<std::pair<int, int>>& added_edges) {
  ROGAT_REQUIRE(!added_edges.empty(), "fake_real_ratio: empty added-edge set");
  std::set<std::pair<int, int>> added;
  for (auto [i, j] : added_edges) added.emplace(std::min(i, j), std::max(i, j));
  double fake_sum = 0.0, real_sum = 0.0;
  int fake_n = 0, real_n = 0;
  for (std::size_t e = 0; e < state.support.size(); ++e) {
    if (added.count(state.support[e])) {
      fake_sum += state.a_bar[e];
      ++fake_n;
    } else {
      real_sum += state.a_bar[e];
      ++real_n;
    }
  }
  ROGAT_REQUIRE(fake_n > 0, "fake_real_ratio: added edges do not intersect the support");
  ROGAT_REQUIRE(real_n > 0, "fake_real_ratio: no original edges in the support");
  return (fake_sum / fake_n) / (real_sum / real_n);
}

// -----------------------------------------------------------------------------
// Alternating training (Algorithm 1)
// -----------------------------------------------------------------------------

struct OuterRecord {
  int outer = 0;
  double train_loss = 0.0;  ///< last inner-epoch training loss
  double val_loss = 0.0;
  double val_acc = 0.0;
  double fake_real = std::numeric_limits<double>::quiet_NaN();
};

struct RogatTrainResult {
  GatParams params;
  RevisedState state;
  std::vector<OuterRecord> history;        ///< one record per outer iteration
  std::vector<double> ratio_trace;         ///< t1+1 values starting at init
  std::vector<double> inner_train_loss;    ///< every inner epoch, in order
  int best_outer = -1;
  bool timed_out = false;
};

/// Alternating optimization: per outer iteration one structure step, one
/// feature step (each optional), then t2 Adam epochs on the parameters.
/// Model selection across outer iterations is by validation accuracy with
/// validation loss as tie-break. The seed discipline matches train_gat
/// exactly, so disabling both steps reproduces its trajectory epoch for epoch.
inline RogatTrainResult train_rogat(
    const Graph& g, const RogatConfig& cfg,
    const std::vector<std::pair<int, int>>* attack_added = nullptr,
    const std::chrono::steady_clock::time_point* deadline = nullptr) {
  cfg.validate();
  bool has_train = false, has_val = false;
  for (auto b : g.train_mask) has_train |= b != 0;
  for (auto b : g.val_mask) has_val |= b != 0;
  ROGAT_REQUIRE(has_train, "train_rogat: empty training mask");

  RogatTrainResult result;
  RevisedState state = init_state(g);
  Rng master(mix_seed(cfg.gat.seed, 7001));
  GatParams params = glorot_init(cfg.gat, g.feature_dim(), g.n_classes, master);
  Adam adam({cfg.gat.lr, 0.9, 0.999, 1e-8, cfg.gat.weight_decay});

  ad::EdgeIndex edges = state_edge_index(state, g.n_nodes, cfg.gat.self_loops);
  if (attack_added) result.ratio_trace.push_back(fake_real_ratio(state, *attack_added));

  double best_acc = -1.0, best_loss = std::numeric_limits<double>::infinity();
  for (int outer = 1; outer <= cfg.t1; ++outer) {
    if (cfg.enable_structure) {
      structure_step(state, cfg);
      edges = state_edge_index(state, g.n_nodes, cfg.gat.self_loops);
    }
    if (cfg.enable_feature) feature_step(state, g.features, params, g, cfg, edges);

    double train_loss = 0.0;
    for (int epoch = 0; epoch < cfg.t2; ++epoch) {
      const std::uint64_t epoch_seed = master();
      train_loss = train_epoch(g, state.x_bar, params, adam, cfg.gat, edges, &state.a_bar,
                               epoch_seed);
      result.inner_train_loss.push_back(train_loss);
    }

    OuterRecord rec;
    rec.outer = outer;
    rec.train_loss = train_loss;
    const Mat logits = rogat_logits(params, cfg.gat, state, edges);
    if (has_val) {
      rec.val_loss = masked_nll(logits, g.labels, g.val_mask);
      rec.val_acc = masked_accuracy(predict_classes(logits), g.labels, g.val_mask);
      if (rec.val_acc > best_acc ||
          (rec.val_acc == best_acc && rec.val_loss < best_loss)) {
        best_acc = rec.val_acc;
        best_loss = rec.val_loss;
        result.best_outer = outer;
        result.params = params;
        result.state = state;
      }
    }
    if (attack_added) {
      rec.fake_real = fake_real_ratio(state, *attack_added);
      result.ratio_trace.push_back(rec.fake_real);
    }
    result.history.push_back(rec);
    if (deadline && std::chrono::steady_clock::now() > *deadline) {
      result.timed_out = true;
      break;
    }
  }
  if (result.best_outer < 0) {
    result.params = std::move(params);
    result.state = std::move(state);
    result.best_outer = cfg.t1;
  }
  return result;
}

/// Dropout-off predictions of a trained revised model.
inline std::vector<int> predict_rogat(const Graph& g, const GatParams& params,
                                      const GatConfig& cfg, const RevisedState& state) {
  const ad::EdgeIndex edges = state_edge_index(state, g.n_nodes, cfg.self_loops);
  return predict_classes(rogat_logits(params, cfg, state, edges));
}

/// Exports the revised state: "src,dst,a_bar" rows plus a features CSV in the
/// same layout the graph exporter writes.
inline void save_state(const RevisedState& state, const std::string& edges_path,
                       const std::string& features_path) {
  std::ofstream out(edges_path);
  ROGAT_REQUIRE(out.good(), "save_state: cannot write " + edges_path);
  for (std::size_t e = 0; e < state.support.size(); ++e)
    out << state.support[e].first << ',' << state.support[e].second << ','
        << detail::format_double(state.a_bar[e]) << '\n';
  std::ofstream feat(features_path);
  ROGAT_REQUIRE(feat.good(), "save_state: cannot write " + features_path);
  for (int i = 0; i < state.x_bar.rows(); ++i) {
    feat << i;
    for (int k = 0; k < state.x_bar.cols(); ++k)
      feat << ',' << detail::format_double(state.x_bar(i, k));
    feat << '\n';
  }
}

}  // namespace rogat
