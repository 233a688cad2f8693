#pragma once

#include <chrono>
#include <cstring>
#include <fstream>
#include <limits>
#include <tuple>

#include <nlohmann/json.hpp>

#include "rogat/adam.hpp"
#include "rogat/autodiff.hpp"
#include "rogat/graph.hpp"

// =============================================================================
/// @file gat.hpp
/// @brief Multi-head graph attention network: attention coefficients,
/// aggregation, supervised training, prediction, parameter checkpoints.
///
/// Layer k, head m: x'_v = sigma(sum_{u in N(v)} alpha_uv W x_u) with
/// alpha_uv the destination-normalized softmax of
/// LeakyReLU(a^T [W x_v || W x_u]). Hidden layers concatenate heads under ELU;
/// the output layer averages heads with no activation. Self-loops with fixed
/// weight 1 are part of every neighborhood unless disabled.
// =============================================================================

namespace rogat {

struct GatConfig {
  int n_layers = 2;
  std::vector<int> heads_per_layer = {8, 1};
  int hidden_dim = 8;
  double dropout = 0.6;             ///< on layer inputs, attention and projections
  double leaky_slope = 0.2;
  double lr = 0.005;
  double weight_decay = 5e-4;
  int epochs = 200;
  int patience = 100;               ///< early stopping on validation loss
  std::uint64_t seed = 0;
  bool self_loops = true;           ///< sensitivity switch; off risks empty neighborhoods

  void validate() const {
    ROGAT_REQUIRE(n_layers >= 1, "gat config: need at least one layer");
    ROGAT_REQUIRE(static_cast<int>(heads_per_layer.size()) == n_layers,
                  "gat config: heads_per_layer size != n_layers");
    for (int h : heads_per_layer) ROGAT_REQUIRE(h >= 1, "gat config: heads must be positive");
    ROGAT_REQUIRE(hidden_dim >= 1, "gat config: hidden_dim must be positive");
    ROGAT_REQUIRE(dropout >= 0.0 && dropout < 1.0, "gat config: dropout outside [0,1)");
    ROGAT_REQUIRE(epochs >= 1 && patience >= 0, "gat config: bad epoch/patience");
  }
};

/// Per-layer, per-head weight matrix W (d_in x d_out) and attention vector a
/// (2*d_out x 1); the first half of a pairs with the destination projection,
/// the second half with the source.
struct GatParams {
  struct Head {
    Mat W;
    Mat a;
  };
  std::vector<std::vector<Head>> layers;

  std::vector<Mat*> flat() {
    std::vector<Mat*> out;
    for (auto& layer : layers)
      for (auto& head : layer) {
        out.push_back(&head.W);
        out.push_back(&head.a);
      }
    return out;
  }
};

/// Glorot-uniform initialization, fill order fixed so a seed pins every value.
inline GatParams glorot_init(const GatConfig& cfg, int in_dim, int n_classes, Rng& rng) {
  cfg.validate();
  GatParams params;
  int d_in = in_dim;
  for (int k = 0; k < cfg.n_layers; ++k) {
    const int d_out = (k + 1 == cfg.n_layers) ? n_classes : cfg.hidden_dim;
    std::vector<GatParams::Head> heads;
    for (int m = 0; m < cfg.heads_per_layer[k]; ++m) {
      GatParams::Head h;
      h.W = Mat(d_in, d_out);
      const double wl = std::sqrt(6.0 / (d_in + d_out));
      for (int i = 0; i < d_in; ++i)
        for (int j = 0; j < d_out; ++j) h.W(i, j) = uniform(rng, -wl, wl);
      h.a = Mat(2 * d_out, 1);
      const double al = std::sqrt(6.0 / (2 * d_out + 1));
      for (int i = 0; i < 2 * d_out; ++i) h.a(i, 0) = uniform(rng, -al, al);
      heads.push_back(std::move(h));
    }
    params.layers.push_back(std::move(heads));
    d_in = d_out * cfg.heads_per_layer[k];
  }
  return params;
}

// -----------------------------------------------------------------------------
// Edge index construction
// -----------------------------------------------------------------------------

/// Directed edge index over an undirected support, optionally filtered to
/// strictly positive weights, with one self-loop per node. Directed edges are
/// sorted by (destination, source) so each destination forms one group.
inline ad::EdgeIndex build_edge_index(int n_nodes,
                                      const std::vector<std::pair<int, int>>& undirected,
                                      const std::vector<double>* weights = nullptr,
                                      bool self_loops = true) {
  std::vector<std::tuple<int, int, int>> directed;  // (dst, src, undirected id)
  directed.reserve(2 * undirected.size() + (self_loops ? n_nodes : 0));
  for (std::size_t e = 0; e < undirected.size(); ++e) {
    if (weights && (*weights)[e] <= 0.0) continue;
    const auto [i, j] = undirected[e];
    directed.emplace_back(j, i, static_cast<int>(e));
    directed.emplace_back(i, j, static_cast<int>(e));
  }
  if (self_loops)
    for (int v = 0; v < n_nodes; ++v) directed.emplace_back(v, v, -1);
  std::sort(directed.begin(), directed.end());

  ad::EdgeIndex idx;
  idx.n_nodes = n_nodes;
  idx.src.reserve(directed.size());
  idx.dst.reserve(directed.size());
  idx.undirected_id.reserve(directed.size());
  for (const auto& [d, s, u] : directed) {
    idx.dst.push_back(d);
    idx.src.push_back(s);
    idx.undirected_id.push_back(u);
  }
  idx.group_offset.assign(n_nodes + 1, 0);
  for (int d : idx.dst) ++idx.group_offset[d + 1];
  for (int v = 0; v < n_nodes; ++v) idx.group_offset[v + 1] += idx.group_offset[v];
  idx.validate();
  return idx;
}

inline ad::EdgeIndex build_edge_index(const Mat& adjacency, bool self_loops = true) {
  return build_edge_index(static_cast<int>(adjacency.rows()), undirected_edges(adjacency),
                          nullptr, self_loops);
}

// -----------------------------------------------------------------------------
// Forward pieces
// -----------------------------------------------------------------------------

struct HeadLeaves {
  ad::Tensor W, a;
};
using LayerLeaves = std::vector<HeadLeaves>;

struct ParamLeaves {
  std::vector<LayerLeaves> layers;
};

inline ParamLeaves make_param_leaves(ad::Tape& tape, const GatParams& params,
                                     bool requires_grad) {
  ParamLeaves leaves;
  for (const auto& layer : params.layers) {
    LayerLeaves ll;
    for (const auto& head : layer)
      ll.push_back({tape.input(head.W, requires_grad), tape.input(head.a, requires_grad)});
    leaves.layers.push_back(std::move(ll));
  }
  return leaves;
}

/// Per-head projections W_m x of one layer, computed as a single blocked
/// matmul over the concatenated head weights.
inline std::vector<ad::Tensor> project_heads(ad::Tape& /*tape*/, ad::Tensor x,
                                             const LayerLeaves& layer) {
  std::vector<ad::Tensor> ws;
  for (const auto& head : layer) ws.push_back(head.W);
  ad::Tensor all = ws.size() == 1 ? ws[0] : ad::concat_cols(ws);
  ad::Tensor proj = ad::matmul(x, all);
  std::vector<ad::Tensor> out;
  const int d_out = layer.front().W.cols();
  for (std::size_t m = 0; m < layer.size(); ++m)
    out.push_back(layer.size() == 1 ? proj
                                    : ad::slice_cols(proj, static_cast<int>(m) * d_out, d_out));
  return out;
}

/// Softmax-normalized attention coefficients per head (Eq. 2 form): the logit
/// of edge u->v is LeakyReLU(a_dst . W x_v + a_src . W x_u), normalized over
/// v's neighbor group.
inline std::vector<ad::Tensor> attention_coefficients(ad::Tape& /*tape*/,
                                                      const std::vector<ad::Tensor>& proj,
                                                      const LayerLeaves& layer,
                                                      const ad::EdgeIndex& edges,
                                                      double leaky_slope) {
  std::vector<ad::Tensor> alpha;
  const int d_out = layer.front().W.cols();
  for (std::size_t m = 0; m < layer.size(); ++m) {
    ad::Tensor a_dst = ad::slice_rows(layer[m].a, 0, d_out);
    ad::Tensor a_src = ad::slice_rows(layer[m].a, d_out, d_out);
    ad::Tensor s_dst = ad::matmul(proj[m], a_dst);
    ad::Tensor s_src = ad::matmul(proj[m], a_src);
    ad::Tensor logits = ad::edge_logits(s_src, s_dst, edges);
    alpha.push_back(ad::segment_softmax(ad::leaky_relu(logits, leaky_slope), edges));
  }
  return alpha;
}

enum class HeadMode { Concat, Average };

/// Aggregates each head with the supplied per-edge coefficients, then combines
/// heads: ELU + column concatenation for hidden layers, plain average for the
/// output layer.
inline ad::Tensor layer_forward(ad::Tape& /*tape*/, const std::vector<ad::Tensor>& proj,
                                const std::vector<ad::Tensor>& coeffs,
                                const ad::EdgeIndex& edges, HeadMode mode) {
  ROGAT_REQUIRE(proj.size() == coeffs.size(), "layer_forward: head count mismatch");
  std::vector<ad::Tensor> heads;
  for (std::size_t m = 0; m < proj.size(); ++m)
    heads.push_back(ad::edge_aggregate(coeffs[m], proj[m], edges));
  if (mode == HeadMode::Concat) {
    for (auto& h : heads) h = ad::elu(h);
    return heads.size() == 1 ? heads[0] : ad::concat_cols(heads);
  }
  ad::Tensor sum = heads[0];
  for (std::size_t m = 1; m < heads.size(); ++m) sum = ad::add(sum, heads[m]);
  return heads.size() == 1 ? sum : ad::scale(sum, 1.0 / static_cast<double>(heads.size()));
}

struct ModelForward {
  ad::Tensor logits;                               ///< n x K, pre log-softmax
  std::vector<std::vector<ad::Tensor>> attention;  ///< alpha per layer/head, pre-rescale
};

/// Full model forward. `a_bar`, when given, holds revised per-undirected-edge
/// weights aligned with the support used to build `edges`; every coefficient
/// is multiplied by its edge weight (self-loops stay at 1) before aggregation.
inline ModelForward model_forward(ad::Tape& tape, ad::Tensor x, const ParamLeaves& leaves,
                                  const GatConfig& cfg, const ad::EdgeIndex& edges,
                                  const std::vector<double>* a_bar, bool training,
                                  std::uint64_t epoch_seed) {
  ModelForward out;
  ad::Tensor w_dir;
  if (a_bar) {
    Mat w(edges.n_edges(), 1);
    for (int e = 0; e < edges.n_edges(); ++e) {
      const int uid = edges.undirected_id[e];
      w(e, 0) = uid < 0 ? 1.0 : (*a_bar)[uid];
    }
    w_dir = tape.constant(std::move(w));
  }
  const int n_layers = static_cast<int>(leaves.layers.size());
  ad::Tensor h = x;
  for (int k = 0; k < n_layers; ++k) {
    h = ad::dropout(h, cfg.dropout, training, mix_seed(epoch_seed, 100 + k));
    auto proj = project_heads(tape, h, leaves.layers[k]);
    auto alpha = attention_coefficients(tape, proj, leaves.layers[k], edges, cfg.leaky_slope);
    out.attention.push_back(alpha);
    std::vector<ad::Tensor> coeffs = alpha;
    for (std::size_t m = 0; m < coeffs.size(); ++m) {
      if (a_bar) coeffs[m] = ad::elementwise_mul(coeffs[m], w_dir);
      coeffs[m] = ad::dropout(coeffs[m], cfg.dropout, training,
                              mix_seed(epoch_seed, 200 + 64 * k + static_cast<int>(m)));
      proj[m] = ad::dropout(proj[m], cfg.dropout, training,
                            mix_seed(epoch_seed, 300 + 64 * k + static_cast<int>(m)));
    }
    const HeadMode mode = (k + 1 == n_layers) ? HeadMode::Average : HeadMode::Concat;
    h = layer_forward(tape, proj, coeffs, edges, mode);
  }
  out.logits = h;
  return out;
}

// -----------------------------------------------------------------------------
// Evaluation helpers (no tape needed beyond the forward)
// -----------------------------------------------------------------------------

inline bool features_are_sparse(const Mat& x) {
  const double nnz = static_cast<double>((x.array() != 0.0).count());
  return x.size() >= 4096 && nnz / static_cast<double>(x.size()) < 0.1;
}

/// Deterministic (dropout-off) logits for the current parameters.
inline Mat eval_logits(const Mat& x, const GatParams& params, const GatConfig& cfg,
                       const ad::EdgeIndex& edges, const std::vector<double>* a_bar = nullptr) {
  ad::Tape tape;
  ad::Tensor x_leaf = features_are_sparse(x) ? tape.sparse_input(x) : tape.constant(x);
  auto leaves = make_param_leaves(tape, params, false);
  return model_forward(tape, x_leaf, leaves, cfg, edges, a_bar, false, 0).logits.value();
}

/// Row argmax with the lowest index winning ties.
inline std::vector<int> predict_classes(const Mat& logits) {
  std::vector<int> out(logits.rows());
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    out[i] = best;
  }
  return out;
}

inline double masked_accuracy(const std::vector<int>& pred, const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& mask) {
  int hit = 0, total = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    if (pred[i] == labels[i]) ++hit;
  }
  ROGAT_REQUIRE(total > 0, "masked_accuracy: empty mask");
  return static_cast<double>(hit) / total;
}

/// Mean NLL of `logits` rows over a mask, computed without a tape.
inline double masked_nll(const Mat& logits, const std::vector<int>& labels,
                         const std::vector<std::uint8_t>& mask) {
  double total = 0.0;
  int count = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    const double mx = logits.row(i).maxCoeff();
    double denom = 0.0;
    for (int j = 0; j < logits.cols(); ++j) denom += std::exp(logits(i, j) - mx);
    total -= logits(i, labels[i]) - mx - std::log(denom);
    ++count;
  }
  ROGAT_REQUIRE(count > 0, "masked_nll: empty mask");
  return total / count;
}

// -----------------------------------------------------------------------------
// Training
// -----------------------------------------------------------------------------

/// One optimization epoch: dropout forward, mean-NLL loss over the train mask,
/// backward, Adam step. Updates `params` in place and returns the train loss.
inline double train_epoch(const Graph& g, const Mat& x, GatParams& params, Adam& adam,
                          const GatConfig& cfg, const ad::EdgeIndex& edges,
                          const std::vector<double>* a_bar, std::uint64_t epoch_seed) {
  ad::Tape tape;
  ad::Tensor x_leaf = features_are_sparse(x) ? tape.sparse_input(x) : tape.constant(x);
  auto leaves = make_param_leaves(tape, params, true);
  auto fwd = model_forward(tape, x_leaf, leaves, cfg, edges, a_bar, true, epoch_seed);
  auto loss = ad::masked_nll_loss(ad::row_log_softmax(fwd.logits), g.labels, g.train_mask, true);
  const double loss_value = loss.value()(0, 0);
  if (!std::isfinite(loss_value))
    throw std::runtime_error("train_epoch: non-finite training loss (diverged)");
  tape.backward(loss);

  std::vector<Mat*> ps = params.flat();
  std::vector<const Mat*> gs;
  for (const auto& layer : leaves.layers)
    for (const auto& head : layer) {
      gs.push_back(&head.W.grad());
      gs.push_back(&head.a.grad());
    }
  adam.step(std::move(ps), gs);
  return loss_value;
}

struct TrainHistory {
  std::vector<double> train_loss, val_loss, val_acc;
  int best_epoch = -1;
  bool timed_out = false;
};

struct GatTrainResult {
  GatParams params;
  TrainHistory history;
};

/// Supervised training with early stopping on validation loss; returns the
/// best-validation parameters (last parameters if there is no validation set).
inline GatTrainResult train_gat(const Graph& g, const GatConfig& cfg,
                                const std::chrono::steady_clock::time_point* deadline = nullptr) {
  cfg.validate();
  bool has_train = false, has_val = false;
  for (auto b : g.train_mask) has_train |= b != 0;
  for (auto b : g.val_mask) has_val |= b != 0;
  ROGAT_REQUIRE(has_train, "train_gat: empty training mask");

  const ad::EdgeIndex edges = build_edge_index(g.adjacency, cfg.self_loops);
  Rng master(mix_seed(cfg.seed, 7001));
  GatParams params = glorot_init(cfg, g.feature_dim(), g.n_classes, master);
  Adam adam({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});

  GatTrainResult result;
  TrainHistory& hist = result.history;
  double best_val = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const std::uint64_t epoch_seed = master();
    hist.train_loss.push_back(train_epoch(g, g.features, params, adam, cfg, edges, nullptr,
                                          epoch_seed));
    const Mat logits = eval_logits(g.features, params, cfg, edges);
    if (has_val) {
      hist.val_loss.push_back(masked_nll(logits, g.labels, g.val_mask));
      hist.val_acc.push_back(masked_accuracy(predict_classes(logits), g.labels, g.val_mask));
      if (hist.val_loss.back() < best_val) {
        best_val = hist.val_loss.back();
        hist.best_epoch = epoch;
        result.params = params;
      }
      if (epoch - hist.best_epoch > cfg.patience) break;
    }
    if (deadline && std::chrono::steady_clock::now() > *deadline) {
      hist.timed_out = true;
      break;
    }
  }
  if (hist.best_epoch < 0) {
    result.params = std::move(params);
    hist.best_epoch = static_cast<int>(hist.train_loss.size()) - 1;
  }
  return result;
}

/// Dropout-off class predictions on a graph.
inline std::vector<int> predict(const Graph& g, const GatParams& params, const GatConfig& cfg) {
  const ad::EdgeIndex edges = build_edge_index(g.adjacency, cfg.self_loops);
  return predict_classes(eval_logits(g.features, params, cfg, edges));
}

// -----------------------------------------------------------------------------
// Parameter checkpoints: JSON shape header + row-major doubles
// -----------------------------------------------------------------------------

inline void save_params(const GatParams& params, const std::string& path) {
  nlohmann::json header;
  header["format"] = "rogat-gat-params";
  header["version"] = 1;
  auto& layers = header["layers"] = nlohmann::json::array();
  for (const auto& layer : params.layers) {
    nlohmann::json jl = nlohmann::json::array();
    for (const auto& head : layer)
      jl.push_back({{"w_rows", head.W.rows()}, {"w_cols", head.W.cols()},
                    {"a_rows", head.a.rows()}});
    layers.push_back(jl);
  }
  const std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary);
  ROGAT_REQUIRE(out.good(), "save_params: cannot write " + path);
  const char magic[8] = {'R', 'O', 'G', 'A', 'T', 'P', 'R', 'M'};
  out.write(magic, 8);
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  auto write_mat = [&out](const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) {
        const double v = m(i, j);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  };
  for (const auto& layer : params.layers)
    for (const auto& head : layer) {
      write_mat(head.W);
      write_mat(head.a);
    }
  ROGAT_REQUIRE(out.good(), "save_params: write failed for " + path);
}

inline GatParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ROGAT_REQUIRE(in.good(), "load_params: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  ROGAT_REQUIRE(in.good() && std::memcmp(magic, "ROGATPRM", 8) == 0,
                "load_params: bad magic in " + path);
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  ROGAT_REQUIRE(in.good(), "load_params: truncated header in " + path);
  const auto header = nlohmann::json::parse(htext);
  ROGAT_REQUIRE(header.at("format") == "rogat-gat-params", "load_params: wrong format");
  GatParams params;
  auto read_mat = [&in, &path](int rows, int cols) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), 8);
        ROGAT_REQUIRE(in.good(), "load_params: truncated data in " + path);
        m(i, j) = v;
      }
    return m;
  };
  for (const auto& jl : header.at("layers")) {
    std::vector<GatParams::Head> layer;
    for (const auto& jh : jl) {
      GatParams::Head head;
      head.W = read_mat(jh.at("w_rows"), jh.at("w_cols"));
      head.a = read_mat(jh.at("a_rows"), 1);
      layer.push_back(std::move(head));
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

}  // namespace rogat
