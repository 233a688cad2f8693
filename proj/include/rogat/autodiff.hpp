#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "rogat/common.hpp"

// =============================================================================
/// @file autodiff.hpp
/// @brief Dense-matrix reverse-mode autodiff on an explicit tape.
///
/// A Tape owns every Tensor created on it; Tensor is a cheap (tape, id)
/// handle. Ops append a node holding the forward value and a backward closure
/// over the ids of its inputs, so creation order is a topological order and
/// backward() is a single reverse sweep. Gradients of op outputs are scratch
/// (reset per sweep); leaf gradients accumulate across backward() calls until
/// zero_grad().
///
/// A tape and its tensors are confined to one thread; independent tapes may
/// run concurrently. Edge ops hold a reference to the EdgeIndex they were
/// built from, which must therefore outlive the tape.
// =============================================================================

namespace rogat::ad {

using rogat::Mat;
using SpMat = Eigen::SparseMatrix<double>;

/// Directed edge structure consumed by the attention ops: edges u->v (u
/// aggregated into v), sorted by destination, each destination forming one
/// contiguous non-empty group (guaranteed by construction via self-loops).
struct EdgeIndex {
  int n_nodes = 0;
  std::vector<int> src, dst;
  std::vector<int> group_offset;    ///< size n_nodes+1 into src/dst
  std::vector<int> undirected_id;   ///< per directed edge; -1 for self-loops

  int n_edges() const { return static_cast<int>(src.size()); }

  void validate() const {
    ROGAT_REQUIRE(static_cast<int>(group_offset.size()) == n_nodes + 1,
                  "edge index: bad group offsets");
    for (int v = 0; v < n_nodes; ++v)
      ROGAT_REQUIRE(group_offset[v + 1] > group_offset[v],
                    "edge index: node with empty neighbor group");
  }
};

class Tape;

class Tensor {
 public:
  Tensor() = default;

  const Mat& value() const;
  const Mat& grad() const;
  bool has_grad() const;
  bool requires_grad() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a copy of `v`.
  Tensor input(Mat v, bool requires_grad) {
    nodes_.push_back(Node{std::move(v), Mat(), requires_grad, nullptr, nullptr});
    return Tensor(this, static_cast<int>(nodes_.size()) - 1);
  }

  Tensor constant(Mat v) { return input(std::move(v), false); }

  /// No-grad leaf with a cached sparse view used by the matmul fast path.
  Tensor sparse_input(const Mat& v) {
    Tensor t = input(v, false);
    node(t.id_).sparse = std::make_shared<SpMat>(v.sparseView());
    return t;
  }

  /// Reverse sweep from a scalar (1x1) loss. Leaf gradients accumulate;
  /// op-output gradients are scratch and reset at the start of each sweep.
  void backward(Tensor loss) {
    ROGAT_REQUIRE(loss.tape_ == this, "backward: tensor from another tape");
    ROGAT_REQUIRE(loss.rows() == 1 && loss.cols() == 1, "backward: loss is not scalar");
    for (auto& n : nodes_)
      if (n.backward && n.grad.size() > 0) n.grad.setZero();
    accumulate(loss.id_, Mat::Ones(1, 1));
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.backward && n.grad.size() > 0) n.backward();
    }
  }

  void zero_grad() {
    for (auto& n : nodes_) n.grad.resize(0, 0);
  }

  std::size_t size() const { return nodes_.size(); }

  // --- accessors used by op closures -----------------------------------------
  const Mat& value_of(int id) const { return nodes_[id].value; }
  bool wants_grad(int id) const { return nodes_[id].requires_grad; }
  const SpMat* sparse_of(int id) const { return nodes_[id].sparse.get(); }

  void accumulate(int id, const Mat& g) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    n.grad += g;
  }

  /// Gradient buffer of `id`, allocated zero on first touch.
  Mat& grad_buffer(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

 private:
  friend class Tensor;
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void()> backward;   ///< null for leaves
    std::shared_ptr<const SpMat> sparse;
  };

  Node& node(int id) { return nodes_[id]; }

  Tensor make(Mat v, bool requires_grad, std::function<void()> backward) {
    nodes_.push_back(Node{std::move(v), Mat(), requires_grad,
                          requires_grad ? std::move(backward) : nullptr, nullptr});
    return Tensor(this, static_cast<int>(nodes_.size()) - 1);
  }

  friend Tensor matmul(Tensor, Tensor);
  friend Tensor add(Tensor, Tensor);
  friend Tensor sub(Tensor, Tensor);
  friend Tensor elementwise_mul(Tensor, Tensor);
  friend Tensor scale(Tensor, double);
  friend Tensor sum_all(Tensor);
  friend Tensor concat_cols(const std::vector<Tensor>&);
  friend Tensor slice_cols(Tensor, int, int);
  friend Tensor slice_rows(Tensor, int, int);
  friend Tensor leaky_relu(Tensor, double);
  friend Tensor elu(Tensor);
  friend Tensor exp(Tensor);
  friend Tensor dropout(Tensor, double, bool, std::uint64_t);
  friend Tensor edge_logits(Tensor, Tensor, const EdgeIndex&);
  friend Tensor segment_softmax(Tensor, const EdgeIndex&);
  friend Tensor edge_aggregate(Tensor, Tensor, const EdgeIndex&);
  friend Tensor row_log_softmax(Tensor);
  friend Tensor masked_nll_loss(Tensor, const std::vector<int>&,
                                const std::vector<std::uint8_t>&, bool);

  std::vector<Node> nodes_;
};

inline const Mat& Tensor::value() const {
  ROGAT_REQUIRE(tape_ != nullptr, "tensor: empty handle");
  return tape_->value_of(id_);
}

inline bool Tensor::has_grad() const {
  return tape_ != nullptr && tape_->nodes_[id_].grad.size() > 0;
}

inline const Mat& Tensor::grad() const {
  ROGAT_REQUIRE(has_grad(), "tensor: gradient not populated");
  return tape_->nodes_[id_].grad;
}

inline bool Tensor::requires_grad() const {
  return tape_ != nullptr && tape_->wants_grad(id_);
}

namespace detail {
inline Tape& same_tape(Tensor a, Tensor b) {
  ROGAT_REQUIRE(a.valid() && b.valid() && a.tape() == b.tape(),
                "op: tensors must live on one tape");
  return *a.tape();
}
}  // namespace detail

// -----------------------------------------------------------------------------
// Dense ops
// -----------------------------------------------------------------------------

inline Tensor matmul(Tensor a, Tensor b) {
  Tape& t = detail::same_tape(a, b);
  ROGAT_REQUIRE(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  const SpMat* sp = t.sparse_of(a.id());
  Mat v = sp ? Mat(*sp * b.value()) : Mat(a.value() * b.value());
  const bool rg = a.requires_grad() || b.requires_grad();
  auto out = t.make(std::move(v), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, ai = a.id(), bi = b.id(), oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      if (t.wants_grad(ai)) t.accumulate(ai, g * t.value_of(bi).transpose());
      if (t.wants_grad(bi)) {
        const SpMat* sp = t.sparse_of(ai);
        t.accumulate(bi, sp ? Mat(sp->transpose() * g) : Mat(t.value_of(ai).transpose() * g));
      }
    };
  return out;
}

inline Tensor add(Tensor a, Tensor b) {
  Tape& t = detail::same_tape(a, b);
  ROGAT_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  const bool rg = a.requires_grad() || b.requires_grad();
  auto out = t.make(a.value() + b.value(), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, ai = a.id(), bi = b.id(), oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      if (t.wants_grad(ai)) t.accumulate(ai, g);
      if (t.wants_grad(bi)) t.accumulate(bi, g);
    };
  return out;
}

inline Tensor sub(Tensor a, Tensor b) {
  Tape& t = detail::same_tape(a, b);
  ROGAT_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  const bool rg = a.requires_grad() || b.requires_grad();
  auto out = t.make(a.value() - b.value(), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, ai = a.id(), bi = b.id(), oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      if (t.wants_grad(ai)) t.accumulate(ai, g);
      if (t.wants_grad(bi)) t.accumulate(bi, -g);
    };
  return out;
}

inline Tensor elementwise_mul(Tensor a, Tensor b) {
  Tape& t = detail::same_tape(a, b);
  ROGAT_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(), "elementwise_mul: shape mismatch");
  const bool rg = a.requires_grad() || b.requires_grad();
  auto out = t.make(a.value().cwiseProduct(b.value()), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, ai = a.id(), bi = b.id(), oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      if (t.wants_grad(ai)) t.accumulate(ai, g.cwiseProduct(t.value_of(bi)));
      if (t.wants_grad(bi)) t.accumulate(bi, g.cwiseProduct(t.value_of(ai)));
    };
  return out;
}

inline Tensor scale(Tensor a, double c) {
  Tape& t = *a.tape();
  auto out = t.make(a.value() * c, a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id(), c]() {
      t.accumulate(ai, t.nodes_[oi].grad * c);
    };
  return out;
}

inline Tensor sum_all(Tensor a) {
  Tape& t = *a.tape();
  Mat v(1, 1);
  v(0, 0) = a.value().sum();
  auto out = t.make(std::move(v), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id()]() {
      const double g = t.nodes_[oi].grad(0, 0);
      t.grad_buffer(ai).array() += g;
    };
  return out;
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  ROGAT_REQUIRE(!parts.empty(), "concat_cols: empty input");
  Tape& t = *parts.front().tape();
  const int rows = parts.front().rows();
  int cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    ROGAT_REQUIRE(p.tape() == &t, "concat_cols: tensors from different tapes");
    ROGAT_REQUIRE(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
    rg = rg || p.requires_grad();
  }
  Mat v(rows, cols);
  int at = 0;
  std::vector<int> ids;
  std::vector<int> widths;
  for (const auto& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id());
    widths.push_back(p.cols());
    at += p.cols();
  }
  auto out = t.make(std::move(v), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, ids, widths, oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      int at = 0;
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (t.wants_grad(ids[k])) t.grad_buffer(ids[k]) += g.middleCols(at, widths[k]);
        at += widths[k];
      }
    };
  return out;
}

inline Tensor slice_cols(Tensor a, int start, int count) {
  Tape& t = *a.tape();
  ROGAT_REQUIRE(start >= 0 && count > 0 && start + count <= a.cols(),
                "slice_cols: range out of bounds");
  auto out = t.make(a.value().middleCols(start, count), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id(), start, count]() {
      t.grad_buffer(ai).middleCols(start, count) += t.nodes_[oi].grad;
    };
  return out;
}

inline Tensor slice_rows(Tensor a, int start, int count) {
  Tape& t = *a.tape();
  ROGAT_REQUIRE(start >= 0 && count > 0 && start + count <= a.rows(),
                "slice_rows: range out of bounds");
  auto out = t.make(a.value().middleRows(start, count), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id(), start, count]() {
      t.grad_buffer(ai).middleRows(start, count) += t.nodes_[oi].grad;
    };
  return out;
}

// -----------------------------------------------------------------------------
// Nonlinearities
// -----------------------------------------------------------------------------

inline Tensor leaky_relu(Tensor a, double slope) {
  Tape& t = *a.tape();
  Mat v = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
  auto out = t.make(std::move(v), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id(), slope]() {
      const Mat& g = t.nodes_[oi].grad;
      const Mat& x = t.value_of(ai);
      t.accumulate(ai, g.binaryExpr(x, [slope](double gv, double xv) {
        return xv > 0.0 ? gv : slope * gv;
      }));
    };
  return out;
}

inline Tensor elu(Tensor a) {
  Tape& t = *a.tape();
  Mat v = a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  auto out = t.make(std::move(v), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      const Mat& y = t.value_of(oi);  // dy/dx = 1 for x>0, exp(x) = y+1 otherwise
      t.accumulate(ai, g.binaryExpr(y, [](double gv, double yv) {
        return yv > 0.0 ? gv : gv * (yv + 1.0);
      }));
    };
  return out;
}

inline Tensor exp(Tensor a) {
  Tape& t = *a.tape();
  auto out = t.make(a.value().array().exp().matrix(), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id()]() {
      t.accumulate(ai, t.nodes_[oi].grad.cwiseProduct(t.value_of(oi)));
    };
  return out;
}

/// Inverted dropout: each entry survives with probability 1-p and is scaled by
/// 1/(1-p). With `training` off (or p == 0) this is the identity. The mask is
/// a pure function of `seed`.
inline Tensor dropout(Tensor a, double p, bool training, std::uint64_t seed) {
  ROGAT_REQUIRE(p >= 0.0 && p < 1.0, "dropout: p outside [0,1)");
  if (!training || p == 0.0) return a;
  Tape& t = *a.tape();
  Rng rng(mix_seed(seed, 17));
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<Mat>(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      (*mask)(i, j) = uniform01(rng) >= p ? keep_scale : 0.0;
  auto out = t.make(a.value().cwiseProduct(*mask), a.requires_grad(), nullptr);
  if (t.sparse_of(a.id()) != nullptr)
    t.node(out.id()).sparse = std::make_shared<SpMat>(t.value_of(out.id()).sparseView());
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id(), mask]() {
      t.accumulate(ai, t.nodes_[oi].grad.cwiseProduct(*mask));
    };
  return out;
}

// -----------------------------------------------------------------------------
// Edge / attention ops
// -----------------------------------------------------------------------------

/// Per-edge attention logits from per-node score columns: out[e] =
/// s_dst[dst[e]] + s_src[src[e]] for every directed edge.
inline Tensor edge_logits(Tensor s_src, Tensor s_dst, const EdgeIndex& edges) {
  Tape& t = detail::same_tape(s_src, s_dst);
  ROGAT_REQUIRE(s_src.cols() == 1 && s_dst.cols() == 1 && s_src.rows() == edges.n_nodes &&
                    s_dst.rows() == edges.n_nodes,
                "edge_logits: expected n x 1 score columns");
  const int m = edges.n_edges();
  Mat v(m, 1);
  for (int e = 0; e < m; ++e)
    v(e, 0) = s_dst.value()(edges.dst[e], 0) + s_src.value()(edges.src[e], 0);
  const bool rg = s_src.requires_grad() || s_dst.requires_grad();
  auto out = t.make(std::move(v), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, si = s_src.id(), di = s_dst.id(), oi = out.id(), &edges]() {
      const Mat& g = t.nodes_[oi].grad;
      const bool ws = t.wants_grad(si), wd = t.wants_grad(di);
      Mat* gs = ws ? &t.grad_buffer(si) : nullptr;
      Mat* gd = wd ? &t.grad_buffer(di) : nullptr;
      for (int e = 0; e < g.rows(); ++e) {
        if (gs) (*gs)(edges.src[e], 0) += g(e, 0);
        if (gd) (*gd)(edges.dst[e], 0) += g(e, 0);
      }
    };
  return out;
}

/// Numerically stable softmax within each destination group of the edge list.
/// Output sums to 1 over every group.
inline Tensor segment_softmax(Tensor logits, const EdgeIndex& edges) {
  Tape& t = *logits.tape();
  ROGAT_REQUIRE(logits.cols() == 1 && logits.rows() == edges.n_edges(),
                "segment_softmax: logits must be one column per directed edge");
  const Mat& x = logits.value();
  Mat v(x.rows(), 1);
  for (int n = 0; n < edges.n_nodes; ++n) {
    const int lo = edges.group_offset[n], hi = edges.group_offset[n + 1];
    ROGAT_REQUIRE(hi > lo, "segment_softmax: empty destination group");
    double mx = x(lo, 0);
    for (int e = lo + 1; e < hi; ++e) mx = std::max(mx, x(e, 0));
    double denom = 0.0;
    for (int e = lo; e < hi; ++e) denom += std::exp(x(e, 0) - mx);
    for (int e = lo; e < hi; ++e) v(e, 0) = std::exp(x(e, 0) - mx) / denom;
  }
  auto out = t.make(std::move(v), logits.requires_grad(), nullptr);
  if (logits.requires_grad())
    t.node(out.id()).backward = [&t, li = logits.id(), oi = out.id(), &edges]() {
      const Mat& g = t.nodes_[oi].grad;
      const Mat& y = t.value_of(oi);
      Mat& gl = t.grad_buffer(li);
      for (int n = 0; n < edges.n_nodes; ++n) {
        const int lo = edges.group_offset[n], hi = edges.group_offset[n + 1];
        double dot = 0.0;
        for (int e = lo; e < hi; ++e) dot += y(e, 0) * g(e, 0);
        for (int e = lo; e < hi; ++e) gl(e, 0) += y(e, 0) * (g(e, 0) - dot);
      }
    };
  return out;
}

/// Attention-weighted neighborhood sum: out[v] = sum over incoming edges e of
/// coeff[e] * h[src[e]].
inline Tensor edge_aggregate(Tensor coeff, Tensor h, const EdgeIndex& edges) {
  Tape& t = detail::same_tape(coeff, h);
  ROGAT_REQUIRE(coeff.cols() == 1 && coeff.rows() == edges.n_edges(),
                "edge_aggregate: coefficients must be one column per directed edge");
  ROGAT_REQUIRE(h.rows() == edges.n_nodes, "edge_aggregate: feature row count mismatch");
  const int m = edges.n_edges();
  Mat v = Mat::Zero(edges.n_nodes, h.cols());
  for (int e = 0; e < m; ++e)
    v.row(edges.dst[e]) += coeff.value()(e, 0) * h.value().row(edges.src[e]);
  const bool rg = coeff.requires_grad() || h.requires_grad();
  auto out = t.make(std::move(v), rg, nullptr);
  if (rg)
    t.node(out.id()).backward = [&t, ci = coeff.id(), hi_ = h.id(), oi = out.id(), &edges]() {
      const Mat& g = t.nodes_[oi].grad;
      const Mat& hv = t.value_of(hi_);
      const Mat& cv = t.value_of(ci);
      const bool wc = t.wants_grad(ci), wh = t.wants_grad(hi_);
      Mat* gc = wc ? &t.grad_buffer(ci) : nullptr;
      Mat* gh = wh ? &t.grad_buffer(hi_) : nullptr;
      for (int e = 0; e < static_cast<int>(edges.src.size()); ++e) {
        if (gc) (*gc)(e, 0) += g.row(edges.dst[e]).dot(hv.row(edges.src[e]));
        if (gh) gh->row(edges.src[e]) += cv(e, 0) * g.row(edges.dst[e]);
      }
    };
  return out;
}

// -----------------------------------------------------------------------------
// Classification head
// -----------------------------------------------------------------------------

inline Tensor row_log_softmax(Tensor a) {
  Tape& t = *a.tape();
  const Mat& x = a.value();
  Mat v(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    double denom = 0.0;
    for (int j = 0; j < x.cols(); ++j) denom += std::exp(x(i, j) - mx);
    const double log_denom = mx + std::log(denom);
    for (int j = 0; j < x.cols(); ++j) v(i, j) = x(i, j) - log_denom;
  }
  auto out = t.make(std::move(v), a.requires_grad(), nullptr);
  if (a.requires_grad())
    t.node(out.id()).backward = [&t, ai = a.id(), oi = out.id()]() {
      const Mat& g = t.nodes_[oi].grad;
      const Mat& y = t.value_of(oi);
      Mat gx(g.rows(), g.cols());
      for (int i = 0; i < g.rows(); ++i) {
        const double gsum = g.row(i).sum();
        gx.row(i) = g.row(i) - y.row(i).array().exp().matrix() * gsum;
      }
      t.accumulate(ai, gx);
    };
  return out;
}

/// Negative log-likelihood of the true class over masked rows. `mean` divides
/// by the masked count (the parameter-training convention); with `mean` false
/// the masked losses are summed.
inline Tensor masked_nll_loss(Tensor log_probs, const std::vector<int>& labels,
                              const std::vector<std::uint8_t>& mask, bool mean = true) {
  Tape& t = *log_probs.tape();
  ROGAT_REQUIRE(static_cast<int>(labels.size()) == log_probs.rows() &&
                    labels.size() == mask.size(),
                "masked_nll_loss: label/mask size mismatch");
  int count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ROGAT_REQUIRE(labels[i] >= 0 && labels[i] < log_probs.cols(),
                  "masked_nll_loss: label out of range");
    total -= log_probs.value()(static_cast<int>(i), labels[i]);
    ++count;
  }
  ROGAT_REQUIRE(count > 0, "masked_nll_loss: empty mask");
  const double denom = mean ? static_cast<double>(count) : 1.0;
  Mat v(1, 1);
  v(0, 0) = total / denom;
  auto out = t.make(std::move(v), log_probs.requires_grad(), nullptr);
  if (log_probs.requires_grad())
    t.node(out.id()).backward = [&t, li = log_probs.id(), oi = out.id(), labels, mask,
                                 denom]() {
      const double g = t.nodes_[oi].grad(0, 0);
      Mat& gl = t.grad_buffer(li);
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) gl(static_cast<int>(i), labels[i]) -= g / denom;
    };
  return out;
}

}  // namespace rogat::ad
