#pragma once

// Shared oracles and fixtures. Everything here is deliberately independent of
// the tape: finite differences and brute-force loops over plain matrices.

#include <functional>
#include <vector>

#include "rogat/gat.hpp"
#include "rogat/graph.hpp"

namespace rogat::testing {

/// Central finite-difference gradient of a scalar function of one matrix.
inline Mat fd_gradient(const std::function<double(const Mat&)>& f, const Mat& x,
                       double h = 1e-5) {
  Mat g(x.rows(), x.cols());
  Mat xp = x;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) {
      const double orig = xp(i, j);
      xp(i, j) = orig + h;
      const double fp = f(xp);
      xp(i, j) = orig - h;
      const double fm = f(xp);
      xp(i, j) = orig;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  return g;
}

/// Worst relative disagreement between two gradients, scaled by the larger of
/// the entries' magnitudes and 1 (so tiny entries compare absolutely).
inline double max_rel_error(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const double denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), 1.0});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  return worst;
}

/// Full double-sum smoothness oracle: 0.5 * sum_ij A_ij ||x_i - x_j||^2.
inline double brute_force_smoothness(const Mat& adjacency, const Mat& features) {
  double total = 0.0;
  for (int i = 0; i < adjacency.rows(); ++i)
    for (int j = 0; j < adjacency.cols(); ++j)
      total += adjacency(i, j) * (features.row(i) - features.row(j)).squaredNorm();
  return 0.5 * total;
}

/// Brute-force multi-head GAT forward straight from Eqs. (1)-(3): dense loops
/// over the adjacency, no edge lists, no tape. `edge_weights`, when given, is
/// the full revised matrix multiplying each softmaxed coefficient (self-loops
/// weight 1). Hidden layers are ELU + concat, the last layer averages heads.
inline Mat brute_force_gat(const Mat& adjacency, const Mat& x0, const GatParams& params,
                           double leaky_slope, const Mat* edge_weights = nullptr,
                           bool self_loops = true) {
  const int n = static_cast<int>(adjacency.rows());
  Mat h = x0;
  for (std::size_t layer = 0; layer < params.layers.size(); ++layer) {
    const auto& heads = params.layers[layer];
    const bool last = layer + 1 == params.layers.size();
    const int d_out = static_cast<int>(heads[0].W.cols());
    Mat combined = last ? Mat::Zero(n, d_out) : Mat(n, d_out * heads.size());
    for (std::size_t m = 0; m < heads.size(); ++m) {
      const Mat proj = h * heads[m].W;
      Mat out = Mat::Zero(n, d_out);
      for (int v = 0; v < n; ++v) {
        std::vector<int> nbrs;
        for (int u = 0; u < n; ++u)
          if ((u == v && self_loops) || adjacency(u, v) > 0.0) nbrs.push_back(u);
        std::vector<double> logit(nbrs.size());
        double mx = -1e300;
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
          double s = 0.0;
          for (int c = 0; c < d_out; ++c) {
            s += heads[m].a(c, 0) * proj(v, c);             // destination half
            s += heads[m].a(d_out + c, 0) * proj(nbrs[k], c);  // source half
          }
          logit[k] = s > 0.0 ? s : leaky_slope * s;
          mx = std::max(mx, logit[k]);
        }
        double denom = 0.0;
        for (double l : logit) denom += std::exp(l - mx);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
          double alpha = std::exp(logit[k] - mx) / denom;
          if (edge_weights && nbrs[k] != v) alpha *= (*edge_weights)(nbrs[k], v);
          out.row(v) += alpha * proj.row(nbrs[k]);
        }
      }
      if (last)
        combined += out / static_cast<double>(heads.size());
      else
        combined.middleCols(static_cast<int>(m) * d_out, d_out) =
            out.unaryExpr([](double z) { return z > 0.0 ? z : std::expm1(z); });
    }
    h = combined;
  }
  return h;
}

/// Small labeled graph with all nodes in the training mask.
inline Graph tiny_graph(int n, const std::vector<std::pair<int, int>>& edges,
                        const std::vector<int>& labels, int feature_dim,
                        std::uint64_t feature_seed = 5) {
  Graph g;
  g.n_nodes = n;
  g.labels = labels;
  g.n_classes = 0;
  for (int y : labels) g.n_classes = std::max(g.n_classes, y + 1);
  g.adjacency = Mat::Zero(n, n);
  for (auto [i, j] : edges) g.adjacency(i, j) = g.adjacency(j, i) = 1.0;
  Rng rng(mix_seed(feature_seed, 99));
  g.features = Mat(n, feature_dim);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < feature_dim; ++k) g.features(i, k) = normal01(rng);
  g.train_mask.assign(n, 1);
  g.val_mask.assign(n, 0);
  g.test_mask.assign(n, 0);
  return g;
}

}  // namespace rogat::testing
