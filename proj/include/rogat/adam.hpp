#pragma once

#include <cmath>
#include <vector>

#include "rogat/common.hpp"

namespace rogat {

/// Adam with decoupled L2 weight decay. One state per flattened parameter
/// list; step order and shapes must stay fixed across calls.
struct AdamConfig {
  double lr = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }

  void reset() {
    m_.clear();
    v_.clear();
    t_ = 0;
  }

  /// In-place update of `params` from `grads` (parallel lists).
  void step(std::vector<Mat*> params, const std::vector<const Mat*>& grads) {
    ROGAT_REQUIRE(params.size() == grads.size(), "adam: params/grads size mismatch");
    if (m_.empty()) {
      for (const Mat* p : params) {
        m_.push_back(Mat::Zero(p->rows(), p->cols()));
        v_.push_back(Mat::Zero(p->rows(), p->cols()));
      }
    }
    ROGAT_REQUIRE(params.size() == m_.size(), "adam: parameter count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Mat& p = *params[k];
      const Mat& g = *grads[k];
      ROGAT_REQUIRE(p.rows() == g.rows() && p.cols() == g.cols(), "adam: grad shape mismatch");
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * g;
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      const Mat m_hat = m_[k] / bc1;
      const Mat v_hat = v_[k] / bc2;
      p -= cfg_.lr * (m_hat.array() / (v_hat.array().sqrt() + cfg_.eps)).matrix();
      if (cfg_.weight_decay != 0.0) p -= cfg_.lr * cfg_.weight_decay * p;
    }
  }

  long steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Mat> m_, v_;
  long t_ = 0;
};

}  // namespace rogat
