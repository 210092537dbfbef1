#pragma once

#include <cmath>
#include <vector>

#include "d3q/nn/layers.hpp"

namespace d3q::nn {

inline double global_norm(const ParamRefs& params) {
  double sq = 0.0;
  for (const Param* p : params) sq += p->grad.squaredNorm();
  return std::sqrt(sq);
}

// Rescales all gradients so their joint L2 norm is at most max_norm. Returns
// the norm before scaling. Throws NumericsError on NaN/Inf.
inline double clip_global_norm(const ParamRefs& params, double max_norm) {
  const double norm = global_norm(params);
  if (!std::isfinite(norm)) throw NumericsError("non-finite gradient");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Param* p : params) p->grad *= scale;
  }
  return norm;
}

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-6;
  double max_grad_norm = 1.0;
};

// RMSProp with global-norm clipping applied before every update.
class RmsProp {
 public:
  RmsProp() = default;
  explicit RmsProp(RmsPropConfig cfg) : cfg_(cfg) {}

  const RmsPropConfig& config() const { return cfg_; }

  // Clips, updates, then zeroes the gradients. Returns the pre-clip norm.
  double step(const ParamRefs& params) {
    const double norm = clip_global_norm(params, cfg_.max_grad_norm);
    if (acc_.size() != params.size()) {
      acc_.clear();
      for (const Param* p : params) acc_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      Param& p = *params[i];
      Matrix& a = acc_[i];
      a = cfg_.decay * a + (1.0 - cfg_.decay) * p.grad.cwiseAbs2();
      p.value.array() -= cfg_.learning_rate * p.grad.array() / (a.array().sqrt() + cfg_.epsilon);
      p.grad.setZero();
    }
    return norm;
  }

  const std::vector<Matrix>& accumulators() const { return acc_; }
  void reset() { acc_.clear(); }

 private:
  RmsPropConfig cfg_;
  std::vector<Matrix> acc_;
};

}  // namespace d3q::nn
