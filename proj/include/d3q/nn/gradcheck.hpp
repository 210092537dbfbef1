#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "d3q/nn/layers.hpp"

namespace d3q::nn {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  std::size_t checked = 0;
};

// Compares the gradients currently stored in `params` against central
// differences of `loss`. Relative error is |a - n| / max(|a|, |n|, floor).
// With h = 1e-5 in double precision the difference quotient carries about
// 1e-11 of rounding noise, so entries much below the floor cannot be
// resolved to 1e-4 relative.
// `loss` must be a pure function of the parameter values.
inline GradCheckResult check_gradients(const ParamRefs& params,
                                       const std::function<double()>& loss,
                                       double h = 1e-5, double floor = 1e-6) {
  GradCheckResult res;
  for (Param* p : params) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad.data()[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++res.checked;
      if (rel > res.max_relative_error) {
        res.max_relative_error = rel;
        res.worst_param = p->name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace d3q::nn
