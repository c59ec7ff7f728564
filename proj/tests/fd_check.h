#ifndef TGIC_TESTS_FD_CHECK_H_
#define TGIC_TESTS_FD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "tgic/graph.h"
#include "tgic/layers.h"
#include "tgic/rng.h"
#include "tgic/tensor.h"

// Central finite-difference gradient checker. The builder constructs a scalar
// loss from parameter leaves; we compare analytic gradients against
// (f(x+h) - f(x-h)) / 2h elementwise. Relative error uses
// max(|analytic|, |numeric|, 1e-6) as the denominator so near-zero gradients
// compare absolutely.
namespace fdcheck {

using Builder =
    std::function<tgic::graph::Var(tgic::graph::Tape&, const std::vector<tgic::graph::Var>&)>;

inline double eval_loss(const Builder& build, std::vector<tgic::Tensor>& params) {
  tgic::graph::Tape t(false);
  std::vector<tgic::graph::Var> vars;
  vars.reserve(params.size());
  for (auto& p : params) vars.push_back(t.constant(p));
  return build(t, vars).item();
}

// Returns the maximum relative error over all parameter elements.
inline double max_rel_err(const Builder& build, std::vector<tgic::Tensor> params,
                          double h = 1e-5) {
  std::vector<tgic::Tensor> grads;
  grads.reserve(params.size());
  for (auto& p : params) grads.emplace_back(p.shape(), 0.0);

  {
    tgic::graph::Tape t(true);
    std::vector<tgic::graph::Var> vars;
    vars.reserve(params.size());
    for (size_t i = 0; i < params.size(); ++i) vars.push_back(t.param(params[i], grads[i]));
    t.backward(build(t, vars));
  }

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    tgic::Tensor& p = params[pi];
    for (size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + h;
      const double lp = eval_loss(build, params);
      p[i] = saved - h;
      const double lm = eval_loss(build, params);
      p[i] = saved;
      const double num = (lp - lm) / (2.0 * h);
      const double ana = grads[pi][i];
      const double denom = std::max({std::fabs(num), std::fabs(ana), 1e-6});
      worst = std::max(worst, std::fabs(num - ana) / denom);
    }
  }
  return worst;
}

// FD check for ParamSet-backed modules. `loss(true)` must zero nothing itself:
// it builds a grad tape over the current parameter values, runs backward and
// returns the loss; `loss(false)` evaluates forward-only. Perturbs a random
// sample of entries per parameter in place.
inline double max_rel_err_paramset(tgic::nn::ParamSet& ps,
                                   const std::function<double(bool)>& loss, tgic::Rng& rng,
                                   int probes_per_param = 3, double h = 1e-5) {
  ps.zero_grad();
  loss(true);
  double worst = 0.0;
  for (tgic::nn::Param* p : ps.all()) {
    if (!p->trainable) continue;
    for (int k = 0; k < probes_per_param; ++k) {
      const size_t i = rng.index(p->value.size());
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double lp = loss(false);
      p->value[i] = saved - h;
      const double lm = loss(false);
      p->value[i] = saved;
      const double num = (lp - lm) / (2.0 * h);
      const double ana = p->grad[i];
      const double denom = std::max({std::fabs(num), std::fabs(ana), 1e-6});
      worst = std::max(worst, std::fabs(num - ana) / denom);
    }
  }
  return worst;
}

}  // namespace fdcheck

#endif  // TGIC_TESTS_FD_CHECK_H_
