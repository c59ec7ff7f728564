#include "tgic/layers.h"

#include <cmath>

#include "tgic/common.h"

namespace tgic {
namespace nn {

Param& ParamSet::add(const std::string& name, Tensor value, bool trainable) {
  TGIC_CHECK(by_name_.find(name) == by_name_.end(), "duplicate parameter name: " + name);
  params_.push_back(Param{});
  Param& p = params_.back();
  p.name = name;
  p.value = std::move(value);
  p.grad = Tensor(p.value.shape(), 0.0);
  p.trainable = trainable;
  by_name_[name] = &p;
  return p;
}

Param* ParamSet::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Param* ParamSet::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

std::vector<Param*> ParamSet::all() {
  std::vector<Param*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Param*> ParamSet::with_prefix(const std::string& prefix) {
  std::vector<Param*> out;
  for (auto& p : params_)
    if (p.name.rfind(prefix, 0) == 0) out.push_back(&p);
  return out;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParamSet::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& p : params_)
    if (p.name.rfind(prefix, 0) == 0) p.trainable = trainable;
}

uint64_t ParamSet::value_hash(const std::string& prefix) const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : params_) {
    if (!prefix.empty() && p.name.rfind(prefix, 0) != 0) continue;
    h = fnv1a64(p.name.data(), p.name.size(), h);
    h = fnv1a64(p.value.data(), p.value.size() * sizeof(double), h);
  }
  return h;
}

graph::Var leaf(graph::Tape& t, Param& p) { return t.param(p.value, p.grad, p.trainable); }

void adam_step(const std::vector<Param*>& params, double lr, long t, double beta1, double beta2,
               double eps) {
  TGIC_CHECK(t >= 1, "adam_step: step count must be >= 1");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (Param* p : params) {
    if (!p->trainable) continue;
    if (!p->m.defined()) {
      p->m = Tensor(p->value.shape(), 0.0);
      p->v = Tensor(p->value.shape(), 0.0);
    }
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      p->m[i] = beta1 * p->m[i] + (1.0 - beta1) * g;
      p->v[i] = beta2 * p->v[i] + (1.0 - beta2) * g * g;
      p->value[i] -= lr * (p->m[i] / bc1) / (std::sqrt(p->v[i] / bc2) + eps);
    }
  }
}

Tensor he_normal(Rng& rng, std::vector<int> shape, int fan_in) {
  Tensor t(std::move(shape));
  const double std = std::sqrt(2.0 / static_cast<double>(fan_in));
  rng.fill_normal(t, 0.0, std);
  return t;
}

Tensor uniform_init(Rng& rng, std::vector<int> shape, double bound) {
  Tensor t(std::move(shape));
  rng.fill_uniform(t, -bound, bound);
  return t;
}

// ---------------------------------------------------------------------------
// Conv2d
// ---------------------------------------------------------------------------

Conv2d::Conv2d(ParamSet& ps, const std::string& name, int in_c, int out_c, int k, int stride,
               Rng& rng, bool bias, double bias_init, bool zero_weights, double weight_scale) {
  out_c_ = out_c;
  stride_ = stride;
  pad_ = k / 2;
  Tensor w = zero_weights ? Tensor({out_c, in_c, k, k}, 0.0)
                          : he_normal(rng, {out_c, in_c, k, k}, in_c * k * k);
  if (weight_scale != 1.0)
    for (size_t i = 0; i < w.size(); ++i) w[i] *= weight_scale;
  w_ = &ps.add(name + ".w", std::move(w));
  if (bias) b_ = &ps.add(name + ".b", Tensor({out_c}, bias_init));
}

graph::Var Conv2d::operator()(graph::Tape& t, graph::Var x) const {
  graph::Var b = b_ ? leaf(t, *b_) : graph::Var{};
  return graph::conv2d(x, leaf(t, *w_), b, stride_, pad_);
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(ParamSet& ps, const std::string& name, int in_dim, int out_dim, Rng& rng, bool bias)
    : in_dim_(in_dim), out_dim_(out_dim) {
  w_ = &ps.add(name + ".w", he_normal(rng, {out_dim, in_dim}, in_dim));
  if (bias) b_ = &ps.add(name + ".b", Tensor({out_dim}, 0.0));
}

graph::Var Linear::operator()(graph::Tape& t, graph::Var x) const {
  const bool vec = x.val().ndim() == 1;
  graph::Var rows = vec ? graph::reshape(x, {1, in_dim_}) : x;
  graph::Var y = graph::matmul_nt(rows, leaf(t, *w_));
  if (b_) y = graph::add_bias_rows(y, leaf(t, *b_));
  return vec ? graph::reshape(y, {out_dim_}) : y;
}

// ---------------------------------------------------------------------------
// ResBlock / ResModule
// ---------------------------------------------------------------------------

ResBlock::ResBlock(ParamSet& ps, const std::string& name, int channels, Rng& rng)
    : c1_(ps, name + ".c1", channels, channels, 3, 1, rng),
      c2_(ps, name + ".c2", channels, channels, 3, 1, rng) {}

graph::Var ResBlock::operator()(graph::Tape& t, graph::Var x) const {
  return graph::add(x, c2_(t, graph::relu(c1_(t, x))));
}

ResModule::ResModule(ParamSet& ps, const std::string& name, int channels, int n_blocks, Rng& rng) {
  for (int i = 0; i < n_blocks; ++i)
    blocks_.emplace_back(ps, name + ".rb" + std::to_string(i), channels, rng);
}

graph::Var ResModule::operator()(graph::Tape& t, graph::Var x) const {
  graph::Var h = x;
  for (const auto& b : blocks_) h = b(t, h);
  return h;
}

}  // namespace nn
}  // namespace tgic
