#include "tgic/graph.h"

#include <cmath>
#include <cstring>

#include "tgic/kernels.h"

namespace tgic {
namespace graph {

namespace {

constexpr double kLikelihoodFloor = 9.313225746154785e-10;  // 2^-30

bool any_needs_grad(std::initializer_list<Var> ins) {
  for (const Var& v : ins)
    if (v.defined() && v.node->needs_grad) return true;
  return false;
}

bool grad_wanted(Tape* t, std::initializer_list<Var> ins) {
  return t->grad_enabled() && any_needs_grad(ins);
}

// out.grad is accumulated into dst->grad elementwise (same sizes).
void acc_flat(Node* dst, const Tensor& g) {
  if (!dst->needs_grad) return;
  double* d = dst->grad.data();
  const double* s = g.data();
  const size_t n = g.size();
  for (size_t i = 0; i < n; ++i) d[i] += s[i];
}

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double norm_cdf(double t) { return 0.5 * std::erfc(-t * M_SQRT1_2); }
double norm_pdf(double t) { return std::exp(-0.5 * t * t) * 0.3989422804014326779; }

}  // namespace

Var Tape::constant(Tensor v) { return emit(std::move(v), false, {}); }

Var Tape::param(Tensor v, Tensor g, bool trainable) {
  const bool ng = grad_enabled_ && trainable;
  nodes_.push_back(Node{});
  Node& n = nodes_.back();
  n.val = std::move(v);  // shallow: aliases caller storage
  n.needs_grad = ng;
  if (ng) {
    TGIC_CHECK(g.defined() && g.size() == n.val.size(), "param grad buffer mismatch");
    n.grad = std::move(g);  // shallow: optimizer sees accumulated grads
  }
  return Var{this, &n};
}

Var Tape::emit(Tensor val, bool needs_grad, std::function<void()> back) {
  nodes_.push_back(Node{});
  Node& n = nodes_.back();
  n.val = std::move(val);
  n.needs_grad = needs_grad;
  if (needs_grad) n.grad = Tensor(n.val.shape(), 0.0);
  n.back = std::move(back);
  return Var{this, &n};
}

void Tape::backward(Var loss) {
  TGIC_CHECK(grad_enabled_, "backward on a no-grad tape");
  TGIC_CHECK(loss.defined() && loss.node->val.size() == 1, "loss must be scalar");
  TGIC_CHECK(loss.node->needs_grad, "loss does not depend on parameters");
  loss.node->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
    if (it->needs_grad && it->back) it->back();
}

// ---------------------------------------------------------------------------
// elementwise binary
// ---------------------------------------------------------------------------

namespace {
template <class FwdF, class BackF>
Var binary_op(Var a, Var b, FwdF f, BackF makeback) {
  TGIC_CHECK(a.val().same_shape(b.val()), "shape mismatch in binary op");
  Tensor out(a.shape());
  const double* x = a.val().data();
  const double* y = b.val().data();
  double* o = out.data();
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) o[i] = f(x[i], y[i]);
  const bool ng = grad_wanted(a.tape, {a, b});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) v.node->back = makeback(v.node, a.node, b.node);
  return v;
}
}  // namespace

Var add(Var a, Var b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; },
      [](Node* on, Node* an, Node* bn) {
        return [on, an, bn]() {
          acc_flat(an, on->grad);
          acc_flat(bn, on->grad);
        };
      });
}

Var sub(Var a, Var b) {
  return binary_op(
      a, b, [](double x, double y) { return x - y; },
      [](Node* on, Node* an, Node* bn) {
        return [on, an, bn]() {
          acc_flat(an, on->grad);
          if (bn->needs_grad) {
            double* d = bn->grad.data();
            const double* g = on->grad.data();
            for (size_t i = 0; i < on->grad.size(); ++i) d[i] -= g[i];
          }
        };
      });
}

Var mul(Var a, Var b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; },
      [](Node* on, Node* an, Node* bn) {
        return [on, an, bn]() {
          const double* g = on->grad.data();
          const size_t n = on->grad.size();
          if (an->needs_grad) {
            double* d = an->grad.data();
            const double* y = bn->val.data();
            for (size_t i = 0; i < n; ++i) d[i] += g[i] * y[i];
          }
          if (bn->needs_grad) {
            double* d = bn->grad.data();
            const double* x = an->val.data();
            for (size_t i = 0; i < n; ++i) d[i] += g[i] * x[i];
          }
        };
      });
}

Var div(Var a, Var b) {
  return binary_op(
      a, b, [](double x, double y) { return x / y; },
      [](Node* on, Node* an, Node* bn) {
        return [on, an, bn]() {
          const double* g = on->grad.data();
          const double* y = bn->val.data();
          const size_t n = on->grad.size();
          if (an->needs_grad) {
            double* d = an->grad.data();
            for (size_t i = 0; i < n; ++i) d[i] += g[i] / y[i];
          }
          if (bn->needs_grad) {
            double* d = bn->grad.data();
            const double* o = on->val.data();
            for (size_t i = 0; i < n; ++i) d[i] -= g[i] * o[i] / y[i];
          }
        };
      });
}

// ---------------------------------------------------------------------------
// scalar forms
// ---------------------------------------------------------------------------

Var add_const(Var a, double c) {
  Tensor out(a.shape());
  const double* x = a.val().data();
  double* o = out.data();
  for (size_t i = 0; i < out.size(); ++i) o[i] = x[i] + c;
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an]() { acc_flat(an, on->grad); };
  }
  return v;
}

Var mul_const(Var a, double c) {
  Tensor out(a.shape());
  const double* x = a.val().data();
  double* o = out.data();
  for (size_t i = 0; i < out.size(); ++i) o[i] = x[i] * c;
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, c]() {
      if (!an->needs_grad) return;
      double* d = an->grad.data();
      const double* g = on->grad.data();
      for (size_t i = 0; i < on->grad.size(); ++i) d[i] += g[i] * c;
    };
  }
  return v;
}

Var mul_scalarv(Var a, Var s) {
  TGIC_CHECK(s.val().size() == 1, "mul_scalarv expects scalar");
  const double sv = s.val()[0];
  Tensor out(a.shape());
  const double* x = a.val().data();
  double* o = out.data();
  for (size_t i = 0; i < out.size(); ++i) o[i] = x[i] * sv;
  const bool ng = grad_wanted(a.tape, {a, s});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    Node* sn = s.node;
    v.node->back = [on, an, sn, sv]() {
      const double* g = on->grad.data();
      const size_t n = on->grad.size();
      if (an->needs_grad) {
        double* d = an->grad.data();
        for (size_t i = 0; i < n; ++i) d[i] += g[i] * sv;
      }
      if (sn->needs_grad) {
        const double* x = an->val.data();
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) acc += g[i] * x[i];
        sn->grad[0] += acc;
      }
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// pointwise maps
// ---------------------------------------------------------------------------

namespace {
// df(x, y) is the local derivative given input x and output y.
template <class F, class DF>
Var pointwise(Var a, F f, DF df) {
  Tensor out(a.shape());
  const double* x = a.val().data();
  double* o = out.data();
  for (size_t i = 0; i < out.size(); ++i) o[i] = f(x[i]);
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, df]() {
      if (!an->needs_grad) return;
      double* d = an->grad.data();
      const double* g = on->grad.data();
      const double* x = an->val.data();
      const double* y = on->val.data();
      for (size_t i = 0; i < on->grad.size(); ++i) d[i] += g[i] * df(x[i], y[i]);
    };
  }
  return v;
}
}  // namespace

Var relu(Var a) {
  return pointwise(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var lrelu(Var a, double slope) {
  return pointwise(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var tanh_v(Var a) {
  return pointwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid_v(Var a) {
  return pointwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var softplus_v(Var a) {
  return pointwise(
      a, [](double x) { return stable_softplus(x); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var exp_v(Var a) {
  return pointwise(
      a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Var log_v(Var a) {
  return pointwise(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Var sqrt_v(Var a) {
  return pointwise(
      a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Var clamp_v(Var a, double lo, double hi) {
  return pointwise(
      a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

Var reshape(Var a, std::vector<int> shape) {
  Tensor out = a.val().reshaped(std::move(shape));  // shares storage
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an]() { acc_flat(an, on->grad); };
  }
  return v;
}

Var transpose2d(Var a) {
  TGIC_CHECK(a.val().ndim() == 2, "transpose2d expects 2-D");
  const int m = a.val().dim(0), n = a.val().dim(1);
  Tensor out({n, m});
  const double* x = a.val().data();
  double* o = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) o[static_cast<size_t>(j) * m + i] = x[static_cast<size_t>(i) * n + j];
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, m, n]() {
      if (!an->needs_grad) return;
      double* d = an->grad.data();
      const double* g = on->grad.data();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          d[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(j) * m + i];
    };
  }
  return v;
}

Var slice_rows(Var a, int r0, int r1) {
  TGIC_CHECK(a.val().ndim() == 2, "slice_rows expects 2-D");
  const int m = a.val().dim(0), n = a.val().dim(1);
  TGIC_CHECK(0 <= r0 && r0 < r1 && r1 <= m, "slice_rows range");
  Tensor out({r1 - r0, n});
  std::memcpy(out.data(), a.val().data() + static_cast<size_t>(r0) * n,
              sizeof(double) * out.size());
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, r0, n]() {
      if (!an->needs_grad) return;
      double* d = an->grad.data() + static_cast<size_t>(r0) * n;
      const double* g = on->grad.data();
      for (size_t i = 0; i < on->grad.size(); ++i) d[i] += g[i];
    };
  }
  return v;
}

Var concat_rows(const std::vector<Var>& xs) {
  TGIC_CHECK(!xs.empty(), "concat_rows of nothing");
  const int n = xs[0].val().dim(1);
  int m = 0;
  for (const Var& x : xs) {
    TGIC_CHECK(x.val().ndim() == 2 && x.val().dim(1) == n, "concat_rows width mismatch");
    m += x.val().dim(0);
  }
  Tensor out({m, n});
  double* o = out.data();
  for (const Var& x : xs) {
    std::memcpy(o, x.val().data(), sizeof(double) * x.val().size());
    o += x.val().size();
  }
  bool ng = false;
  for (const Var& x : xs) ng = ng || (x.tape->grad_enabled() && x.node->needs_grad);
  Var v = xs[0].tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    std::vector<Node*> ins;
    for (const Var& x : xs) ins.push_back(x.node);
    v.node->back = [on, ins]() {
      const double* g = on->grad.data();
      for (Node* in : ins) {
        if (in->needs_grad) {
          double* d = in->grad.data();
          for (size_t i = 0; i < in->grad.size(); ++i) d[i] += g[i];
        }
        g += in->val.size();
      }
    };
  }
  return v;
}

Var stack_rows(const std::vector<Var>& xs) {
  TGIC_CHECK(!xs.empty(), "stack_rows of nothing");
  const int n = static_cast<int>(xs[0].val().size());
  Tensor out({static_cast<int>(xs.size()), n});
  double* o = out.data();
  for (const Var& x : xs) {
    TGIC_CHECK(static_cast<int>(x.val().size()) == n, "stack_rows size mismatch");
    std::memcpy(o, x.val().data(), sizeof(double) * x.val().size());
    o += n;
  }
  bool ng = false;
  for (const Var& x : xs) ng = ng || (x.tape->grad_enabled() && x.node->needs_grad);
  Var v = xs[0].tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    std::vector<Node*> ins;
    for (const Var& x : xs) ins.push_back(x.node);
    v.node->back = [on, ins, n]() {
      const double* g = on->grad.data();
      for (Node* in : ins) {
        if (in->needs_grad) {
          double* d = in->grad.data();
          for (int i = 0; i < n; ++i) d[i] += g[i];
        }
        g += n;
      }
    };
  }
  return v;
}

Var gather_rows(Var a, const std::vector<int>& idx) {
  TGIC_CHECK(a.val().ndim() == 2, "gather_rows expects 2-D");
  const int m = a.val().dim(0), n = a.val().dim(1);
  Tensor out({static_cast<int>(idx.size()), n});
  double* o = out.data();
  for (int r : idx) {
    TGIC_CHECK(0 <= r && r < m, "gather_rows index out of range");
    std::memcpy(o, a.val().data() + static_cast<size_t>(r) * n, sizeof(double) * n);
    o += n;
  }
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, idx, n]() {
      if (!an->needs_grad) return;
      const double* g = on->grad.data();
      for (int r : idx) {
        double* d = an->grad.data() + static_cast<size_t>(r) * n;
        for (int i = 0; i < n; ++i) d[i] += g[i];
        g += n;
      }
    };
  }
  return v;
}

Var slice_chans(Var a, int c0, int c1) {
  TGIC_CHECK(a.val().ndim() == 3, "slice_chans expects 3-D");
  const int c = a.val().dim(0), h = a.val().dim(1), w = a.val().dim(2);
  TGIC_CHECK(0 <= c0 && c0 < c1 && c1 <= c, "slice_chans range");
  const size_t plane = static_cast<size_t>(h) * w;
  Tensor out({c1 - c0, h, w});
  std::memcpy(out.data(), a.val().data() + c0 * plane, sizeof(double) * out.size());
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, c0, plane]() {
      if (!an->needs_grad) return;
      double* d = an->grad.data() + c0 * plane;
      const double* g = on->grad.data();
      for (size_t i = 0; i < on->grad.size(); ++i) d[i] += g[i];
    };
  }
  return v;
}

Var concat_chans(const std::vector<Var>& xs) {
  TGIC_CHECK(!xs.empty(), "concat_chans of nothing");
  const int h = xs[0].val().dim(1), w = xs[0].val().dim(2);
  int c = 0;
  for (const Var& x : xs) {
    TGIC_CHECK(x.val().ndim() == 3 && x.val().dim(1) == h && x.val().dim(2) == w,
               "concat_chans plane mismatch");
    c += x.val().dim(0);
  }
  Tensor out({c, h, w});
  double* o = out.data();
  for (const Var& x : xs) {
    std::memcpy(o, x.val().data(), sizeof(double) * x.val().size());
    o += x.val().size();
  }
  bool ng = false;
  for (const Var& x : xs) ng = ng || (x.tape->grad_enabled() && x.node->needs_grad);
  Var v = xs[0].tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    std::vector<Node*> ins;
    for (const Var& x : xs) ins.push_back(x.node);
    v.node->back = [on, ins]() {
      const double* g = on->grad.data();
      for (Node* in : ins) {
        if (in->needs_grad) {
          double* d = in->grad.data();
          for (size_t i = 0; i < in->grad.size(); ++i) d[i] += g[i];
        }
        g += in->val.size();
      }
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  TGIC_CHECK(a.val().ndim() == 2 && b.val().ndim() == 2 && a.val().dim(1) == b.val().dim(0),
             "matmul shape mismatch");
  const int m = a.val().dim(0), k = a.val().dim(1), n = b.val().dim(1);
  Tensor out({m, n});
  kernels::gemm_nn(m, n, k, a.val().data(), b.val().data(), out.data());
  const bool ng = grad_wanted(a.tape, {a, b});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    Node* bn = b.node;
    v.node->back = [on, an, bn, m, k, n]() {
      const double* g = on->grad.data();
      if (an->needs_grad) {
        std::vector<double> tmp(static_cast<size_t>(m) * k);
        kernels::gemm_nt(m, k, n, g, bn->val.data(), tmp.data());
        double* d = an->grad.data();
        for (size_t i = 0; i < tmp.size(); ++i) d[i] += tmp[i];
      }
      if (bn->needs_grad) kernels::gemm_tn_acc(k, n, m, an->val.data(), g, bn->grad.data());
    };
  }
  return v;
}

Var matmul_nt(Var a, Var b) {
  TGIC_CHECK(a.val().ndim() == 2 && b.val().ndim() == 2 && a.val().dim(1) == b.val().dim(1),
             "matmul_nt shape mismatch");
  const int m = a.val().dim(0), k = a.val().dim(1), n = b.val().dim(0);
  Tensor out({m, n});
  kernels::gemm_nt(m, n, k, a.val().data(), b.val().data(), out.data());
  const bool ng = grad_wanted(a.tape, {a, b});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    Node* bn = b.node;
    v.node->back = [on, an, bn, m, k, n]() {
      const double* g = on->grad.data();
      if (an->needs_grad) {
        std::vector<double> tmp(static_cast<size_t>(m) * k);
        kernels::gemm_nn(m, k, n, g, bn->val.data(), tmp.data());
        double* d = an->grad.data();
        for (size_t i = 0; i < tmp.size(); ++i) d[i] += tmp[i];
      }
      if (bn->needs_grad) kernels::gemm_tn_acc(n, k, m, g, an->val.data(), bn->grad.data());
    };
  }
  return v;
}

Var add_bias_rows(Var x, Var b) {
  TGIC_CHECK(x.val().ndim() == 2 && b.val().size() == static_cast<size_t>(x.val().dim(1)),
             "add_bias_rows shape mismatch");
  const int m = x.val().dim(0), n = x.val().dim(1);
  Tensor out({m, n});
  const double* xp = x.val().data();
  const double* bp = b.val().data();
  double* o = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) o[static_cast<size_t>(i) * n + j] = xp[static_cast<size_t>(i) * n + j] + bp[j];
  const bool ng = grad_wanted(x.tape, {x, b});
  Var v = x.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* xn = x.node;
    Node* bn = b.node;
    v.node->back = [on, xn, bn, m, n]() {
      const double* g = on->grad.data();
      acc_flat(xn, on->grad);
      if (bn->needs_grad) {
        double* d = bn->grad.data();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) d[j] += g[static_cast<size_t>(i) * n + j];
      }
    };
  }
  return v;
}

Var scale_rows(Var x, Var s) {
  TGIC_CHECK(x.val().ndim() == 2 && s.val().size() == static_cast<size_t>(x.val().dim(0)),
             "scale_rows shape mismatch");
  const int m = x.val().dim(0), n = x.val().dim(1);
  Tensor out({m, n});
  const double* xp = x.val().data();
  const double* sp = s.val().data();
  double* o = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) o[static_cast<size_t>(i) * n + j] = xp[static_cast<size_t>(i) * n + j] * sp[i];
  const bool ng = grad_wanted(x.tape, {x, s});
  Var v = x.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* xn = x.node;
    Node* sn = s.node;
    v.node->back = [on, xn, sn, m, n]() {
      const double* g = on->grad.data();
      const double* xp = xn->val.data();
      const double* sp = sn->val.data();
      if (xn->needs_grad) {
        double* d = xn->grad.data();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) d[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(i) * n + j] * sp[i];
      }
      if (sn->needs_grad) {
        double* d = sn->grad.data();
        for (int i = 0; i < m; ++i) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += g[static_cast<size_t>(i) * n + j] * xp[static_cast<size_t>(i) * n + j];
          d[i] += acc;
        }
      }
    };
  }
  return v;
}

Var scale_cols(Var x, Var s) {
  TGIC_CHECK(x.val().ndim() == 2 && s.val().size() == static_cast<size_t>(x.val().dim(1)),
             "scale_cols shape mismatch");
  const int m = x.val().dim(0), n = x.val().dim(1);
  Tensor out({m, n});
  const double* xp = x.val().data();
  const double* sp = s.val().data();
  double* o = out.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) o[static_cast<size_t>(i) * n + j] = xp[static_cast<size_t>(i) * n + j] * sp[j];
  const bool ng = grad_wanted(x.tape, {x, s});
  Var v = x.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* xn = x.node;
    Node* sn = s.node;
    v.node->back = [on, xn, sn, m, n]() {
      const double* g = on->grad.data();
      const double* xp = xn->val.data();
      const double* sp = sn->val.data();
      if (xn->needs_grad) {
        double* d = xn->grad.data();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) d[static_cast<size_t>(i) * n + j] += g[static_cast<size_t>(i) * n + j] * sp[j];
      }
      if (sn->needs_grad) {
        double* d = sn->grad.data();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) d[j] += g[static_cast<size_t>(i) * n + j] * xp[static_cast<size_t>(i) * n + j];
      }
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// channelwise (grouped) ops
// ---------------------------------------------------------------------------

Var cw_matmul(Var a, Var b) {
  TGIC_CHECK(a.val().ndim() == 3 && b.val().ndim() == 3 && a.val().dim(0) == b.val().dim(0) &&
                 a.val().dim(2) == b.val().dim(1),
             "cw_matmul shape mismatch");
  const int gcount = a.val().dim(0);
  const int m = a.val().dim(1), k = a.val().dim(2), n = b.val().dim(2);
  Tensor out({gcount, m, n});
  for (int gi = 0; gi < gcount; ++gi)
    kernels::gemm_nn(m, n, k, a.val().data() + static_cast<size_t>(gi) * m * k,
                     b.val().data() + static_cast<size_t>(gi) * k * n,
                     out.data() + static_cast<size_t>(gi) * m * n);
  const bool ng = grad_wanted(a.tape, {a, b});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    Node* bn = b.node;
    v.node->back = [on, an, bn, gcount, m, k, n]() {
      for (int gi = 0; gi < gcount; ++gi) {
        const double* g = on->grad.data() + static_cast<size_t>(gi) * m * n;
        if (an->needs_grad) {
          std::vector<double> tmp(static_cast<size_t>(m) * k);
          kernels::gemm_nt(m, k, n, g, bn->val.data() + static_cast<size_t>(gi) * k * n, tmp.data());
          double* d = an->grad.data() + static_cast<size_t>(gi) * m * k;
          for (size_t i = 0; i < tmp.size(); ++i) d[i] += tmp[i];
        }
        if (bn->needs_grad)
          kernels::gemm_tn_acc(k, n, m, an->val.data() + static_cast<size_t>(gi) * m * k, g,
                               bn->grad.data() + static_cast<size_t>(gi) * k * n);
      }
    };
  }
  return v;
}

namespace {
Var cw_broadcast(Var x, Var b, bool is_scale) {
  TGIC_CHECK(x.val().ndim() == 3 && b.val().ndim() == 2 && x.val().dim(0) == b.val().dim(0) &&
                 x.val().dim(1) == b.val().dim(1),
             "cw broadcast shape mismatch");
  const int gcount = x.val().dim(0), m = x.val().dim(1), n = x.val().dim(2);
  Tensor out({gcount, m, n});
  const double* xp = x.val().data();
  const double* bp = b.val().data();
  double* o = out.data();
  for (int gi = 0; gi < gcount; ++gi)
    for (int i = 0; i < m; ++i) {
      const double bv = bp[static_cast<size_t>(gi) * m + i];
      const size_t base = (static_cast<size_t>(gi) * m + i) * n;
      for (int j = 0; j < n; ++j) o[base + j] = is_scale ? xp[base + j] * bv : xp[base + j] + bv;
    }
  const bool ng = grad_wanted(x.tape, {x, b});
  Var v = x.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* xn = x.node;
    Node* bn = b.node;
    v.node->back = [on, xn, bn, gcount, m, n, is_scale]() {
      const double* g = on->grad.data();
      const double* xp = xn->val.data();
      const double* bp = bn->val.data();
      for (int gi = 0; gi < gcount; ++gi)
        for (int i = 0; i < m; ++i) {
          const size_t base = (static_cast<size_t>(gi) * m + i) * n;
          const double bv = bp[static_cast<size_t>(gi) * m + i];
          if (xn->needs_grad) {
            double* d = xn->grad.data();
            for (int j = 0; j < n; ++j) d[base + j] += is_scale ? g[base + j] * bv : g[base + j];
          }
          if (bn->needs_grad) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += is_scale ? g[base + j] * xp[base + j] : g[base + j];
            bn->grad[static_cast<size_t>(gi) * m + i] += acc;
          }
        }
    };
  }
  return v;
}
}  // namespace

Var cw_bias(Var x, Var b) { return cw_broadcast(x, b, false); }
Var cw_scale(Var x, Var s) { return cw_broadcast(x, s, true); }

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var sum_all(Var a) {
  double s = 0.0;
  const double* x = a.val().data();
  for (size_t i = 0; i < a.val().size(); ++i) s += x[i];
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(Tensor::scalar(s), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an]() {
      if (!an->needs_grad) return;
      const double g = on->grad[0];
      double* d = an->grad.data();
      for (size_t i = 0; i < an->grad.size(); ++i) d[i] += g;
    };
  }
  return v;
}

Var mean_all(Var a) {
  const size_t n = a.val().size();
  TGIC_CHECK(n > 0, "mean of empty tensor");
  double s = 0.0;
  const double* x = a.val().data();
  for (size_t i = 0; i < n; ++i) s += x[i];
  const double inv = 1.0 / static_cast<double>(n);
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(Tensor::scalar(s * inv), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, inv]() {
      if (!an->needs_grad) return;
      const double g = on->grad[0] * inv;
      double* d = an->grad.data();
      for (size_t i = 0; i < an->grad.size(); ++i) d[i] += g;
    };
  }
  return v;
}

Var sum_rows(Var a) {
  TGIC_CHECK(a.val().ndim() == 2, "sum_rows expects 2-D");
  const int m = a.val().dim(0), n = a.val().dim(1);
  Tensor out({m});
  const double* x = a.val().data();
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += x[static_cast<size_t>(i) * n + j];
    out[i] = s;
  }
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, m, n]() {
      if (!an->needs_grad) return;
      double* d = an->grad.data();
      const double* g = on->grad.data();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) d[static_cast<size_t>(i) * n + j] += g[i];
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// softmax
// ---------------------------------------------------------------------------

Var softmax_rows(Var a) {
  TGIC_CHECK(a.val().ndim() == 2, "softmax_rows expects 2-D");
  const int m = a.val().dim(0), n = a.val().dim(1);
  Tensor out({m, n});
  const double* x = a.val().data();
  double* o = out.data();
  for (int i = 0; i < m; ++i) {
    const double* xi = x + static_cast<size_t>(i) * n;
    double* oi = o + static_cast<size_t>(i) * n;
    double mx = xi[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      oi[j] = std::exp(xi[j] - mx);
      s += oi[j];
    }
    const double inv = 1.0 / s;
    for (int j = 0; j < n; ++j) oi[j] *= inv;
  }
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, m, n]() {
      if (!an->needs_grad) return;
      const double* g = on->grad.data();
      const double* y = on->val.data();
      double* d = an->grad.data();
      for (int i = 0; i < m; ++i) {
        const size_t base = static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += g[base + j] * y[base + j];
        for (int j = 0; j < n; ++j) d[base + j] += y[base + j] * (g[base + j] - dot);
      }
    };
  }
  return v;
}

Var log_softmax_rows(Var a) {
  TGIC_CHECK(a.val().ndim() == 2, "log_softmax_rows expects 2-D");
  const int m = a.val().dim(0), n = a.val().dim(1);
  Tensor out({m, n});
  const double* x = a.val().data();
  double* o = out.data();
  for (int i = 0; i < m; ++i) {
    const double* xi = x + static_cast<size_t>(i) * n;
    double* oi = o + static_cast<size_t>(i) * n;
    double mx = xi[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xi[j]);
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::exp(xi[j] - mx);
    const double lse = mx + std::log(s);
    for (int j = 0; j < n; ++j) oi[j] = xi[j] - lse;
  }
  const bool ng = grad_wanted(a.tape, {a});
  Var v = a.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* an = a.node;
    v.node->back = [on, an, m, n]() {
      if (!an->needs_grad) return;
      const double* g = on->grad.data();
      const double* y = on->val.data();
      double* d = an->grad.data();
      for (int i = 0; i < m; ++i) {
        const size_t base = static_cast<size_t>(i) * n;
        double sg = 0.0;
        for (int j = 0; j < n; ++j) sg += g[base + j];
        for (int j = 0; j < n; ++j) d[base + j] += g[base + j] - std::exp(y[base + j]) * sg;
      }
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// conv / resize
// ---------------------------------------------------------------------------

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  TGIC_CHECK(x.val().ndim() == 3 && w.val().ndim() == 4, "conv2d expects x(C,H,W), w(OC,IC,KH,KW)");
  const int ic = x.val().dim(0), h = x.val().dim(1), wd = x.val().dim(2);
  const int oc = w.val().dim(0), kh = w.val().dim(2), kw = w.val().dim(3);
  TGIC_CHECK(w.val().dim(1) == ic, "conv2d channel mismatch");
  const int oh = kernels::conv_out_dim(h, kh, stride, pad);
  const int ow = kernels::conv_out_dim(wd, kw, stride, pad);
  TGIC_CHECK(oh > 0 && ow > 0, "conv2d empty output");
  const int kk = ic * kh * kw;
  const int ohw = oh * ow;

  std::vector<double> col(static_cast<size_t>(kk) * ohw);
  kernels::im2col(x.val().data(), ic, h, wd, kh, kw, stride, pad, col.data());
  Tensor out({oc, oh, ow});
  kernels::gemm_nn(oc, ohw, kk, w.val().data(), col.data(), out.data());
  if (b.defined()) {
    TGIC_CHECK(b.val().size() == static_cast<size_t>(oc), "conv2d bias size");
    double* o = out.data();
    const double* bp = b.val().data();
    for (int c = 0; c < oc; ++c)
      for (int i = 0; i < ohw; ++i) o[static_cast<size_t>(c) * ohw + i] += bp[c];
  }
  const bool ng = b.defined() ? grad_wanted(x.tape, {x, w, b}) : grad_wanted(x.tape, {x, w});
  Var v = x.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* xn = x.node;
    Node* wn = w.node;
    Node* bn = b.defined() ? b.node : nullptr;
    v.node->back = [on, xn, wn, bn, ic, h, wd, kh, kw, stride, pad, oc, kk, ohw]() {
      const double* g = on->grad.data();
      if (bn && bn->needs_grad) {
        double* d = bn->grad.data();
        for (int c = 0; c < oc; ++c) {
          double s = 0.0;
          for (int i = 0; i < ohw; ++i) s += g[static_cast<size_t>(c) * ohw + i];
          d[c] += s;
        }
      }
      if (wn->needs_grad) {
        std::vector<double> col(static_cast<size_t>(kk) * ohw);
        kernels::im2col(xn->val.data(), ic, h, wd, kh, kw, stride, pad, col.data());
        std::vector<double> tmp(static_cast<size_t>(oc) * kk);
        kernels::gemm_nt(oc, kk, ohw, g, col.data(), tmp.data());
        double* d = wn->grad.data();
        for (size_t i = 0; i < tmp.size(); ++i) d[i] += tmp[i];
      }
      if (xn->needs_grad) {
        std::vector<double> dcol(static_cast<size_t>(kk) * ohw, 0.0);
        kernels::gemm_tn_acc(kk, ohw, oc, wn->val.data(), g, dcol.data());
        kernels::col2im_acc(dcol.data(), ic, h, wd, kh, kw, stride, pad, xn->grad.data());
      }
    };
  }
  return v;
}

Var upsample2x(Var x) {
  TGIC_CHECK(x.val().ndim() == 3, "upsample2x expects 3-D");
  const int c = x.val().dim(0), h = x.val().dim(1), w = x.val().dim(2);
  Tensor out({c, 2 * h, 2 * w});
  const double* xp = x.val().data();
  double* o = out.data();
  for (int ci = 0; ci < c; ++ci)
    for (int i = 0; i < 2 * h; ++i) {
      const double* xrow = xp + (static_cast<size_t>(ci) * h + i / 2) * w;
      double* orow = o + (static_cast<size_t>(ci) * 2 * h + i) * 2 * w;
      for (int j = 0; j < 2 * w; ++j) orow[j] = xrow[j / 2];
    }
  const bool ng = grad_wanted(x.tape, {x});
  Var v = x.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* xn = x.node;
    v.node->back = [on, xn, c, h, w]() {
      if (!xn->needs_grad) return;
      const double* g = on->grad.data();
      double* d = xn->grad.data();
      for (int ci = 0; ci < c; ++ci)
        for (int i = 0; i < 2 * h; ++i) {
          const double* grow = g + (static_cast<size_t>(ci) * 2 * h + i) * 2 * w;
          double* drow = d + (static_cast<size_t>(ci) * h + i / 2) * w;
          for (int j = 0; j < 2 * w; ++j) drow[j / 2] += grow[j];
        }
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// entropy-model specific
// ---------------------------------------------------------------------------

Var gaussian_bin_likelihood(Var y, Var mu, Var sigma) {
  TGIC_CHECK(y.val().same_shape(mu.val()) && y.val().same_shape(sigma.val()),
             "gaussian_bin_likelihood shape mismatch");
  Tensor out(y.shape());
  const double* yp = y.val().data();
  const double* mp = mu.val().data();
  const double* sp = sigma.val().data();
  double* o = out.data();
  const size_t n = out.size();
  for (size_t i = 0; i < n; ++i) {
    const double inv = 1.0 / sp[i];
    const double t1 = (yp[i] - mp[i] + 0.5) * inv;
    const double t0 = (yp[i] - mp[i] - 0.5) * inv;
    const double p = norm_cdf(t1) - norm_cdf(t0);
    o[i] = p > kLikelihoodFloor ? p : kLikelihoodFloor;
  }
  const bool ng = grad_wanted(y.tape, {y, mu, sigma});
  Var v = y.tape->emit(std::move(out), ng, {});
  if (ng) {
    Node* on = v.node;
    Node* yn = y.node;
    Node* mn = mu.node;
    Node* sn = sigma.node;
    v.node->back = [on, yn, mn, sn]() {
      const double* g = on->grad.data();
      const double* p = on->val.data();
      const double* yp = yn->val.data();
      const double* mp = mn->val.data();
      const double* sp = sn->val.data();
      for (size_t i = 0; i < on->grad.size(); ++i) {
        if (p[i] <= kLikelihoodFloor) continue;  // floored: flat
        const double inv = 1.0 / sp[i];
        const double t1 = (yp[i] - mp[i] + 0.5) * inv;
        const double t0 = (yp[i] - mp[i] - 0.5) * inv;
        const double f1 = norm_pdf(t1);
        const double f0 = norm_pdf(t0);
        const double dy = (f1 - f0) * inv;
        if (yn->needs_grad) yn->grad[i] += g[i] * dy;
        if (mn->needs_grad) mn->grad[i] -= g[i] * dy;
        if (sn->needs_grad) sn->grad[i] -= g[i] * (f1 * t1 - f0 * t0) * inv;
      }
    };
  }
  return v;
}

// ---------------------------------------------------------------------------
// composites
// ---------------------------------------------------------------------------

Var mse(Var a, Var b) {
  Var d = sub(a, b);
  return mean_all(mul(d, d));
}

}  // namespace graph
}  // namespace tgic
