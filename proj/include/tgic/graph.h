#ifndef TGIC_GRAPH_H_
#define TGIC_GRAPH_H_

#include <deque>
#include <functional>
#include <vector>

#include "tgic/tensor.h"

namespace tgic {
namespace graph {

// Define-by-run reverse-mode autodiff. A Tape owns the nodes of one forward
// pass; backward() replays them in reverse insertion order. Parameter leaves
// alias external value/grad storage, so gradients accumulate directly into
// the optimizer's buffers. With grad disabled the same code paths run
// forward-only (no lambdas, no grad allocations).

struct Node {
  Tensor val;
  Tensor grad;  // undefined unless needs_grad
  bool needs_grad = false;
  std::function<void()> back;  // empty for leaves
};

class Tape;

struct Var {
  Tape* tape = nullptr;
  Node* node = nullptr;

  bool defined() const { return node != nullptr; }
  const Tensor& val() const { return node->val; }
  const Tensor& grad() const { return node->grad; }
  const std::vector<int>& shape() const { return node->val.shape(); }
  double item() const {
    TGIC_CHECK(node->val.size() == 1, "item() on non-scalar");
    return node->val[0];
  }
};

class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  size_t num_nodes() const { return nodes_.size(); }

  // Constant leaf; never receives gradient.
  Var constant(Tensor v);
  // Trainable leaf whose val and grad alias the given tensors (shallow
  // copies share storage). Caller zeroes grads between steps.
  Var param(Tensor v, Tensor g, bool trainable = true);

  // Internal: append a node. Used by the op implementations.
  Var emit(Tensor val, bool needs_grad, std::function<void()> back);

  void backward(Var loss);

 private:
  std::deque<Node> nodes_;
  bool grad_enabled_;
};

// --- elementwise, same shape -----------------------------------------------
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

// --- scalar-constant and scalar-variable forms ------------------------------
Var add_const(Var a, double c);
Var mul_const(Var a, double c);
Var mul_scalarv(Var a, Var s);  // s has shape {1}

// --- activations / pointwise maps -------------------------------------------
Var relu(Var a);
Var lrelu(Var a, double slope);
Var tanh_v(Var a);
Var sigmoid_v(Var a);
Var softplus_v(Var a);
Var exp_v(Var a);
Var log_v(Var a);
Var sqrt_v(Var a);
Var clamp_v(Var a, double lo, double hi);

// --- shape ops ---------------------------------------------------------------
Var reshape(Var a, std::vector<int> shape);
Var transpose2d(Var a);
Var slice_rows(Var a, int r0, int r1);
Var concat_rows(const std::vector<Var>& xs);
Var stack_rows(const std::vector<Var>& xs);  // each {N} -> (T,N)
Var gather_rows(Var a, const std::vector<int>& idx);
Var slice_chans(Var a, int c0, int c1);
Var concat_chans(const std::vector<Var>& xs);

// --- linear algebra ----------------------------------------------------------
Var matmul(Var a, Var b);     // (M,K)x(K,N)
Var matmul_nt(Var a, Var b);  // (M,K)x(N,K)^T
Var add_bias_rows(Var x, Var b);  // x (M,N), b {N}
Var scale_rows(Var x, Var s);     // x (M,N), s {M}
Var scale_cols(Var x, Var s);     // x (M,N), s {N}

// Channelwise (grouped) forms for the factorized prior: one small matrix per
// group applied across all positions of that group.
Var cw_matmul(Var a, Var b);   // (G,M,K)x(G,K,N) -> (G,M,N)
Var cw_bias(Var x, Var b);     // x (G,M,N), b (G,M)
Var cw_scale(Var x, Var s);    // x (G,M,N), s (G,M)

// --- reductions ----------------------------------------------------------------
Var sum_all(Var a);
Var mean_all(Var a);
Var sum_rows(Var a);  // (M,N) -> {M}

// --- softmax -------------------------------------------------------------------
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);

// --- conv / resize ---------------------------------------------------------------
// x (C,H,W), w (OC,IC,KH,KW), optional bias {OC} (pass Var{} for none).
Var conv2d(Var x, Var w, Var b, int stride, int pad);
Var upsample2x(Var x);

// --- entropy-model specific -------------------------------------------------------
// p = max(Phi((y - mu + 0.5)/sigma) - Phi((y - mu - 0.5)/sigma), 2^-30),
// elementwise; differentiable in all three arguments (zero where floored).
Var gaussian_bin_likelihood(Var y, Var mu, Var sigma);

// --- composites --------------------------------------------------------------------
Var mse(Var a, Var b);

}  // namespace graph
}  // namespace tgic

#endif  // TGIC_GRAPH_H_
