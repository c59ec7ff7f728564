#include "tgic/objectives.h"

#include <iostream>

#include "tgic/common.h"
#include "tgic/semantic_space.h"

namespace tgic {
namespace objectives {

using graph::Tape;
using graph::Var;

PerceptualNet::PerceptualNet(nn::ParamSet& ps, const std::string& name, Rng& rng)
    : c1_(ps, name + ".c1", 3, 16, 3, 2, rng),
      c2_(ps, name + ".c2", 16, 32, 3, 2, rng),
      c3_(ps, name + ".c3", 32, 64, 3, 2, rng) {}

std::vector<Var> PerceptualNet::operator()(Tape& t, Var x) const {
  Var f1 = graph::relu(c1_(t, x));
  Var f2 = graph::relu(c2_(t, f1));
  Var f3 = graph::relu(c3_(t, f2));
  return {f1, f2, f3};
}

Var recon_loss(Tape& t, Var x_hat, Var x) {
  (void)t;
  TGIC_CHECK_INPUT(x_hat.shape() == x.shape(), "recon_loss: shape mismatch");
  return graph::mse(x_hat, x);
}

Var perceptual_loss(Tape& t, const PerceptualNet& phi, Var x_hat, Var x) {
  TGIC_CHECK_INPUT(x_hat.shape() == x.shape(), "perceptual_loss: shape mismatch");
  const std::vector<Var> fh = phi(t, x_hat);
  const std::vector<Var> fr = phi(t, x);
  Var sum;
  for (size_t i = 0; i < fh.size(); ++i) {
    Var term = graph::mse(fh[i], fr[i]);
    sum = sum.defined() ? graph::add(sum, term) : term;
  }
  return graph::mul_const(sum, 1.0 / static_cast<double>(fh.size()));
}

SemanticLosses semantic_consistent_loss(Tape& t, Var fi_hat, Var fi_ref, Var sentences,
                                        double beta, double gamma) {
  TGIC_CHECK_INPUT(fi_hat.shape().size() == 2, "semantic loss expects (B,D) feature matrices");
  TGIC_CHECK_INPUT(fi_hat.shape() == fi_ref.shape() && fi_hat.shape() == sentences.shape(),
                   "semantic loss: mismatched batch shapes");
  TGIC_CHECK_CONFIG(beta >= 0.0, "beta must be non-negative");
  const int b = fi_hat.shape()[0];
  if (b == 1) {
    static bool warned = false;
    if (!warned) {
      std::cerr << "warning: batch of 1 makes the matching loss degenerate (L_IT = 0)\n";
      warned = true;
    }
  }
  Var scores = semantic::matching_score_matrix(t, fi_hat, sentences, gamma);
  SemanticLosses out;
  out.l_it = semantic::batch_matching_loss(t, scores);
  out.l_ii = graph::mul_const(graph::mse(fi_hat, fi_ref), beta);
  out.l_m = graph::add(out.l_it, out.l_ii);
  return out;
}

double lambda_a_for(const LossWeights& w) {
  if (w.lambda_a > 0.0) return w.lambda_a;
  if (w.r_t <= 0.1) return 8.0;
  if (w.r_t <= 0.17) return 4.0;
  return 2.0;
}

void validate_weights(const LossWeights& w) {
  TGIC_CHECK_CONFIG(w.k1 >= 0.0 && w.k2 >= 0.0 && w.k3 >= 0.0 && w.k4 >= 0.0,
                    "loss weights k1..k4 must be non-negative");
  TGIC_CHECK_CONFIG(w.beta >= 0.0, "beta must be non-negative");
  TGIC_CHECK_CONFIG(w.lambda_b > 0.0 && w.r_t > 0.0, "lambda_b and r_t must be positive");
  TGIC_CHECK_CONFIG(lambda_a_for(w) > w.lambda_b, "lambda_a must exceed lambda_b");
}

double select_lambda(double current_rate_bpp, const LossWeights& w) {
  validate_weights(w);
  return current_rate_bpp > w.r_t ? lambda_a_for(w) : w.lambda_b;
}

Var total_loss(Tape& t, Var l_rate, Var l_r, Var l_g, Var l_p, Var l_m, double lambda,
               const LossWeights& w) {
  (void)t;
  validate_weights(w);
  Var total = graph::mul_const(l_rate, lambda);
  total = graph::add(total, graph::mul_const(l_r, w.k1));
  total = graph::add(total, graph::mul_const(l_g, w.k2));
  total = graph::add(total, graph::mul_const(l_p, w.k3));
  total = graph::add(total, graph::mul_const(l_m, w.k4));
  return total;
}

LossBreakdown make_breakdown(double l_rate, double l_r, double l_g, double l_p, double l_it,
                             double l_ii, double lambda, const LossWeights& w) {
  validate_weights(w);
  LossBreakdown b;
  b.l_rate = l_rate;
  b.l_r = l_r;
  b.l_g = l_g;
  b.l_p = l_p;
  b.l_it = l_it;
  b.l_ii = l_ii;
  b.l_m = l_it + l_ii;
  b.lambda_used = lambda;
  // same association order as total_loss so the two agree bit-for-bit
  b.total = lambda * l_rate;
  b.total += w.k1 * l_r;
  b.total += w.k2 * l_g;
  b.total += w.k3 * l_p;
  b.total += w.k4 * b.l_m;
  return b;
}

}  // namespace objectives
}  // namespace tgic
