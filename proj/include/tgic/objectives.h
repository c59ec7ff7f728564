#ifndef TGIC_OBJECTIVES_H_
#define TGIC_OBJECTIVES_H_

#include <string>
#include <vector>

#include "tgic/config.h"
#include "tgic/graph.h"
#include "tgic/layers.h"

namespace tgic {
namespace objectives {

// Frozen random conv stack (3->16->32->64, stride 2, ReLU) standing in for a
// pretrained perceptual feature extractor at desk scale. Weights are fixed at
// construction and never trained.
class PerceptualNet {
 public:
  PerceptualNet() = default;
  PerceptualNet(nn::ParamSet& ps, const std::string& name, Rng& rng);
  // per-stage post-activation feature maps
  std::vector<graph::Var> operator()(graph::Tape& t, graph::Var x) const;

 private:
  nn::Conv2d c1_, c2_, c3_;
};

// mean squared error over all pixels
graph::Var recon_loss(graph::Tape& t, graph::Var x_hat, graph::Var x);

// mean of per-stage feature MSEs
graph::Var perceptual_loss(graph::Tape& t, const PerceptualNet& phi, graph::Var x_hat,
                           graph::Var x);

struct SemanticLosses {
  graph::Var l_it, l_ii, l_m;
};

// Bidirectional matching loss over the mini-batch plus the weighted global
// feature distance. Rows of fi_hat/fi_ref/sentences pair up by index; a batch
// of one degenerates L_IT to zero (warned once, not an error).
SemanticLosses semantic_consistent_loss(graph::Tape& t, graph::Var fi_hat, graph::Var fi_ref,
                                        graph::Var sentences, double beta, double gamma = 10.0);

// lambda_a, either explicit in the weights or derived from the rate target
double lambda_a_for(const LossWeights& w);
// lambda_a when the batch rate exceeds r_t, lambda_b otherwise (ties -> lambda_b)
double select_lambda(double current_rate_bpp, const LossWeights& w);

struct LossBreakdown {
  double l_r = 0, l_g = 0, l_p = 0, l_it = 0, l_ii = 0, l_m = 0, l_rate = 0;
  double lambda_used = 0, total = 0;
};

void validate_weights(const LossWeights& w);

// total = lambda*L_Rate + k1*L_R + k2*L_G + k3*L_P + k4*L_M, in that order
graph::Var total_loss(graph::Tape& t, graph::Var l_rate, graph::Var l_r, graph::Var l_g,
                      graph::Var l_p, graph::Var l_m, double lambda, const LossWeights& w);
LossBreakdown make_breakdown(double l_rate, double l_r, double l_g, double l_p, double l_it,
                             double l_ii, double lambda, const LossWeights& w);

}  // namespace objectives
}  // namespace tgic

#endif  // TGIC_OBJECTIVES_H_
