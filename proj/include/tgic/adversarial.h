#ifndef TGIC_ADVERSARIAL_H_
#define TGIC_ADVERSARIAL_H_

#include <string>

#include "tgic/config.h"
#include "tgic/graph.h"
#include "tgic/layers.h"

namespace tgic {
namespace adv {

// Text-conditioned global discriminator. The sentence feature is projected,
// reshaped to a 1-channel sqrt(d_text) x sqrt(d_text) map, convolved and
// nearest-upsampled to the image plane, concatenated as a fourth channel,
// then reduced by a strided conv stack to a single sigmoid probability.
// With use_tgat=false the text path is absent and the stem sees 3 channels.
class Discriminator {
 public:
  Discriminator() = default;
  Discriminator(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng);
  // image (3,H,W) with H == W == sqrt(d_text) * 2^k; sentence {d_text}.
  // Returns a strictly-(0,1) scalar.
  graph::Var operator()(graph::Tape& t, graph::Var image, graph::Var sentence) const;
  bool conditioned() const { return use_tgat_; }

 private:
  nn::Linear tproj_;
  nn::Conv2d tconv_;
  nn::Conv2d stem_;
  std::vector<nn::Conv2d> stack_;
  nn::Linear head_;
  int d_text_ = 0;
  int side_ = 0;  // sqrt(d_text)
  bool use_tgat_ = true;
};

// Natural-log GAN losses over clamped probabilities; the clamp keeps both
// finite for any sigmoid output.
graph::Var disc_loss(graph::Tape& t, graph::Var p_real, graph::Var p_fake);
graph::Var gen_loss(graph::Tape& t, graph::Var p_fake);

// Convenience wrapper: runs the discriminator on both images.
std::pair<graph::Var, graph::Var> gan_losses(graph::Tape& t, const Discriminator& disc,
                                             graph::Var real, graph::Var fake,
                                             graph::Var sentence);

}  // namespace adv
}  // namespace tgic

#endif  // TGIC_ADVERSARIAL_H_
