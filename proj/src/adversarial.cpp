#include "tgic/adversarial.h"

#include <cmath>

#include "tgic/common.h"

namespace tgic {
namespace adv {

using graph::Tape;
using graph::Var;

namespace {
constexpr double kProbClamp = 1e-7;
constexpr double kLReluSlope = 0.2;
}  // namespace

Discriminator::Discriminator(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch,
                             Rng& rng)
    : d_text_(arch.d_text), use_tgat_(arch.use_tgat) {
  side_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d_text_))));
  TGIC_CHECK_CONFIG(side_ * side_ == d_text_,
                    "discriminator needs a square d_text to reshape the sentence feature");
  if (use_tgat_) {
    tproj_ = nn::Linear(ps, name + ".tproj", d_text_, d_text_, rng);
    tconv_ = nn::Conv2d(ps, name + ".tconv", 1, 1, 3, 1, rng);
  }
  const int in_c = use_tgat_ ? 4 : 3;
  stem_ = nn::Conv2d(ps, name + ".stem", in_c, 6, 3, 1, rng);
  const int widths[5] = {6, 16, 32, 64, 64};
  for (int i = 0; i < 4; ++i)
    stack_.push_back(nn::Conv2d(ps, name + ".d" + std::to_string(i + 1), widths[i], widths[i + 1],
                                3, 2, rng));
  head_ = nn::Linear(ps, name + ".head", 64, 1, rng);
}

Var Discriminator::operator()(Tape& t, Var image, Var sentence) const {
  const auto& shape = image.shape();
  TGIC_CHECK_INPUT(shape.size() == 3 && shape[0] == 3, "discriminator expects a (3,H,W) image");
  const int h = shape[1], w = shape[2];
  TGIC_CHECK_INPUT(h == w, "discriminator expects square crops");

  Var x = image;
  if (use_tgat_) {
    TGIC_CHECK_INPUT(sentence.defined() && sentence.shape() == std::vector<int>{d_text_},
                     "discriminator expects a {d_text} sentence feature");
    int ups = 0;
    for (int s = side_; s < h; s *= 2) ++ups;
    TGIC_CHECK_INPUT((side_ << ups) == h,
                     "image side must be sqrt(d_text) times a power of two, got " +
                         std::to_string(h));
    Var tmap = graph::reshape(tproj_(t, sentence), {1, side_, side_});
    tmap = tconv_(t, tmap);
    for (int i = 0; i < ups; ++i) tmap = graph::upsample2x(tmap);
    x = graph::concat_chans({x, tmap});
  }

  x = graph::lrelu(stem_(t, x), kLReluSlope);
  for (const auto& conv : stack_) x = graph::lrelu(conv(t, x), kLReluSlope);
  const int hw = x.shape()[1] * x.shape()[2];
  Var pooled = graph::mul_const(graph::sum_rows(graph::reshape(x, {64, hw})), 1.0 / hw);
  return graph::sigmoid_v(graph::reshape(head_(t, pooled), std::vector<int>{1}));
}

namespace {
Var log_clamped(Tape& t, Var p) {
  (void)t;
  return graph::log_v(graph::clamp_v(p, kProbClamp, 1.0 - kProbClamp));
}
}  // namespace

Var disc_loss(Tape& t, Var p_real, Var p_fake) {
  Var one_minus = graph::add_const(graph::mul_const(p_fake, -1.0), 1.0);
  Var sum = graph::add(log_clamped(t, p_real), log_clamped(t, one_minus));
  return graph::sum_all(graph::mul_const(sum, -1.0));
}

Var gen_loss(Tape& t, Var p_fake) {
  return graph::sum_all(graph::mul_const(log_clamped(t, p_fake), -1.0));
}

std::pair<Var, Var> gan_losses(Tape& t, const Discriminator& disc, Var real, Var fake,
                               Var sentence) {
  Var p_real = disc(t, real, sentence);
  Var p_fake = disc(t, fake, sentence);
  return {disc_loss(t, p_real, p_fake), gen_loss(t, p_fake)};
}

}  // namespace adv
}  // namespace tgic
