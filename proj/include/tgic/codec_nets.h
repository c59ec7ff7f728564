#ifndef TGIC_CODEC_NETS_H_
#define TGIC_CODEC_NETS_H_

#include <string>

#include "tgic/config.h"
#include "tgic/layers.h"

namespace tgic {
namespace codec {

// Image-text affine fusion. Multi-scale branches refine the visual map, word
// features are projected into channel space, and per-position attention over
// the words yields a context map that is fused back by a 1x1 conv.
class ITA {
 public:
  ITA() = default;
  ITA(nn::ParamSet& ps, const std::string& name, int channels, int text_dim, Rng& rng);
  // v (C,h,w), words (T,text_dim) -> (C,h,w)
  graph::Var operator()(graph::Tape& t, graph::Var v, graph::Var words) const;
  int channels() const { return channels_; }

 private:
  nn::Conv2d w1_, w2_, w3_, fuse_;
  nn::Linear w4_;
  int channels_ = 0;
};

// Image-guided re-weighting of the word features ahead of an ITA fusion. The
// scalar re-weighting conv starts at zero, so initially every word gets the
// uniform attention average.
class IRC {
 public:
  IRC() = default;
  IRC(nn::ParamSet& ps, const std::string& name, int channels, int text_dim, Rng& rng);
  graph::Var operator()(graph::Tape& t, graph::Var v2, graph::Var words) const;
  // exposed for the closed-form oracle tests
  graph::Var enhanced_words(graph::Tape& t, graph::Var v2, graph::Var words) const;

 private:
  nn::Linear proj_;
  nn::Param* w5_w_ = nullptr;
  nn::Param* w5_b_ = nullptr;
  ITA ita_;
};

// f_E: four stride-2 stages with ResModules; ITA after stages 2 and 4 when
// text-guided feature representation is enabled.
class Encoder {
 public:
  Encoder() = default;
  Encoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng);
  // x (3,H,W) with H,W >= 16; words (T,d_text) -> y (c_y, H/16, W/16)
  graph::Var operator()(graph::Tape& t, graph::Var x, graph::Var words) const;

 private:
  nn::Conv2d s1_, s2_, s3_, s4_;
  nn::ResModule rm1_, rm2_, rm3_, rm4_;
  ITA ita2_, ita4_;
  bool use_text_ = true;
};

// f_G: mirror of the encoder with nearest-neighbor upsampling; IRC blocks
// re-weight the words before the first and third upsampling stages. Output is
// clamped to [0,1].
class Decoder {
 public:
  Decoder() = default;
  Decoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng);
  // y_hat (c_y,h,w) -> x_hat (3, 16h, 16w)
  graph::Var operator()(graph::Tape& t, graph::Var y_hat, graph::Var words) const;

 private:
  graph::Var text_stage(graph::Tape& t, const IRC& irc, const ITA& ita, graph::Var v,
                        graph::Var words) const;
  nn::Conv2d u1_, u2_, u3_, u4_;
  nn::ResModule rm1_, rm2_, rm3_;
  IRC irc1_, irc2_;
  ITA ita1_, ita2_;  // plain-ITA fallback when IRC is disabled
  bool use_text_ = true;
  bool use_irc_ = true;
};

// Training-mode quantizer: additive uniform noise in [-0.5, 0.5).
graph::Var quantize_train(graph::Tape& t, graph::Var y, Rng& rng);

// Eval-mode quantizer: round half-up to integers, clamped to [-bound, bound].
Tensor quantize_eval(const Tensor& y, double bound = 255.0);

}  // namespace codec
}  // namespace tgic

#endif  // TGIC_CODEC_NETS_H_
