#include "tgic/codec_nets.h"

#include <cmath>

#include "tgic/common.h"

namespace tgic {
namespace codec {

using graph::Tape;
using graph::Var;

// ---------------------------------------------------------------------------
// ITA
// ---------------------------------------------------------------------------

ITA::ITA(nn::ParamSet& ps, const std::string& name, int channels, int text_dim, Rng& rng)
    : channels_(channels) {
  w1_ = nn::Conv2d(ps, name + ".w1", channels, channels, 1, 1, rng);
  w2_ = nn::Conv2d(ps, name + ".w2", channels, channels, 3, 1, rng);
  w3_ = nn::Conv2d(ps, name + ".w3", channels, channels, 5, 1, rng);
  w4_ = nn::Linear(ps, name + ".w4", text_dim, channels, rng, /*bias=*/false);
  fuse_ = nn::Conv2d(ps, name + ".fuse", 2 * channels, channels, 1, 1, rng);
}

Var ITA::operator()(Tape& t, Var v, Var words) const {
  TGIC_CHECK(v.shape().size() == 3 && v.shape()[0] == channels_, "ITA: bad visual input");
  TGIC_CHECK(words.defined() && words.shape().size() == 2, "ITA: bad word features");
  const int c = channels_, h = v.shape()[1], w = v.shape()[2];
  const int n = h * w;
  Var vp = graph::add(graph::add(v, w1_(t, v)), graph::add(w2_(t, v), w3_(t, v)));
  Var e = w4_(t, words);                                       // (T, C)
  Var vbar = graph::transpose2d(graph::reshape(vp, {c, n}));   // (N, C)
  Var scores = graph::mul_const(graph::matmul_nt(vbar, e), 1.0 / std::sqrt(double(c)));
  Var alpha = graph::softmax_rows(scores);                     // (N, T)
  Var ctx = graph::reshape(graph::transpose2d(graph::matmul(alpha, e)), {c, h, w});
  return fuse_(t, graph::concat_chans({vp, ctx}));
}

// ---------------------------------------------------------------------------
// IRC
// ---------------------------------------------------------------------------

IRC::IRC(nn::ParamSet& ps, const std::string& name, int channels, int text_dim, Rng& rng) {
  proj_ = nn::Linear(ps, name + ".proj", text_dim, channels, rng, /*bias=*/false);
  w5_w_ = &ps.add(name + ".w5.w", Tensor({1}, 0.0));
  w5_b_ = &ps.add(name + ".w5.b", Tensor({1}, 0.0));
  ita_ = ITA(ps, name + ".ita", channels, channels, rng);
}

Var IRC::enhanced_words(Tape& t, Var v2, Var words) const {
  TGIC_CHECK(v2.shape().size() == 3, "IRC: bad visual input");
  const int c = v2.shape()[0], n = v2.shape()[1] * v2.shape()[2];
  const int tw = words.shape()[0];
  Var e = proj_(t, words);                             // (T, C)
  Var vbar = graph::transpose2d(graph::reshape(v2, {c, n}));  // (N, C)
  Var m = graph::matmul_nt(e, vbar);                   // (T, N)
  Var mmt = graph::matmul_nt(m, m);                    // (T, T)
  Var s = graph::add(graph::mul_scalarv(mmt, nn::leaf(t, *w5_w_)),
                     graph::mul_scalarv(t.constant(Tensor({tw, tw}, 1.0)), nn::leaf(t, *w5_b_)));
  Var a = graph::softmax_rows(s);
  return graph::add(graph::matmul(a, e), e);           // (T, C)
}

Var IRC::operator()(Tape& t, Var v2, Var words) const {
  return ita_(t, v2, enhanced_words(t, v2, words));
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

Encoder::Encoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng)
    : use_text_(arch.use_tgfr) {
  s1_ = nn::Conv2d(ps, name + ".s1", 3, arch.c1, 3, 2, rng);
  s2_ = nn::Conv2d(ps, name + ".s2", arch.c1, arch.c2, 3, 2, rng);
  s3_ = nn::Conv2d(ps, name + ".s3", arch.c2, arch.c3, 3, 2, rng);
  s4_ = nn::Conv2d(ps, name + ".s4", arch.c3, arch.c_y, 3, 2, rng);
  rm1_ = nn::ResModule(ps, name + ".rm1", arch.c1, arch.res_per_module, rng);
  rm2_ = nn::ResModule(ps, name + ".rm2", arch.c2, arch.res_per_module, rng);
  rm3_ = nn::ResModule(ps, name + ".rm3", arch.c3, arch.res_per_module, rng);
  rm4_ = nn::ResModule(ps, name + ".rm4", arch.c_y, arch.res_per_module, rng);
  if (use_text_) {
    ita2_ = ITA(ps, name + ".ita2", arch.c2, arch.d_text, rng);
    ita4_ = ITA(ps, name + ".ita4", arch.c_y, arch.d_text, rng);
  }
}

Var Encoder::operator()(Tape& t, Var x, Var words) const {
  const auto& s = x.shape();
  TGIC_CHECK_INPUT(s.size() == 3 && s[0] == 3, "Encoder: image must be (3, H, W)");
  TGIC_CHECK_INPUT(s[1] >= 16 && s[2] >= 16, "Encoder: image must be at least 16x16");
  Var v = rm1_(t, graph::relu(s1_(t, x)));
  v = rm2_(t, graph::relu(s2_(t, v)));
  if (use_text_) v = ita2_(t, v, words);
  v = rm3_(t, graph::relu(s3_(t, v)));
  v = rm4_(t, graph::relu(s4_(t, v)));
  if (use_text_) v = ita4_(t, v, words);
  return v;
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

Decoder::Decoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng)
    : use_text_(arch.use_tgir), use_irc_(arch.use_irc) {
  u1_ = nn::Conv2d(ps, name + ".u1", arch.c_y, arch.c3, 3, 1, rng);
  u2_ = nn::Conv2d(ps, name + ".u2", arch.c3, arch.c2, 3, 1, rng);
  u3_ = nn::Conv2d(ps, name + ".u3", arch.c2, arch.c1, 3, 1, rng);
  // The output layer starts near the 0.5 bias: a full-scale init saturates
  // the [0,1] clamp for most pixels, which zeroes every loss gradient into
  // the decoder and freezes training.
  u4_ = nn::Conv2d(ps, name + ".u4", arch.c1, 3, 3, 1, rng, /*bias=*/true, /*bias_init=*/0.5,
                   /*zero_weights=*/false, /*weight_scale=*/0.05);
  rm1_ = nn::ResModule(ps, name + ".rm1", arch.c3, arch.res_per_module, rng);
  rm2_ = nn::ResModule(ps, name + ".rm2", arch.c2, arch.res_per_module, rng);
  rm3_ = nn::ResModule(ps, name + ".rm3", arch.c1, arch.res_per_module, rng);
  if (use_text_) {
    if (use_irc_) {
      irc1_ = IRC(ps, name + ".irc1", arch.c_y, arch.d_text, rng);
      irc2_ = IRC(ps, name + ".irc2", arch.c2, arch.d_text, rng);
    } else {
      ita1_ = ITA(ps, name + ".ita1", arch.c_y, arch.d_text, rng);
      ita2_ = ITA(ps, name + ".ita2", arch.c2, arch.d_text, rng);
    }
  }
}

Var Decoder::text_stage(Tape& t, const IRC& irc, const ITA& ita, Var v, Var words) const {
  TGIC_CHECK(words.defined(), "Decoder: text stage requires word features");
  return use_irc_ ? irc(t, v, words) : ita(t, v, words);
}

Var Decoder::operator()(Tape& t, Var y_hat, Var words) const {
  TGIC_CHECK(y_hat.shape().size() == 3, "Decoder: latent must be (C,h,w)");
  Var v = y_hat;
  if (use_text_) v = text_stage(t, irc1_, ita1_, v, words);
  v = rm1_(t, graph::relu(u1_(t, graph::upsample2x(v))));
  v = rm2_(t, graph::relu(u2_(t, graph::upsample2x(v))));
  if (use_text_) v = text_stage(t, irc2_, ita2_, v, words);
  v = rm3_(t, graph::relu(u3_(t, graph::upsample2x(v))));
  return graph::clamp_v(u4_(t, graph::upsample2x(v)), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Quantizers
// ---------------------------------------------------------------------------

Var quantize_train(Tape& t, Var y, Rng& rng) {
  Tensor noise(y.shape());
  rng.fill_uniform(noise, -0.5, 0.5);
  return graph::add(y, t.constant(std::move(noise)));
}

Tensor quantize_eval(const Tensor& y, double bound) {
  Tensor out(y.shape());
  for (size_t i = 0; i < y.size(); ++i) {
    double q = std::floor(y[i] + 0.5);
    if (q > bound) q = bound;
    if (q < -bound) q = -bound;
    out[i] = q;
  }
  return out;
}

}  // namespace codec
}  // namespace tgic
