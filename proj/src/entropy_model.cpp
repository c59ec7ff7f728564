#include "tgic/entropy_model.h"

#include <cmath>

#include "tgic/common.h"

namespace tgic {
namespace entropy {

using graph::Tape;
using graph::Var;

HyperEncoder::HyperEncoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch,
                           Rng& rng) {
  c1_ = nn::Conv2d(ps, name + ".c1", arch.c_y, arch.c_z, 3, 2, rng);
  c2_ = nn::Conv2d(ps, name + ".c2", arch.c_z, arch.c_z, 3, 2, rng);
}

Var HyperEncoder::operator()(Tape& t, Var y) const {
  TGIC_CHECK(y.shape().size() == 3, "HyperEncoder: latent must be (C,h,w)");
  return c2_(t, graph::relu(c1_(t, y)));
}

HyperDecoder::HyperDecoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch,
                           Rng& rng)
    : use_text_(arch.use_tgfr) {
  c1_ = nn::Conv2d(ps, name + ".c1", arch.c_z, arch.c_y, 3, 1, rng);
  c2_ = nn::Conv2d(ps, name + ".c2", arch.c_y, arch.c_y, 3, 1, rng);
  mean_head_ = nn::Conv2d(ps, name + ".mean", arch.c_y, arch.c_y, 3, 1, rng);
  scale_head_ = nn::Conv2d(ps, name + ".scale", arch.c_y, arch.c_y, 3, 1, rng);
  if (use_text_) ita_ = codec::ITA(ps, name + ".ita", arch.c_y, arch.d_text, rng);
}

GaussianParams HyperDecoder::operator()(Tape& t, Var z_hat, Var words) const {
  TGIC_CHECK(z_hat.shape().size() == 3, "HyperDecoder: hyper-latent must be (C,h,w)");
  Var v = graph::relu(c1_(t, graph::upsample2x(z_hat)));
  v = graph::relu(c2_(t, graph::upsample2x(v)));
  if (use_text_) v = ita_(t, v, words);
  GaussianParams p;
  p.mean = mean_head_(t, v);
  p.scale = graph::add_const(graph::softplus_v(scale_head_(t, v)), 1e-6);
  return p;
}

FactorizedPrior::FactorizedPrior(nn::ParamSet& ps, const std::string& name, int channels,
                                 Rng& rng)
    : channels_(channels) {
  // Init so the composed slope at 0 is 1 (a standard-logistic-like CDF):
  // two 3-wide summations contribute a factor 9, so each softplus(h) starts
  // at 9^(-1/3). Residual gates start closed (a_raw = 0).
  const double w0 = std::pow(9.0, -1.0 / 3.0);
  const double h0 = std::log(std::exp(w0) - 1.0);
  h1_ = &ps.add(name + ".h1", Tensor({channels, 3, 1}, h0));
  b1_ = &ps.add(name + ".b1", nn::uniform_init(rng, {channels, 3}, 0.5));
  a1_ = &ps.add(name + ".a1", Tensor({channels, 3}, 0.0));
  h2_ = &ps.add(name + ".h2", Tensor({channels, 3, 3}, h0));
  b2_ = &ps.add(name + ".b2", nn::uniform_init(rng, {channels, 3}, 0.5));
  a2_ = &ps.add(name + ".a2", Tensor({channels, 3}, 0.0));
  h3_ = &ps.add(name + ".h3", Tensor({channels, 1, 3}, h0));
  b3_ = &ps.add(name + ".b3", Tensor({channels, 1}, 0.0));
}

Var FactorizedPrior::cdf(Tape& t, Var u) const {
  TGIC_CHECK(u.shape().size() == 3 && u.shape()[0] == channels_ && u.shape()[1] == 1,
             "FactorizedPrior: input must be (C,1,N)");
  auto gated = [&](Var x, nn::Param& a_raw) {
    return graph::add(x, graph::cw_scale(graph::tanh_v(x), graph::tanh_v(nn::leaf(t, a_raw))));
  };
  Var x = graph::cw_bias(graph::cw_matmul(graph::softplus_v(nn::leaf(t, *h1_)), u),
                         nn::leaf(t, *b1_));
  x = gated(x, *a1_);
  x = graph::cw_bias(graph::cw_matmul(graph::softplus_v(nn::leaf(t, *h2_)), x), nn::leaf(t, *b2_));
  x = gated(x, *a2_);
  x = graph::cw_bias(graph::cw_matmul(graph::softplus_v(nn::leaf(t, *h3_)), x), nn::leaf(t, *b3_));
  return graph::sigmoid_v(x);
}

Var FactorizedPrior::likelihood(Tape& t, Var z_hat) const {
  const auto& s = z_hat.shape();
  TGIC_CHECK(s.size() == 3 && s[0] == channels_, "FactorizedPrior: latent must be (C,h,w)");
  const int n = s[1] * s[2];
  Var u = graph::reshape(z_hat, {channels_, 1, n});
  Var hi = cdf(t, graph::add_const(u, 0.5));
  Var lo = cdf(t, graph::add_const(u, -0.5));
  const double floor = std::pow(2.0, -30);
  return graph::reshape(graph::clamp_v(graph::sub(hi, lo), floor, 1.0), {s[0], s[1], s[2]});
}

Tensor FactorizedPrior::cdf_values(const Tensor& u) const {
  TGIC_CHECK(u.ndim() == 2 && u.dim(0) == channels_, "cdf_values: input must be (C,K)");
  const int k = u.dim(1);
  Tape t(false);
  Var v = cdf(t, t.constant(u.reshaped({channels_, 1, k})));
  return v.val().reshaped({channels_, k}).clone();
}

Var likelihood_y(Tape& t, Var y_hat, const GaussianParams& params) {
  (void)t;
  return graph::gaussian_bin_likelihood(y_hat, params.mean, params.scale);
}

RateReport estimate_rate(const Tensor& y_hat, const Tensor& mean, const Tensor& scale,
                         const Tensor& z_hat, const FactorizedPrior& prior, int text_bytes,
                         int height, int width) {
  TGIC_CHECK_INPUT(height > 0 && width > 0, "estimate_rate: empty image");
  TGIC_CHECK_INPUT(text_bytes >= 0, "estimate_rate: negative text size");
  TGIC_CHECK_INPUT(y_hat.same_shape(mean) && y_hat.same_shape(scale),
                   "estimate_rate: parameter shapes differ from y");
  const double ln2 = std::log(2.0);
  Tape t(false);
  Var py = graph::gaussian_bin_likelihood(t.constant(y_hat), t.constant(mean), t.constant(scale));
  Var pz = prior.likelihood(t, t.constant(z_hat));
  RateReport r;
  for (size_t i = 0; i < py.val().size(); ++i) r.bits_y -= std::log(py.val()[i]) / ln2;
  for (size_t i = 0; i < pz.val().size(); ++i) r.bits_z -= std::log(pz.val()[i]) / ln2;
  r.bits_text = 8.0 * text_bytes;
  r.bpp = (r.bits_y + r.bits_z + r.bits_text) / (static_cast<double>(height) * width);
  return r;
}

}  // namespace entropy
}  // namespace tgic
