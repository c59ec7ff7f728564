#ifndef TGIC_ENTROPY_MODEL_H_
#define TGIC_ENTROPY_MODEL_H_

#include <string>

#include "tgic/codec_nets.h"
#include "tgic/config.h"
#include "tgic/layers.h"

namespace tgic {
namespace entropy {

// f_HE: two stride-2 convs; the output stays linear so z can go negative.
class HyperEncoder {
 public:
  HyperEncoder() = default;
  HyperEncoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng);
  // y (c_y,h,w) -> z (c_z, h/4, w/4)
  graph::Var operator()(graph::Tape& t, graph::Var y) const;

 private:
  nn::Conv2d c1_, c2_;
};

struct GaussianParams {
  graph::Var mean;   // (c_y,h,w)
  graph::Var scale;  // (c_y,h,w), strictly positive
};

// f_HG: upsampling decoder on the quantized hyper-latent; when text-guided
// feature representation is on, an ITA block conditions the entropy
// parameters on the words. scale = softplus(raw) + 1e-6.
class HyperDecoder {
 public:
  HyperDecoder() = default;
  HyperDecoder(nn::ParamSet& ps, const std::string& name, const ArchConfig& arch, Rng& rng);
  GaussianParams operator()(graph::Tape& t, graph::Var z_hat, graph::Var words) const;

 private:
  nn::Conv2d c1_, c2_, mean_head_, scale_head_;
  codec::ITA ita_;
  bool use_text_ = true;
};

// Per-channel learned CDF for the hyper-latent: a 1->3->3->1 MLP with
// softplus-positive weights and tanh-bounded residual gates, finished by a
// sigmoid. Monotone in its input by construction.
class FactorizedPrior {
 public:
  FactorizedPrior() = default;
  FactorizedPrior(nn::ParamSet& ps, const std::string& name, int channels, Rng& rng);
  // u (C,1,N) -> CDF values in (0,1), elementwise monotone in u
  graph::Var cdf(graph::Tape& t, graph::Var u) const;
  // z_hat (C,h,w) -> bin masses CDF(z+0.5) - CDF(z-0.5), floored at 2^-30
  graph::Var likelihood(graph::Tape& t, graph::Var z_hat) const;
  // forward-only CDF evaluation for table building: u (C, K) -> (C, K)
  Tensor cdf_values(const Tensor& u) const;
  int channels() const { return channels_; }

 private:
  nn::Param *h1_ = nullptr, *b1_ = nullptr, *a1_ = nullptr;
  nn::Param *h2_ = nullptr, *b2_ = nullptr, *a2_ = nullptr;
  nn::Param *h3_ = nullptr, *b3_ = nullptr;
  int channels_ = 0;
};

// Conditional Gaussian bin mass of y_hat under the hyper-decoded parameters,
// floored at 2^-30.
graph::Var likelihood_y(graph::Tape& t, graph::Var y_hat, const GaussianParams& params);

struct RateReport {
  double bits_y = 0.0;
  double bits_z = 0.0;
  double bits_text = 0.0;  // 8 bits per caption byte
  double bpp = 0.0;        // (bits_y + bits_z + bits_text) / (H * W)
};

// Idealized rate of the quantized latents under the current entropy model
// plus the raw-text cost. height/width are the source image dims in pixels.
RateReport estimate_rate(const Tensor& y_hat, const Tensor& mean, const Tensor& scale,
                         const Tensor& z_hat, const FactorizedPrior& prior, int text_bytes,
                         int height, int width);

}  // namespace entropy
}  // namespace tgic

#endif  // TGIC_ENTROPY_MODEL_H_
