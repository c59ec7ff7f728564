#ifndef TGIC_CODEC_PIPELINE_H_
#define TGIC_CODEC_PIPELINE_H_

#include <memory>
#include <string>

#include "tgic/codec_nets.h"
#include "tgic/config.h"
#include "tgic/container.h"
#include "tgic/entropy_model.h"
#include "tgic/semantic_space.h"

namespace tgic {
namespace codec {

// Text encoder + analysis/synthesis transforms + hyperprior in one ParamSet.
// Member order fixes the parameter construction order, which checkpoints and
// hashes depend on.
struct CodecModel {
  ArchConfig arch;
  semantic::Vocabulary vocab;
  nn::ParamSet params;
  semantic::TextEncoder ft;
  Encoder enc;
  Decoder dec;
  entropy::HyperEncoder he;
  entropy::HyperDecoder hd;
  entropy::FactorizedPrior pz;

  CodecModel(const ArchConfig& a, const semantic::Vocabulary& v, Rng& rng);
  uint32_t model_hash() const;
};

// Rebuilds a model from a checkpoint (either kind) and verifies its hash.
std::unique_ptr<CodecModel> load_codec_model(const std::string& ckpt_path);

struct CompressResult {
  Container container;
  entropy::RateReport rate;  // snapped coding distributions; text billed as stored
  Tensor reconstruction;     // sender-side decode, cropped to the source dims
};

// image is (3,H,W) in [0,1]; caption must survive tokenization non-empty and
// fit in 64 KiB. The reconstruction equals what decompress produces bitwise.
CompressResult compress(const CodecModel& model, const Tensor& image, const std::string& caption);

struct DecompressResult {
  Tensor image;  // (3,H,W) in [0,1], cropped to the header dims
  std::string caption;
};

DecompressResult decompress(const CodecModel& model, const Container& box);

// PSNR over the 8-bit pixel grid; +inf when the quantized images coincide.
double psnr_db(const Tensor& a, const Tensor& b);

}  // namespace codec
}  // namespace tgic

#endif  // TGIC_CODEC_PIPELINE_H_
