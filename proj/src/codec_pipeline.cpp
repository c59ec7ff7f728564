#include "tgic/codec_pipeline.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tgic/checkpoint.h"
#include "tgic/common.h"
#include "tgic/dataset.h"
#include "tgic/graph.h"
#include "tgic/range_coder.h"

namespace tgic {
namespace codec {

CodecModel::CodecModel(const ArchConfig& a, const semantic::Vocabulary& v, Rng& rng)
    : arch(a),
      vocab(v),
      ft(params, "ft.", vocab.size(), arch.embed_dim, arch.d_text, rng),
      enc(params, "enc.", arch, rng),
      dec(params, "dec.", arch, rng),
      he(params, "he.", arch, rng),
      hd(params, "hd.", arch, rng),
      pz(params, "pz.", arch.c_z, rng) {}

uint32_t CodecModel::model_hash() const {
  return ckpt::compute_model_hash(params, arch, vocab.hash());
}

std::unique_ptr<CodecModel> load_codec_model(const std::string& ckpt_path) {
  ckpt::CheckpointMeta meta = ckpt::read_checkpoint_meta(ckpt_path);
  semantic::Vocabulary vocab = semantic::vocabulary_from_tokens(meta.vocab_tokens);
  Rng rng(1);  // initial values are overwritten by the load below
  auto model = std::make_unique<CodecModel>(meta.config.arch, vocab, rng);
  ckpt::load_checkpoint_params(ckpt_path, model->params, false);
  TGIC_CHECK_FORMAT(model->model_hash() == meta.model_hash,
                    "checkpoint parameters do not match their stored model hash");
  return model;
}

namespace {

// Output length of one stride-2 k3 pad-1 conv.
int down2(int n) { return (n - 1) / 2 + 1; }

int pad16(int n) { return (n + 15) / 16 * 16; }

// Per-element conditional tables for the image latent; the scale snaps to the
// shared grid inside gaussian_cdf_table so both ends build the same tables.
std::vector<coder::CDFTable> latent_tables(const Tensor& mu, const Tensor& sigma) {
  std::vector<coder::CDFTable> tabs(mu.size());
  const double* m = mu.data();
  const double* s = sigma.data();
  for (long i = 0; i < mu.size(); ++i) tabs[i] = coder::gaussian_cdf_table(m[i], s[i]);
  return tabs;
}

std::vector<const coder::CDFTable*> table_ptrs(const std::vector<coder::CDFTable>& tabs) {
  std::vector<const coder::CDFTable*> p(tabs.size());
  for (size_t i = 0; i < tabs.size(); ++i) p[i] = &tabs[i];
  return p;
}

// Channel-major pointer list for the hyper-latent: one table per channel.
std::vector<const coder::CDFTable*> prior_ptrs(const std::vector<coder::CDFTable>& tabs, int c,
                                               long per_chan) {
  std::vector<const coder::CDFTable*> p(static_cast<size_t>(c) * per_chan);
  for (int k = 0; k < c; ++k)
    for (long i = 0; i < per_chan; ++i) p[static_cast<size_t>(k) * per_chan + i] = &tabs[k];
  return p;
}

Tensor snap_scales(const Tensor& sigma) {
  Tensor out = sigma.clone();
  double* s = out.data();
  for (long i = 0; i < out.size(); ++i) s[i] = coder::snapped_scale(s[i]);
  return out;
}

}  // namespace

CompressResult compress(const CodecModel& model, const Tensor& image, const std::string& caption) {
  TGIC_CHECK_INPUT(image.ndim() == 3 && image.dim(0) == 3, "compress expects a (3,H,W) image");
  TGIC_CHECK_INPUT(image.all_finite(), "image has non-finite pixels");
  const int h = image.dim(1), w = image.dim(2);
  TGIC_CHECK_INPUT(h >= 1 && w >= 1 && h <= 65535 && w <= 65535, "image dims out of range");
  TGIC_CHECK_INPUT(caption.size() <= 65535, "caption exceeds 64 KiB");
  semantic::TokenSequence tokens = semantic::tokenize(caption, model.vocab, model.arch.max_words);
  TGIC_CHECK_INPUT(tokens.length > 0, "caption has no usable tokens");

  Tensor x = data::pad_to_multiple(image, 16);

  graph::Tape t(false);
  auto [words, sentence] = model.ft.forward(t, tokens);
  (void)sentence;
  graph::Var y = model.enc(t, t.constant(x), words);
  graph::Var z = model.he(t, y);
  Tensor z_hat = quantize_eval(z.val());
  entropy::GaussianParams gp = model.hd(t, t.constant(z_hat), words);
  // The hyper path rounds y's grid up to a multiple of 4; trim the decoded
  // parameters back to y's actual grid (the receiver does the same).
  const Tensor mu = data::crop(gp.mean.val(), y.shape()[1], y.shape()[2]);
  const Tensor sigma = data::crop(gp.scale.val(), y.shape()[1], y.shape()[2]);

  // Quantize y and clamp each element into its conditional alphabet; the
  // clamped value is what gets coded and what the decoder reconstructs from,
  // so it is also what the sender-side synthesis must see.
  Tensor y_hat = quantize_eval(y.val());
  std::vector<coder::CDFTable> ytabs = latent_tables(mu, sigma);
  TGIC_CHECK(static_cast<long>(ytabs.size()) == y_hat.size(), "entropy parameter grid mismatch");
  std::vector<int> ysym(ytabs.size());
  double* yh = y_hat.data();
  for (size_t i = 0; i < ytabs.size(); ++i) {
    int v = static_cast<int>(std::llround(yh[i]));
    v = std::min(std::max(v, ytabs[i].offset), ytabs[i].offset + ytabs[i].size() - 1);
    ysym[i] = v;
    yh[i] = v;
  }

  std::vector<coder::CDFTable> ztabs = coder::prior_cdf_tables(model.pz);
  const long z_per_chan = static_cast<long>(z_hat.dim(1)) * z_hat.dim(2);
  std::vector<int> zsym(z_hat.size());
  for (long i = 0; i < z_hat.size(); ++i) zsym[i] = static_cast<int>(std::llround(z_hat.data()[i]));

  CompressResult res;
  res.container.height = static_cast<uint16_t>(h);
  res.container.width = static_cast<uint16_t>(w);
  res.container.c_y = static_cast<uint8_t>(model.arch.c_y);
  res.container.c_z = static_cast<uint8_t>(model.arch.c_z);
  res.container.model_hash = model.model_hash();
  res.container.caption = caption;
  res.container.z_payload = coder::encode_symbols(zsym, prior_ptrs(ztabs, z_hat.dim(0), z_per_chan));
  res.container.y_payload = coder::encode_symbols(ysym, table_ptrs(ytabs));

  // Text is billed as stored: two length bytes plus the raw UTF-8.
  res.rate = entropy::estimate_rate(y_hat, mu, snap_scales(sigma), z_hat, model.pz,
                                    static_cast<int>(caption.size()) + 2, h, w);

  graph::Var x_hat = model.dec(t, t.constant(y_hat), words);
  res.reconstruction = data::crop(x_hat.val(), h, w);
  return res;
}

DecompressResult decompress(const CodecModel& model, const Container& box) {
  TGIC_CHECK_FORMAT(box.model_hash == model.model_hash(),
                    "container model hash does not match the loaded model");
  TGIC_CHECK_FORMAT(box.c_y == model.arch.c_y && box.c_z == model.arch.c_z,
                    "container latent geometry does not match the model");
  semantic::TokenSequence tokens =
      semantic::tokenize(box.caption, model.vocab, model.arch.max_words);
  TGIC_CHECK_FORMAT(tokens.length > 0, "container caption yields no tokens");

  const int h = box.height, w = box.width;
  const int yh = pad16(h) / 16, yw = pad16(w) / 16;
  const int zh = down2(down2(yh)), zw = down2(down2(yw));

  graph::Tape t(false);
  auto [words, sentence] = model.ft.forward(t, tokens);
  (void)sentence;

  std::vector<coder::CDFTable> ztabs = coder::prior_cdf_tables(model.pz);
  const long z_per_chan = static_cast<long>(zh) * zw;
  std::vector<int> zsym = coder::decode_symbols(
      box.z_payload, prior_ptrs(ztabs, model.arch.c_z, z_per_chan),
      static_cast<size_t>(model.arch.c_z) * z_per_chan);
  Tensor z_hat({model.arch.c_z, zh, zw});
  for (size_t i = 0; i < zsym.size(); ++i) z_hat.data()[i] = zsym[i];

  entropy::GaussianParams gp = model.hd(t, t.constant(z_hat), words);
  std::vector<coder::CDFTable> ytabs =
      latent_tables(data::crop(gp.mean.val(), yh, yw), data::crop(gp.scale.val(), yh, yw));
  std::vector<int> ysym =
      coder::decode_symbols(box.y_payload, table_ptrs(ytabs), ytabs.size());
  Tensor y_hat({model.arch.c_y, yh, yw});
  TGIC_CHECK(y_hat.size() == static_cast<long>(ysym.size()), "latent size mismatch");
  for (size_t i = 0; i < ysym.size(); ++i) y_hat.data()[i] = ysym[i];

  graph::Var x_hat = model.dec(t, t.constant(y_hat), words);
  DecompressResult res;
  res.image = data::crop(x_hat.val(), h, w);
  res.caption = box.caption;
  return res;
}

double psnr_db(const Tensor& a, const Tensor& b) {
  TGIC_CHECK_INPUT(a.same_shape(b), "psnr: shape mismatch");
  TGIC_CHECK_INPUT(a.size() > 0, "psnr: empty tensors");
  const double* pa = a.data();
  const double* pb = b.data();
  double sq = 0.0;
  for (long i = 0; i < a.size(); ++i) {
    const double va = std::lround(std::min(1.0, std::max(0.0, pa[i])) * 255.0);
    const double vb = std::lround(std::min(1.0, std::max(0.0, pb[i])) * 255.0);
    sq += (va - vb) * (va - vb);
  }
  const double mse = sq / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(255.0 / std::sqrt(mse));
}

}  // namespace codec
}  // namespace tgic
