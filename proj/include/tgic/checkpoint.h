#ifndef TGIC_CHECKPOINT_H_
#define TGIC_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tgic/config.h"
#include "tgic/layers.h"
#include "tgic/semantic_space.h"

namespace tgic {
namespace ckpt {

// Prefixes that make up the deployable codec (everything compress/decompress
// needs). Training-only modules (f_I, phi, discriminator) are excluded so a
// stripped codec checkpoint hashes the same as the training checkpoint it
// came from.
const std::vector<std::string>& codec_prefixes();

// 32-bit model identity: arch + vocabulary + codec parameter values. Stored
// in checkpoints and in every container; a mismatch at decode time means the
// bitstream was produced by a different model.
uint32_t compute_model_hash(const nn::ParamSet& ps, const ArchConfig& arch, uint64_t vocab_hash);

struct CheckpointMeta {
  std::string kind;  // "codec" (inference params only) or "train" (full state)
  TrainConfig config;
  std::vector<std::string> vocab_tokens;
  uint64_t vocab_hash = 0;
  uint32_t model_hash = 0;
  long step = 0;
  long adam_t_gen = 0;
  long adam_t_disc = 0;
  std::string rng_state;
  // name -> shape, in file order (filled when reading)
  std::vector<std::pair<std::string, std::vector<int>>> manifest;
};

// Serialized as "TGCK" | u8 version | u32 json length | metadata JSON |
// tensor values as big-endian f64 in manifest order. kind "codec" stores only
// codec_prefixes(); kind "train" stores every parameter plus Adam moments
// ("adam.m:<name>" / "adam.v:<name>") for trainable ones.
void save_checkpoint(const std::string& path, nn::ParamSet& ps, const CheckpointMeta& meta);

CheckpointMeta read_checkpoint_meta(const std::string& path);

// Fills ps values (and Adam moments when restore_adam) from the file. Tensors
// in the file that ps does not declare are skipped; a parameter of ps missing
// from the file or stored with a different shape raises FormatError.
void load_checkpoint_params(const std::string& path, nn::ParamSet& ps, bool restore_adam);

}  // namespace ckpt
}  // namespace tgic

#endif  // TGIC_CHECKPOINT_H_
