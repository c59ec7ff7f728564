#ifndef TGIC_TRAINER_H_
#define TGIC_TRAINER_H_

#include <memory>
#include <string>
#include <vector>

#include "tgic/adversarial.h"
#include "tgic/codec_pipeline.h"
#include "tgic/config.h"
#include "tgic/dataset.h"
#include "tgic/objectives.h"
#include "tgic/semantic_space.h"

namespace tgic {
namespace train {

// One training example: fixed square crop plus its tokenized captions.
struct TrainPair {
  std::string name;
  Tensor image;  // (3, image_size, image_size)
  std::vector<std::string> captions;
  std::vector<semantic::TokenSequence> tokens;
};

// The deployable codec plus the training-only nets, sharing one ParamSet.
// The RNG drives initialization first, then every stochastic choice during
// training (batch sampling, caption picks, quantization noise), so a run is
// a single reproducible stream.
struct TrainerModel {
  Rng rng;
  std::unique_ptr<codec::CodecModel> codec;
  semantic::SemanticImageEncoder fi;
  adv::Discriminator disc;
  objectives::PerceptualNet phi;
  long step = 0;
  long adam_t_gen = 0;
  long adam_t_disc = 0;

  TrainerModel(const TrainConfig& cfg, const semantic::Vocabulary& vocab);
};

struct StepStats {
  objectives::LossBreakdown losses;
  double disc_loss = 0.0;
  double bpp_image = 0.0;  // the rate estimate that drove the lambda switch
};

struct TrainResult {
  std::vector<StepStats> history;  // one entry per step of this run
  std::string final_checkpoint;    // train kind
  std::string codec_checkpoint;    // stripped codec kind
  semantic::PretrainResult pretrain;
  long steps_run = 0;
};

// Corpus vocabulary over every caption in the set.
semantic::Vocabulary corpus_vocabulary(const data::Dataset& ds, int min_freq);

// Center-crops to cfg.image_size and tokenizes; every caption must tokenize
// non-empty.
std::vector<TrainPair> make_train_pairs(const data::Dataset& ds, const TrainConfig& cfg,
                                        const semantic::Vocabulary& vocab);

// Semantic-space pretraining on (image, first caption) pairs, then freezes
// f_T and f_I.
semantic::PretrainResult pretrain_and_freeze(TrainerModel& m, const TrainConfig& cfg,
                                             const std::vector<TrainPair>& pairs,
                                             const std::vector<TrainPair>& holdout);

// One discriminator update followed by one generator update on a fresh batch.
// Aborts with InternalError if any loss goes non-finite.
StepStats train_step(TrainerModel& m, const TrainConfig& cfg,
                     const std::vector<TrainPair>& pairs);

void save_train_checkpoint(TrainerModel& m, const TrainConfig& cfg, const std::string& path);
void save_codec_checkpoint(TrainerModel& m, const TrainConfig& cfg, const std::string& path);

// End-to-end run: data, vocabulary, pretraining (or resume), the main loop,
// periodic checkpoints and a per-step CSV under cfg.out_dir.
TrainResult run_training(const TrainConfig& cfg);

}  // namespace train
}  // namespace tgic

#endif  // TGIC_TRAINER_H_
