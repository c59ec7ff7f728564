#ifndef TGIC_CONFIG_H_
#define TGIC_CONFIG_H_

#include <string>

namespace tgic {

// Network and fusion-layout sizes. The full-scale defaults follow the paper
// lineage; the desk preset halves the conv widths.
struct ArchConfig {
  int c1 = 64, c2 = 128, c3 = 192;  // encoder stage widths
  int c_y = 192;                    // latent channels
  int c_z = 128;                    // hyper-latent channels
  int res_per_module = 4;           // ResBlocks per ResModule
  int d_text = 256;                 // text feature dimension (must be a square)
  int embed_dim = 128;              // word embedding dimension
  int max_words = 18;
  int min_freq = 1;  // vocabulary frequency threshold
  // Ablation switches (acceptance: each can be disabled independently).
  bool use_tgfr = true;  // text-guided feature representation (f_E + f_HG ITA)
  bool use_tgir = true;  // text-guided image reconstruction (decoder text path)
  bool use_tgat = true;  // text-guided adversarial training (disc conditioning)
  bool use_irc = true;   // IRC re-weighting (false -> plain ITA in the decoder)
};

struct LossWeights {
  double k1 = 0.075 / 32.0;  // rate-distortion weights, Eq. 12 defaults
  double k2 = 0.15;
  double k3 = 5.0;
  double k4 = 0.005;
  double beta = 40.0;
  double lambda_a = 0.0;  // 0 = derive from r_t (see objectives)
  double lambda_b = 1.0 / 16.0;
  double r_t = 0.2;
};

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 4;
  int epochs = 300;
  int max_steps = 0;  // 0 = run the full epoch count
  uint64_t seed = 1;
  int checkpoint_interval = 500;  // steps
  int image_size = 64;            // training crop (pixels, multiple of 16)
  int pretrain_steps = 300;       // semantic-space pretraining
  double pretrain_lr = 1e-3;
  bool enable_lp = true;
  bool enable_lm = true;
  bool enable_lii = true;
  std::string data_root;
  std::string train_manifest;
  std::string holdout_manifest;  // for the semantic pretraining check
  std::string out_dir = "runs/default";
  std::string resume;  // train checkpoint to continue from (empty = fresh)
  LossWeights weights;
  ArchConfig arch;
};

// Flat key-value file: one `key = value` per line, `#` comments. Unknown keys
// and malformed values raise ConfigError.
TrainConfig load_train_config(const std::string& path);
TrainConfig parse_train_config(const std::string& text);
void validate(const TrainConfig& cfg);
std::string serialize_train_config(const TrainConfig& cfg);

}  // namespace tgic

#endif  // TGIC_CONFIG_H_
