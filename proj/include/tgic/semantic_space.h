#ifndef TGIC_SEMANTIC_SPACE_H_
#define TGIC_SEMANTIC_SPACE_H_

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tgic/config.h"
#include "tgic/layers.h"

namespace tgic {
namespace semantic {

struct Vocabulary {
  std::vector<std::string> id_to_token;  // ids contiguous from 0
  std::unordered_map<std::string, int> token_to_id;
  int pad_id = 0;
  int unk_id = 1;
  int size() const { return static_cast<int>(id_to_token.size()); }
  uint64_t hash() const;
};

struct TokenSequence {
  std::vector<int> ids;  // padded to max_words with pad_id
  int length = 0;        // count of non-pad tokens
};

// lowercase, strip punctuation, whitespace split
std::vector<std::string> normalize_caption(const std::string& caption);
Vocabulary build_vocabulary(const std::vector<std::string>& corpus, int min_freq);
// rebuilds a vocabulary from a serialized id -> token list (checkpoint load)
Vocabulary vocabulary_from_tokens(const std::vector<std::string>& tokens);
TokenSequence tokenize(const std::string& caption, const Vocabulary& vocab, int max_words);
std::vector<std::string> detokenize(const TokenSequence& tokens, const Vocabulary& vocab);

struct TextEmbedding {
  Tensor word_features;     // (T_words, D_text)
  Tensor sentence_feature;  // {D_text}
  int t_words = 0;
};

struct SemanticImageEmbedding {
  Tensor global_feature;    // {D_text}
  Tensor region_features;   // (N_regions, D_text)
};

// f_T: word embedding + bi-directional LSTM. Word feature i is the sum of the
// forward and backward hidden states at i; the sentence feature projects the
// concatenated final states back to D_text.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(nn::ParamSet& ps, const std::string& prefix, int vocab_size, int embed_dim,
              int d_text, Rng& rng);
  // words (T, D_text), sentence {D_text}
  std::pair<graph::Var, graph::Var> forward(graph::Tape& t, const TokenSequence& tokens) const;
  TextEmbedding encode(const TokenSequence& tokens) const;
  int d_text() const { return d_text_; }

 private:
  graph::Var lstm_direction(graph::Tape& t, graph::Var emb, int len, bool backward,
                            graph::Var* final_state) const;
  nn::Param* embed_ = nullptr;
  nn::Param *wx_f_ = nullptr, *wh_f_ = nullptr, *b_f_ = nullptr;
  nn::Param *wx_b_ = nullptr, *wh_b_ = nullptr, *b_b_ = nullptr;
  nn::Linear sent_proj_;
  int embed_dim_ = 0, d_text_ = 0;
};

// f_I: three stride-2 conv stages; global feature by spatial average + linear,
// region features by a 1x1 projection of the last map.
class SemanticImageEncoder {
 public:
  SemanticImageEncoder() = default;
  SemanticImageEncoder(nn::ParamSet& ps, const std::string& prefix, int d_text, Rng& rng);
  std::pair<graph::Var, graph::Var> forward(graph::Tape& t, graph::Var image) const;
  SemanticImageEmbedding encode(const Tensor& image) const;

 private:
  nn::Conv2d c1_, c2_, c3_, region_proj_;
  nn::Linear global_proj_;
};

// gamma * cosine(global_feature, sentence_feature)
double matching_score(const SemanticImageEmbedding& img, const TextEmbedding& txt, double gamma);

// In-graph batch score matrix S with S[i][j] = gamma * cos(img_i, txt_j);
// imgs and txts are (B, D) matrices.
graph::Var matching_score_matrix(graph::Tape& t, graph::Var imgs, graph::Var txts, double gamma);

// Symmetric batch-softmax matching loss over a score matrix (mean over the
// batch of -log row posterior - log column posterior at the diagonal).
graph::Var batch_matching_loss(graph::Tape& t, graph::Var scores);

struct PretrainResult {
  double initial_holdout_loss = 0.0;
  double final_holdout_loss = 0.0;
  int steps = 0;
};

// Trains f_T and f_I jointly on the batch-softmax matching loss, then leaves
// it to the caller to mark them frozen. Pairs are (image, caption-tokens).
PretrainResult pretrain_semantic_space(TextEncoder& ft, SemanticImageEncoder& fi,
                                       nn::ParamSet& ps,
                                       const std::vector<std::pair<Tensor, TokenSequence>>& train,
                                       const std::vector<std::pair<Tensor, TokenSequence>>& holdout,
                                       int steps, double lr, int batch_size, Rng& rng);

}  // namespace semantic
}  // namespace tgic

#endif  // TGIC_SEMANTIC_SPACE_H_
