#include "tgic/semantic_space.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "tgic/common.h"

namespace tgic {
namespace semantic {

using graph::Tape;
using graph::Var;

uint64_t Vocabulary::hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& tok : id_to_token) {
    h = fnv1a64(tok.data(), tok.size(), h);
    const char sep = '\n';
    h = fnv1a64(&sep, 1, h);
  }
  return h;
}

std::vector<std::string> normalize_caption(const std::string& caption) {
  std::string clean;
  clean.reserve(caption.size());
  for (unsigned char c : caption) {
    if (std::isalnum(c))
      clean.push_back(static_cast<char>(std::tolower(c)));
    else
      clean.push_back(' ');
  }
  std::vector<std::string> words;
  std::istringstream iss(clean);
  std::string w;
  while (iss >> w) words.push_back(w);
  return words;
}

Vocabulary build_vocabulary(const std::vector<std::string>& corpus, int min_freq) {
  TGIC_CHECK_CONFIG(!corpus.empty(), "build_vocabulary: empty corpus");
  TGIC_CHECK_CONFIG(min_freq >= 1, "build_vocabulary: min_freq must be >= 1");
  std::unordered_map<std::string, int> freq;
  std::vector<std::string> order;  // first-appearance order keeps ids stable
  for (const auto& caption : corpus) {
    for (const auto& w : normalize_caption(caption)) {
      if (freq[w]++ == 0) order.push_back(w);
    }
  }
  Vocabulary v;
  v.id_to_token = {"<pad>", "<unk>"};
  for (const auto& w : order) {
    if (freq[w] >= min_freq) v.id_to_token.push_back(w);
  }
  for (int i = 0; i < static_cast<int>(v.id_to_token.size()); ++i) v.token_to_id[v.id_to_token[i]] = i;
  return v;
}

Vocabulary vocabulary_from_tokens(const std::vector<std::string>& tokens) {
  TGIC_CHECK_FORMAT(tokens.size() >= 2 && tokens[0] == "<pad>" && tokens[1] == "<unk>",
                    "vocabulary list must start with <pad>, <unk>");
  Vocabulary v;
  v.id_to_token = tokens;
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    const bool inserted = v.token_to_id.emplace(tokens[static_cast<size_t>(i)], i).second;
    TGIC_CHECK_FORMAT(inserted, "duplicate token in vocabulary list: " + tokens[static_cast<size_t>(i)]);
  }
  return v;
}

TokenSequence tokenize(const std::string& caption, const Vocabulary& vocab, int max_words) {
  TGIC_CHECK_CONFIG(max_words >= 1, "tokenize: max_words must be >= 1");
  std::vector<std::string> words = normalize_caption(caption);
  TGIC_CHECK_INPUT(!words.empty(), "tokenize: caption has no tokens after normalization: \"" + caption + "\"");
  TokenSequence seq;
  seq.ids.assign(static_cast<size_t>(max_words), vocab.pad_id);
  seq.length = std::min<int>(static_cast<int>(words.size()), max_words);
  for (int i = 0; i < seq.length; ++i) {
    auto it = vocab.token_to_id.find(words[static_cast<size_t>(i)]);
    seq.ids[static_cast<size_t>(i)] = (it == vocab.token_to_id.end()) ? vocab.unk_id : it->second;
  }
  return seq;
}

std::vector<std::string> detokenize(const TokenSequence& tokens, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(tokens.length));
  for (int i = 0; i < tokens.length; ++i) {
    int id = tokens.ids[static_cast<size_t>(i)];
    TGIC_CHECK_INPUT(id >= 0 && id < vocab.size(), "detokenize: token id out of range");
    out.push_back(vocab.id_to_token[static_cast<size_t>(id)]);
  }
  return out;
}

TextEncoder::TextEncoder(nn::ParamSet& ps, const std::string& prefix, int vocab_size,
                         int embed_dim, int d_text, Rng& rng)
    : embed_dim_(embed_dim), d_text_(d_text) {
  TGIC_CHECK_CONFIG(vocab_size >= 2, "TextEncoder: vocabulary too small");
  embed_ = &ps.add(prefix + ".embed", nn::uniform_init(rng, {vocab_size, embed_dim}, 0.1));
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_text));
  auto lstm_params = [&](const std::string& dir, nn::Param*& wx, nn::Param*& wh, nn::Param*& b) {
    wx = &ps.add(prefix + "." + dir + ".wx", nn::uniform_init(rng, {4 * d_text, embed_dim}, bound));
    wh = &ps.add(prefix + "." + dir + ".wh", nn::uniform_init(rng, {4 * d_text, d_text}, bound));
    Tensor bias({4 * d_text}, 0.0);
    for (int i = d_text; i < 2 * d_text; ++i) bias[i] = 1.0;  // forget gate bias
    b = &ps.add(prefix + "." + dir + ".b", bias);
  };
  lstm_params("fwd", wx_f_, wh_f_, b_f_);
  lstm_params("bwd", wx_b_, wh_b_, b_b_);
  sent_proj_ = nn::Linear(ps, prefix + ".sent", 2 * d_text, d_text, rng);
}

// Runs one LSTM direction over the first `len` embedding rows; returns the
// (len, H) matrix of hidden states in sequence order and the final state.
Var TextEncoder::lstm_direction(Tape& t, Var emb, int len, bool backward, Var* final_state) const {
  const int H = d_text_;
  Var wx = nn::leaf(t, backward ? *wx_b_ : *wx_f_);
  Var wh = nn::leaf(t, backward ? *wh_b_ : *wh_f_);
  Var b = nn::leaf(t, backward ? *b_b_ : *b_f_);
  Var b_row = graph::reshape(b, {1, 4 * H});
  Var h = t.constant(Tensor({1, H}, 0.0));
  Var c = t.constant(Tensor({1, H}, 0.0));
  std::vector<Var> states(static_cast<size_t>(len));
  for (int step = 0; step < len; ++step) {
    int pos = backward ? len - 1 - step : step;
    Var x = graph::slice_rows(emb, pos, pos + 1);  // (1, E)
    Var gates = graph::add(graph::add(graph::matmul_nt(x, wx), graph::matmul_nt(h, wh)), b_row);
    Var g4 = graph::reshape(gates, {4, H});
    Var i_g = graph::sigmoid_v(graph::slice_rows(g4, 0, 1));
    Var f_g = graph::sigmoid_v(graph::slice_rows(g4, 1, 2));
    Var g_g = graph::tanh_v(graph::slice_rows(g4, 2, 3));
    Var o_g = graph::sigmoid_v(graph::slice_rows(g4, 3, 4));
    c = graph::add(graph::mul(f_g, c), graph::mul(i_g, g_g));
    h = graph::mul(o_g, graph::tanh_v(c));
    states[static_cast<size_t>(pos)] = h;
  }
  if (final_state) *final_state = h;
  return graph::concat_rows(states);  // (len, H)
}

std::pair<Var, Var> TextEncoder::forward(Tape& t, const TokenSequence& tokens) const {
  TGIC_CHECK_INPUT(tokens.length >= 1, "TextEncoder: empty token sequence");
  Var table = nn::leaf(t, *embed_);
  std::vector<int> ids(tokens.ids.begin(), tokens.ids.begin() + tokens.length);
  Var emb = graph::gather_rows(table, ids);  // (T, E)
  Var h_fwd_final, h_bwd_final;
  Var fwd = lstm_direction(t, emb, tokens.length, false, &h_fwd_final);
  Var bwd = lstm_direction(t, emb, tokens.length, true, &h_bwd_final);
  Var words = graph::add(fwd, bwd);  // (T, D)
  Var final_cat = graph::reshape(graph::concat_rows({h_fwd_final, h_bwd_final}), {2 * d_text_});
  Var sentence = graph::reshape(sent_proj_(t, final_cat), {d_text_});
  return {words, sentence};
}

TextEmbedding TextEncoder::encode(const TokenSequence& tokens) const {
  Tape t(false);
  auto [words, sentence] = forward(t, tokens);
  TextEmbedding e;
  e.word_features = words.val().clone();
  e.sentence_feature = sentence.val().clone();
  e.t_words = tokens.length;
  return e;
}

SemanticImageEncoder::SemanticImageEncoder(nn::ParamSet& ps, const std::string& prefix, int d_text,
                                           Rng& rng) {
  c1_ = nn::Conv2d(ps, prefix + ".c1", 3, 32, 3, 2, rng);
  c2_ = nn::Conv2d(ps, prefix + ".c2", 32, 64, 3, 2, rng);
  c3_ = nn::Conv2d(ps, prefix + ".c3", 64, 128, 3, 2, rng);
  region_proj_ = nn::Conv2d(ps, prefix + ".region", 128, d_text, 1, 1, rng);
  global_proj_ = nn::Linear(ps, prefix + ".global", 128, d_text, rng);
}

std::pair<Var, Var> SemanticImageEncoder::forward(Tape& t, Var image) const {
  const auto& s = image.shape();
  TGIC_CHECK_INPUT(s.size() == 3 && s[0] == 3, "SemanticImageEncoder: image must be (3, H, W)");
  TGIC_CHECK_INPUT(s[1] >= 8 && s[2] >= 8, "SemanticImageEncoder: image smaller than 8x8");
  Var x = graph::relu(c1_(t, image));
  x = graph::relu(c2_(t, x));
  x = graph::relu(c3_(t, x));  // (128, h, w)
  int ch = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const int d = region_proj_.out_channels();
  Var flat = graph::reshape(x, {ch, h * w});
  Var pooled = graph::mul_const(graph::sum_rows(flat), 1.0 / (h * w));  // {128}
  Var global = graph::reshape(global_proj_(t, pooled), {d});
  Var regions = graph::transpose2d(graph::reshape(region_proj_(t, x), {d, h * w}));
  return {global, regions};  // {D}, (h*w, D)
}

SemanticImageEmbedding SemanticImageEncoder::encode(const Tensor& image) const {
  TGIC_CHECK_INPUT(image.all_finite(), "SemanticImageEncoder: image has non-finite pixels");
  Tape t(false);
  auto [global, regions] = forward(t, t.constant(image));
  SemanticImageEmbedding e;
  e.global_feature = global.val().clone();
  e.region_features = regions.val().clone();
  return e;
}

double matching_score(const SemanticImageEmbedding& img, const TextEmbedding& txt, double gamma) {
  const Tensor& g = img.global_feature;
  const Tensor& s = txt.sentence_feature;
  TGIC_CHECK_INPUT(g.size() == s.size(), "matching_score: feature dimensions differ");
  double dot = 0.0, ng = 0.0, ns = 0.0;
  for (size_t i = 0; i < g.size(); ++i) {
    dot += g[i] * s[i];
    ng += g[i] * g[i];
    ns += s[i] * s[i];
  }
  TGIC_CHECK_INPUT(ng > 0.0 && ns > 0.0, "matching_score: zero-norm feature vector");
  return gamma * dot / (std::sqrt(ng) * std::sqrt(ns));
}

Var matching_score_matrix(Tape& t, Var imgs, Var txts, double gamma) {
  TGIC_CHECK(imgs.shape().size() == 2 && txts.shape().size() == 2 &&
                 imgs.shape()[1] == txts.shape()[1],
             "matching_score_matrix: expected (B, D) inputs");
  // 1e-12 under the sqrt guards against an all-zero feature row mid-training.
  auto inv_norms = [&](Var m, int rows) {
    Var sq = graph::sum_rows(graph::mul(m, m));  // {B}
    Var norm = graph::sqrt_v(graph::add_const(sq, 1e-12));
    return graph::div(t.constant(Tensor({rows}, 1.0)), norm);
  };
  Var dots = graph::matmul_nt(imgs, txts);  // (Bi, Bt)
  Var scaled = graph::scale_cols(graph::scale_rows(dots, inv_norms(imgs, imgs.shape()[0])),
                                 inv_norms(txts, txts.shape()[0]));
  return graph::mul_const(scaled, gamma);
}

Var batch_matching_loss(Tape& t, Var scores) {
  TGIC_CHECK(scores.shape().size() == 2 && scores.shape()[0] == scores.shape()[1],
             "batch_matching_loss: score matrix must be square");
  int b = scores.shape()[0];
  Var row_lsm = graph::log_softmax_rows(scores);
  Var col_lsm = graph::log_softmax_rows(graph::transpose2d(scores));
  Tensor eye({b, b}, 0.0);
  for (int i = 0; i < b; ++i) eye[static_cast<size_t>(i) * b + i] = 1.0;
  Var mask = t.constant(eye);
  Var diag_sum = graph::add(graph::sum_all(graph::mul(row_lsm, mask)),
                            graph::sum_all(graph::mul(col_lsm, mask)));
  return graph::mul_const(diag_sum, -1.0 / b);
}

PretrainResult pretrain_semantic_space(TextEncoder& ft, SemanticImageEncoder& fi,
                                       nn::ParamSet& ps,
                                       const std::vector<std::pair<Tensor, TokenSequence>>& train,
                                       const std::vector<std::pair<Tensor, TokenSequence>>& holdout,
                                       int steps, double lr, int batch_size, Rng& rng) {
  TGIC_CHECK_CONFIG(train.size() >= 2, "pretrain_semantic_space: need at least 2 training pairs");
  TGIC_CHECK_CONFIG(steps >= 1 && lr > 0.0, "pretrain_semantic_space: bad steps/lr");
  const int bsz = std::min<int>(batch_size, static_cast<int>(train.size()));
  TGIC_CHECK_CONFIG(bsz >= 2, "pretrain_semantic_space: batch size must be >= 2");

  auto batch_loss = [&](Tape& t, const std::vector<const std::pair<Tensor, TokenSequence>*>& batch) {
    std::vector<Var> globals, sents;
    for (const auto* pair : batch) {
      auto [g, r] = fi.forward(t, t.constant(pair->first));
      (void)r;
      globals.push_back(graph::reshape(g, {1, ft.d_text()}));
      auto [words, sent] = ft.forward(t, pair->second);
      (void)words;
      sents.push_back(graph::reshape(sent, {1, ft.d_text()}));
    }
    Var scores = matching_score_matrix(t, graph::concat_rows(globals), graph::concat_rows(sents), 10.0);
    return batch_matching_loss(t, scores);
  };

  auto eval_holdout = [&]() {
    const auto& set = holdout.size() >= 2 ? holdout : train;
    std::vector<const std::pair<Tensor, TokenSequence>*> all;
    for (const auto& p : set) all.push_back(&p);
    Tape t(false);
    return batch_loss(t, all).item();
  };

  PretrainResult result;
  result.initial_holdout_loss = eval_holdout();

  std::vector<nn::Param*> trainable;
  for (nn::Param* p : ps.all())
    if (p->trainable) trainable.push_back(p);

  for (int step = 0; step < steps; ++step) {
    std::vector<const std::pair<Tensor, TokenSequence>*> batch;
    if (bsz == static_cast<int>(train.size())) {
      for (const auto& p : train) batch.push_back(&p);
    } else {
      for (int i = 0; i < bsz; ++i) batch.push_back(&train[rng.index(train.size())]);
    }
    ps.zero_grad();
    Tape t(true);
    Var loss = batch_loss(t, batch);
    TGIC_CHECK(std::isfinite(loss.item()), "pretrain_semantic_space: non-finite loss at step " +
                                               std::to_string(step));
    t.backward(loss);
    nn::adam_step(trainable, lr, step + 1);
  }
  result.final_holdout_loss = eval_holdout();
  result.steps = steps;
  return result;
}

}  // namespace semantic
}  // namespace tgic
