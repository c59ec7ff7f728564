#include "tgic/trainer.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tgic/checkpoint.h"
#include "tgic/common.h"
#include "tgic/entropy_model.h"
#include "tgic/graph.h"

namespace tgic {
namespace train {

namespace fs = std::filesystem;
using graph::Tape;
using graph::Var;

TrainerModel::TrainerModel(const TrainConfig& cfg, const semantic::Vocabulary& vocab)
    : rng(cfg.seed),
      codec(std::make_unique<codec::CodecModel>(cfg.arch, vocab, rng)),
      fi(codec->params, "fi.", cfg.arch.d_text, rng),
      disc(codec->params, "disc.", cfg.arch, rng),
      phi(codec->params, "phi.", rng) {
  // The perceptual net is a fixed feature extractor from the start.
  codec->params.set_trainable("phi.", false);
}

semantic::Vocabulary corpus_vocabulary(const data::Dataset& ds, int min_freq) {
  std::vector<std::string> corpus;
  for (const data::Sample& s : ds.samples)
    for (const std::string& c : s.captions) corpus.push_back(c);
  return semantic::build_vocabulary(corpus, min_freq);
}

std::vector<TrainPair> make_train_pairs(const data::Dataset& ds, const TrainConfig& cfg,
                                        const semantic::Vocabulary& vocab) {
  std::vector<TrainPair> pairs;
  for (const data::Sample& s : ds.samples) {
    TrainPair p;
    p.name = s.name;
    p.image = data::center_crop(s.image, cfg.image_size);
    p.captions = s.captions;
    for (const std::string& c : s.captions) {
      semantic::TokenSequence tok = semantic::tokenize(c, vocab, cfg.arch.max_words);
      TGIC_CHECK_INPUT(tok.length > 0, "caption for '" + s.name + "' has no usable tokens");
      p.tokens.push_back(tok);
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

semantic::PretrainResult pretrain_and_freeze(TrainerModel& m, const TrainConfig& cfg,
                                             const std::vector<TrainPair>& pairs,
                                             const std::vector<TrainPair>& holdout) {
  auto first_caption_pairs = [](const std::vector<TrainPair>& src) {
    std::vector<std::pair<Tensor, semantic::TokenSequence>> out;
    for (const TrainPair& p : src) out.emplace_back(p.image, p.tokens.front());
    return out;
  };
  semantic::PretrainResult res;
  if (cfg.pretrain_steps > 0) {
    res = semantic::pretrain_semantic_space(
        m.codec->ft, m.fi, m.codec->params, first_caption_pairs(pairs),
        first_caption_pairs(holdout), cfg.pretrain_steps, cfg.pretrain_lr,
        std::min<int>(cfg.batch_size, static_cast<int>(pairs.size())), m.rng);
  }
  m.codec->params.set_trainable("ft.", false);
  m.codec->params.set_trainable("fi.", false);
  return res;
}

namespace {

const char* const kGenPrefixes[] = {"enc.", "dec.", "he.", "hd.", "pz."};

std::vector<nn::Param*> generator_params(nn::ParamSet& ps) {
  std::vector<nn::Param*> out;
  for (const char* prefix : kGenPrefixes)
    for (nn::Param* p : ps.with_prefix(prefix)) out.push_back(p);
  return out;
}

// bsz distinct indices when possible, iid otherwise; order is rng-determined.
std::vector<int> sample_batch(Rng& rng, int n, int bsz) {
  std::vector<int> idx(bsz);
  if (n >= bsz) {
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int b = 0; b < bsz; ++b) {
      const int j = b + rng.index(n - b);
      std::swap(pool[b], pool[j]);
      idx[b] = pool[b];
    }
  } else {
    for (int b = 0; b < bsz; ++b) idx[b] = rng.index(n);
  }
  return idx;
}

Var batch_mean(const std::vector<Var>& vs) {
  Var sum = vs.front();
  for (size_t i = 1; i < vs.size(); ++i) sum = graph::add(sum, vs[i]);
  return graph::mul_const(sum, 1.0 / static_cast<double>(vs.size()));
}

struct SampleForward {
  Var sentence;
  Var x;
  Var x_hat;
  Var rate_bpp;  // image-only bits per pixel
};

}  // namespace

StepStats train_step(TrainerModel& m, const TrainConfig& cfg, const std::vector<TrainPair>& pairs) {
  TGIC_CHECK_INPUT(!pairs.empty(), "train_step: no training pairs");
  const LossWeights& w = cfg.weights;
  nn::ParamSet& ps = m.codec->params;
  const int bsz = cfg.batch_size;
  const std::vector<int> batch = sample_batch(m.rng, static_cast<int>(pairs.size()), bsz);

  Tape t(true);
  std::vector<SampleForward> fwd;
  std::vector<Var> rates, recons, percs, fihat_rows, firef_rows, sent_rows;
  const int d_text = cfg.arch.d_text;
  for (int idx : batch) {
    const TrainPair& pair = pairs[idx];
    const int cap = pair.tokens.size() > 1
                        ? m.rng.index(static_cast<int>(pair.tokens.size()))
                        : 0;
    auto [words, sentence] = m.codec->ft.forward(t, pair.tokens[cap]);
    Var x = t.constant(pair.image);
    Var y = m.codec->enc(t, x, words);
    Var y_hat = codec::quantize_train(t, y, m.rng);
    Var z = m.codec->he(t, y);
    Var z_hat = codec::quantize_train(t, z, m.rng);
    entropy::GaussianParams gp = m.codec->hd(t, z_hat, words);
    TGIC_CHECK(gp.mean.shape() == y.shape(),
               "hyper grid does not match the latent grid; use a crop size divisible by 64");
    Var x_hat = m.codec->dec(t, y_hat, words);

    Var bits_y = graph::sum_all(graph::log_v(entropy::likelihood_y(t, y_hat, gp)));
    Var bits_z = graph::sum_all(graph::log_v(m.codec->pz.likelihood(t, z_hat)));
    const double pixels = static_cast<double>(cfg.image_size) * cfg.image_size;
    Var rate = graph::mul_const(graph::add(bits_y, bits_z), -1.0 / (std::log(2.0) * pixels));

    rates.push_back(rate);
    recons.push_back(objectives::recon_loss(t, x_hat, x));
    if (cfg.enable_lp) percs.push_back(objectives::perceptual_loss(t, m.phi, x_hat, x));
    if (cfg.enable_lm) {
      auto [g_hat, r_hat] = m.fi.forward(t, x_hat);
      (void)r_hat;
      auto [g_ref, r_ref] = m.fi.forward(t, x);
      (void)r_ref;
      fihat_rows.push_back(graph::reshape(g_hat, {1, d_text}));
      firef_rows.push_back(graph::reshape(g_ref, {1, d_text}));
      sent_rows.push_back(graph::reshape(sentence, {1, d_text}));
    }
    fwd.push_back({sentence, x, x_hat, rate});
  }

  Var l_rate = batch_mean(rates);
  Var l_r = batch_mean(recons);
  Var l_p = cfg.enable_lp ? batch_mean(percs) : t.constant(Tensor({1}));
  Var l_it = t.constant(Tensor({1}));
  Var l_ii = t.constant(Tensor({1}));
  Var l_m = t.constant(Tensor({1}));
  if (cfg.enable_lm) {
    objectives::SemanticLosses sem = objectives::semantic_consistent_loss(
        t, graph::concat_rows(fihat_rows), graph::concat_rows(firef_rows),
        graph::concat_rows(sent_rows), cfg.enable_lii ? w.beta : 0.0);
    l_it = sem.l_it;
    l_ii = sem.l_ii;
    l_m = sem.l_m;
  }

  const double bpp_image = l_rate.item();
  const double lambda = objectives::select_lambda(bpp_image, w);

  // Discriminator update on the current reconstructions, detached from the
  // generator tape.
  Tape td(true);
  std::vector<Var> dlosses;
  for (const SampleForward& s : fwd) {
    Var p_real = m.disc(td, td.constant(s.x.val()), td.constant(s.sentence.val()));
    Var p_fake = m.disc(td, td.constant(s.x_hat.val()), td.constant(s.sentence.val()));
    dlosses.push_back(adv::disc_loss(td, p_real, p_fake));
  }
  Var dl = batch_mean(dlosses);
  const double disc_loss_value = dl.item();
  TGIC_CHECK(std::isfinite(disc_loss_value),
             "step " + std::to_string(m.step + 1) + ": non-finite discriminator loss");
  ps.zero_grad();
  td.backward(dl);
  nn::adam_step(ps.with_prefix("disc."), cfg.learning_rate, ++m.adam_t_disc);

  // Generator sees the just-updated discriminator.
  std::vector<Var> glosses;
  for (const SampleForward& s : fwd)
    glosses.push_back(adv::gen_loss(t, m.disc(t, s.x_hat, s.sentence)));
  Var l_g = batch_mean(glosses);

  Var total = objectives::total_loss(t, l_rate, l_r, l_g, l_p, l_m, lambda, w);

  StepStats stats;
  stats.losses = objectives::make_breakdown(l_rate.item(), l_r.item(), l_g.item(), l_p.item(),
                                            l_it.item(), l_ii.item(), lambda, w);
  stats.disc_loss = disc_loss_value;
  stats.bpp_image = bpp_image;
  if (!std::isfinite(total.item())) {
    std::ostringstream msg;
    msg << "step " << (m.step + 1) << ": non-finite loss (total=" << total.item()
        << " l_rate=" << stats.losses.l_rate << " l_r=" << stats.losses.l_r
        << " l_g=" << stats.losses.l_g << " l_p=" << stats.losses.l_p
        << " l_m=" << stats.losses.l_m << ")";
    throw InternalError(msg.str());
  }
  ps.zero_grad();
  t.backward(total);
  nn::adam_step(generator_params(ps), cfg.learning_rate, ++m.adam_t_gen);
  return stats;
}

void save_train_checkpoint(TrainerModel& m, const TrainConfig& cfg, const std::string& path) {
  ckpt::CheckpointMeta meta;
  meta.kind = "train";
  meta.config = cfg;
  meta.vocab_tokens = m.codec->vocab.id_to_token;
  meta.step = m.step;
  meta.adam_t_gen = m.adam_t_gen;
  meta.adam_t_disc = m.adam_t_disc;
  meta.rng_state = m.rng.state();
  ckpt::save_checkpoint(path, m.codec->params, meta);
}

void save_codec_checkpoint(TrainerModel& m, const TrainConfig& cfg, const std::string& path) {
  ckpt::CheckpointMeta meta;
  meta.kind = "codec";
  meta.config = cfg;
  meta.vocab_tokens = m.codec->vocab.id_to_token;
  meta.step = m.step;
  ckpt::save_checkpoint(path, m.codec->params, meta);
}

namespace {

bool same_arch(const ArchConfig& a, const ArchConfig& b) {
  return a.c1 == b.c1 && a.c2 == b.c2 && a.c3 == b.c3 && a.c_y == b.c_y && a.c_z == b.c_z &&
         a.res_per_module == b.res_per_module && a.d_text == b.d_text &&
         a.embed_dim == b.embed_dim && a.max_words == b.max_words && a.min_freq == b.min_freq &&
         a.use_tgfr == b.use_tgfr && a.use_tgir == b.use_tgir && a.use_tgat == b.use_tgat &&
         a.use_irc == b.use_irc;
}

void check_train_geometry(const TrainConfig& cfg) {
  TGIC_CHECK_CONFIG(!cfg.data_root.empty() && !cfg.train_manifest.empty(),
                    "training needs data_root and train_manifest");
  TGIC_CHECK_CONFIG(cfg.image_size % 64 == 0,
                    "image_size must be a multiple of 64 so the hyper grid matches the latent");
  const int side = static_cast<int>(std::lround(std::sqrt(cfg.arch.d_text)));
  TGIC_CHECK_CONFIG(side * side == cfg.arch.d_text, "d_text must be a perfect square");
  int s = side;
  while (s < cfg.image_size) s *= 2;
  TGIC_CHECK_CONFIG(s == cfg.image_size,
                    "image_size must be sqrt(d_text) times a power of two for the discriminator");
  objectives::validate_weights(cfg.weights);
}

void write_csv_row(std::ostream& o, long step, const StepStats& s) {
  o << step << ',' << std::setprecision(12) << s.losses.lambda_used << ',' << s.losses.total << ','
    << s.losses.l_rate << ',' << s.losses.l_r << ',' << s.losses.l_g << ',' << s.losses.l_p << ','
    << s.losses.l_it << ',' << s.losses.l_ii << ',' << s.losses.l_m << ',' << s.disc_loss << ','
    << s.bpp_image << '\n';
}

}  // namespace

TrainResult run_training(const TrainConfig& cfg) {
  check_train_geometry(cfg);
  data::Dataset ds = data::load_dataset(cfg.data_root, cfg.train_manifest);
  TGIC_CHECK_INPUT(!ds.samples.empty(), "training manifest is empty");

  TrainResult result;
  std::unique_ptr<TrainerModel> m;
  std::vector<TrainPair> pairs;

  if (cfg.resume.empty()) {
    semantic::Vocabulary vocab = corpus_vocabulary(ds, cfg.arch.min_freq);
    m = std::make_unique<TrainerModel>(cfg, vocab);
    pairs = make_train_pairs(ds, cfg, vocab);
    std::vector<TrainPair> holdout;
    if (!cfg.holdout_manifest.empty()) {
      data::Dataset hds = data::load_dataset(cfg.data_root, cfg.holdout_manifest);
      holdout = make_train_pairs(hds, cfg, vocab);
    }
    result.pretrain = pretrain_and_freeze(*m, cfg, pairs, holdout);
  } else {
    ckpt::CheckpointMeta meta = ckpt::read_checkpoint_meta(cfg.resume);
    TGIC_CHECK_INPUT(meta.kind == "train", "resume requires a train-kind checkpoint");
    TGIC_CHECK_CONFIG(same_arch(meta.config.arch, cfg.arch),
                      "resume config architecture differs from the checkpoint");
    semantic::Vocabulary vocab = semantic::vocabulary_from_tokens(meta.vocab_tokens);
    m = std::make_unique<TrainerModel>(cfg, vocab);
    // Frozen modules carry no optimizer state in the file, so mark them
    // frozen before asking the loader to restore moments.
    m->codec->params.set_trainable("ft.", false);
    m->codec->params.set_trainable("fi.", false);
    ckpt::load_checkpoint_params(cfg.resume, m->codec->params, true);
    m->step = meta.step;
    m->adam_t_gen = meta.adam_t_gen;
    m->adam_t_disc = meta.adam_t_disc;
    m->rng.set_state(meta.rng_state);
    pairs = make_train_pairs(ds, cfg, vocab);
  }

  const uint64_t frozen_ft = m->codec->params.value_hash("ft.");
  const uint64_t frozen_fi = m->codec->params.value_hash("fi.");
  const uint64_t frozen_phi = m->codec->params.value_hash("phi.");

  const int n = static_cast<int>(pairs.size());
  const long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const long total_steps =
      cfg.max_steps > 0 ? cfg.max_steps : static_cast<long>(cfg.epochs) * steps_per_epoch;

  fs::create_directories(cfg.out_dir);
  const std::string csv_path = (fs::path(cfg.out_dir) / "train_log.csv").string();
  const bool append = !cfg.resume.empty() && fs::exists(csv_path);
  std::ofstream log(csv_path, append ? std::ios::app : std::ios::trunc);
  TGIC_CHECK_INPUT(log.good(), "cannot write training log: " + csv_path);
  if (!append)
    log << "step,lambda,total,l_rate,l_r,l_g,l_p,l_it,l_ii,l_m,disc_loss,bpp_image\n";

  while (m->step < total_steps) {
    StepStats stats = train_step(*m, cfg, pairs);
    ++m->step;
    write_csv_row(log, m->step, stats);
    log.flush();
    result.history.push_back(stats);
    ++result.steps_run;
    if (cfg.checkpoint_interval > 0 && m->step % cfg.checkpoint_interval == 0 &&
        m->step < total_steps) {
      const std::string path =
          (fs::path(cfg.out_dir) / ("ckpt_step_" + std::to_string(m->step) + ".tgck")).string();
      save_train_checkpoint(*m, cfg, path);
    }
  }

  TGIC_CHECK(m->codec->params.value_hash("ft.") == frozen_ft &&
                 m->codec->params.value_hash("fi.") == frozen_fi &&
                 m->codec->params.value_hash("phi.") == frozen_phi,
             "a frozen module changed during training");

  result.final_checkpoint = (fs::path(cfg.out_dir) / "final.tgck").string();
  result.codec_checkpoint = (fs::path(cfg.out_dir) / "codec.tgck").string();
  save_train_checkpoint(*m, cfg, result.final_checkpoint);
  save_codec_checkpoint(*m, cfg, result.codec_checkpoint);
  return result;
}

}  // namespace train
}  // namespace tgic
