#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "fd_check.h"
#include "tgic/codec_nets.h"
#include "tgic/kernels.h"

using namespace tgic;
using namespace tgic::codec;

namespace {

ArchConfig tiny_arch() {
  ArchConfig a;
  a.c1 = 4;
  a.c2 = 6;
  a.c3 = 8;
  a.c_y = 8;
  a.c_z = 6;
  a.res_per_module = 1;
  a.d_text = 4;
  return a;
}

Tensor rand_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  rng.fill_uniform(t, lo, hi);
  return t;
}

}  // namespace

TEST_CASE("ita preserves shape and reacts to text") {
  nn::ParamSet ps;
  Rng rng(1);
  ITA ita(ps, "ita", 5, 7, rng);
  graph::Tape t(false);
  Tensor v = rand_tensor(rng, {5, 4, 6});
  Tensor w1 = rand_tensor(rng, {3, 7});
  Tensor w2 = rand_tensor(rng, {3, 7});
  graph::Var o1 = ita(t, t.constant(v), t.constant(w1));
  graph::Var o2 = ita(t, t.constant(v), t.constant(w2));
  CHECK(o1.shape() == std::vector<int>{5, 4, 6});
  double diff = 0.0;
  for (size_t i = 0; i < o1.val().size(); ++i) diff += std::fabs(o1.val()[i] - o2.val()[i]);
  CHECK(diff > 1e-9);  // text pathway is live
}

TEST_CASE("ita with zero words ignores the text projection") {
  nn::ParamSet ps;
  Rng rng(2);
  ITA ita(ps, "ita", 4, 6, rng);
  Tensor v = rand_tensor(rng, {4, 3, 3});
  Tensor zero_words({2, 6}, 0.0);
  graph::Tape t(false);
  Tensor o1 = ita(t, t.constant(v), t.constant(zero_words)).val().clone();
  // reshuffle the projection; zero input must mask it out completely
  rng.fill_uniform(ps.find("ita.w4.w")->value, -2.0, 2.0);
  Tensor o2 = ita(t, t.constant(v), t.constant(zero_words)).val().clone();
  for (size_t i = 0; i < o1.size(); ++i) CHECK(o1[i] == o2[i]);
}

TEST_CASE("ita with identical words equals single-word attention") {
  nn::ParamSet ps;
  Rng rng(3);
  ITA ita(ps, "ita", 4, 6, rng);
  Tensor v = rand_tensor(rng, {4, 3, 3});
  Tensor row = rand_tensor(rng, {1, 6});
  Tensor rep({3, 6});
  for (int t_i = 0; t_i < 3; ++t_i)
    for (int j = 0; j < 6; ++j) rep[static_cast<size_t>(t_i) * 6 + j] = row[j];
  graph::Tape t(false);
  Tensor o_rep = ita(t, t.constant(v), t.constant(rep)).val().clone();
  Tensor o_one = ita(t, t.constant(v), t.constant(row)).val().clone();
  for (size_t i = 0; i < o_rep.size(); ++i)
    CHECK(o_rep[i] == doctest::Approx(o_one[i]).epsilon(1e-12));
}

TEST_CASE("ita gradients match finite differences") {
  nn::ParamSet ps;
  Rng rng(4);
  ITA ita(ps, "ita", 4, 5, rng);
  Tensor v = rand_tensor(rng, {4, 3, 3});
  Tensor words = rand_tensor(rng, {2, 5});
  Tensor weights = rand_tensor(rng, {4, 3, 3});
  auto loss = [&](bool with_grad) {
    graph::Tape t(with_grad);
    graph::Var out = ita(t, t.constant(v), t.constant(words));
    graph::Var l = graph::sum_all(graph::mul(out, t.constant(weights)));
    if (with_grad) t.backward(l);
    return l.item();
  };
  Rng probe(40);
  CHECK(fdcheck::max_rel_err_paramset(ps, loss, probe, 4) < 1e-6);
}

TEST_CASE("irc zero-init closed form: uniform attention plus identity") {
  nn::ParamSet ps;
  Rng rng(5);
  const int c = 5, d = 4, tw = 3;
  IRC irc(ps, "irc", c, d, rng);
  Tensor v2 = rand_tensor(rng, {c, 2, 3});
  Tensor words = rand_tensor(rng, {tw, d});

  graph::Tape t(false);
  graph::Var enh = irc.enhanced_words(t, t.constant(v2), t.constant(words));
  CHECK(enh.shape() == std::vector<int>{tw, c});

  // manual oracle: e = words * Wp^T, enhanced_i = mean_j(e_j) + e_i
  const Tensor& wp = ps.find("irc.proj.w")->value;  // (c, d)
  std::vector<double> e(static_cast<size_t>(tw) * c, 0.0);
  for (int i = 0; i < tw; ++i)
    for (int o = 0; o < c; ++o) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k)
        acc += words[static_cast<size_t>(i) * d + k] * wp[static_cast<size_t>(o) * d + k];
      e[static_cast<size_t>(i) * c + o] = acc;
    }
  for (int o = 0; o < c; ++o) {
    double mean = 0.0;
    for (int j = 0; j < tw; ++j) mean += e[static_cast<size_t>(j) * c + o];
    mean /= tw;
    for (int i = 0; i < tw; ++i)
      CHECK(enh.val()[static_cast<size_t>(i) * c + o] ==
            doctest::Approx(e[static_cast<size_t>(i) * c + o] + mean).epsilon(1e-9));
  }
}

TEST_CASE("irc zero words yield zero enhanced words and a dead text path") {
  nn::ParamSet ps;
  Rng rng(6);
  IRC irc(ps, "irc", 4, 5, rng);
  // move w5 off zero so the re-weighting path is active
  ps.find("irc.w5.w")->value[0] = 0.37;
  ps.find("irc.w5.b")->value[0] = -0.11;
  Tensor v2 = rand_tensor(rng, {4, 3, 3});
  Tensor zero_words({2, 5}, 0.0);
  graph::Tape t(false);
  graph::Var enh = irc.enhanced_words(t, t.constant(v2), t.constant(zero_words));
  for (size_t i = 0; i < enh.val().size(); ++i) CHECK(enh.val()[i] == 0.0);

  Tensor o1 = irc(t, t.constant(v2), t.constant(zero_words)).val().clone();
  rng.fill_uniform(ps.find("irc.proj.w")->value, -2.0, 2.0);
  Tensor o2 = irc(t, t.constant(v2), t.constant(zero_words)).val().clone();
  for (size_t i = 0; i < o1.size(); ++i) CHECK(o1[i] == o2[i]);
}

TEST_CASE("irc gradients match finite differences with active w5") {
  nn::ParamSet ps;
  Rng rng(7);
  IRC irc(ps, "irc", 4, 5, rng);
  ps.find("irc.w5.w")->value[0] = 0.2;
  ps.find("irc.w5.b")->value[0] = 0.05;
  Tensor v2 = rand_tensor(rng, {4, 2, 2});
  Tensor words = rand_tensor(rng, {3, 5});
  Tensor weights = rand_tensor(rng, {4, 2, 2});
  auto loss = [&](bool with_grad) {
    graph::Tape t(with_grad);
    graph::Var out = irc(t, t.constant(v2), t.constant(words));
    graph::Var l = graph::sum_all(graph::mul(out, t.constant(weights)));
    if (with_grad) t.backward(l);
    return l.item();
  };
  Rng probe(70);
  CHECK(fdcheck::max_rel_err_paramset(ps, loss, probe, 4) < 1e-6);
}

TEST_CASE("encoder maps (3,H,W) to (c_y,H/16,W/16) and validates input") {
  nn::ParamSet ps;
  Rng rng(8);
  ArchConfig arch = tiny_arch();
  Encoder enc(ps, "enc", arch, rng);
  Tensor words = rand_tensor(rng, {3, arch.d_text});

  graph::Tape t(false);
  Tensor x64 = rand_tensor(rng, {3, 64, 64}, 0.0, 1.0);
  CHECK(enc(t, t.constant(x64), t.constant(words)).shape() == std::vector<int>{8, 4, 4});

  Tensor x16 = rand_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  CHECK(enc(t, t.constant(x16), t.constant(words)).shape() == std::vector<int>{8, 1, 1});

  Tensor x4880 = rand_tensor(rng, {3, 48, 80}, 0.0, 1.0);
  CHECK(enc(t, t.constant(x4880), t.constant(words)).shape() == std::vector<int>{8, 3, 5});

  Tensor small = rand_tensor(rng, {3, 8, 16}, 0.0, 1.0);
  CHECK_THROWS_AS(enc(t, t.constant(small), t.constant(words)), InputError);
}

TEST_CASE("decoder mirrors the encoder and clamps to [0,1]") {
  nn::ParamSet ps;
  Rng rng(9);
  ArchConfig arch = tiny_arch();
  Decoder dec(ps, "dec", arch, rng);
  Tensor words = rand_tensor(rng, {3, arch.d_text});
  Tensor y = rand_tensor(rng, {arch.c_y, 4, 4}, -3.0, 3.0);
  graph::Tape t(false);
  graph::Var xh = dec(t, t.constant(y), t.constant(words));
  CHECK(xh.shape() == std::vector<int>{3, 64, 64});
  for (size_t i = 0; i < xh.val().size(); ++i) {
    CHECK(xh.val()[i] >= 0.0);
    CHECK(xh.val()[i] <= 1.0);
  }
}

TEST_CASE("encoder/decoder round-trip shapes at a larger resolution") {
  nn::ParamSet ps;
  Rng rng(10);
  ArchConfig arch = tiny_arch();
  Encoder enc(ps, "enc", arch, rng);
  Decoder dec(ps, "dec", arch, rng);
  Tensor words = rand_tensor(rng, {2, arch.d_text});
  Tensor x = rand_tensor(rng, {3, 128, 96}, 0.0, 1.0);
  graph::Tape t(false);
  graph::Var y = enc(t, t.constant(x), t.constant(words));
  CHECK(y.shape() == std::vector<int>{arch.c_y, 8, 6});
  graph::Var xh = dec(t, y, t.constant(words));
  CHECK(xh.shape() == std::vector<int>{3, 128, 96});
}

TEST_CASE("ablation switches disconnect the right text paths") {
  Rng rng(11);
  ArchConfig arch = tiny_arch();
  Tensor x = rand_tensor(rng, {3, 16, 16}, 0.0, 1.0);
  Tensor y = rand_tensor(rng, {arch.c_y, 2, 2});
  Tensor wa = rand_tensor(rng, {2, arch.d_text});
  Tensor wb = rand_tensor(rng, {2, arch.d_text});

  auto tensor_diff = [](const Tensor& a, const Tensor& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d += std::fabs(a[i] - b[i]);
    return d;
  };

  {
    ArchConfig a = arch;
    a.use_tgfr = false;
    nn::ParamSet ps;
    Rng r(12);
    Encoder enc(ps, "enc", a, r);
    graph::Tape t(false);
    Tensor o1 = enc(t, t.constant(x), t.constant(wa)).val().clone();
    Tensor o2 = enc(t, t.constant(x), t.constant(wb)).val().clone();
    CHECK(tensor_diff(o1, o2) == 0.0);
  }
  {
    ArchConfig a = arch;
    a.use_tgir = false;
    nn::ParamSet ps;
    Rng r(13);
    Decoder dec(ps, "dec", a, r);
    graph::Tape t(false);
    Tensor o1 = dec(t, t.constant(y), t.constant(wa)).val().clone();
    Tensor o2 = dec(t, t.constant(y), t.constant(wb)).val().clone();
    CHECK(tensor_diff(o1, o2) == 0.0);
  }
  {
    // IRC off: decoder falls back to plain ITA but stays text-sensitive
    ArchConfig a = arch;
    a.use_irc = false;
    nn::ParamSet ps;
    Rng r(14);
    Decoder dec(ps, "dec", a, r);
    CHECK(ps.with_prefix("dec.irc1.").empty());
    CHECK(!ps.with_prefix("dec.ita1.").empty());
    graph::Tape t(false);
    Tensor o1 = dec(t, t.constant(y), t.constant(wa)).val().clone();
    Tensor o2 = dec(t, t.constant(y), t.constant(wb)).val().clone();
    CHECK(tensor_diff(o1, o2) > 1e-9);
  }
}

TEST_CASE("encoder-decoder gradients flow end to end") {
  nn::ParamSet ps;
  Rng rng(15);
  ArchConfig arch = tiny_arch();
  arch.c1 = 3;
  arch.c2 = 4;
  arch.c3 = 5;
  arch.c_y = 5;
  Encoder enc(ps, "enc", arch, rng);
  Decoder dec(ps, "dec", arch, rng);
  Tensor x = rand_tensor(rng, {3, 16, 16}, 0.2, 0.8);
  Tensor words = rand_tensor(rng, {2, arch.d_text});
  auto loss = [&](bool with_grad) {
    graph::Tape t(with_grad);
    graph::Var y = enc(t, t.constant(x), t.constant(words));
    graph::Var xh = dec(t, y, t.constant(words));
    graph::Var l = graph::mse(xh, t.constant(x));
    if (with_grad) t.backward(l);
    return l.item();
  };
  Rng probe(150);
  CHECK(fdcheck::max_rel_err_paramset(ps, loss, probe, 2, 1e-5) < 2e-5);
}

TEST_CASE("quantize eval: round half-up, clamp, idempotence") {
  Tensor y({8});
  y[0] = 0.6;
  y[1] = -0.5;
  y[2] = 2.5;
  y[3] = -2.5;
  y[4] = 400.2;
  y[5] = -771.0;
  y[6] = 0.49999;
  y[7] = -0.51;
  Tensor q = quantize_eval(y);
  CHECK(q[0] == 1.0);
  CHECK(q[1] == 0.0);  // floor(-0.5 + 0.5) = 0
  CHECK(q[2] == 3.0);
  CHECK(q[3] == -2.0);
  CHECK(q[4] == 255.0);
  CHECK(q[5] == -255.0);
  CHECK(q[6] == 0.0);
  CHECK(q[7] == -1.0);

  Tensor qq = quantize_eval(q);
  for (size_t i = 0; i < q.size(); ++i) CHECK(qq[i] == q[i]);
}

TEST_CASE("quantize train adds bounded uniform noise deterministically per seed") {
  Rng rng(77);
  Tensor y({4, 5, 5});
  Rng fill(3);
  fill.fill_uniform(y, -2.0, 2.0);
  graph::Tape t(false);
  graph::Var yt = quantize_train(t, t.constant(y), rng);
  for (size_t i = 0; i < y.size(); ++i) {
    double d = yt.val()[i] - y[i];
    CHECK(d >= -0.5);
    CHECK(d < 0.5);
  }
  Rng rng2(77);
  graph::Var yt2 = quantize_train(t, t.constant(y), rng2);
  for (size_t i = 0; i < y.size(); ++i) CHECK(yt.val()[i] == yt2.val()[i]);
}

TEST_CASE("codec nets are bitwise identical in serial and parallel modes") {
  nn::ParamSet ps;
  Rng rng(16);
  ArchConfig arch = tiny_arch();
  Encoder enc(ps, "enc", arch, rng);
  Decoder dec(ps, "dec", arch, rng);
  Tensor x = rand_tensor(rng, {3, 32, 32}, 0.0, 1.0);
  Tensor words = rand_tensor(rng, {3, arch.d_text});

  auto run = [&]() {
    graph::Tape t(false);
    graph::Var y = enc(t, t.constant(x), t.constant(words));
    return dec(t, y, t.constant(words)).val().clone();
  };
  kernels::Mode old = kernels::mode();
  kernels::set_mode(kernels::Mode::kSerial);
  Tensor a = run();
  kernels::set_mode(kernels::Mode::kParallel);
  Tensor b = run();
  kernels::set_mode(old);
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}
