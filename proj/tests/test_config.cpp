#include "doctest.h"
#include "tgic/common.h"
#include "tgic/config.h"

using namespace tgic;

TEST_CASE("parse flat key-value config with comments and blanks") {
  const std::string text =
      "# run config\n"
      "learning_rate = 0.0005\n"
      "batch_size = 2\n"
      "\n"
      "epochs = 10\n"
      "seed = 42\n"
      "image_size = 32\n"
      "data_root = data/demo\n"
      "c_y = 96   # latent channels\n"
      "k2 = 0.3\n"
      "use_tgat = false\n";
  TrainConfig cfg = parse_train_config(text);
  CHECK(cfg.learning_rate == doctest::Approx(5e-4));
  CHECK(cfg.batch_size == 2);
  CHECK(cfg.epochs == 10);
  CHECK(cfg.seed == 42);
  CHECK(cfg.image_size == 32);
  CHECK(cfg.data_root == "data/demo");
  CHECK(cfg.arch.c_y == 96);
  CHECK(cfg.weights.k2 == doctest::Approx(0.3));
  CHECK(!cfg.arch.use_tgat);
  CHECK(cfg.arch.use_tgfr);  // untouched defaults survive
}

TEST_CASE("unknown key and malformed lines raise ConfigError") {
  CHECK_THROWS_AS(parse_train_config("nonsense_key = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_size == 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_size = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("batch_size\n"), ConfigError);
  CHECK_THROWS_AS(parse_train_config("learning_rate = \n"), ConfigError);
}

TEST_CASE("validate rejects out-of-range settings") {
  TrainConfig cfg;
  cfg.data_root = "x";
  cfg.train_manifest = "y";
  CHECK_NOTHROW(validate(cfg));

  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.image_size = 40;  // not a multiple of 16
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.weights.k2 = -1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.arch.d_text = 200;  // not a perfect square
  CHECK_THROWS_AS(validate(bad), ConfigError);

  bad = cfg;
  bad.weights.lambda_a = 0.01;  // below lambda_b
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("serialize then parse round-trips every field") {
  TrainConfig cfg;
  cfg.learning_rate = 3.25e-4;
  cfg.batch_size = 3;
  cfg.epochs = 77;
  cfg.max_steps = 123;
  cfg.seed = 987654321;
  cfg.checkpoint_interval = 50;
  cfg.image_size = 96;
  cfg.pretrain_steps = 11;
  cfg.pretrain_lr = 0.002;
  cfg.enable_lp = false;
  cfg.enable_lii = false;
  cfg.data_root = "some/dir";
  cfg.train_manifest = "train.txt";
  cfg.holdout_manifest = "holdout.txt";
  cfg.out_dir = "runs/x";
  cfg.weights.k1 = 0.123456789012345;
  cfg.weights.lambda_a = 4.0;
  cfg.weights.r_t = 0.17;
  cfg.arch.c1 = 32;
  cfg.arch.c_y = 80;
  cfg.arch.res_per_module = 2;
  cfg.arch.d_text = 144;
  cfg.arch.use_irc = false;

  TrainConfig back = parse_train_config(serialize_train_config(cfg));
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.batch_size == cfg.batch_size);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.max_steps == cfg.max_steps);
  CHECK(back.seed == cfg.seed);
  CHECK(back.checkpoint_interval == cfg.checkpoint_interval);
  CHECK(back.image_size == cfg.image_size);
  CHECK(back.pretrain_steps == cfg.pretrain_steps);
  CHECK(back.pretrain_lr == cfg.pretrain_lr);
  CHECK(back.enable_lp == cfg.enable_lp);
  CHECK(back.enable_lm == cfg.enable_lm);
  CHECK(back.enable_lii == cfg.enable_lii);
  CHECK(back.data_root == cfg.data_root);
  CHECK(back.train_manifest == cfg.train_manifest);
  CHECK(back.holdout_manifest == cfg.holdout_manifest);
  CHECK(back.out_dir == cfg.out_dir);
  CHECK(back.weights.k1 == cfg.weights.k1);
  CHECK(back.weights.lambda_a == cfg.weights.lambda_a);
  CHECK(back.weights.r_t == cfg.weights.r_t);
  CHECK(back.arch.c1 == cfg.arch.c1);
  CHECK(back.arch.c_y == cfg.arch.c_y);
  CHECK(back.arch.res_per_module == cfg.arch.res_per_module);
  CHECK(back.arch.d_text == cfg.arch.d_text);
  CHECK(back.arch.use_irc == cfg.arch.use_irc);
}
