#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "tgic/config.h"
#include "tgic/dataset.h"

using namespace tgic;
namespace fs = std::filesystem;

namespace {

// The CLI binaries live in build/tools next to this test's build/tests.
fs::path tool_path(const std::string& name) {
  if (const char* env = std::getenv("TGIC_TOOL_DIR")) return fs::path(env) / name;
  fs::path self = fs::read_symlink("/proc/self/exe");
  return self.parent_path().parent_path() / "tools" / name;
}

int run(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Fixture {
  fs::path dir;
  fs::path data;
  fs::path run_dir;
  std::string tgic;

  Fixture() {
    dir = fs::temp_directory_path() / "tgic_cli";
    data = dir / "data";
    run_dir = dir / "run";
    tgic = tool_path("tgic").string();
    // Reuse the trained fixture across cases and runs, but only for the same
    // tgic build; a stale checkpoint from an older binary must not leak in.
    const std::string stamp =
        std::to_string(fs::last_write_time(tgic).time_since_epoch().count()) + ":" +
        std::to_string(fs::file_size(tgic));
    if (fs::exists(run_dir / "codec.tgck") && slurp(dir / "stamp.txt") == stamp) return;
    fs::remove_all(dir);
    data::write_demo_dataset(data.string(), 4, 1, 64, 5);

    TrainConfig cfg;
    cfg.arch.c1 = 8;
    cfg.arch.c2 = 12;
    cfg.arch.c3 = 16;
    cfg.arch.c_y = 16;
    cfg.arch.c_z = 8;
    cfg.arch.res_per_module = 1;
    cfg.arch.d_text = 16;
    cfg.arch.embed_dim = 8;
    cfg.arch.max_words = 6;
    cfg.batch_size = 2;
    cfg.pretrain_steps = 2;
    cfg.max_steps = 2;
    cfg.image_size = 64;
    cfg.data_root = data.string();
    cfg.train_manifest = (data / "train.txt").string();
    cfg.holdout_manifest = (data / "test.txt").string();
    cfg.out_dir = run_dir.string();
    std::ofstream(dir / "train.cfg") << serialize_train_config(cfg);

    const int code = run(tgic + " train --config " + (dir / "train.cfg").string() + " > " +
                         (dir / "train.out").string() + " 2>&1");
    REQUIRE(code == 0);
    std::ofstream(dir / "stamp.txt") << stamp;
  }
};

}  // namespace

TEST_CASE("cli end to end: train, compress, decompress, eval") {
  Fixture fx;
  CHECK(fs::exists(fx.run_dir / "codec.tgck"));
  CHECK(fs::exists(fx.run_dir / "final.tgck"));
  CHECK(slurp(fx.dir / "train.out").find("steps_run: 2") != std::string::npos);

  const std::string model = (fx.run_dir / "codec.tgck").string();
  const std::string image = (fx.data / "images" / "red_box.png").string();

  // Inline caption.
  int code = run(fx.tgic + " compress --model " + model + " --image " + image +
                 " --caption \"red box\" --out " + (fx.dir / "a.tgic").string() + " > " +
                 (fx.dir / "compress.out").string());
  CHECK(code == 0);
  CHECK(fs::exists(fx.dir / "a.tgic"));
  const std::string rate_out = slurp(fx.dir / "compress.out");
  CHECK(rate_out.find("bits_y: ") != std::string::npos);
  CHECK(rate_out.find("bits_text: 72") != std::string::npos);  // (7 + 2) * 8
  CHECK(rate_out.find("bpp: ") != std::string::npos);

  // @file caption produces identical bytes.
  std::ofstream(fx.dir / "cap.txt") << "\nred box\n";
  code = run(fx.tgic + " compress --model " + model + " --image " + image + " --caption @" +
             (fx.dir / "cap.txt").string() + " --out " + (fx.dir / "b.tgic").string() +
             " > /dev/null");
  CHECK(code == 0);
  CHECK(slurp(fx.dir / "a.tgic") == slurp(fx.dir / "b.tgic"));

  // Decompress and verify shape + caption echo.
  code = run(fx.tgic + " decompress --model " + model + " --in " + (fx.dir / "a.tgic").string() +
             " --out " + (fx.dir / "recon.png").string() + " > " +
             (fx.dir / "decompress.out").string());
  CHECK(code == 0);
  Tensor recon = data::load_image((fx.dir / "recon.png").string());
  CHECK(recon.dim(1) == 64);
  CHECK(recon.dim(2) == 64);
  CHECK(slurp(fx.dir / "decompress.out").find("caption: red box") != std::string::npos);

  // Eval over the held-out manifest.
  code = run(fx.tgic + " eval --model " + model + " --manifest " +
             (fx.data / "test.txt").string() + " --out " + (fx.dir / "metrics.csv").string() +
             " > /dev/null");
  CHECK(code == 0);
  const std::string csv = slurp(fx.dir / "metrics.csv");
  CHECK(csv.rfind("image_id,bpp_total,bpp_image,bpp_text,psnr_db,file_bytes\n", 0) == 0);
  CHECK(csv.find("summary,") != std::string::npos);
}

TEST_CASE("cli exit codes distinguish error classes") {
  Fixture fx;
  const std::string model = (fx.run_dir / "codec.tgck").string();
  const std::string quiet = " > /dev/null 2> " + (fx.dir / "err.txt").string();

  // Unreadable image -> input error.
  CHECK(run(fx.tgic + " compress --model " + model + " --image /nonexistent.png" +
            " --caption \"red box\" --out " + (fx.dir / "x.tgic").string() + quiet) == 2);
  CHECK(slurp(fx.dir / "err.txt").find("input error") != std::string::npos);

  // Oversized caption -> input error.
  std::ofstream(fx.dir / "big_cap.txt") << std::string(70000, 'a') << "\n";
  CHECK(run(fx.tgic + " compress --model " + model + " --image " +
            (fx.data / "images" / "red_box.png").string() + " --caption @" +
            (fx.dir / "big_cap.txt").string() + " --out " + (fx.dir / "x.tgic").string() +
            quiet) == 2);

  // Corrupt container -> format error.
  std::ofstream(fx.dir / "junk.tgic", std::ios::binary) << "NOTATGIC0000";
  CHECK(run(fx.tgic + " decompress --model " + model + " --in " +
            (fx.dir / "junk.tgic").string() + " --out " + (fx.dir / "y.png").string() + quiet) ==
        3);
  CHECK(slurp(fx.dir / "err.txt").find("format error") != std::string::npos);
  CHECK(!fs::exists(fx.dir / "y.png"));  // no partial output

  // Bad config -> config error.
  std::ofstream(fx.dir / "bad.cfg") << "not_a_key = 1\n";
  CHECK(run(fx.tgic + " train --config " + (fx.dir / "bad.cfg").string() + quiet) == 4);
  CHECK(slurp(fx.dir / "err.txt").find("config error") != std::string::npos);

  // Unknown subcommand -> CLI parse failure, nonzero but not one of our codes.
  CHECK(run(fx.tgic + " frobnicate" + quiet) != 0);

  // Missing required option -> CLI parse failure.
  CHECK(run(fx.tgic + " compress --model " + model + quiet) != 0);
}
