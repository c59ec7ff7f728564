#include <iostream>

#include "CLI11.hpp"
#include "tgic/common.h"
#include "tgic/dataset.h"

// Writes the synthetic color/shape dataset used by the README walkthrough:
// images/, captions/, train.txt and test.txt under --out.
int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic demo dataset"};
  std::string out_dir;
  int train_count = 8, test_count = 2, size = 64;
  uint64_t seed = 1;
  app.add_option("--out", out_dir, "dataset root directory")->required();
  app.add_option("--train", train_count, "training image count");
  app.add_option("--test", test_count, "held-out image count");
  app.add_option("--size", size, "square image side in pixels");
  app.add_option("--seed", seed, "generator seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    tgic::data::write_demo_dataset(out_dir, train_count, test_count, size, seed);
  } catch (const tgic::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << (train_count + test_count) << " images under " << out_dir << "\n";
  return 0;
}
