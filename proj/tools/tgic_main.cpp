#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tgic/codec_pipeline.h"
#include "tgic/common.h"
#include "tgic/config.h"
#include "tgic/container.h"
#include "tgic/dataset.h"
#include "tgic/eval.h"
#include "tgic/trainer.h"

namespace fs = std::filesystem;
using namespace tgic;

namespace {

// "@file" captions read the first non-empty line of the file.
std::string resolve_caption(const std::string& arg) {
  if (arg.empty() || arg[0] != '@') return arg;
  const std::string path = arg.substr(1);
  std::ifstream in(path);
  TGIC_CHECK_INPUT(in.good(), "cannot read caption file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return line;
  }
  throw InputError("caption file is empty: " + path);
}

void print_rate(const entropy::RateReport& rate, size_t file_bytes) {
  std::cout.precision(12);
  std::cout << "bits_y: " << rate.bits_y << "\n"
            << "bits_z: " << rate.bits_z << "\n"
            << "bits_text: " << rate.bits_text << "\n"
            << "bpp: " << rate.bpp << "\n"
            << "file_bytes: " << file_bytes << "\n";
}

int cmd_train(const std::string& config_path) {
  TrainConfig cfg = load_train_config(config_path);
  train::TrainResult result = train::run_training(cfg);
  std::cout << "steps_run: " << result.steps_run << "\n";
  if (!result.history.empty()) {
    const train::StepStats& last = result.history.back();
    std::cout.precision(12);
    std::cout << "final_total: " << last.losses.total << "\n"
              << "final_l_r: " << last.losses.l_r << "\n"
              << "final_bpp_image: " << last.bpp_image << "\n";
  }
  std::cout << "checkpoint: " << result.final_checkpoint << "\n"
            << "codec_checkpoint: " << result.codec_checkpoint << "\n";
  return 0;
}

int cmd_compress(const std::string& model_path, const std::string& image_path,
                 const std::string& caption_arg, const std::string& out_path) {
  auto model = codec::load_codec_model(model_path);
  Tensor image = data::load_image(image_path);
  const std::string caption = resolve_caption(caption_arg);
  codec::CompressResult result = codec::compress(*model, image, caption);
  const std::vector<uint8_t> bytes = codec::pack_container(result.container);
  codec::write_file_bytes(out_path, bytes);
  print_rate(result.rate, bytes.size());
  return 0;
}

int cmd_decompress(const std::string& model_path, const std::string& in_path,
                   const std::string& out_path) {
  auto model = codec::load_codec_model(model_path);
  codec::Container box = codec::unpack_container(codec::read_file_bytes(in_path));
  codec::DecompressResult result = codec::decompress(*model, box);
  data::save_image(out_path, result.image);
  std::cout << "caption: " << result.caption << "\n"
            << "size: " << result.image.dim(2) << "x" << result.image.dim(1) << "\n";
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& manifest_path,
             const std::string& out_path) {
  auto model = codec::load_codec_model(model_path);
  // The manifest lives at the dataset root (next to images/ and captions/).
  const std::string root = fs::path(manifest_path).parent_path().string();
  eval::EvalResult result = eval::eval_dataset(*model, root.empty() ? "." : root, manifest_path);
  eval::write_eval_csv(out_path, result);
  for (const auto& [id, msg] : result.errors)
    std::cerr << "eval error for '" << id << "': " << msg << "\n";
  std::cout << "records: " << result.records.size() << "\n"
            << "errors: " << result.errors.size() << "\n"
            << "csv: " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-guided image compression codec"};
  app.require_subcommand(1);

  std::string config_path, model_path, image_path, caption_arg, out_path, in_path, manifest_path;

  CLI::App* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", config_path, "key = value config file")->required();

  CLI::App* compress_cmd = app.add_subcommand("compress", "compress one image with a caption");
  compress_cmd->add_option("--model", model_path, "checkpoint path")->required();
  compress_cmd->add_option("--image", image_path, "input image (png/jpg)")->required();
  compress_cmd->add_option("--caption", caption_arg, "caption string or @file")->required();
  compress_cmd->add_option("--out", out_path, "output .tgic file")->required();

  CLI::App* decompress_cmd = app.add_subcommand("decompress", "decode a .tgic file to an image");
  decompress_cmd->add_option("--model", model_path, "checkpoint path")->required();
  decompress_cmd->add_option("--in", in_path, "input .tgic file")->required();
  decompress_cmd->add_option("--out", out_path, "output image (png/jpg)")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "compress/decompress metrics over a manifest");
  eval_cmd->add_option("--model", model_path, "checkpoint path")->required();
  eval_cmd->add_option("--manifest", manifest_path, "split manifest at the dataset root")
      ->required();
  eval_cmd->add_option("--out", out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(config_path);
    if (compress_cmd->parsed()) return cmd_compress(model_path, image_path, caption_arg, out_path);
    if (decompress_cmd->parsed()) return cmd_decompress(model_path, in_path, out_path);
    if (eval_cmd->parsed()) return cmd_eval(model_path, manifest_path, out_path);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
