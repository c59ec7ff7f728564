#include "tgic/eval.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "tgic/common.h"
#include "tgic/dataset.h"

namespace tgic {
namespace eval {

namespace fs = std::filesystem;

EvalResult eval_dataset(const codec::CodecModel& model, const std::string& root,
                        const std::string& manifest_path) {
  EvalResult result;
  for (const std::string& name : data::read_manifest(manifest_path)) {
    try {
      Tensor image = data::load_image(data::image_path(root, name));
      const std::string caption = data::read_captions(root, name).front();
      codec::CompressResult sent = codec::compress(model, image, caption);
      const std::vector<uint8_t> bytes = codec::pack_container(sent.container);

      EvalRecord rec;
      rec.image_id = name;
      rec.file_bytes = static_cast<long>(bytes.size());
      const double pixels = static_cast<double>(image.dim(1)) * image.dim(2);
      rec.bpp_total = 8.0 * static_cast<double>(rec.file_bytes) / pixels;
      rec.bpp_text = 8.0 * static_cast<double>(caption.size() + 2) / pixels;
      rec.bpp_image = rec.bpp_total - rec.bpp_text;
      rec.psnr_db = codec::psnr_db(image, sent.reconstruction);
      result.records.push_back(rec);
    } catch (const InputError& e) {
      result.errors.emplace_back(name, e.what());
    } catch (const FormatError& e) {
      result.errors.emplace_back(name, e.what());
    }
  }
  return result;
}

namespace {

void put_value(std::ostream& o, double v) {
  if (std::isinf(v))
    o << "inf";
  else
    o << v;
}

}  // namespace

std::string format_eval_csv(const EvalResult& result) {
  std::ostringstream o;
  o.precision(12);
  o << "image_id,bpp_total,bpp_image,bpp_text,psnr_db,file_bytes\n";
  double bt = 0, bi = 0, bx = 0, ps = 0, fb = 0;
  for (const EvalRecord& r : result.records) {
    o << r.image_id << ',' << r.bpp_total << ',' << r.bpp_image << ',' << r.bpp_text << ',';
    put_value(o, r.psnr_db);
    o << ',' << r.file_bytes << '\n';
    bt += r.bpp_total;
    bi += r.bpp_image;
    bx += r.bpp_text;
    ps += r.psnr_db;
    fb += static_cast<double>(r.file_bytes);
  }
  if (!result.records.empty()) {
    const double n = static_cast<double>(result.records.size());
    o << "summary," << bt / n << ',' << bi / n << ',' << bx / n << ',';
    put_value(o, ps / n);
    o << ',' << fb / n << '\n';
  }
  return o.str();
}

void write_eval_csv(const std::string& path, const EvalResult& result) {
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::trunc);
  TGIC_CHECK_INPUT(out.good(), "cannot write CSV: " + path);
  out << format_eval_csv(result);
}

}  // namespace eval
}  // namespace tgic
