#ifndef TGIC_EVAL_H_
#define TGIC_EVAL_H_

#include <string>
#include <vector>

#include "tgic/codec_pipeline.h"

namespace tgic {
namespace eval {

struct EvalRecord {
  std::string image_id;
  double bpp_total = 0.0;
  double bpp_image = 0.0;
  double bpp_text = 0.0;  // includes the container's 2-byte length prefix
  double psnr_db = 0.0;   // +inf when reconstruction matches bitwise
  long file_bytes = 0;
};

struct EvalResult {
  std::vector<EvalRecord> records;
  // (image_id, message) for images that could not be evaluated; the run
  // continues past them.
  std::vector<std::pair<std::string, std::string>> errors;
};

// Compress + decompress metrics for every manifest entry using its first
// caption. Pure measurement: nothing under root is modified and no bitstream
// files are written.
EvalResult eval_dataset(const codec::CodecModel& model, const std::string& root,
                        const std::string& manifest_path);

// Header, one row per record, then a "summary" row of column means (only
// when there is at least one record).
std::string format_eval_csv(const EvalResult& result);
void write_eval_csv(const std::string& path, const EvalResult& result);

}  // namespace eval
}  // namespace tgic

#endif  // TGIC_EVAL_H_
