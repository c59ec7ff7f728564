#ifndef TGIC_DATASET_H_
#define TGIC_DATASET_H_

#include <string>
#include <vector>

#include "tgic/tensor.h"

namespace tgic {
namespace data {

// One manifest entry: image as (3, H, W) RGB in [0, 1] plus its caption lines.
struct Sample {
  std::string name;
  Tensor image;
  std::vector<std::string> captions;
};

struct Dataset {
  std::string root;
  std::vector<Sample> samples;
};

// 8-bit image file -> (3, H, W) RGB doubles in [0, 1]. InputError if unreadable.
Tensor load_image(const std::string& path);

// Clamp to [0, 1], quantize to the 8-bit grid, write by extension (.png/.jpg).
// Parent directories are created as needed.
void save_image(const std::string& path, const Tensor& image);

// Snap [0, 1] values onto the 8-bit grid the files use (round(v * 255) / 255).
Tensor quantize_pixels(const Tensor& image);

// Bottom/right reflect padding (mirror about the last row/column) up to the
// next multiple of `multiple`.
Tensor pad_to_multiple(const Tensor& image, int multiple);

// Top-left corner crop back to height x width.
Tensor crop(const Tensor& image, int height, int width);

// Bilinear resample (half-pixel centers, edges clamped).
Tensor resize_bilinear(const Tensor& image, int height, int width);

// Center crop to size x size. If the shorter side is below `size`, the image
// is first upscaled (aspect preserved) so the crop is always full.
Tensor center_crop(const Tensor& image, int size);

// One name per line; blank lines and '#' comments are skipped.
std::vector<std::string> read_manifest(const std::string& path);

// Path of images/<name>.png|jpg|jpeg under root, whichever exists.
std::string image_path(const std::string& root, const std::string& name);

// Non-empty lines of captions/<name>.txt (UTF-8 passthrough, CR stripped).
// InputError if the file is missing or holds no captions.
std::vector<std::string> read_captions(const std::string& root, const std::string& name);

Sample load_sample(const std::string& root, const std::string& name);
Dataset load_dataset(const std::string& root, const std::string& manifest_path);

// Synthetic color/shape dataset for demos and smoke runs: size x size PNGs
// under root/images, one short caption each ("<color> <shape>"), and
// train.txt / test.txt manifests. Deterministic in seed.
void write_demo_dataset(const std::string& root, int train_count, int test_count, int size,
                        uint64_t seed);

}  // namespace data
}  // namespace tgic

#endif  // TGIC_DATASET_H_
