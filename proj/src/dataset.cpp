#include "tgic/dataset.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tgic/common.h"
#include "tgic/rng.h"

namespace tgic {
namespace data {

namespace fs = std::filesystem;

Tensor load_image(const std::string& path) {
  cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);
  TGIC_CHECK_INPUT(!m.empty(), "cannot read image: " + path);
  const int h = m.rows, w = m.cols;
  Tensor out({3, h, w});
  double* o = out.data();
  for (int y = 0; y < h; ++y) {
    const uchar* row = m.ptr<uchar>(y);
    for (int x = 0; x < w; ++x) {
      // OpenCV loads BGR; store RGB planes.
      o[0 * h * w + y * w + x] = row[3 * x + 2] / 255.0;
      o[1 * h * w + y * w + x] = row[3 * x + 1] / 255.0;
      o[2 * h * w + y * w + x] = row[3 * x + 0] / 255.0;
    }
  }
  return out;
}

static int to_byte(double v) {
  v = std::min(1.0, std::max(0.0, v));
  return static_cast<int>(std::lround(v * 255.0));
}

void save_image(const std::string& path, const Tensor& image) {
  TGIC_CHECK_INPUT(image.ndim() == 3 && image.dim(0) == 3, "save_image expects a (3,H,W) tensor");
  const int h = image.dim(1), w = image.dim(2);
  cv::Mat m(h, w, CV_8UC3);
  const double* p = image.data();
  for (int y = 0; y < h; ++y) {
    uchar* row = m.ptr<uchar>(y);
    for (int x = 0; x < w; ++x) {
      row[3 * x + 0] = static_cast<uchar>(to_byte(p[2 * h * w + y * w + x]));
      row[3 * x + 1] = static_cast<uchar>(to_byte(p[1 * h * w + y * w + x]));
      row[3 * x + 2] = static_cast<uchar>(to_byte(p[0 * h * w + y * w + x]));
    }
  }
  fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  TGIC_CHECK_INPUT(cv::imwrite(path, m), "cannot write image: " + path);
}

Tensor quantize_pixels(const Tensor& image) {
  Tensor out = image.clone();
  double* p = out.data();
  for (long i = 0; i < out.size(); ++i) p[i] = to_byte(p[i]) / 255.0;
  return out;
}

// Triangle-wave fold: reflection about the last sample without repeating it,
// wrapping around for pads wider than the image.
static int reflect_index(int idx, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  int m = idx % period;
  if (m >= n) m = period - m;
  return m;
}

Tensor pad_to_multiple(const Tensor& image, int multiple) {
  TGIC_CHECK_INPUT(image.ndim() == 3, "pad_to_multiple expects a (C,H,W) tensor");
  TGIC_CHECK_INPUT(multiple >= 1, "pad multiple must be positive");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const int hh = (h + multiple - 1) / multiple * multiple;
  const int ww = (w + multiple - 1) / multiple * multiple;
  if (hh == h && ww == w) return image;
  Tensor out({c, hh, ww});
  const double* src = image.data();
  double* dst = out.data();
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < hh; ++y) {
      const int sy = reflect_index(y, h);
      for (int x = 0; x < ww; ++x) {
        const int sx = reflect_index(x, w);
        dst[(k * hh + y) * ww + x] = src[(k * h + sy) * w + sx];
      }
    }
  return out;
}

Tensor crop(const Tensor& image, int height, int width) {
  TGIC_CHECK_INPUT(image.ndim() == 3, "crop expects a (C,H,W) tensor");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  TGIC_CHECK_INPUT(height >= 1 && height <= h && width >= 1 && width <= w,
                   "crop size exceeds image");
  if (height == h && width == w) return image;
  Tensor out({c, height, width});
  const double* src = image.data();
  double* dst = out.data();
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) dst[(k * height + y) * width + x] = src[(k * h + y) * w + x];
  return out;
}

Tensor resize_bilinear(const Tensor& image, int height, int width) {
  TGIC_CHECK_INPUT(image.ndim() == 3, "resize expects a (C,H,W) tensor");
  TGIC_CHECK_INPUT(height >= 1 && width >= 1, "resize target must be positive");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (height == h && width == w) return image;
  Tensor out({c, height, width});
  const double* src = image.data();
  double* dst = out.data();
  const double sy_scale = static_cast<double>(h) / height;
  const double sx_scale = static_cast<double>(w) / width;
  for (int y = 0; y < height; ++y) {
    double fy = (y + 0.5) * sy_scale - 0.5;
    fy = std::min(static_cast<double>(h - 1), std::max(0.0, fy));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      double fx = (x + 0.5) * sx_scale - 0.5;
      fx = std::min(static_cast<double>(w - 1), std::max(0.0, fx));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - x0;
      for (int k = 0; k < c; ++k) {
        const double* plane = src + static_cast<long>(k) * h * w;
        const double top = plane[y0 * w + x0] * (1.0 - wx) + plane[y0 * w + x1] * wx;
        const double bot = plane[y1 * w + x0] * (1.0 - wx) + plane[y1 * w + x1] * wx;
        dst[(k * height + y) * width + x] = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Tensor center_crop(const Tensor& image, int size) {
  TGIC_CHECK_INPUT(image.ndim() == 3, "center_crop expects a (C,H,W) tensor");
  TGIC_CHECK_INPUT(size >= 1, "crop size must be positive");
  Tensor img = image;
  int h = img.dim(1), w = img.dim(2);
  if (std::min(h, w) < size) {
    const double scale = static_cast<double>(size) / std::min(h, w);
    const int nh = std::max(size, static_cast<int>(std::lround(h * scale)));
    const int nw = std::max(size, static_cast<int>(std::lround(w * scale)));
    img = resize_bilinear(img, nh, nw);
    h = nh;
    w = nw;
  }
  const int y0 = (h - size) / 2;
  const int x0 = (w - size) / 2;
  if (y0 == 0 && x0 == 0 && h == size && w == size) return img;
  Tensor out({img.dim(0), size, size});
  const double* src = img.data();
  double* dst = out.data();
  for (int k = 0; k < img.dim(0); ++k)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        dst[(k * size + y) * size + x] = src[(k * h + y0 + y) * w + x0 + x];
  return out;
}

static std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> read_manifest(const std::string& path) {
  std::ifstream in(path);
  TGIC_CHECK_INPUT(in.good(), "cannot read manifest: " + path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    names.push_back(t);
  }
  return names;
}

std::string image_path(const std::string& root, const std::string& name) {
  for (const char* ext : {".png", ".jpg", ".jpeg"}) {
    fs::path p = fs::path(root) / "images" / (name + ext);
    if (fs::exists(p)) return p.string();
  }
  throw InputError("missing image for '" + name + "' under " + root + "/images");
}

std::vector<std::string> read_captions(const std::string& root, const std::string& name) {
  fs::path p = fs::path(root) / "captions" / (name + ".txt");
  std::ifstream in(p);
  TGIC_CHECK_INPUT(in.good(), "missing caption file: " + p.string());
  std::vector<std::string> captions;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) captions.push_back(line);
  }
  TGIC_CHECK_INPUT(!captions.empty(), "caption file has no captions: " + p.string());
  return captions;
}

Sample load_sample(const std::string& root, const std::string& name) {
  Sample s;
  s.name = name;
  s.image = load_image(image_path(root, name));
  s.captions = read_captions(root, name);
  return s;
}

Dataset load_dataset(const std::string& root, const std::string& manifest_path) {
  Dataset ds;
  ds.root = root;
  for (const std::string& name : read_manifest(manifest_path))
    ds.samples.push_back(load_sample(root, name));
  return ds;
}

namespace {

struct DemoColor {
  const char* name;
  double r, g, b;
};

const DemoColor kDemoColors[] = {
    {"red", 0.85, 0.18, 0.15},  {"green", 0.18, 0.75, 0.22}, {"blue", 0.15, 0.3, 0.85},
    {"gold", 0.88, 0.72, 0.18}, {"teal", 0.12, 0.62, 0.6},   {"pink", 0.9, 0.45, 0.6},
    {"gray", 0.55, 0.55, 0.55},
};

const char* const kDemoShapes[] = {"box", "ring", "bars"};

Tensor demo_image(int size, const DemoColor& c, int shape, Rng& rng) {
  Tensor img({3, size, size});
  double* p = img.data();
  const double cx = size * (0.35 + 0.3 * rng.uniform());
  const double cy = size * (0.35 + 0.3 * rng.uniform());
  const double radius = size * (0.18 + 0.12 * rng.uniform());
  const int stripe = std::max(2, size / (6 + static_cast<int>(rng.index(6))));
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / (size - 1);
      const double v = static_cast<double>(y) / (size - 1);
      double bg = 0.25 + 0.35 * u + 0.2 * v;
      double rr = bg * 0.9, gg = bg, bb = bg * 1.1;
      bool inside = false;
      const double dx = x - cx, dy = y - cy;
      const double dist = std::sqrt(dx * dx + dy * dy);
      switch (shape) {
        case 0:  // box
          inside = std::abs(dx) < radius && std::abs(dy) < radius;
          break;
        case 1:  // ring
          inside = dist < radius && dist > radius * 0.55;
          break;
        default:  // bars
          inside = (x / stripe) % 2 == 0 && std::abs(dy) < 1.8 * radius;
          break;
      }
      if (inside) {
        const double shade = 0.85 + 0.15 * std::sin(0.35 * x) * std::sin(0.3 * y);
        rr = c.r * shade;
        gg = c.g * shade;
        bb = c.b * shade;
      }
      const double noise = 0.015 * rng.uniform();
      p[(0 * size + y) * size + x] = std::min(1.0, std::max(0.0, rr + noise));
      p[(1 * size + y) * size + x] = std::min(1.0, std::max(0.0, gg + noise));
      p[(2 * size + y) * size + x] = std::min(1.0, std::max(0.0, bb + noise));
    }
  return img;
}

}  // namespace

void write_demo_dataset(const std::string& root, int train_count, int test_count, int size,
                        uint64_t seed) {
  const int total = train_count + test_count;
  const int combos = static_cast<int>(std::size(kDemoColors) * std::size(kDemoShapes));
  TGIC_CHECK_INPUT(train_count >= 1 && test_count >= 0 && total <= combos,
                   "demo dataset supports up to " + std::to_string(combos) + " samples");
  TGIC_CHECK_INPUT(size >= 16, "demo images must be at least 16 pixels");
  fs::create_directories(fs::path(root) / "images");
  fs::create_directories(fs::path(root) / "captions");
  Rng rng(seed);
  std::ofstream train_out(fs::path(root) / "train.txt");
  std::ofstream test_out(fs::path(root) / "test.txt");
  for (int i = 0; i < total; ++i) {
    const DemoColor& color = kDemoColors[i % std::size(kDemoColors)];
    const int shape = (i / static_cast<int>(std::size(kDemoColors))) % 3;
    const std::string name = std::string(color.name) + "_" + kDemoShapes[shape];
    save_image((fs::path(root) / "images" / (name + ".png")).string(),
               demo_image(size, color, shape, rng));
    std::ofstream(fs::path(root) / "captions" / (name + ".txt"))
        << color.name << ' ' << kDemoShapes[shape] << '\n';
    (i < train_count ? train_out : test_out) << name << '\n';
  }
}

}  // namespace data
}  // namespace tgic
