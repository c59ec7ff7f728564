// Benchmark comparing the serial reference kernels against the OpenMP
// variants on GEMM and conv-shaped workloads, and verifying that both modes
// produce bitwise-identical results.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "tgic/kernels.h"
#include "tgic/rng.h"

using namespace tgic;
using kernels::Mode;

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct GemmCase {
  const char* name;
  int m, n, k;
};

void bench_gemm(const GemmCase& c, int reps) {
  Rng rng(1);
  std::vector<double> a(static_cast<size_t>(c.m) * c.k);
  std::vector<double> b(static_cast<size_t>(c.k) * c.n);
  std::vector<double> out_s(static_cast<size_t>(c.m) * c.n);
  std::vector<double> out_p(out_s.size());
  for (auto& v : a) v = rng.uniform(-1.0, 1.0);
  for (auto& v : b) v = rng.uniform(-1.0, 1.0);

  const double flop = 2.0 * c.m * c.n * c.k * reps;
  kernels::set_mode(Mode::kSerial);
  double t0 = now_s();
  for (int r = 0; r < reps; ++r) kernels::gemm_nn(c.m, c.n, c.k, a.data(), b.data(), out_s.data());
  const double ts = now_s() - t0;

  kernels::set_mode(Mode::kParallel);
  t0 = now_s();
  for (int r = 0; r < reps; ++r) kernels::gemm_nn(c.m, c.n, c.k, a.data(), b.data(), out_p.data());
  const double tp = now_s() - t0;

  const bool same = std::memcmp(out_s.data(), out_p.data(), sizeof(double) * out_s.size()) == 0;
  std::printf("%-28s serial %7.2f GF/s   openmp %7.2f GF/s   speedup %5.2fx   bitwise %s\n",
              c.name, flop / ts / 1e9, flop / tp / 1e9, ts / tp, same ? "OK" : "MISMATCH");
}

void bench_conv(const char* name, int ic, int h, int w, int oc, int k, int stride, int reps) {
  Rng rng(2);
  const int pad = k / 2;
  const int oh = kernels::conv_out_dim(h, k, stride, pad);
  const int ow = kernels::conv_out_dim(w, k, stride, pad);
  const int kk = ic * k * k;
  std::vector<double> x(static_cast<size_t>(ic) * h * w);
  std::vector<double> wt(static_cast<size_t>(oc) * kk);
  std::vector<double> col(static_cast<size_t>(kk) * oh * ow);
  std::vector<double> out_s(static_cast<size_t>(oc) * oh * ow), out_p(out_s.size());
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : wt) v = rng.uniform(-1.0, 1.0);

  const double flop = 2.0 * oc * oh * ow * kk * reps;
  kernels::set_mode(Mode::kSerial);
  double t0 = now_s();
  for (int r = 0; r < reps; ++r) {
    kernels::im2col(x.data(), ic, h, w, k, k, stride, pad, col.data());
    kernels::gemm_nn(oc, oh * ow, kk, wt.data(), col.data(), out_s.data());
  }
  const double ts = now_s() - t0;

  kernels::set_mode(Mode::kParallel);
  t0 = now_s();
  for (int r = 0; r < reps; ++r) {
    kernels::im2col(x.data(), ic, h, w, k, k, stride, pad, col.data());
    kernels::gemm_nn(oc, oh * ow, kk, wt.data(), col.data(), out_p.data());
  }
  const double tp = now_s() - t0;

  const bool same = std::memcmp(out_s.data(), out_p.data(), sizeof(double) * out_s.size()) == 0;
  std::printf("%-28s serial %7.2f GF/s   openmp %7.2f GF/s   speedup %5.2fx   bitwise %s\n",
              name, flop / ts / 1e9, flop / tp / 1e9, ts / tp, same ? "OK" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 20;
  if (argc > 1) reps = std::stoi(argv[1]);
  std::printf("kernel benchmark, %d reps per case\n", reps);

  bench_gemm({"gemm 256x256x256", 256, 256, 256}, reps);
  bench_gemm({"gemm 512x512x512", 512, 512, 512}, reps / 4 + 1);
  bench_gemm({"gemm 96x1024x864 (conv-ish)", 96, 1024, 864}, reps);
  bench_gemm({"gemm 32x4096x27 (stem)", 32, 4096, 27}, reps);

  bench_conv("conv 32->32 k3 64x64", 32, 64, 64, 32, 3, 1, reps);
  bench_conv("conv 64->64 k3 16x16", 64, 16, 16, 64, 3, 1, reps);
  bench_conv("conv 64->64 k5 16x16", 64, 16, 16, 64, 5, 1, reps);
  bench_conv("conv 96->96 k3 8x8", 96, 8, 8, 96, 3, 1, reps);
  bench_conv("conv 3->32 k3 s2 64x64", 3, 64, 64, 32, 3, 2, reps);
  return 0;
}
