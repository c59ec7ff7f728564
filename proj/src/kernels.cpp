#include "tgic/kernels.h"

#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tgic {
namespace kernels {

namespace {
#ifdef _OPENMP
Mode g_mode = Mode::kParallel;
#else
Mode g_mode = Mode::kSerial;
#endif
}  // namespace

Mode mode() { return g_mode; }
void set_mode(Mode m) { g_mode = m; }

int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// ---------------------------------------------------------------------------
// GEMM. Row-of-C accumulation (axpy form) so the k-loop order is fixed per
// output element regardless of threading.
// ---------------------------------------------------------------------------

namespace {

inline void gemm_nn_row(int i, int n, int k, const double* a, const double* b, double* c) {
  double* ci = c + static_cast<size_t>(i) * n;
  std::memset(ci, 0, sizeof(double) * static_cast<size_t>(n));
  const double* ai = a + static_cast<size_t>(i) * k;
  for (int p = 0; p < k; ++p) {
    const double av = ai[p];
    if (av == 0.0) continue;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}

inline void gemm_nt_row(int i, int n, int k, const double* a, const double* b, double* c) {
  const double* ai = a + static_cast<size_t>(i) * k;
  double* ci = c + static_cast<size_t>(i) * n;
  for (int j = 0; j < n; ++j) {
    const double* bj = b + static_cast<size_t>(j) * k;
    double s = 0.0;
    for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = s;
  }
}

}  // namespace

void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c) {
  if (g_mode == Mode::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) gemm_nn_row(i, n, k, a, b, c);
  } else {
    for (int i = 0; i < m; ++i) gemm_nn_row(i, n, k, a, b, c);
  }
}

void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c) {
  if (g_mode == Mode::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) gemm_nt_row(i, n, k, a, b, c);
  } else {
    for (int i = 0; i < m; ++i) gemm_nt_row(i, n, k, a, b, c);
  }
}

namespace {
inline void gemm_tn_acc_row(int i, int m, int n, int k, const double* a, const double* b,
                            double* c) {
  // C(i,:) += sum_p A(p,i) * B(p,:)
  double* ci = c + static_cast<size_t>(i) * n;
  for (int p = 0; p < k; ++p) {
    const double av = a[static_cast<size_t>(p) * m + i];
    if (av == 0.0) continue;
    const double* bp = b + static_cast<size_t>(p) * n;
    for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
  }
}
}  // namespace

void gemm_tn_acc(int m, int n, int k, const double* a, const double* b, double* c) {
  if (g_mode == Mode::kParallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) gemm_tn_acc_row(i, m, n, k, a, b, c);
  } else {
    for (int i = 0; i < m; ++i) gemm_tn_acc_row(i, m, n, k, a, b, c);
  }
}

// ---------------------------------------------------------------------------
// im2col / col2im
// ---------------------------------------------------------------------------

namespace {
inline void im2col_chan(const double* x, int cidx, int h, int w, int kh, int kw, int stride,
                        int pad, int oh, int ow, double* col) {
  const double* xc = x + static_cast<size_t>(cidx) * h * w;
  double* colc = col + static_cast<size_t>(cidx) * kh * kw * oh * ow;
  for (int ki = 0; ki < kh; ++ki) {
    for (int kj = 0; kj < kw; ++kj) {
      double* row = colc + static_cast<size_t>(ki * kw + kj) * oh * ow;
      for (int oi = 0; oi < oh; ++oi) {
        const int ii = oi * stride - pad + ki;
        if (ii < 0 || ii >= h) {
          std::memset(row + static_cast<size_t>(oi) * ow, 0, sizeof(double) * ow);
          continue;
        }
        const double* xrow = xc + static_cast<size_t>(ii) * w;
        double* orow = row + static_cast<size_t>(oi) * ow;
        for (int oj = 0; oj < ow; ++oj) {
          const int jj = oj * stride - pad + kj;
          orow[oj] = (jj >= 0 && jj < w) ? xrow[jj] : 0.0;
        }
      }
    }
  }
}
}  // namespace

void im2col(const double* x, int c, int h, int w, int kh, int kw, int stride, int pad,
            double* col) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w, kw, stride, pad);
  if (g_mode == Mode::kParallel) {
#pragma omp parallel for schedule(static)
    for (int cidx = 0; cidx < c; ++cidx) im2col_chan(x, cidx, h, w, kh, kw, stride, pad, oh, ow, col);
  } else {
    for (int cidx = 0; cidx < c; ++cidx) im2col_chan(x, cidx, h, w, kh, kw, stride, pad, oh, ow, col);
  }
}

namespace {
inline void col2im_chan(const double* col, int cidx, int h, int w, int kh, int kw, int stride,
                        int pad, int oh, int ow, double* dx) {
  double* dxc = dx + static_cast<size_t>(cidx) * h * w;
  const double* colc = col + static_cast<size_t>(cidx) * kh * kw * oh * ow;
  for (int ki = 0; ki < kh; ++ki) {
    for (int kj = 0; kj < kw; ++kj) {
      const double* row = colc + static_cast<size_t>(ki * kw + kj) * oh * ow;
      for (int oi = 0; oi < oh; ++oi) {
        const int ii = oi * stride - pad + ki;
        if (ii < 0 || ii >= h) continue;
        double* dxrow = dxc + static_cast<size_t>(ii) * w;
        const double* orow = row + static_cast<size_t>(oi) * ow;
        for (int oj = 0; oj < ow; ++oj) {
          const int jj = oj * stride - pad + kj;
          if (jj >= 0 && jj < w) dxrow[jj] += orow[oj];
        }
      }
    }
  }
}
}  // namespace

void col2im_acc(const double* col, int c, int h, int w, int kh, int kw, int stride, int pad,
                double* dx) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w, kw, stride, pad);
  // Each channel of dx is touched by one iteration only, so the parallel
  // form writes disjoint ranges.
  if (g_mode == Mode::kParallel) {
#pragma omp parallel for schedule(static)
    for (int cidx = 0; cidx < c; ++cidx)
      col2im_chan(col, cidx, h, w, kh, kw, stride, pad, oh, ow, dx);
  } else {
    for (int cidx = 0; cidx < c; ++cidx)
      col2im_chan(col, cidx, h, w, kh, kw, stride, pad, oh, ow, dx);
  }
}

}  // namespace kernels
}  // namespace tgic
