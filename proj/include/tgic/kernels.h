#ifndef TGIC_KERNELS_H_
#define TGIC_KERNELS_H_

#include <cstddef>

namespace tgic {
namespace kernels {

// All kernels exist in a serial reference form and an OpenMP form. Both
// accumulate each output element in the same order, so results are bitwise
// identical for any thread count; tests assert this. The parallel path is
// the default when built with OpenMP.
enum class Mode { kSerial, kParallel };

Mode mode();
void set_mode(Mode m);

// C(M,N) = A(M,K) * B(K,N), row-major, C overwritten.
void gemm_nn(int m, int n, int k, const double* a, const double* b, double* c);
// C(M,N) = A(M,K) * B(N,K)^T.
void gemm_nt(int m, int n, int k, const double* a, const double* b, double* c);
// C(M,N) += A(K,M)^T * B(K,N).
void gemm_tn_acc(int m, int n, int k, const double* a, const double* b, double* c);

// im2col for a single image: x(C,H,W) -> col(C*kh*kw, OH*OW), zero padding.
void im2col(const double* x, int c, int h, int w, int kh, int kw, int stride, int pad,
            double* col);
// Transpose of im2col: accumulates col gradients back into dx(C,H,W).
void col2im_acc(const double* col, int c, int h, int w, int kh, int kw, int stride, int pad,
                double* dx);

int conv_out_dim(int in, int k, int stride, int pad);

}  // namespace kernels
}  // namespace tgic

#endif  // TGIC_KERNELS_H_
