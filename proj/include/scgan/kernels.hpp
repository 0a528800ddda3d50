#pragma once

#include <cstdint>

namespace scgan::kernels {

// Global switch between the OpenMP kernels and the serial reference
// implementations. Both variants share the same per-output-block workers, so
// results are bitwise identical; the serial path exists for testing and for
// the kernel benchmark. Default: parallel.
bool& parallel_enabled();

// Threads used by the parallel variants (0 = OpenMP default).
void set_threads(int n);
int thread_count();

// ---------------------------------------------------------------------------
// GEMM family. Row-major. "nn": C = A[M,K] * B[K,N]; "tn": C = A^T with A
// stored [K,M]; "nt": C = A[M,K] * B[N,K]^T. With accumulate, adds into C.
// ---------------------------------------------------------------------------
namespace serial {
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
void add_bias(double* y, const double* bias, int rows, int cols);
void col_sums(const double* a, double* out, int rows, int cols);
void im2col(const double* x, int batch, int channels, int height, int width,
            int ksize, int stride, int pad, double* cols);
void col2im_add(const double* cols, int batch, int channels, int height,
                int width, int ksize, int stride, int pad, double* x);
void leaky_relu(const double* x, double* y, int64_t n, double slope);
void leaky_relu_bwd(const double* x, const double* dy, double* dx, int64_t n,
                    double slope);
void tanh_fwd(const double* x, double* y, int64_t n);
void tanh_bwd(const double* y, const double* dy, double* dx, int64_t n);
void sigmoid_fwd(const double* x, double* y, int64_t n);
void sigmoid_bwd(const double* y, const double* dy, double* dx, int64_t n);
void bn_stats(const double* x, int n, int c, int s, double* mean, double* var);
void bn_fwd(const double* x, int n, int c, int s, const double* mean,
            const double* var, const double* gamma, const double* beta,
            double eps, double* y, double* xhat);
void bn_bwd(const double* xhat, const double* dy, int n, int c, int s,
            const double* gamma, const double* var, double eps, double* dx,
            double* dgamma, double* dbeta);
void adam_update(double* p, const double* g, double* m, double* v, int64_t n,
                 int64_t t, double lr, double beta1, double beta2, double eps);
void sqdist_matrix(const double* a, const double* b, double* out, int na,
                   int nb, int dim);
void logsumexp_rows(const double* m, double* out, int rows, int cols);
}  // namespace serial

namespace par {
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate);
void add_bias(double* y, const double* bias, int rows, int cols);
void col_sums(const double* a, double* out, int rows, int cols);
void im2col(const double* x, int batch, int channels, int height, int width,
            int ksize, int stride, int pad, double* cols);
void col2im_add(const double* cols, int batch, int channels, int height,
                int width, int ksize, int stride, int pad, double* x);
void leaky_relu(const double* x, double* y, int64_t n, double slope);
void leaky_relu_bwd(const double* x, const double* dy, double* dx, int64_t n,
                    double slope);
void tanh_fwd(const double* x, double* y, int64_t n);
void tanh_bwd(const double* y, const double* dy, double* dx, int64_t n);
void sigmoid_fwd(const double* x, double* y, int64_t n);
void sigmoid_bwd(const double* y, const double* dy, double* dx, int64_t n);
void bn_stats(const double* x, int n, int c, int s, double* mean, double* var);
void bn_fwd(const double* x, int n, int c, int s, const double* mean,
            const double* var, const double* gamma, const double* beta,
            double eps, double* y, double* xhat);
void bn_bwd(const double* xhat, const double* dy, int n, int c, int s,
            const double* gamma, const double* var, double eps, double* dx,
            double* dgamma, double* dbeta);
void adam_update(double* p, const double* g, double* m, double* v, int64_t n,
                 int64_t t, double lr, double beta1, double beta2, double eps);
void sqdist_matrix(const double* a, const double* b, double* out, int na,
                   int nb, int dim);
void logsumexp_rows(const double* m, double* out, int rows, int cols);
}  // namespace par

// Dispatching entry points used by the rest of the library.
#define SCGAN_DISPATCH(fn, ...) \
  (parallel_enabled() ? par::fn(__VA_ARGS__) : serial::fn(__VA_ARGS__))

inline void gemm_nn(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate = false) {
  SCGAN_DISPATCH(gemm_nn, a, b, c, m, k, n, accumulate);
}
inline void gemm_tn(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate = false) {
  SCGAN_DISPATCH(gemm_tn, a, b, c, m, k, n, accumulate);
}
inline void gemm_nt(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate = false) {
  SCGAN_DISPATCH(gemm_nt, a, b, c, m, k, n, accumulate);
}
inline void add_bias(double* y, const double* bias, int rows, int cols) {
  SCGAN_DISPATCH(add_bias, y, bias, rows, cols);
}
inline void col_sums(const double* a, double* out, int rows, int cols) {
  SCGAN_DISPATCH(col_sums, a, out, rows, cols);
}
inline void im2col(const double* x, int batch, int channels, int height,
                   int width, int ksize, int stride, int pad, double* cols) {
  SCGAN_DISPATCH(im2col, x, batch, channels, height, width, ksize, stride, pad,
                 cols);
}
inline void col2im_add(const double* cols, int batch, int channels, int height,
                       int width, int ksize, int stride, int pad, double* x) {
  SCGAN_DISPATCH(col2im_add, cols, batch, channels, height, width, ksize,
                 stride, pad, x);
}

// Output spatial size of a strided convolution; also the patch-grid size used
// by im2col/col2im.
inline int conv_out_size(int size, int ksize, int stride, int pad) {
  return (size + 2 * pad - ksize) / stride + 1;
}
inline void leaky_relu(const double* x, double* y, int64_t n, double slope) {
  SCGAN_DISPATCH(leaky_relu, x, y, n, slope);
}
inline void leaky_relu_bwd(const double* x, const double* dy, double* dx,
                           int64_t n, double slope) {
  SCGAN_DISPATCH(leaky_relu_bwd, x, dy, dx, n, slope);
}
inline void tanh_fwd(const double* x, double* y, int64_t n) {
  SCGAN_DISPATCH(tanh_fwd, x, y, n);
}
inline void tanh_bwd(const double* y, const double* dy, double* dx, int64_t n) {
  SCGAN_DISPATCH(tanh_bwd, y, dy, dx, n);
}
inline void sigmoid_fwd(const double* x, double* y, int64_t n) {
  SCGAN_DISPATCH(sigmoid_fwd, x, y, n);
}
inline void sigmoid_bwd(const double* y, const double* dy, double* dx,
                        int64_t n) {
  SCGAN_DISPATCH(sigmoid_bwd, y, dy, dx, n);
}
inline void bn_stats(const double* x, int n, int c, int s, double* mean,
                     double* var) {
  SCGAN_DISPATCH(bn_stats, x, n, c, s, mean, var);
}
inline void bn_fwd(const double* x, int n, int c, int s, const double* mean,
                   const double* var, const double* gamma, const double* beta,
                   double eps, double* y, double* xhat) {
  SCGAN_DISPATCH(bn_fwd, x, n, c, s, mean, var, gamma, beta, eps, y, xhat);
}
inline void bn_bwd(const double* xhat, const double* dy, int n, int c, int s,
                   const double* gamma, const double* var, double eps,
                   double* dx, double* dgamma, double* dbeta) {
  SCGAN_DISPATCH(bn_bwd, xhat, dy, n, c, s, gamma, var, eps, dx, dgamma, dbeta);
}
inline void adam_update(double* p, const double* g, double* m, double* v,
                        int64_t n, int64_t t, double lr, double beta1,
                        double beta2, double eps) {
  SCGAN_DISPATCH(adam_update, p, g, m, v, n, t, lr, beta1, beta2, eps);
}
inline void sqdist_matrix(const double* a, const double* b, double* out,
                          int na, int nb, int dim) {
  SCGAN_DISPATCH(sqdist_matrix, a, b, out, na, nb, dim);
}
inline void logsumexp_rows(const double* m, double* out, int rows, int cols) {
  SCGAN_DISPATCH(logsumexp_rows, m, out, rows, cols);
}

#undef SCGAN_DISPATCH

}  // namespace scgan::kernels
