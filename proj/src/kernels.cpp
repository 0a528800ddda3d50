#include "scgan/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

// Every kernel is written as a worker over a block of its output range; the
// serial variant runs the worker over the whole range, the parallel variant
// splits the range across OpenMP threads. No two blocks write the same
// output element and per-element summation order never depends on the split,
// so serial and parallel results are bitwise identical.

namespace scgan::kernels {

bool& parallel_enabled() {
  static bool enabled = true;
  return enabled;
}

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

namespace {

constexpr int kColBlock = 256;

// C[i, jb:je] (+)= sum_k A[i,k] * B[k, jb:je]
void gemm_nn_block(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate, int jb, int je) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    if (!accumulate)
      for (int j = jb; j < je; ++j) crow[j] = 0.0;
    for (int kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = b + static_cast<size_t>(kk) * n;
      for (int j = jb; j < je; ++j) crow[j] += av * brow[j];
    }
  }
}

// A stored [k, m]; C[ib:ie, :] (+)= A^T B. Streams B once per row block.
void gemm_tn_block(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate, int ib, int ie) {
  for (int i = ib; i < ie; ++i) {
    double* crow = c + static_cast<size_t>(i) * n;
    if (!accumulate) std::memset(crow, 0, sizeof(double) * n);
    for (int kk = 0; kk < k; ++kk) {
      const double av = a[static_cast<size_t>(kk) * m + i];
      const double* brow = b + static_cast<size_t>(kk) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// B stored [n, k]; C[i, j] = dot(A row i, B row j). Row blocks over i.
void gemm_nt_block(const double* a, const double* b, double* c, int m, int k,
                   int n, bool accumulate, int ib, int ie) {
  for (int i = ib; i < ie; ++i) {
    const double* arow = a + static_cast<size_t>(i) * k;
    double* crow = c + static_cast<size_t>(i) * n;
    int j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + static_cast<size_t>(j) * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
      for (int kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        s0 += av * b0[kk];
        s1 += av * b1[kk];
        s2 += av * b2[kk];
        s3 += av * b3[kk];
      }
      if (accumulate) {
        crow[j] += s0; crow[j + 1] += s1; crow[j + 2] += s2; crow[j + 3] += s3;
      } else {
        crow[j] = s0; crow[j + 1] = s1; crow[j + 2] = s2; crow[j + 3] = s3;
      }
    }
    for (; j < n; ++j) {
      const double* brow = b + static_cast<size_t>(j) * k;
      double s = 0;
      for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
      crow[j] = accumulate ? crow[j] + s : s;
    }
  }
}

void im2col_image(const double* x, int channels, int height, int width,
                  int ksize, int stride, int pad, int out_h, int out_w,
                  double* cols) {
  // cols layout: [out_h*out_w, channels*ksize*ksize] for one image
  const int patch = channels * ksize * ksize;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      double* dst = cols + (static_cast<size_t>(oy) * out_w + ox) * patch;
      for (int ch = 0; ch < channels; ++ch) {
        const double* src = x + static_cast<size_t>(ch) * height * width;
        for (int ky = 0; ky < ksize; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < ksize; ++kx) {
            const int ix = ox * stride - pad + kx;
            *dst++ = (iy >= 0 && iy < height && ix >= 0 && ix < width)
                         ? src[static_cast<size_t>(iy) * width + ix]
                         : 0.0;
          }
        }
      }
    }
  }
}

void col2im_image(const double* cols, int channels, int height, int width,
                  int ksize, int stride, int pad, int out_h, int out_w,
                  double* x) {
  const int patch = channels * ksize * ksize;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const double* src = cols + (static_cast<size_t>(oy) * out_w + ox) * patch;
      for (int ch = 0; ch < channels; ++ch) {
        double* dst = x + static_cast<size_t>(ch) * height * width;
        for (int ky = 0; ky < ksize; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < ksize; ++kx) {
            const int ix = ox * stride - pad + kx;
            const double v = *src++;
            if (iy >= 0 && iy < height && ix >= 0 && ix < width)
              dst[static_cast<size_t>(iy) * width + ix] += v;
          }
        }
      }
    }
  }
}

inline int conv_out(int size, int ksize, int stride, int pad) {
  return (size + 2 * pad - ksize) / stride + 1;
}

void bn_stats_channel(const double* x, int n, int c, int s, double* mean,
                      double* var, int cb, int ce) {
  const double inv = 1.0 / (static_cast<double>(n) * s);
  for (int ch = cb; ch < ce; ++ch) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double* row = x + (static_cast<size_t>(i) * c + ch) * s;
      for (int j = 0; j < s; ++j) {
        sum += row[j];
        sq += row[j] * row[j];
      }
    }
    const double mu = sum * inv;
    mean[ch] = mu;
    var[ch] = std::max(0.0, sq * inv - mu * mu);
  }
}

void bn_fwd_channel(const double* x, int n, int c, int s, const double* mean,
                    const double* var, const double* gamma, const double* beta,
                    double eps, double* y, double* xhat, int cb, int ce) {
  for (int ch = cb; ch < ce; ++ch) {
    const double inv_std = 1.0 / std::sqrt(var[ch] + eps);
    const double g = gamma[ch], b = beta[ch], mu = mean[ch];
    for (int i = 0; i < n; ++i) {
      const size_t off = (static_cast<size_t>(i) * c + ch) * s;
      for (int j = 0; j < s; ++j) {
        const double xh = (x[off + j] - mu) * inv_std;
        xhat[off + j] = xh;
        y[off + j] = g * xh + b;
      }
    }
  }
}

void bn_bwd_channel(const double* xhat, const double* dy, int n, int c, int s,
                    const double* gamma, const double* var, double eps,
                    double* dx, double* dgamma, double* dbeta, int cb, int ce) {
  const double count = static_cast<double>(n) * s;
  for (int ch = cb; ch < ce; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const size_t off = (static_cast<size_t>(i) * c + ch) * s;
      for (int j = 0; j < s; ++j) {
        sum_dy += dy[off + j];
        sum_dy_xhat += dy[off + j] * xhat[off + j];
      }
    }
    dgamma[ch] = sum_dy_xhat;
    dbeta[ch] = sum_dy;
    const double inv_std = 1.0 / std::sqrt(var[ch] + eps);
    const double scale = gamma[ch] * inv_std;
    const double mean_dy = sum_dy / count;
    const double mean_dy_xhat = sum_dy_xhat / count;
    for (int i = 0; i < n; ++i) {
      const size_t off = (static_cast<size_t>(i) * c + ch) * s;
      for (int j = 0; j < s; ++j)
        dx[off + j] =
            scale * (dy[off + j] - mean_dy - xhat[off + j] * mean_dy_xhat);
    }
  }
}

void adam_block(double* p, const double* g, double* m, double* v, int64_t t,
                double lr, double beta1, double beta2, double eps, int64_t i0,
                int64_t i1) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (int64_t i = i0; i < i1; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void sqdist_rows(const double* a, const double* b, double* out, int nb,
                 int dim, int ib, int ie) {
  for (int i = ib; i < ie; ++i) {
    const double* ar = a + static_cast<size_t>(i) * dim;
    double* orow = out + static_cast<size_t>(i) * nb;
    for (int j = 0; j < nb; ++j) {
      const double* br = b + static_cast<size_t>(j) * dim;
      double s = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double diff = ar[d] - br[d];
        s += diff * diff;
      }
      orow[j] = s;
    }
  }
}

void logsumexp_row(const double* m, double* out, int cols, int r0, int r1) {
  for (int r = r0; r < r1; ++r) {
    const double* row = m + static_cast<size_t>(r) * cols;
    double mx = row[0];
    for (int j = 1; j < cols; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (int j = 0; j < cols; ++j) s += std::exp(row[j] - mx);
    out[r] = mx + std::log(s);
  }
}

}  // namespace

// ------------------------------- serial -----------------------------------

namespace serial {

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  for (int jb = 0; jb < n; jb += kColBlock)
    gemm_nn_block(a, b, c, m, k, n, accumulate, jb, std::min(jb + kColBlock, n));
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  gemm_tn_block(a, b, c, m, k, n, accumulate, 0, m);
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  gemm_nt_block(a, b, c, m, k, n, accumulate, 0, m);
}

void add_bias(double* y, const double* bias, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    double* row = y + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) row[j] += bias[j];
  }
}

void col_sums(const double* a, double* out, int rows, int cols) {
  std::memset(out, 0, sizeof(double) * cols);
  for (int i = 0; i < rows; ++i) {
    const double* row = a + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) out[j] += row[j];
  }
}

void im2col(const double* x, int batch, int channels, int height, int width,
            int ksize, int stride, int pad, double* cols) {
  const int oh = conv_out(height, ksize, stride, pad);
  const int ow = conv_out(width, ksize, stride, pad);
  const size_t xstride = static_cast<size_t>(channels) * height * width;
  const size_t cstride =
      static_cast<size_t>(oh) * ow * channels * ksize * ksize;
  for (int b = 0; b < batch; ++b)
    im2col_image(x + b * xstride, channels, height, width, ksize, stride, pad,
                 oh, ow, cols + b * cstride);
}

void col2im_add(const double* cols, int batch, int channels, int height,
                int width, int ksize, int stride, int pad, double* x) {
  const int oh = conv_out(height, ksize, stride, pad);
  const int ow = conv_out(width, ksize, stride, pad);
  const size_t xstride = static_cast<size_t>(channels) * height * width;
  const size_t cstride =
      static_cast<size_t>(oh) * ow * channels * ksize * ksize;
  for (int b = 0; b < batch; ++b)
    col2im_image(cols + b * cstride, channels, height, width, ksize, stride,
                 pad, oh, ow, x + b * xstride);
}

void leaky_relu(const double* x, double* y, int64_t n, double slope) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
}

void leaky_relu_bwd(const double* x, const double* dy, double* dx, int64_t n,
                    double slope) {
  for (int64_t i = 0; i < n; ++i) dx[i] = x[i] > 0 ? dy[i] : slope * dy[i];
}

void tanh_fwd(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd(const double* y, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

void sigmoid_fwd(const double* x, double* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_bwd(const double* y, const double* dy, double* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
}

void bn_stats(const double* x, int n, int c, int s, double* mean, double* var) {
  bn_stats_channel(x, n, c, s, mean, var, 0, c);
}

void bn_fwd(const double* x, int n, int c, int s, const double* mean,
            const double* var, const double* gamma, const double* beta,
            double eps, double* y, double* xhat) {
  bn_fwd_channel(x, n, c, s, mean, var, gamma, beta, eps, y, xhat, 0, c);
}

void bn_bwd(const double* xhat, const double* dy, int n, int c, int s,
            const double* gamma, const double* var, double eps, double* dx,
            double* dgamma, double* dbeta) {
  bn_bwd_channel(xhat, dy, n, c, s, gamma, var, eps, dx, dgamma, dbeta, 0, c);
}

void adam_update(double* p, const double* g, double* m, double* v, int64_t n,
                 int64_t t, double lr, double beta1, double beta2, double eps) {
  adam_block(p, g, m, v, t, lr, beta1, beta2, eps, 0, n);
}

void sqdist_matrix(const double* a, const double* b, double* out, int na,
                   int nb, int dim) {
  sqdist_rows(a, b, out, nb, dim, 0, na);
}

void logsumexp_rows(const double* m, double* out, int rows, int cols) {
  logsumexp_row(m, out, cols, 0, rows);
}

}  // namespace serial

// -------------------------------- par --------------------------------------

namespace par {

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  const int nblocks = (n + kColBlock - 1) / kColBlock;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < nblocks; ++blk) {
    const int jb = blk * kColBlock;
    gemm_nn_block(a, b, c, m, k, n, accumulate, jb, std::min(jb + kColBlock, n));
  }
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  constexpr int kRowBlock = 64;
  const int nblocks = (m + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < nblocks; ++blk) {
    const int ib = blk * kRowBlock;
    gemm_tn_block(a, b, c, m, k, n, accumulate, ib, std::min(ib + kRowBlock, m));
  }
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
  constexpr int kRowBlock = 16;
  const int nblocks = (m + kRowBlock - 1) / kRowBlock;
#pragma omp parallel for schedule(static)
  for (int blk = 0; blk < nblocks; ++blk) {
    const int ib = blk * kRowBlock;
    gemm_nt_block(a, b, c, m, k, n, accumulate, ib, std::min(ib + kRowBlock, m));
  }
}

void add_bias(double* y, const double* bias, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    double* row = y + static_cast<size_t>(i) * cols;
    for (int j = 0; j < cols; ++j) row[j] += bias[j];
  }
}

void col_sums(const double* a, double* out, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += a[static_cast<size_t>(i) * cols + j];
    out[j] = s;
  }
}

void im2col(const double* x, int batch, int channels, int height, int width,
            int ksize, int stride, int pad, double* cols) {
  const int oh = conv_out(height, ksize, stride, pad);
  const int ow = conv_out(width, ksize, stride, pad);
  const size_t xstride = static_cast<size_t>(channels) * height * width;
  const size_t cstride =
      static_cast<size_t>(oh) * ow * channels * ksize * ksize;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b)
    im2col_image(x + b * xstride, channels, height, width, ksize, stride, pad,
                 oh, ow, cols + b * cstride);
}

void col2im_add(const double* cols, int batch, int channels, int height,
                int width, int ksize, int stride, int pad, double* x) {
  const int oh = conv_out(height, ksize, stride, pad);
  const int ow = conv_out(width, ksize, stride, pad);
  const size_t xstride = static_cast<size_t>(channels) * height * width;
  const size_t cstride =
      static_cast<size_t>(oh) * ow * channels * ksize * ksize;
#pragma omp parallel for schedule(static)
  for (int b = 0; b < batch; ++b)
    col2im_image(cols + b * cstride, channels, height, width, ksize, stride,
                 pad, oh, ow, x + b * xstride);
}

void leaky_relu(const double* x, double* y, int64_t n, double slope) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0 ? x[i] : slope * x[i];
}

void leaky_relu_bwd(const double* x, const double* dy, double* dx, int64_t n,
                    double slope) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = x[i] > 0 ? dy[i] : slope * dy[i];
}

void tanh_fwd(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

void tanh_bwd(const double* y, const double* dy, double* dx, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * (1.0 - y[i] * y[i]);
}

void sigmoid_fwd(const double* x, double* y, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
}

void sigmoid_bwd(const double* y, const double* dy, double* dx, int64_t n) {
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) dx[i] = dy[i] * y[i] * (1.0 - y[i]);
}

void bn_stats(const double* x, int n, int c, int s, double* mean, double* var) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch) bn_stats_channel(x, n, c, s, mean, var, ch, ch + 1);
}

void bn_fwd(const double* x, int n, int c, int s, const double* mean,
            const double* var, const double* gamma, const double* beta,
            double eps, double* y, double* xhat) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch)
    bn_fwd_channel(x, n, c, s, mean, var, gamma, beta, eps, y, xhat, ch, ch + 1);
}

void bn_bwd(const double* xhat, const double* dy, int n, int c, int s,
            const double* gamma, const double* var, double eps, double* dx,
            double* dgamma, double* dbeta) {
#pragma omp parallel for schedule(static)
  for (int ch = 0; ch < c; ++ch)
    bn_bwd_channel(xhat, dy, n, c, s, gamma, var, eps, dx, dgamma, dbeta, ch,
                   ch + 1);
}

void adam_update(double* p, const double* g, double* m, double* v, int64_t n,
                 int64_t t, double lr, double beta1, double beta2, double eps) {
  constexpr int64_t kBlock = 1 << 16;
  const int64_t nblocks = (n + kBlock - 1) / kBlock;
#pragma omp parallel for schedule(static)
  for (int64_t blk = 0; blk < nblocks; ++blk) {
    const int64_t i0 = blk * kBlock;
    adam_block(p, g, m, v, t, lr, beta1, beta2, eps, i0,
               std::min(i0 + kBlock, n));
  }
}

void sqdist_matrix(const double* a, const double* b, double* out, int na,
                   int nb, int dim) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < na; ++i) sqdist_rows(a, b, out, nb, dim, i, i + 1);
}

void logsumexp_rows(const double* m, double* out, int rows, int cols) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) logsumexp_row(m, out, cols, r, r + 1);
}

}  // namespace par

}  // namespace scgan::kernels
