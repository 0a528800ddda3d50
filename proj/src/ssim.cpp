#include "scgan/ssim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "scgan/kernels.hpp"

namespace scgan {

void SimilarityMatrix::set(int i, int j, double v) {
  require(i != j, "similarity matrix entries require i != j");
  if (measure == SimMeasure::euclidean)
    require(v >= 0.0, "euclidean entries must be non-negative");
  else
    require(v >= -1.0 - 1e-9 && v <= 1.0 + 1e-9, "ssim entries must be in [-1,1]");
  values[key(i, j)] = v;
}

double SimilarityMatrix::get(int i, int j) const {
  auto it = values.find(key(i, j));
  require(it != values.end(), "similarity matrix has no entry for pair");
  return it->second;
}

namespace {

std::vector<double> make_window(const SSIMConfig& cfg) {
  std::vector<double> w(static_cast<size_t>(cfg.window_size));
  if (cfg.window == WindowKind::uniform) {
    std::fill(w.begin(), w.end(), 1.0 / cfg.window_size);
    return w;
  }
  const int half = cfg.window_size / 2;
  double sum = 0.0;
  for (int i = 0; i < cfg.window_size; ++i) {
    const double d = i - half;
    w[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * cfg.sigma * cfg.sigma));
    sum += w[static_cast<size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Adjoint of the valid separable correlation: out[h, w] += window-weighted
// scatter of the per-window map.
void scatter_full(const double* m, int h, int w, const std::vector<double>& win,
                  double* tmp /* h x wv */, double* out /* h x w, accumulated */) {
  const int k = static_cast<int>(win.size());
  const int wv = w - k + 1, hv = h - k + 1;
  std::memset(tmp, 0, sizeof(double) * static_cast<size_t>(h) * wv);
  for (int y = 0; y < hv; ++y) {
    const double* mrow = m + static_cast<size_t>(y) * wv;
    for (int d = 0; d < k; ++d) {
      double* trow = tmp + static_cast<size_t>(y + d) * wv;
      const double wd = win[static_cast<size_t>(d)];
      for (int x = 0; x < wv; ++x) trow[x] += wd * mrow[x];
    }
  }
  for (int y = 0; y < h; ++y) {
    const double* trow = tmp + static_cast<size_t>(y) * wv;
    double* orow = out + static_cast<size_t>(y) * w;
    for (int x = 0; x < wv; ++x) {
      const double tv = trow[x];
      for (int d = 0; d < k; ++d) orow[x + d] += win[static_cast<size_t>(d)] * tv;
    }
  }
}

// Per-thread scratch for the pair evaluation; sc_modified evaluates many
// pairs per step, so buffers are reused rather than reallocated.
struct Workspace {
  std::vector<double> buf;
  size_t used = 0;

  // Must be called before the takes of a scope: growing the buffer later
  // would invalidate previously taken pointers.
  void ensure(size_t extra) {
    if (used + extra > buf.size()) buf.resize(used + extra);
  }
  double* take(size_t n) {
    require(used + n <= buf.size(), "ssim workspace: reserve before take");
    double* p = buf.data() + used;
    used += n;
    return p;
  }
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

struct WorkspaceScope {
  size_t saved;
  WorkspaceScope() : saved(workspace().used) {}
  ~WorkspaceScope() { workspace().used = saved; }
};

struct Plane {
  double* d;
  size_t n;
  double* p() { return d; }
  const double* p() const { return d; }
  double& operator[](size_t i) { return d[i]; }
  double operator[](size_t i) const { return d[i]; }
  explicit Plane(size_t count) : d(workspace().take(count)), n(count) {}
};

void check_pair(const ImageView& x, const ImageView& y, const SSIMConfig& cfg) {
  cfg.validate();
  require(x.channels == y.channels && x.height == y.height && x.width == y.width,
          "ssim_pair: image shapes do not match");
  require(x.range == y.range, "ssim_pair: image ranges do not match");
  require(cfg.window_size <= std::min(x.height, x.width),
          "ssim window larger than image");
}

// Row-then-column window filtering of the five products (x, y, x^2, y^2, xy)
// in single fused passes.
void ssim_maps(const double* x, const double* y, int h, int w,
               const std::vector<double>& win, double* tmp5 /* 5*h*wv */,
               double* mu_x, double* mu_y, double* m_xx, double* m_yy,
               double* m_xy) {
  const int k = static_cast<int>(win.size());
  const int wv = w - k + 1, hv = h - k + 1;
  const size_t tplane = static_cast<size_t>(h) * wv;
  double* t[5] = {tmp5, tmp5 + tplane, tmp5 + 2 * tplane, tmp5 + 3 * tplane,
                  tmp5 + 4 * tplane};
  for (int yy = 0; yy < h; ++yy) {
    const double* xr = x + static_cast<size_t>(yy) * w;
    const double* yr = y + static_cast<size_t>(yy) * w;
    for (int xv = 0; xv < wv; ++xv) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int d = 0; d < k; ++d) {
        const double wd = win[static_cast<size_t>(d)];
        const double a = xr[xv + d], b = yr[xv + d];
        sx += wd * a;
        sy += wd * b;
        sxx += wd * a * a;
        syy += wd * b * b;
        sxy += wd * a * b;
      }
      const size_t at = static_cast<size_t>(yy) * wv + xv;
      t[0][at] = sx;
      t[1][at] = sy;
      t[2][at] = sxx;
      t[3][at] = syy;
      t[4][at] = sxy;
    }
  }
  double* out[5] = {mu_x, mu_y, m_xx, m_yy, m_xy};
  for (int yy = 0; yy < hv; ++yy)
    for (int xv = 0; xv < wv; ++xv) {
      const size_t at = static_cast<size_t>(yy) * wv + xv;
      for (int m = 0; m < 5; ++m) {
        double s = 0.0;
        const double* col = t[m] + static_cast<size_t>(yy) * wv + xv;
        for (int d = 0; d < k; ++d) s += win[static_cast<size_t>(d)] * col[static_cast<size_t>(d) * wv];
        out[m][at] = s;
      }
    }
}

// Shared implementation: value plus optional gradients. The gradient needs
// four scatter passes total: one combined map per side plus the shared
// dS/dsigma_xx and dS/dsigma_xy maps (identical for both sides).
double ssim_impl(const ImageView& xv, const ImageView& yv, const SSIMConfig& cfg,
                 double* dx, double* dy, double scale) {
  check_pair(xv, yv, cfg);
  const int c = xv.channels, h = xv.height, w = xv.width;
  const int k = cfg.window_size;
  const int hvn = h - k + 1, wvn = w - k + 1;
  const size_t plane = static_cast<size_t>(h) * w;
  const size_t vplane = static_cast<size_t>(hvn) * wvn;
  const std::vector<double> win = make_window(cfg);

  const double c1 = cfg.k1 * cfg.dynamic_range * cfg.k1 * cfg.dynamic_range;
  const double c2 = cfg.k2 * cfg.dynamic_range * cfg.k2 * cfg.dynamic_range;

  // Remap to [0,1] if needed; gradient picks up the 1/2 factor.
  const bool remap = xv.range == ImageRange::sym;
  const double gmap = remap ? 0.5 : 1.0;
  const bool want_grad = dx || dy;

  WorkspaceScope scope;
  const size_t hwv = static_cast<size_t>(h) * wvn;
  workspace().ensure(6 * plane + 9 * vplane + 6 * hwv);
  Plane x(plane), y(plane);
  Plane mu_x(vplane), mu_y(vplane), m_xx(vplane), m_yy(vplane), m_xy(vplane);
  Plane tmp5(5 * hwv);
  Plane tmp(hwv);
  Plane p_x(vplane), p_y(vplane), g_sig(vplane), g_xy(vplane);
  Plane a_x(plane), a_y(plane), sb(plane), sc(plane);

  const double norm = 1.0 / (static_cast<double>(c) * vplane);
  double value = 0.0;

  for (int ch = 0; ch < c; ++ch) {
    const double* xr = xv.data + static_cast<size_t>(ch) * plane;
    const double* yr = yv.data + static_cast<size_t>(ch) * plane;
    for (size_t i = 0; i < plane; ++i) {
      x[i] = remap ? (xr[i] + 1.0) * 0.5 : xr[i];
      y[i] = remap ? (yr[i] + 1.0) * 0.5 : yr[i];
    }
    ssim_maps(x.p(), y.p(), h, w, win, tmp5.p(), mu_x.p(), mu_y.p(), m_xx.p(),
              m_yy.p(), m_xy.p());

    for (size_t p = 0; p < vplane; ++p) {
      const double mx = mu_x[p], my = mu_y[p];
      const double sxx = m_xx[p] - mx * mx;
      const double syy = m_yy[p] - my * my;
      const double sxy = m_xy[p] - mx * my;
      const double a1 = 2.0 * mx * my + c1, a2 = 2.0 * sxy + c2;
      const double b1 = mx * mx + my * my + c1, b2 = sxx + syy + c2;
      const double inv = 1.0 / (b1 * b2);
      const double s = a1 * a2 * inv;
      value += s;
      if (want_grad) {
        const double gs = -s / b2;        // dS/dsigma_xx == dS/dsigma_yy
        const double gx = 2.0 * a1 * inv; // dS/dsigma_xy
        g_sig[p] = gs;
        g_xy[p] = gx;
        // combined per-window maps: dS/dmu_self - 2*gs*mu_self - gx*mu_other
        const double gmu_x = 2.0 * my * a2 * inv - s * 2.0 * mx / b1;
        const double gmu_y = 2.0 * mx * a2 * inv - s * 2.0 * my / b1;
        p_x[p] = gmu_x - 2.0 * gs * mx - gx * my;
        p_y[p] = gmu_y - 2.0 * gs * my - gx * mx;
      }
    }

    if (want_grad) {
      std::memset(sb.p(), 0, sizeof(double) * plane);
      scatter_full(g_sig.p(), h, w, win, tmp.p(), sb.p());
      std::memset(sc.p(), 0, sizeof(double) * plane);
      scatter_full(g_xy.p(), h, w, win, tmp.p(), sc.p());
      const double f = scale * gmap * norm;
      if (dx) {
        std::memset(a_x.p(), 0, sizeof(double) * plane);
        scatter_full(p_x.p(), h, w, win, tmp.p(), a_x.p());
        double* dst = dx + static_cast<size_t>(ch) * plane;
        for (size_t i = 0; i < plane; ++i)
          dst[i] += f * (a_x[i] + 2.0 * x[i] * sb[i] + y[i] * sc[i]);
      }
      if (dy) {
        std::memset(a_y.p(), 0, sizeof(double) * plane);
        scatter_full(p_y.p(), h, w, win, tmp.p(), a_y.p());
        double* dst = dy + static_cast<size_t>(ch) * plane;
        for (size_t i = 0; i < plane; ++i)
          dst[i] += f * (a_y[i] + 2.0 * y[i] * sb[i] + x[i] * sc[i]);
      }
    }
  }
  return value * norm;
}

}  // namespace

double ssim_pair(const ImageView& x, const ImageView& y, const SSIMConfig& cfg) {
  return ssim_impl(x, y, cfg, nullptr, nullptr, 1.0);
}

double ssim_pair(const ImageBatch& batch, int i, int j, const SSIMConfig& cfg) {
  return ssim_pair(batch.image(i), batch.image(j), cfg);
}

double ssim_pair_grad(const ImageView& x, const ImageView& y,
                      const SSIMConfig& cfg, double* dx, double* dy,
                      double scale) {
  return ssim_impl(x, y, cfg, dx, dy, scale);
}

SimilarityMatrix ssim_matrix(const ImageBatch& batch,
                             std::span<const IndexPair> pairs,
                             const SSIMConfig& cfg) {
  SimilarityMatrix m;
  m.measure = SimMeasure::ssim;
  for (const IndexPair& p : pairs) {
    require(p.i >= 0 && p.i < batch.batch() && p.j >= 0 && p.j < batch.batch(),
            "ssim_matrix: pair index out of range");
    require(p.i != p.j, "ssim_matrix: pairs must have i != j");
    m.pairs.push_back(p);
  }
  // Deduplicate on the unordered pair so each SSIM is evaluated once.
  std::vector<IndexPair> todo;
  {
    std::unordered_map<int64_t, bool> seen;
    for (const IndexPair& p : m.pairs)
      if (!seen[SimilarityMatrix::key(p.i, p.j)]) {
        seen[SimilarityMatrix::key(p.i, p.j)] = true;
        todo.push_back(p);
      }
  }
  std::vector<double> vals(todo.size());
  if (kernels::parallel_enabled()) {
#pragma omp parallel for schedule(static)
    for (size_t t = 0; t < todo.size(); ++t)
      vals[t] = ssim_pair(batch, todo[t].i, todo[t].j, cfg);
  } else {
    for (size_t t = 0; t < todo.size(); ++t)
      vals[t] = ssim_pair(batch, todo[t].i, todo[t].j, cfg);
  }
  for (size_t t = 0; t < todo.size(); ++t) m.set(todo[t].i, todo[t].j, vals[t]);
  return m;
}

}  // namespace scgan
