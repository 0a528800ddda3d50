#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "scgan/rng.hpp"
#include "scgan/ssim.hpp"

using namespace scgan;

namespace {

ImageBatch random_images(int n, int c, int h, int w, Rng& rng,
                         ImageRange range = ImageRange::unit) {
  Tensor t({n, c, h, w});
  const double lo = range == ImageRange::unit ? 0.0 : -1.0;
  for (auto& v : t.data) v = rng.uniform(lo, 1.0);
  return ImageBatch(std::move(t), range);
}

}  // namespace

TEST_CASE("ssim of an image with itself is exactly 1") {
  Rng rng(11);
  const ImageBatch b = random_images(3, 1, 28, 28, rng);
  const SSIMConfig cfg;
  for (int i = 0; i < 3; ++i) {
    const double s = ssim_pair(b, i, i == 2 ? 0 : i + 1, cfg);
    CHECK(s <= 1.0 + 1e-9);
    const double self = ssim_pair(b.image(i), b.image(i), cfg);
    CHECK(self == doctest::Approx(1.0).epsilon(1e-6));
    (void)s;
  }
}

TEST_CASE("constant images reduce to the luminance factor") {
  Tensor xa({1, 1, 16, 16}, 0.2), xb({1, 1, 16, 16}, 0.8);
  const ImageBatch a(std::move(xa), ImageRange::unit);
  const ImageBatch b(std::move(xb), ImageRange::unit);
  const SSIMConfig cfg;
  const double c1 = cfg.k1 * cfg.k1;
  const double expected = (2 * 0.2 * 0.8 + c1) / (0.2 * 0.2 + 0.8 * 0.8 + c1);
  CHECK(ssim_pair(a.image(0), b.image(0), cfg) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ssim matches the brute-force sliding-window oracle") {
  Rng rng(12);
  const SSIMConfig cfg;
  for (int trial = 0; trial < 5; ++trial) {
    const ImageBatch b = random_images(2, 1, 28, 28, rng);
    const double got = ssim_pair(b, 0, 1, cfg);
    const double want =
        oracle::ssim_naive(b.image(0).data, b.image(1).data, 1, 28, 28, cfg);
    CHECK(got == doctest::Approx(want).epsilon(1e-6));
    CHECK(std::abs(got - want) < 1e-6);
  }
}

TEST_CASE("sym-range images are remapped before ssim") {
  Rng rng(13);
  const ImageBatch sym = random_images(2, 1, 20, 20, rng, ImageRange::sym);
  const SSIMConfig cfg;
  const double got = ssim_pair(sym, 0, 1, cfg);
  const auto ux = oracle::to_unit(sym.image(0).data, sym.image(0).size());
  const auto uy = oracle::to_unit(sym.image(1).data, sym.image(1).size());
  const double want = oracle::ssim_naive(ux.data(), uy.data(), 1, 20, 20, cfg);
  CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("multi-channel ssim averages per-channel values") {
  Rng rng(14);
  const ImageBatch b = random_images(2, 3, 16, 16, rng);
  const SSIMConfig cfg;
  const double got = ssim_pair(b, 0, 1, cfg);
  double mean = 0.0;
  const int64_t plane = 16 * 16;
  for (int ch = 0; ch < 3; ++ch)
    mean += oracle::ssim_naive(b.image(0).data + ch * plane,
                               b.image(1).data + ch * plane, 1, 16, 16, cfg);
  CHECK(got == doctest::Approx(mean / 3).epsilon(1e-9));
}

TEST_CASE("ssim symmetry and bounds") {
  Rng rng(15);
  const SSIMConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    const ImageBatch b = random_images(2, 1, 12, 12, rng);
    const double ab = ssim_pair(b, 0, 1, cfg);
    const double ba = ssim_pair(b, 1, 0, cfg);
    CHECK(std::abs(ab - ba) <= 1e-7);
    CHECK(ab >= -1.0 - 1e-9);
    CHECK(ab <= 1.0 + 1e-9);
  }
}

TEST_CASE("ssim rejects bad inputs") {
  Rng rng(16);
  const ImageBatch a = random_images(1, 1, 12, 12, rng);
  const ImageBatch b = random_images(1, 1, 10, 10, rng);
  SSIMConfig cfg;
  CHECK_THROWS_AS(ssim_pair(a.image(0), b.image(0), cfg), InvalidArgument);
  cfg.window_size = 13;  // larger than the image
  CHECK_THROWS_AS(ssim_pair(a.image(0), a.image(0), cfg), InvalidArgument);
  cfg.window_size = 4;  // even
  CHECK_THROWS_AS(ssim_pair(a.image(0), a.image(0), cfg), InvalidArgument);
}

TEST_CASE("ssim gradient matches central finite differences") {
  Rng rng(17);
  SSIMConfig cfg;
  cfg.window_size = 5;
  ImageBatch b = random_images(2, 1, 8, 8, rng);
  const int64_t n = b.image(0).size();
  Tensor dx({1, 1, 8, 8}, 0.0), dy({1, 1, 8, 8}, 0.0);
  ssim_pair_grad(b.image(0), b.image(1), cfg, dx.ptr(), dy.ptr(), 1.0);

  const double h = 1e-6;
  double num_norm = 0.0, diff_norm = 0.0;
  double num_norm_y = 0.0, diff_norm_y = 0.0;
  for (int side = 0; side < 2; ++side) {
    for (int64_t i = 0; i < n; ++i) {
      double* px = b.pixels.ptr() + (side == 0 ? 0 : n) + i;
      const double saved = *px;
      *px = saved + h;
      const double up = ssim_pair(b, 0, 1, cfg);
      *px = saved - h;
      const double dn = ssim_pair(b, 0, 1, cfg);
      *px = saved;
      const double fd = (up - dn) / (2 * h);
      const double an = side == 0 ? dx[i] : dy[i];
      if (side == 0) {
        num_norm += fd * fd;
        diff_norm += (fd - an) * (fd - an);
      } else {
        num_norm_y += fd * fd;
        diff_norm_y += (fd - an) * (fd - an);
      }
    }
  }
  CHECK(std::sqrt(diff_norm / num_norm) < 1e-4);
  CHECK(std::sqrt(diff_norm_y / num_norm_y) < 1e-4);
}

TEST_CASE("ssim degrades monotonically under growing noise") {
  Rng rng(18);
  SSIMConfig cfg;
  int ok = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    Tensor x({1, 1, 16, 16}), noise({1, 1, 16, 16});
    for (auto& v : x.data) v = rng.uniform(0.2, 0.8);
    for (auto& v : noise.data) v = rng.uniform(-0.4, 0.4);
    bool monotone = true;
    double prev = 1.0 + 1e-9;
    for (double alpha : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
      Tensor y({1, 1, 16, 16});
      for (int64_t i = 0; i < y.size(); ++i) y[i] = x[i] + alpha * noise[i];
      const ImageView xv{x.ptr(), 1, 16, 16, ImageRange::unit};
      const ImageView yv{y.ptr(), 1, 16, 16, ImageRange::unit};
      const double s = ssim_pair(xv, yv, cfg);
      if (s > prev + 1e-9) monotone = false;
      prev = s;
    }
    ok += monotone;
  }
  CHECK(ok >= trials * 95 / 100);
}

TEST_CASE("ssim_matrix agrees with pointwise ssim_pair") {
  Rng rng(19);
  const ImageBatch b = random_images(4, 1, 16, 16, rng);
  const SSIMConfig cfg;
  std::vector<IndexPair> pairs{{0, 1}, {1, 2}, {2, 3}, {0, 3}, {1, 0}};
  const SimilarityMatrix m = ssim_matrix(b, pairs, cfg);
  for (const IndexPair& p : pairs)
    CHECK(m.get(p.i, p.j) == doctest::Approx(ssim_pair(b, p.i, p.j, cfg)).epsilon(1e-12));
  CHECK(m.get(0, 1) == m.get(1, 0));  // symmetric lookup
}

TEST_CASE("ssim_matrix edge cases") {
  Rng rng(20);
  Tensor t({3, 1, 12, 12});
  for (int64_t i = 0; i < t.size() / 3; ++i)
    t[i] = t[i + t.size() / 3] = t[i + 2 * t.size() / 3] = rng.uniform(0, 1);
  const ImageBatch identical(std::move(t), ImageRange::unit);
  const SSIMConfig cfg;
  const auto all = std::vector<IndexPair>{{0, 1}, {0, 2}, {1, 2}};
  const SimilarityMatrix m = ssim_matrix(identical, all, cfg);
  for (const IndexPair& p : all)
    CHECK(m.get(p.i, p.j) == doctest::Approx(1.0).epsilon(1e-9));

  const std::vector<IndexPair> none;
  const SimilarityMatrix empty = ssim_matrix(identical, none, cfg);
  CHECK(empty.size() == 0);

  std::vector<IndexPair> bad{{0, 5}};
  CHECK_THROWS_AS(ssim_matrix(identical, bad, cfg), InvalidArgument);
  std::vector<IndexPair> diag{{1, 1}};
  CHECK_THROWS_AS(ssim_matrix(identical, diag, cfg), InvalidArgument);
}
