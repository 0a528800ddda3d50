// Serial-vs-OpenMP comparison for the hot kernels. Run with
// --benchmark_filter=... to narrow; thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "scgan/constraint.hpp"
#include "scgan/kernels.hpp"
#include "scgan/rng.hpp"
#include "scgan/ssim.hpp"

using namespace scgan;

namespace {

Tensor random_tensor(std::vector<int> shape, uint64_t seed) {
  Rng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-1, 1);
  return t;
}

void bench_gemm(benchmark::State& state, bool parallel) {
  kernels::parallel_enabled() = parallel;
  const int m = 32, k = 1024, n = 6272;  // the generator's wide dense layer
  const Tensor a = random_tensor({m, k}, 1), b = random_tensor({k, n}, 2);
  Tensor c({m, n});
  for (auto _ : state) {
    kernels::gemm_nn(a.ptr(), b.ptr(), c.ptr(), m, k, n, false);
    benchmark::DoNotOptimize(c.ptr());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * m * k * n);
  kernels::parallel_enabled() = true;
}

void bench_conv_cols(benchmark::State& state, bool parallel) {
  kernels::parallel_enabled() = parallel;
  const int b = 32, c = 64, h = 14, w = 14, ks = 4, s = 2, p = 1;
  const Tensor x = random_tensor({b, c, h, w}, 3);
  const int oh = kernels::conv_out_size(h, ks, s, p);
  const int ow = kernels::conv_out_size(w, ks, s, p);
  Tensor cols({b * oh * ow, c * ks * ks});
  for (auto _ : state) {
    kernels::im2col(x.ptr(), b, c, h, w, ks, s, p, cols.ptr());
    benchmark::DoNotOptimize(cols.ptr());
  }
  kernels::parallel_enabled() = true;
}

void bench_ssim_pairs(benchmark::State& state, bool parallel) {
  kernels::parallel_enabled() = parallel;
  const Tensor img = random_tensor({32, 1, 28, 28}, 4);
  const ImageBatch batch(img, ImageRange::sym);
  const auto pairs = subsample_pairs(32, 10, 18, 5);
  const SSIMConfig cfg;
  for (auto _ : state) {
    const SimilarityMatrix m = ssim_matrix(batch, pairs, cfg);
    benchmark::DoNotOptimize(m.size());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pairs.size()));
  kernels::parallel_enabled() = true;
}

void bench_sc_modified_grad(benchmark::State& state, bool parallel) {
  kernels::parallel_enabled() = parallel;
  const Tensor img = random_tensor({32, 1, 28, 28}, 6);
  const ImageBatch batch(img, ImageRange::sym);
  const LatentBatch codes = sample_latent(
      {2, NoiseDist::uniform}, CodeSpec{CodeKind::discrete, 10, -1, 1}, 32, 7);
  const auto pairs = subsample_pairs(32, 10, 18, 8);
  SCConfig cfg;
  Tensor grad(img.shape, 0.0);
  for (auto _ : state) {
    grad.fill(0.0);
    const SCResult r = sc_modified(batch, codes, pairs, cfg, &grad);
    benchmark::DoNotOptimize(r.value);
  }
  kernels::parallel_enabled() = true;
}

void bench_sqdist(benchmark::State& state, bool parallel) {
  kernels::parallel_enabled() = parallel;
  const Tensor a = random_tensor({256, 784}, 9), b = random_tensor({2000, 784}, 10);
  Tensor out({256, 2000});
  for (auto _ : state) {
    kernels::sqdist_matrix(a.ptr(), b.ptr(), out.ptr(), 256, 2000, 784);
    benchmark::DoNotOptimize(out.ptr());
  }
  kernels::parallel_enabled() = true;
}

}  // namespace

BENCHMARK_CAPTURE(bench_gemm, serial, false);
BENCHMARK_CAPTURE(bench_gemm, openmp, true);
BENCHMARK_CAPTURE(bench_conv_cols, serial, false);
BENCHMARK_CAPTURE(bench_conv_cols, openmp, true);
BENCHMARK_CAPTURE(bench_ssim_pairs, serial, false);
BENCHMARK_CAPTURE(bench_ssim_pairs, openmp, true);
BENCHMARK_CAPTURE(bench_sc_modified_grad, serial, false);
BENCHMARK_CAPTURE(bench_sc_modified_grad, openmp, true);
BENCHMARK_CAPTURE(bench_sqdist, serial, false);
BENCHMARK_CAPTURE(bench_sqdist, openmp, true);

BENCHMARK_MAIN();
