#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "scgan/metrics.hpp"

using namespace scgan;

namespace {

Tensor gaussian_rows(int n, int d, Rng& rng, double mu = 0.0, double sd = 1.0) {
  Tensor t({n, d});
  for (auto& v : t.data) v = mu + sd * rng.normal();
  return t;
}

}  // namespace

TEST_CASE("parzen: single generated sample at distance zero") {
  const int d = 4;
  Tensor gen({1, d});
  for (int j = 0; j < d; ++j) gen.at(0, j) = 0.25 * j;
  Tensor test = gen;
  ParzenConfig cfg;
  cfg.sigma_grid = {1.0};
  const MetricReport r = parzen_loglik(gen, test, cfg);
  CHECK(r.value == doctest::Approx(-0.5 * d * std::log(2 * M_PI)).epsilon(1e-12));
}

TEST_CASE("parzen matches a brute-force kernel sum on the 3x2 toy case") {
  Tensor gen({3, 2}), test({2, 2});
  const double g[3][2] = {{0.0, 0.0}, {1.0, 0.5}, {-0.5, 2.0}};
  const double t[2][2] = {{0.25, 0.1}, {-1.0, 1.0}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) gen.at(i, j) = g[i][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) test.at(i, j) = t[i][j];
  const double sigma = 0.5;
  ParzenConfig cfg;
  cfg.sigma_grid = {sigma};

  double want = 0.0;
  for (int i = 0; i < 2; ++i) {
    double p = 0.0;
    for (int k = 0; k < 3; ++k) {
      double sq = 0.0;
      for (int j = 0; j < 2; ++j) sq += (t[i][j] - g[k][j]) * (t[i][j] - g[k][j]);
      p += std::exp(-sq / (2 * sigma * sigma)) /
           (3.0 * 2 * M_PI * sigma * sigma);
    }
    want += std::log(p) / 2.0;
  }
  const MetricReport r = parzen_loglik(gen, test, cfg);
  CHECK(r.value == doctest::Approx(want).epsilon(1e-12));
  CHECK(std::abs(r.value - want) < 1e-8);
}

TEST_CASE("parzen is invariant under permutation of generated samples") {
  Rng rng(41);
  Tensor gen = gaussian_rows(40, 3, rng);
  Tensor test = gaussian_rows(15, 3, rng);
  ParzenConfig cfg;
  cfg.sigma_grid = {0.7};
  const double a = parzen_loglik(gen, test, cfg).value;
  Tensor perm({40, 3});
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 3; ++j) perm.at(i, j) = gen.at(39 - i, j);
  const double b = parzen_loglik(perm, test, cfg).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(std::abs(a - b) < 1e-9);
}

TEST_CASE("parzen sigma selection uses the validation split") {
  Rng rng(42);
  Tensor gen = gaussian_rows(200, 2, rng);
  Tensor test = gaussian_rows(100, 2, rng);
  ParzenConfig cfg;  // default 20-point grid
  cfg.seed = 5;
  const MetricReport r = parzen_loglik(gen, test, cfg);
  CHECK(std::isfinite(r.value));
  CHECK(r.uncertainty >= 0.0);
  const double sigma = r.config_snapshot.at("sigma").get<double>();
  CHECK(sigma > 0.05);  // unit Gaussian data prefers a broad kernel
  CHECK(r.config_snapshot.at("eval_points").get<int>() == 90);
}

TEST_CASE("parzen rejects bad input") {
  Tensor gen({1, 2}), test({1, 3});
  ParzenConfig cfg;
  CHECK_THROWS_AS(parzen_loglik(gen, test, cfg), InvalidArgument);
  Tensor none({0, 2});
  CHECK_THROWS_AS(parzen_loglik(none, gen, cfg), InvalidArgument);
}

TEST_CASE("fid: exact-moment cases") {
  // 1-D: N(0,1) vs N(1,1) -> 1
  Tensor mu1({1}, 0.0), mu2({1}, 1.0), c1({1, 1}, 1.0), c2({1, 1}, 1.0);
  CHECK(std::abs(fid_from_moments(mu1, c1, mu2, c2) - 1.0) < 1e-9);

  // 2-D: mu=(0,0) I vs mu=(1,0) 4I -> 1 + (1+4-2*2)*2 = 3
  Tensor m1({2}, 0.0), m2({2}, 0.0);
  m2[0] = 1.0;
  Tensor s1({2, 2}, 0.0), s2({2, 2}, 0.0);
  s1.at(0, 0) = s1.at(1, 1) = 1.0;
  s2.at(0, 0) = s2.at(1, 1) = 4.0;
  CHECK(std::abs(fid_from_moments(m1, s1, m2, s2) - 3.0) < 1e-6);
}

TEST_CASE("fid: identical feature sets score ~0, symmetric, non-negative") {
  Rng rng(43);
  Tensor a = gaussian_rows(300, 6, rng);
  Tensor b = gaussian_rows(280, 6, rng, 0.3, 1.2);
  CHECK(fid(a, a) <= 1e-6);
  const double ab = fid(a, b), ba = fid(b, a);
  CHECK(std::abs(ab - ba) <= 1e-8);
  CHECK(ab >= 0.0);
  Tensor bad({10, 5});
  CHECK_THROWS_AS(fid(a, bad), InvalidArgument);
  Tensor tiny({1, 6});
  CHECK_THROWS_AS(fid(a, tiny), InvalidArgument);
}

TEST_CASE("fid between same-distribution samples shrinks with sample count") {
  Rng rng(44);
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {100, 1000, 10000}) {
    Tensor a = gaussian_rows(n, 8, rng);
    Tensor b = gaussian_rows(n, 8, rng);
    const double v = fid(a, b);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("factorvae: the exact decoder scores 1.0 on the synthetic factors") {
  const SyntheticFactors ds;
  const Representation identity = [](const ImageBatch& b) {
    Tensor out({b.batch(), 2});
    for (int i = 0; i < b.batch(); ++i) {
      int shape = 0, pos = 0;
      SyntheticFactors::decode(b.image(i), &shape, &pos);
      out.at(i, 0) = shape;
      out.at(i, 1) = pos;
    }
    return out;
  };
  FactorVAEConfig cfg;
  cfg.votes = 200;
  cfg.seed = 3;
  const MetricReport r = factorvae_score(identity, ds, cfg);
  CHECK(r.value == 1.0);
}

TEST_CASE("factorvae: an equal-mixing representation scores near chance") {
  const SyntheticFactors ds;
  double mean = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(900 + s);
    const double a = rng.normal(), b = rng.normal();
    const Representation mixed = [a, b](const ImageBatch& batch) {
      Tensor out({batch.batch(), 2});
      for (int i = 0; i < batch.batch(); ++i) {
        int shape = 0, pos = 0;
        SyntheticFactors::decode(batch.image(i), &shape, &pos);
        // both dims mix both factors with equal weight, random signs
        const double u = shape / 3.0, v = pos / 8.0;
        out.at(i, 0) = u + v + 0.01 * a;
        out.at(i, 1) = u - v + 0.01 * b;
      }
      return out;
    };
    FactorVAEConfig cfg;
    cfg.votes = 200;
    cfg.seed = 100 + s;
    mean += factorvae_score(mixed, ds, cfg).value;
  }
  mean /= seeds;
  CHECK(mean > 0.35);
  CHECK(mean < 0.65);
}

TEST_CASE("factorvae: zero-variance dimensions are excluded with a note") {
  const SyntheticFactors ds;
  const Representation padded = [](const ImageBatch& b) {
    Tensor out({b.batch(), 3});
    for (int i = 0; i < b.batch(); ++i) {
      int shape = 0, pos = 0;
      SyntheticFactors::decode(b.image(i), &shape, &pos);
      out.at(i, 0) = shape;
      out.at(i, 1) = 7.7;  // constant
      out.at(i, 2) = pos;
    }
    return out;
  };
  FactorVAEConfig cfg;
  cfg.votes = 100;
  const MetricReport r = factorvae_score(padded, ds, cfg);
  CHECK(r.value == 1.0);
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("dimension 1") != std::string::npos);
}

TEST_CASE("factorvae requires at least two factors") {
  class OneFactor : public FactorDataset {
   public:
    int n_factors() const override { return 1; }
    int cardinality(int) const override { return 4; }
    ImageBatch sample_with_fixed(int, int, int count, uint64_t seed) const override {
      return SyntheticFactors().sample_random(count, seed);
    }
    ImageBatch sample_random(int count, uint64_t seed) const override {
      return SyntheticFactors().sample_random(count, seed);
    }
  };
  const Representation rep = [](const ImageBatch& b) {
    return Tensor({b.batch(), 2}, 0.0);
  };
  CHECK_THROWS_AS(factorvae_score(rep, OneFactor(), FactorVAEConfig{}),
                  InvalidArgument);
}

TEST_CASE("feature extractor trains to the floor on the synthetic dataset") {
  const Dataset ds = SyntheticFactors::as_dataset(16);
  const FeatureExtractor fx = FeatureExtractor::train(ds, 0);
  CHECK(fx.test_accuracy() >= 0.99);

  std::vector<int> idx{0, 1, 2, 3};
  const Tensor f = fx.features(ds.test_batch(idx));
  CHECK(f.dim(0) == 4);
  CHECK(f.dim(1) == 128);

  // determinism: identical content hash for the same seed
  const FeatureExtractor fx2 = FeatureExtractor::train(ds, 0);
  CHECK(fx.content_hash() == fx2.content_hash());
  const FeatureExtractor fx3 = FeatureExtractor::train(ds, 1);
  CHECK(fx.content_hash() != fx3.content_hash());
}

TEST_CASE("feature extractor round-trips through its file format") {
  namespace fs = std::filesystem;
  const Dataset ds = SyntheticFactors::as_dataset(8);
  const FeatureExtractor fx = FeatureExtractor::train(ds, 2);
  const std::string path = (fs::temp_directory_path() / "fx_test.bin").string();
  fx.save(path);
  const FeatureExtractor loaded = FeatureExtractor::load(path);
  CHECK(loaded.content_hash() == fx.content_hash());
  std::vector<int> idx{0, 5, 9};
  const Tensor a = fx.features(ds.test_batch(idx));
  const Tensor b = loaded.features(ds.test_batch(idx));
  CHECK(a.data == b.data);
  fs::remove(path);
}

TEST_CASE("extractor feature FID sanity ordering") {
  const Dataset ds = SyntheticFactors::as_dataset(16);
  const FeatureExtractor fx = FeatureExtractor::train(ds, 0);
  std::vector<int> tr_idx, te_idx;
  for (int i = 0; i < 256; ++i) tr_idx.push_back(i);
  for (int i = 0; i < ds.test_size(); ++i) te_idx.push_back(i);
  const Tensor train_f = fx.features(ds.train_batch(tr_idx));
  const Tensor test_f = fx.features(ds.test_batch(te_idx));

  Rng rng(45);
  Tensor noise({256, 1, 16, 16});
  for (auto& v : noise.data) v = rng.uniform(-1, 1);
  const Tensor noise_f = fx.features(ImageBatch(std::move(noise), ImageRange::sym));

  const double near = fid(train_f, test_f);
  const double far = fid(noise_f, test_f);
  CHECK(near < far);
}
