// Acceptance suite: runs the toolkit's exit criteria end to end and prints
// one [PASS]/[FAIL] line per criterion. Each criterion can be selected with
// --criterion N; --full additionally enables the multi-hour regression (11),
// which is excluded from the default run and from CI.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "scgan/config.hpp"
#include "scgan/metrics.hpp"
#include "scgan/serialize.hpp"
#include "scgan/train.hpp"

using namespace scgan;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " FAILED{" << what << "}";
    }
  }
  template <typename T>
  void note(const std::string& key, T value) {
    detail << " " << key << "=" << value;
  }
};

std::string data_root(const std::string& id) {
  if (const char* env = std::getenv("SCGAN_DATA_ROOT"))
    return (fs::path(env) / id).string();
  return (fs::path("data") / id).string();
}

ImageBatch random_unit_images(int n, int h, int w, Rng& rng) {
  Tensor t({n, 1, h, w});
  for (auto& v : t.data) v = rng.uniform(0.0, 1.0);
  return ImageBatch(std::move(t), ImageRange::unit);
}

LatentBatch codes_for(const std::vector<int>& classes, int k = 10) {
  LatentBatch b;
  b.spec = CodeSpec{CodeKind::discrete, k, -1, 1};
  const int n = static_cast<int>(classes.size());
  b.z = Tensor({n, 2}, 0.0);
  b.c = Tensor({n, k}, 0.0);
  for (int i = 0; i < n; ++i) b.c.at(i, classes[static_cast<size_t>(i)]) = 1.0;
  return b;
}

TrainConfig mnist_config(ObjectiveKind kind, int subset, int epochs,
                         uint64_t seed) {
  TrainConfig cfg;
  cfg.dataset_id = "mnist";
  cfg.data_root = data_root("mnist");
  cfg.subset = subset;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.objective.kind = kind;
  if (kind == ObjectiveKind::scgan) {
    SCConfig sc;
    sc.variant = SCVariant::original;
    sc.sim_measure = SimMeasure::euclidean;
    sc.term_family = TermFamily::linear;
    cfg.objective.sc = sc;
  } else if (kind == ObjectiveKind::modified) {
    cfg.objective.sc = SCConfig{};
  }
  return cfg;
}

// ---------------------------------------------------------------------------

Check criterion_1_ssim_axioms() {
  Check c;
  Rng rng(101);
  const SSIMConfig cfg;
  double worst_sym = 0.0, worst_oracle = 0.0;
  for (int t = 0; t < 100; ++t) {
    const ImageBatch b = random_unit_images(2, 28, 28, rng);
    const double ab = ssim_pair(b, 0, 1, cfg);
    const double ba = ssim_pair(b, 1, 0, cfg);
    worst_sym = std::max(worst_sym, std::abs(ab - ba));
    c.expect(ab >= -1.0 - 1e-12 && ab <= 1.0 + 1e-12, "ssim out of [-1,1]");
    const double self = ssim_pair(b, 0, 0, cfg);
    c.expect(self >= 1.0 - 1e-6 && self <= 1.0 + 1e-12, "ssim(x,x) != 1");
    const double ref =
        oracle::ssim_naive(b.image(0).data, b.image(1).data, 1, 28, 28, cfg);
    worst_oracle = std::max(worst_oracle, std::abs(ab - ref));
  }
  c.expect(worst_sym <= 1e-7, "symmetry worse than 1e-7");
  c.expect(worst_oracle <= 1e-6, "oracle mismatch above 1e-6");
  c.note("max_sym_diff", worst_sym);
  c.note("max_oracle_diff", worst_oracle);
  return c;
}

double fd_rel_error(ImageBatch& b, const std::function<double()>& value,
                    const Tensor& grad) {
  const double h = 1e-6;
  double num = 0.0, diff = 0.0;
  for (int64_t i = 0; i < b.pixels.size(); ++i) {
    const double saved = b.pixels[i];
    b.pixels[i] = saved + h;
    const double up = value();
    b.pixels[i] = saved - h;
    const double dn = value();
    b.pixels[i] = saved;
    const double fd = (up - dn) / (2 * h);
    num += fd * fd;
    diff += (fd - grad[i]) * (fd - grad[i]);
  }
  return std::sqrt(diff / num);
}

Check criterion_2_sc_gradients() {
  Check c;
  Rng rng(102);
  const LatentBatch codes = codes_for({0, 0, 1, 2});

  {
    Tensor t({4, 1, 8, 8});
    for (auto& v : t.data) v = rng.uniform(-1, 1);
    ImageBatch b(std::move(t), ImageRange::sym);
    SCConfig cfg;
    cfg.variant = SCVariant::original;
    cfg.sim_measure = SimMeasure::euclidean;
    cfg.term_family = TermFamily::linear;
    Tensor grad(b.pixels.shape, 0.0);
    sc_original(b, codes, cfg, &grad);
    const double rel = fd_rel_error(
        b, [&]() { return sc_original(b, codes, cfg).value; }, grad);
    c.expect(rel < 1e-4, "sc_original gradient rel err >= 1e-4");
    c.note("original_rel_err", rel);
  }
  {
    Tensor t({4, 1, 8, 8});
    for (auto& v : t.data) v = rng.uniform(-1, 1);
    ImageBatch b(std::move(t), ImageRange::sym);
    SCConfig cfg;
    cfg.ssim.window_size = 5;
    cfg.n1 = 1;
    cfg.n2 = 2;
    const auto pairs = subsample_pairs(4, 1, 2, 7);
    Tensor grad(b.pixels.shape, 0.0);
    sc_modified(b, codes, pairs, cfg, &grad);
    const double rel = fd_rel_error(
        b, [&]() { return sc_modified(b, codes, pairs, cfg).value; }, grad);
    c.expect(rel < 1e-4, "sc_modified gradient rel err >= 1e-4");
    c.note("modified_rel_err", rel);
  }
  return c;
}

Check criterion_3_sc_hand_oracle() {
  Check c;
  {
    const LatentBatch codes = codes_for({0, 0, 1, 1});
    SimilarityMatrix sim;
    sim.measure = SimMeasure::euclidean;
    sim.set(0, 1, 1.0);
    sim.set(0, 2, 2.0);
    sim.set(0, 3, 3.0);
    sim.set(1, 2, 4.0);
    sim.set(1, 3, 5.0);
    sim.set(2, 3, 6.0);
    SCConfig cfg;
    cfg.variant = SCVariant::original;
    cfg.sim_measure = SimMeasure::euclidean;
    cfg.term_family = TermFamily::linear;
    const double eps = cfg.epsilon;
    const double expected = 2.0 *
                            (1.0 + 6.0 + 1.0 / (2.0 + eps) + 1.0 / (3.0 + eps) +
                             1.0 / (4.0 + eps) + 1.0 / (5.0 + eps)) /
                            12.0;
    const double got = sc_original_from_matrix(sim, codes, cfg).value;
    c.expect(std::abs(got - expected) < 1e-9, "4-image hand case mismatch");
    c.note("eq4_hand", got);
  }
  {
    SCConfig cfg;
    cfg.n1 = 1;
    cfg.n2 = 1;
    const std::vector<IndexPair> one{{0, 1}};
    Rng rng(103);
    Tensor t({2, 1, 16, 16});
    for (int64_t i = 0; i < 256; ++i) t[i] = t[i + 256] = rng.uniform(-1, 1);
    const ImageBatch identical(std::move(t), ImageRange::sym);
    const double same =
        sc_modified(identical, codes_for({3, 3}), one, cfg).value;
    c.expect(std::abs(same - std::exp(0.5)) < 1e-9,
             "same-class single pair != lambda2*e^-1");
    c.note("eq7_same", same);

    SimilarityMatrix sim;
    sim.measure = SimMeasure::ssim;
    sim.set(0, 1, 0.0);
    const double diff =
        sc_modified_from_matrix(sim, codes_for({3, 7}), one, cfg).value;
    c.expect(std::abs(diff - M_E) < 1e-9, "diff-class single pair != lambda1*e^0");
    c.note("eq7_diff", diff);
  }
  return c;
}

Check criterion_4_pair_accounting() {
  Check c;
  const auto pairs = subsample_pairs(32, 10, 18, 11);
  c.expect(pairs.size() == 180, "subsample_pairs(32,10,18) != 180");
  for (const IndexPair& p : pairs)
    c.expect(p.i != p.j, "pair with equal indices");

  int64_t same = 0, total = 0;
  for (int s = 0; s < 10000; ++s) {
    const LatentBatch codes =
        sample_latent({2, NoiseDist::uniform}, CodeSpec{CodeKind::discrete, 10, -1, 1},
                      32, 40000 + s);
    const ContributionStats st =
        contribution_stats(codes, subsample_pairs(32, 10, 18, 80000 + s));
    same += st.same_pairs;
    total += st.total();
  }
  // 1:9 same:diff within 0.02 * total
  c.expect(std::llabs(same * 10 - total) <= total / 5,
           "same-pair mass outside 1/10 +/- 0.02");
  c.note("same_fraction", static_cast<double>(same) / static_cast<double>(total));

  c.expect(all_pairs(32).size() == 496, "all-pairs count != 496");
  c.note("scgan_pairs", all_pairs(32).size());
  c.note("modified_pairs", pairs.size());
  return c;
}

Check criterion_5_fid_oracle() {
  Check c;
  Rng rng(105);
  Tensor a({400, 6});
  for (auto& v : a.data) v = rng.normal();
  c.expect(fid(a, a) <= 1e-6, "fid(A,A) > 1e-6");

  Tensor mu1({1}, 0.0), mu2({1}, 1.0), c1({1, 1}, 1.0), c2({1, 1}, 1.0);
  const double one_d = fid_from_moments(mu1, c1, mu2, c2);
  c.expect(std::abs(one_d - 1.0) < 1e-9, "1-D exact-moment case != 1.0");

  Tensor m1({2}, 0.0), m2({2}, 0.0);
  m2[0] = 1.0;
  Tensor s1({2, 2}, 0.0), s2({2, 2}, 0.0);
  s1.at(0, 0) = s1.at(1, 1) = 1.0;
  s2.at(0, 0) = s2.at(1, 1) = 4.0;
  const double two_d = fid_from_moments(m1, s1, m2, s2);
  c.expect(std::abs(two_d - 3.0) < 1e-6, "2-D hand case != 3.0");

  Tensor b({380, 6});
  for (auto& v : b.data) v = 0.2 + 1.1 * rng.normal();
  c.expect(std::abs(fid(a, b) - fid(b, a)) <= 1e-8, "fid asymmetric");
  c.note("fid_1d", one_d);
  c.note("fid_2d", two_d);
  return c;
}

Check criterion_6_parzen_oracle() {
  Check c;
  {
    const int d = 7;
    Tensor gen({1, d});
    for (int j = 0; j < d; ++j) gen.at(0, j) = 0.1 * j - 0.3;
    ParzenConfig cfg;
    cfg.sigma_grid = {1.0};
    const double got = parzen_loglik(gen, gen, cfg).value;
    const double want = -0.5 * d * std::log(2 * M_PI);
    c.expect(got == want, "zero-distance single-sample case not exact");
    c.note("single_sample", got);
  }
  {
    Tensor gen({3, 2}), test({2, 2});
    const double g[3][2] = {{0.2, -0.1}, {1.3, 0.4}, {-0.7, 2.2}};
    const double t[2][2] = {{0.05, 0.37}, {-1.2, 0.9}};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j) gen.at(i, j) = g[i][j];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) test.at(i, j) = t[i][j];
    const double sigma = 0.6;
    ParzenConfig cfg;
    cfg.sigma_grid = {sigma};
    double want = 0.0;
    for (int i = 0; i < 2; ++i) {
      double p = 0.0;
      for (int k = 0; k < 3; ++k) {
        double sq = 0.0;
        for (int j = 0; j < 2; ++j)
          sq += (t[i][j] - g[k][j]) * (t[i][j] - g[k][j]);
        p += std::exp(-sq / (2 * sigma * sigma)) / (3.0 * 2 * M_PI * sigma * sigma);
      }
      want += std::log(p) / 2.0;
    }
    const double got = parzen_loglik(gen, test, cfg).value;
    c.expect(std::abs(got - want) < 1e-8, "3x2 toy kernel sum mismatch");
    c.note("toy_case", got);
  }
  return c;
}

Check criterion_7_factorvae_oracle() {
  Check c;
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
  cfg.votes = 300;
  cfg.seed = 17;
  const double identity_score = factorvae_score(identity, ds, cfg).value;
  c.expect(identity_score == 1.0, "identity representation score != 1.0");
  c.note("identity", identity_score);

  double mean = 0.0;
  for (int s = 0; s < 20; ++s) {
    Rng rng(700 + s);
    const double ja = 0.01 * rng.normal(), jb = 0.01 * rng.normal();
    const Representation mixed = [ja, jb](const ImageBatch& batch) {
      Tensor out({batch.batch(), 2});
      for (int i = 0; i < batch.batch(); ++i) {
        int shape = 0, pos = 0;
        SyntheticFactors::decode(batch.image(i), &shape, &pos);
        const double u = shape / 3.0, v = pos / 8.0;
        out.at(i, 0) = u + v + ja;
        out.at(i, 1) = u - v + jb;
      }
      return out;
    };
    FactorVAEConfig mc;
    mc.votes = 200;
    mc.seed = 7100 + s;
    mean += factorvae_score(mixed, ds, mc).value;
  }
  mean /= 20;
  c.expect(mean >= 0.4 && mean <= 0.6, "mixing representation outside 0.5 +/- 0.1");
  c.note("mixing_mean", mean);
  return c;
}

Check criterion_8_objective_reductions() {
  Check c;
  std::vector<double> half{0.5, 0.5, 0.5, 0.5};
  const double v = gan_value(half, half);
  c.expect(std::abs(v + 2.0 * std::log(2.0)) < 1e-9, "gan_value(0.5,0.5) != -2log2");
  c.note("gan_half", v);

  // scgan at lambda = 0 vs cgan on identical seeds: the conditional D's code
  // channels are zeroed and the shared parameters copied, making D(x|c) and
  // D(x) coincide.
  ArchDescriptor arch;
  arch.image_size = 28;
  arch.noise_dim = 62;
  arch.code = CodeSpec{CodeKind::discrete, 10, -1, 1};
  arch.base_channels = 16;
  arch.dense_units = 64;

  ObjectiveConfig sc_obj;
  sc_obj.kind = ObjectiveKind::scgan;
  SCConfig sc;
  sc.variant = SCVariant::original;
  sc.sim_measure = SimMeasure::euclidean;
  sc.term_family = TermFamily::linear;
  sc.lambda = 0.0;
  sc_obj.sc = sc;
  ModelBundle scgan_b = ModelBundle::create(arch, sc_obj, {}, {}, 42);

  ArchDescriptor carch = arch;
  carch.conditional_d = true;
  ObjectiveConfig cobj;
  cobj.kind = ObjectiveKind::cgan;
  ModelBundle cgan_b = ModelBundle::create(carch, cobj, {}, {}, 42);

  auto sp = scgan_b.d_side_params();
  auto cp = cgan_b.d_side_params();
  for (size_t i = 0; i < sp.size(); ++i) {
    if (sp[i]->value.shape == cp[i]->value.shape) {
      cp[i]->value = sp[i]->value;
    } else {
      cp[i]->value.fill(0.0);
      for (int o = 0; o < sp[i]->value.dim(0); ++o)
        for (int j = 0; j < sp[i]->value.dim(1); ++j)
          cp[i]->value.at(o, j) = sp[i]->value.at(o, j);
    }
  }
  auto gp = scgan_b.g->params();
  auto cg = cgan_b.g->params();
  for (size_t i = 0; i < gp.size(); ++i) cg[i]->value = gp[i]->value;

  Rng rng(108);
  Tensor rt({8, 1, 28, 28});
  for (auto& x : rt.data) x = rng.uniform(-1, 1);
  const ImageBatch real(std::move(rt), ImageRange::sym);
  Tensor real_codes({8, 10}, 0.0);
  for (int i = 0; i < 8; ++i) real_codes.at(i, i % 10) = 1.0;
  const LatentBatch latent =
      sample_latent({62, NoiseDist::uniform}, arch.code, 8, 77);

  const TotalObjective a = total_objective(scgan_b, real, nullptr, latent, 1);
  const TotalObjective b = total_objective(cgan_b, real, &real_codes, latent, 1);
  c.expect(std::abs(a.g_loss - b.g_loss) < 1e-7, "g_loss mismatch at lambda=0");
  c.expect(std::abs(a.d_loss - b.d_loss) < 1e-7, "d_loss mismatch at lambda=0");
  c.note("scgan_g", a.g_loss);
  c.note("cgan_g", b.g_loss);
  return c;
}

// Stratified generator samples and their mean intra/inter-class SSIM.
struct SsimSplit {
  double intra = 0.0, inter = 0.0;
};

SsimSplit intra_inter_ssim(ModelBundle& bundle, int per_class, uint64_t seed) {
  const int k = bundle.arch.code.cardinality;
  const int n = per_class * k;
  const NoiseSpec noise{bundle.arch.noise_dim, NoiseDist::uniform};
  LatentBatch latent = sample_latent(noise, bundle.arch.code, n, seed);
  latent.c.fill(0.0);
  std::vector<int> cls(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    cls[static_cast<size_t>(i)] = i % k;
    latent.c.at(i, i % k) = 1.0;
  }
  const ImageBatch images = bundle.g->forward(latent, Phase::eval);
  const SSIMConfig cfg;

  std::vector<IndexPair> intra_pairs, inter_pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (cls[static_cast<size_t>(a)] == cls[static_cast<size_t>(b)])
        intra_pairs.push_back({a, b});
  Rng rng(seed ^ 0xabcdef);
  while (inter_pairs.size() < intra_pairs.size()) {
    const int a = rng.below(n), b = rng.below(n);
    if (a != b && cls[static_cast<size_t>(a)] != cls[static_cast<size_t>(b)])
      inter_pairs.push_back({std::min(a, b), std::max(a, b)});
  }
  const SimilarityMatrix mi = ssim_matrix(images, intra_pairs, cfg);
  const SimilarityMatrix mx = ssim_matrix(images, inter_pairs, cfg);
  SsimSplit out;
  for (const IndexPair& p : intra_pairs) out.intra += mi.get(p.i, p.j);
  for (const IndexPair& p : inter_pairs) out.inter += mx.get(p.i, p.j);
  out.intra /= static_cast<double>(intra_pairs.size());
  out.inter /= static_cast<double>(inter_pairs.size());
  return out;
}

Tensor generator_features(ModelBundle& bundle, const FeatureExtractor& fx,
                          int count, uint64_t seed) {
  const NoiseSpec noise{bundle.arch.noise_dim, NoiseDist::uniform};
  Tensor out({count, 128});
  const int batch = 100;
  for (int start = 0; start < count; start += batch) {
    const int n = std::min(batch, count - start);
    const LatentBatch latent =
        sample_latent(noise, bundle.arch.code, n,
                      Rng::for_step(seed, kStreamEval, static_cast<uint64_t>(start)).next());
    const Tensor f = fx.features(bundle.g->forward(latent, Phase::eval));
    std::copy(f.data.begin(), f.data.end(),
              out.data.begin() + static_cast<int64_t>(start) * 128);
  }
  return out;
}

Check criterion_9_training_smoke() {
  Check c;
  const auto t0 = Clock::now();
  const TrainConfig cfg = mnist_config(ObjectiveKind::modified, 2000, 3, 0);
  const Dataset full = ingest_dataset("mnist", cfg.data_root);
  const Dataset subset = ingest_dataset("mnist", cfg.data_root, cfg.subset);

  const FeatureExtractor fx =
      FeatureExtractor::cached(full, 0, (fs::path(cfg.data_root) / "cache").string());
  c.note("extractor_acc", fx.test_accuracy());

  std::vector<int> test_idx(static_cast<size_t>(full.test_size()));
  std::iota(test_idx.begin(), test_idx.end(), 0);
  const Tensor real_features = fx.features(full.test_batch(test_idx));

  ModelBundle bundle = ModelBundle::create(cfg.arch_for(subset), cfg.objective,
                                           cfg.adam_g, cfg.adam_d, cfg.seed);
  const double fid_init =
      fid(real_features, generator_features(bundle, fx, 2000, 555));
  c.note("fid_init", fid_init);

  bool finite = true;
  const int steps = (subset.train_size() / cfg.batch) * cfg.epochs;
  std::vector<StepRecord> log;
  try {
    log = run_steps(bundle, subset, cfg, steps);
  } catch (const TrainingFailure& e) {
    finite = false;
    c.expect(false, std::string("training aborted: ") + e.what());
  }
  for (const StepRecord& r : log)
    if (!std::isfinite(r.d_loss) || !std::isfinite(r.g_loss)) finite = false;
  c.expect(finite, "non-finite losses");
  c.note("steps", steps);

  const double fid_after =
      fid(real_features, generator_features(bundle, fx, 2000, 555));
  c.note("fid_epoch3", fid_after);
  c.expect(fid_after < 0.7 * fid_init, "FID drop below 30%");

  const SsimSplit split = intra_inter_ssim(bundle, 20, 999);
  c.note("intra_ssim", split.intra);
  c.note("inter_ssim", split.inter);
  c.expect(split.intra > split.inter, "intra-class SSIM not above inter-class");

  c.note("runtime_s", std::chrono::duration<double>(Clock::now() - t0).count());
  return c;
}

Check criterion_10_timing() {
  Check c;
  const TrainConfig scgan_cfg = mnist_config(ObjectiveKind::scgan, 512, 1, 3);
  const TrainConfig mod_cfg = mnist_config(ObjectiveKind::modified, 512, 1, 3);

  // logged pair counts
  {
    const Dataset ds = ingest_dataset("mnist", scgan_cfg.data_root, 512);
    ModelBundle a = ModelBundle::create(scgan_cfg.arch_for(ds), scgan_cfg.objective,
                                        scgan_cfg.adam_g, scgan_cfg.adam_d, 3);
    ModelBundle b = ModelBundle::create(mod_cfg.arch_for(ds), mod_cfg.objective,
                                        mod_cfg.adam_g, mod_cfg.adam_d, 3);
    const auto la = run_steps(a, ds, scgan_cfg, 1);
    const auto lb = run_steps(b, ds, mod_cfg, 1);
    c.expect(la[0].sc_pair_count == 496, "scgan pair count != 496");
    c.expect(lb[0].sc_pair_count == 180, "modified pair count != 180");
    c.note("scgan_pairs", la[0].sc_pair_count);
    c.note("modified_pairs", lb[0].sc_pair_count);
  }

  // Interleaved measurement rounds so slow machine drift cancels instead of
  // biasing whichever config ran last.
  const int rounds = 4;
  StepTiming ts, tm;
  for (int r = 0; r < rounds; ++r) {
    const StepTiming a = measure_step_time(scgan_cfg, 2, 10);
    const StepTiming b = measure_step_time(mod_cfg, 2, 10);
    ts.total += a.total / rounds;
    ts.sc += a.sc / rounds;
    tm.total += b.total / rounds;
    tm.sc += b.sc / rounds;
  }
  c.note("scgan_step_s", ts.total);
  c.note("modified_step_s", tm.total);
  c.note("scgan_sc_s", ts.sc);
  c.note("modified_sc_s", tm.sc);
  c.expect(tm.total <= ts.total, "modified mean step time above scgan");
  return c;
}

Check criterion_11_full_scale(bool enabled) {
  Check c;
  if (!enabled) {
    c.detail << " SKIPPED (pass --full to run the multi-hour regression)";
    return c;
  }
  // 25-epoch runs of all four models on the full bundled mnist split;
  // orderings per the reported tables: FID modified < scgan < infogan < cgan,
  // FactorVAE highest for modified.
  const Dataset full = ingest_dataset("mnist", data_root("mnist"));
  const FeatureExtractor fx =
      FeatureExtractor::cached(full, 0, (fs::path(data_root("mnist")) / "cache").string());
  std::vector<int> test_idx(static_cast<size_t>(full.test_size()));
  std::iota(test_idx.begin(), test_idx.end(), 0);
  const Tensor real_features = fx.features(full.test_batch(test_idx));

  std::map<std::string, double> fids;
  std::map<std::string, double> factors;
  for (ObjectiveKind kind : {ObjectiveKind::cgan, ObjectiveKind::infogan,
                             ObjectiveKind::scgan, ObjectiveKind::modified}) {
    TrainConfig cfg = mnist_config(kind, 0, 25, 0);
    TrainResult res = train_model(cfg);
    const std::string name = objective_kind_name(kind);
    fids[name] = fid(real_features,
                     generator_features(res.bundle, fx, 10000, 555));
    Representation rep = res.bundle.arch.q_head
                             ? q_head_representation(res.bundle)
                             : train_posthoc_encoder(res.bundle, 4096, 1);
    GeneratorFactors gf(res.bundle, NoiseSpec{cfg.noise.dim, NoiseDist::uniform});
    FactorVAEConfig fc;
    fc.seed = 5;
    factors[name] = factorvae_score(rep, gf, fc).value;
    c.note(name + "_fid", fids[name]);
    c.note(name + "_factor", factors[name]);
  }
  c.expect(fids["modified"] < fids["scgan"], "FID: modified !< scgan");
  c.expect(fids["scgan"] < fids["infogan"], "FID: scgan !< infogan");
  c.expect(fids["infogan"] < fids["cgan"], "FID: infogan !< cgan");
  c.expect(factors["modified"] >= std::max({factors["cgan"], factors["infogan"],
                                            factors["scgan"]}),
           "FactorVAE: modified not highest");
  return c;
}

Check criterion_12_reproducibility() {
  Check c;
  const TrainConfig cfg = mnist_config(ObjectiveKind::modified, 640, 1, 0);
  const Dataset ds = ingest_dataset("mnist", cfg.data_root, cfg.subset);

  ModelBundle a = ModelBundle::create(cfg.arch_for(ds), cfg.objective,
                                      cfg.adam_g, cfg.adam_d, cfg.seed);
  ModelBundle b = ModelBundle::create(cfg.arch_for(ds), cfg.objective,
                                      cfg.adam_g, cfg.adam_d, cfg.seed);
  const int steps = ds.train_size() / cfg.batch;
  const auto la = run_steps(a, ds, cfg, steps);
  const auto lb = run_steps(b, ds, cfg, steps);
  bool identical = la.size() == lb.size();
  for (size_t i = 0; identical && i < la.size(); ++i)
    identical = la[i].d_loss == lb[i].d_loss && la[i].g_loss == lb[i].g_loss &&
                la[i].sc_value == lb[i].sc_value;
  c.expect(identical, "identical-seed runs diverge");
  c.note("steps", steps);

  // checkpoint round-trip: 5 steps, save, 10 more == uninterrupted 15
  ModelBundle full = ModelBundle::create(cfg.arch_for(ds), cfg.objective,
                                         cfg.adam_g, cfg.adam_d, cfg.seed);
  const auto ref = run_steps(full, ds, cfg, 15);
  ModelBundle part = ModelBundle::create(cfg.arch_for(ds), cfg.objective,
                                         cfg.adam_g, cfg.adam_d, cfg.seed);
  run_steps(part, ds, cfg, 5);
  const std::string path =
      (fs::temp_directory_path() / "acceptance_resume.ckpt").string();
  save_checkpoint(part, path);
  ModelBundle resumed = load_checkpoint(path);
  fs::remove(path);
  const auto tail = run_steps(resumed, ds, cfg, 10);
  bool match = true;
  for (int i = 0; i < 10; ++i)
    match = match &&
            tail[static_cast<size_t>(i)].g_loss == ref[static_cast<size_t>(i + 5)].g_loss &&
            tail[static_cast<size_t>(i)].d_loss == ref[static_cast<size_t>(i + 5)].d_loss;
  c.expect(match, "checkpoint round-trip diverges");
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  bool full = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      selected = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--full") == 0)
      full = true;
  }

  struct Entry {
    int id;
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Entry> entries = {
      {1, "SSIM axioms and oracle match", criterion_1_ssim_axioms},
      {2, "SC gradient correctness", criterion_2_sc_gradients},
      {3, "SC hand-computed oracle values", criterion_3_sc_hand_oracle},
      {4, "pair subsampling and contribution accounting", criterion_4_pair_accounting},
      {5, "FID oracle cases", criterion_5_fid_oracle},
      {6, "Parzen oracle cases", criterion_6_parzen_oracle},
      {7, "FactorVAE oracle cases", criterion_7_factorvae_oracle},
      {8, "objective reductions", criterion_8_objective_reductions},
      {9, "desk-scale training smoke", criterion_9_training_smoke},
      {10, "step-time ordering and pair counts", criterion_10_timing},
      {11, "full-scale table orderings (optional)",
       [full]() { return criterion_11_full_scale(full); }},
      {12, "reproducibility and checkpoint round-trip", criterion_12_reproducibility},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    if (selected != 0 && e.id != selected) continue;
    if (selected == 0 && e.id == 11 && !full) {
      std::cout << "[SKIP] criterion 11: " << e.name << " (requires --full)\n";
      continue;
    }
    Check c = e.run();
    std::cout << (c.ok ? "[PASS]" : "[FAIL]") << " criterion " << e.id << ": "
              << e.name << " —" << c.detail.str() << "\n";
    failures += c.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
