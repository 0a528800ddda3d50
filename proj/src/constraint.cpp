#include "scgan/constraint.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "scgan/kernels.hpp"

namespace scgan {

void SCConfig::validate() const {
  require(lambda1 > 0 && lambda2 > 0, "lambda1 and lambda2 must be positive");
  require(epsilon > 0, "epsilon must be positive");
  require(n1 >= 1 && n2 >= 1, "subsample sizes must be >= 1");
  if (sim_measure == SimMeasure::ssim && term_family != TermFamily::exp)
    throw ConfigError("ssim similarity supports only the exp term family");
  if (variant == SCVariant::modified && sim_measure != SimMeasure::ssim)
    throw ConfigError("the modified constraint requires the ssim measure");
  ssim.validate();
}

double euclidean_sim(const ImageView& x, const ImageView& y) {
  require(x.channels == y.channels && x.height == y.height && x.width == y.width,
          "euclidean_sim: image shapes do not match");
  double s = 0.0;
  const int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) {
    const double d = x.data[i] - y.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<IndexPair> all_pairs(int batch) {
  require(batch >= 2, "all_pairs requires batch >= 2");
  std::vector<IndexPair> out;
  out.reserve(static_cast<size_t>(batch) * (batch - 1) / 2);
  for (int i = 0; i < batch; ++i)
    for (int j = i + 1; j < batch; ++j) out.push_back({i, j});
  return out;
}

std::vector<IndexPair> subsample_pairs(int batch, int n1, int n2,
                                       uint64_t seed) {
  require(n1 >= 1 && n2 >= 1, "subsample sizes must be >= 1");
  require(n1 + n2 <= batch, "n1 + n2 must not exceed the batch size");
  std::vector<int> perm(static_cast<size_t>(batch));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  std::vector<IndexPair> out;
  out.reserve(static_cast<size_t>(n1) * n2);
  for (int a = 0; a < n1; ++a)
    for (int b = 0; b < n2; ++b) out.push_back({perm[a], perm[n1 + b]});
  return out;
}

ContributionStats contribution_stats(const LatentBatch& codes,
                                     std::span<const IndexPair> pairs) {
  ContributionStats st;
  double sum_w = 0.0;
  for (const IndexPair& p : pairs) {
    const double a = code_agreement(codes.code(p.i), codes.code(p.j), codes.spec);
    sum_w += a;
    if (a >= 0.5)
      ++st.same_pairs;
    else
      ++st.diff_pairs;
  }
  if (!pairs.empty()) {
    st.mean_same_weight = sum_w / static_cast<double>(pairs.size());
    st.mean_diff_weight = 1.0 - st.mean_same_weight;
  }
  if (st.same_pairs > 0 && st.diff_pairs > 0)
    st.ratio_diff_to_same =
        static_cast<double>(st.diff_pairs) / static_cast<double>(st.same_pairs);
  return st;
}

namespace {

// pull/push terms and their derivatives in the raw measure value. Orientation
// depends on the measure: pull must decrease the distance between same-code
// images when minimized.
struct Terms {
  double pull, push, dpull, dpush;
};

Terms eval_terms(double s, const SCConfig& cfg) {
  const double eps = cfg.epsilon;
  if (cfg.sim_measure == SimMeasure::ssim) {
    // exp family only (validated)
    const double ep = std::exp(s), en = std::exp(-s);
    return {en, ep, -en, ep};
  }
  switch (cfg.term_family) {
    case TermFamily::linear: {
      const double inv = 1.0 / (s + eps);
      return {s, inv, 1.0, -inv * inv};
    }
    case TermFamily::square: {
      const double inv = 1.0 / (s * s + eps);
      return {s * s, inv, 2.0 * s, -inv * inv * 2.0 * s};
    }
    case TermFamily::exp: {
      const double ep = std::exp(s), en = std::exp(-s);
      return {ep, en, ep, -en};
    }
  }
  throw ConfigError("unknown term family");
}

struct PairWeights {
  double w_pull, w_push;  // include lambda factors
};

// Shared evaluator: value = normalizer * sum_pairs factor * (w_pull*pull +
// w_push*push); optional gradient accumulation into dimages. Pair similarity
// evaluation runs in parallel; gradient contributions are merged serially in
// pair order so results do not depend on the thread count.
SCResult evaluate_sc(const ImageBatch& images,
                     std::span<const IndexPair> pairs,
                     const std::vector<PairWeights>& weights, double normalizer,
                     double factor, const SCConfig& cfg, Tensor* dimages) {
  const size_t np = pairs.size();
  const int64_t plane = images.pixels.size() / images.batch();
  std::vector<double> sims(np);
  const bool want_grad = dimages != nullptr;
  if (want_grad) {
    require(dimages->size() == images.pixels.size(),
            "gradient tensor shape mismatch");
  }

  // Pass 1: similarity values (parallel over pairs).
  auto eval_sim = [&](size_t t) {
    const IndexPair& p = pairs[t];
    return cfg.sim_measure == SimMeasure::euclidean
               ? euclidean_sim(images.image(p.i), images.image(p.j))
               : ssim_pair(images, p.i, p.j, cfg.ssim);
  };
  if (kernels::parallel_enabled()) {
#pragma omp parallel for schedule(static)
    for (size_t t = 0; t < np; ++t) sims[t] = eval_sim(t);
  } else {
    for (size_t t = 0; t < np; ++t) sims[t] = eval_sim(t);
  }

  double value = 0.0;
  double pull_sum = 0.0, push_sum = 0.0;
  std::vector<double> coefs(np);
  for (size_t t = 0; t < np; ++t) {
    const Terms tm = eval_terms(sims[t], cfg);
    const PairWeights& w = weights[t];
    value += factor * (w.w_pull * tm.pull + w.w_push * tm.push);
    pull_sum += w.w_pull * tm.pull;
    push_sum += w.w_push * tm.push;
    coefs[t] = normalizer * factor * (w.w_pull * tm.dpull + w.w_push * tm.dpush);
  }
  value *= normalizer;

  if (want_grad) {
    if (cfg.sim_measure == SimMeasure::euclidean) {
      // d||xi-xj||/dxi = (xi-xj)/||xi-xj||; zero at coincident images.
      for (size_t t = 0; t < np; ++t) {
        const IndexPair& p = pairs[t];
        const double s = sims[t];
        if (s < 1e-300) continue;
        const double c = coefs[t] / s;
        const double* xi = images.image(p.i).data;
        const double* xj = images.image(p.j).data;
        double* di = dimages->ptr() + p.i * plane;
        double* dj = dimages->ptr() + p.j * plane;
        for (int64_t k = 0; k < plane; ++k) {
          const double g = c * (xi[k] - xj[k]);
          di[k] += g;
          dj[k] -= g;
        }
      }
    } else {
      // Per-pair gradients land in pair-local buffers (parallel), then are
      // merged in fixed pair order.
      std::vector<double> gbuf(np * 2 * static_cast<size_t>(plane), 0.0);
      auto pair_grad = [&](size_t t) {
        const IndexPair& p = pairs[t];
        double* gi = gbuf.data() + (2 * t) * static_cast<size_t>(plane);
        double* gj = gi + plane;
        ssim_pair_grad(images.image(p.i), images.image(p.j), cfg.ssim, gi, gj,
                       coefs[t]);
      };
      if (kernels::parallel_enabled()) {
#pragma omp parallel for schedule(static)
        for (size_t t = 0; t < np; ++t) pair_grad(t);
      } else {
        for (size_t t = 0; t < np; ++t) pair_grad(t);
      }
      for (size_t t = 0; t < np; ++t) {
        const IndexPair& p = pairs[t];
        const double* gi = gbuf.data() + (2 * t) * static_cast<size_t>(plane);
        const double* gj = gi + plane;
        double* di = dimages->ptr() + p.i * plane;
        double* dj = dimages->ptr() + p.j * plane;
        for (int64_t k = 0; k < plane; ++k) di[k] += gi[k];
        for (int64_t k = 0; k < plane; ++k) dj[k] += gj[k];
      }
    }
  }

  SCResult res;
  res.value = value;
  if (np > 0) {
    res.stats.mean_pull_term = pull_sum / static_cast<double>(np);
    res.stats.mean_push_term = push_sum / static_cast<double>(np);
  }
  return res;
}

std::vector<PairWeights> original_weights(const LatentBatch& codes,
                                          std::span<const IndexPair> pairs) {
  std::vector<PairWeights> w(pairs.size());
  for (size_t t = 0; t < pairs.size(); ++t) {
    const double a = code_agreement(codes.code(pairs[t].i),
                                    codes.code(pairs[t].j), codes.spec);
    w[t] = {a, 1.0 - a};
  }
  return w;
}

std::vector<PairWeights> modified_weights(const LatentBatch& codes,
                                          std::span<const IndexPair> pairs,
                                          const SCConfig& cfg) {
  std::vector<PairWeights> w(pairs.size());
  for (size_t t = 0; t < pairs.size(); ++t) {
    const double a = code_agreement(codes.code(pairs[t].i),
                                    codes.code(pairs[t].j), codes.spec);
    // Corrected weights: same-code pairs are pulled (e^-s), different-code
    // pairs pushed (e^s). The verbatim printed form weights both terms by a.
    const double push_w = cfg.eq7_verbatim ? a : 1.0 - a;
    w[t] = {cfg.lambda2 * a, cfg.lambda1 * push_w};
  }
  return w;
}

void check_pairs(std::span<const IndexPair> pairs, int batch) {
  for (const IndexPair& p : pairs) {
    require(p.i >= 0 && p.i < batch && p.j >= 0 && p.j < batch,
            "pair index out of range");
    require(p.i != p.j, "pairs must have i != j");
  }
}

}  // namespace

SCResult sc_original(const ImageBatch& images, const LatentBatch& codes,
                     const SCConfig& cfg, Tensor* dimages) {
  require(cfg.variant == SCVariant::original, "sc_original requires variant=original");
  cfg.validate();
  const int n = images.batch();
  require(n >= 2, "sc_original requires batch >= 2");
  require(codes.batch() == n, "codes and images batch sizes differ");

  const std::vector<IndexPair> pairs = all_pairs(n);
  const std::vector<PairWeights> w = original_weights(codes, pairs);
  // The printed normalizer 1/(N(N-1)) runs over ordered pairs; each unordered
  // pair is evaluated once and counted twice (Sim is symmetric).
  const double normalizer = 1.0 / (static_cast<double>(n) * (n - 1));
  SCResult res = evaluate_sc(images, pairs, w, normalizer, 2.0, cfg, dimages);
  const ContributionStats terms = res.stats;
  res.stats = contribution_stats(codes, pairs);
  res.stats.mean_pull_term = terms.mean_pull_term;
  res.stats.mean_push_term = terms.mean_push_term;
  return res;
}

SCResult sc_modified(const ImageBatch& images, const LatentBatch& codes,
                     std::span<const IndexPair> pairs, const SCConfig& cfg,
                     Tensor* dimages) {
  require(cfg.variant == SCVariant::modified, "sc_modified requires variant=modified");
  cfg.validate();
  require(!pairs.empty(), "sc_modified requires a non-empty pair list");
  require(codes.batch() == images.batch(), "codes and images batch sizes differ");
  check_pairs(pairs, images.batch());

  const std::vector<PairWeights> w = modified_weights(codes, pairs, cfg);
  const double normalizer = 1.0 / (static_cast<double>(cfg.n1) * cfg.n2);
  SCResult res = evaluate_sc(images, pairs, w, normalizer, 1.0, cfg, dimages);
  const ContributionStats terms = res.stats;
  res.stats = contribution_stats(codes, pairs);
  res.stats.mean_pull_term = terms.mean_pull_term;
  res.stats.mean_push_term = terms.mean_push_term;
  return res;
}

namespace {

SCResult sc_from_matrix(const SimilarityMatrix& sim, const LatentBatch& codes,
                        std::span<const IndexPair> pairs,
                        const std::vector<PairWeights>& w, double normalizer,
                        double factor, const SCConfig& cfg) {
  double value = 0.0, pull_sum = 0.0, push_sum = 0.0;
  for (size_t t = 0; t < pairs.size(); ++t) {
    const Terms tm = eval_terms(sim.get(pairs[t].i, pairs[t].j), cfg);
    value += factor * (w[t].w_pull * tm.pull + w[t].w_push * tm.push);
    pull_sum += w[t].w_pull * tm.pull;
    push_sum += w[t].w_push * tm.push;
  }
  SCResult res;
  res.value = value * normalizer;
  res.stats = contribution_stats(codes, pairs);
  if (!pairs.empty()) {
    res.stats.mean_pull_term = pull_sum / static_cast<double>(pairs.size());
    res.stats.mean_push_term = push_sum / static_cast<double>(pairs.size());
  }
  return res;
}

}  // namespace

SCResult sc_original_from_matrix(const SimilarityMatrix& sim,
                                 const LatentBatch& codes,
                                 const SCConfig& cfg) {
  const int n = codes.batch();
  require(n >= 2, "sc_original requires batch >= 2");
  const std::vector<IndexPair> pairs = all_pairs(n);
  const double normalizer = 1.0 / (static_cast<double>(n) * (n - 1));
  return sc_from_matrix(sim, codes, pairs, original_weights(codes, pairs),
                        normalizer, 2.0, cfg);
}

SCResult sc_modified_from_matrix(const SimilarityMatrix& sim,
                                 const LatentBatch& codes,
                                 std::span<const IndexPair> pairs,
                                 const SCConfig& cfg) {
  require(!pairs.empty(), "sc_modified requires a non-empty pair list");
  const double normalizer = 1.0 / (static_cast<double>(cfg.n1) * cfg.n2);
  return sc_from_matrix(sim, codes, pairs, modified_weights(codes, pairs, cfg),
                        normalizer, 1.0, cfg);
}

}  // namespace scgan
