#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "scgan/image.hpp"
#include "scgan/latent.hpp"
#include "scgan/ssim.hpp"

namespace scgan {

enum class SCVariant { original, modified };

// Term family (f, 1/f) applied to the raw similarity value. For a distance
// measure the pull term (same-code pairs) is f and the push term is 1/f; for
// SSIM, which is a similarity, the orientation flips: pull = e^-s, push = e^s.
// Only the exp family is defined for SSIM.
enum class TermFamily { linear, square, exp };

// Pair subsampling scheme for the modified constraint. disjoint_cross draws
// two disjoint index sets of sizes n1 and n2 and emits all n1*n2 cross pairs.
enum class PairScheme { disjoint_cross };

struct SCConfig {
  SCVariant variant = SCVariant::modified;
  CodeKind code_kind = CodeKind::discrete;
  SimMeasure sim_measure = SimMeasure::ssim;
  TermFamily term_family = TermFamily::exp;
  double lambda = 1.0;              // objective weight, original variant
  double lambda1 = M_E;             // push weight, modified variant
  double lambda2 = 4.4816890703380645;  // pull weight, modified variant: e^1.5
  int n1 = 10;
  int n2 = 18;
  double epsilon = 1e-8;
  bool eq7_verbatim = false;
  PairScheme scheme = PairScheme::disjoint_cross;
  SSIMConfig ssim;

  void validate() const;
};

// Pair bookkeeping logged with every training step. For continuous codes a
// pair counts as "same" when its agreement weight is >= 0.5. The ratio is
// NaN when there are no same pairs. mean_pull_term / mean_push_term are the
// mean weighted term values and are only filled by SC evaluation.
struct ContributionStats {
  int64_t same_pairs = 0;
  int64_t diff_pairs = 0;
  double ratio_diff_to_same = std::nan("");
  double mean_same_weight = 0.0;
  double mean_diff_weight = 0.0;
  double mean_pull_term = std::nan("");
  double mean_push_term = std::nan("");

  int64_t total() const { return same_pairs + diff_pairs; }
};

struct SCResult {
  double value = 0.0;
  ContributionStats stats;
};

// L2 norm of the flattened pixel difference.
double euclidean_sim(const ImageView& x, const ImageView& y);

// All unordered pairs {i,j}, i<j.
std::vector<IndexPair> all_pairs(int batch);

// Disjoint subsets A (|A|=n1) and B (|B|=n2) drawn uniformly without
// replacement; returns the n1*n2 cross pairs in deterministic order.
std::vector<IndexPair> subsample_pairs(int batch, int n1, int n2,
                                       uint64_t seed);

ContributionStats contribution_stats(const LatentBatch& codes,
                                     std::span<const IndexPair> pairs);

// Original constraint over the full batch:
//   1/(N(N-1)) * sum_i sum_{j != i} [ a_ij * pull(s_ij) + (1-a_ij) * push(s_ij) ]
// with a_ij the code agreement and s_ij the configured similarity measure.
// If dimages is non-null, d(SC)/d(pixels) is accumulated into it.
SCResult sc_original(const ImageBatch& images, const LatentBatch& codes,
                     const SCConfig& cfg, Tensor* dimages = nullptr);

// Modified constraint over a subsampled pair list:
//   1/(n1*n2) * sum_pairs [ l1 * (1-a_ij) * e^{s_ij} + l2 * a_ij * e^{-s_ij} ]
// (corrected weights; with eq7_verbatim both terms carry a_ij as printed).
SCResult sc_modified(const ImageBatch& images, const LatentBatch& codes,
                     std::span<const IndexPair> pairs, const SCConfig& cfg,
                     Tensor* dimages = nullptr);

// Matrix-driven variants for hand-filled similarity values (no gradients).
SCResult sc_original_from_matrix(const SimilarityMatrix& sim,
                                 const LatentBatch& codes, const SCConfig& cfg);
SCResult sc_modified_from_matrix(const SimilarityMatrix& sim,
                                 const LatentBatch& codes,
                                 std::span<const IndexPair> pairs,
                                 const SCConfig& cfg);

}  // namespace scgan
