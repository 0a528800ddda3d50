#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "scgan/image.hpp"

namespace scgan {

enum class WindowKind { gaussian, uniform };

// Windowed structural similarity. Defaults are the reference constants:
// 11x11 gaussian window with sigma 1.5, k1=0.01, k2=0.03, dynamic range 1
// for images in [0,1]. Images in [-1,1] are remapped to [0,1] internally
// (gradients include the remap factor).
struct SSIMConfig {
  int window_size = 11;
  WindowKind window = WindowKind::gaussian;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const {
    require(window_size >= 1 && window_size % 2 == 1, "window size must be odd");
    require(k1 > 0 && k2 > 0, "k1 and k2 must be positive");
    require(dynamic_range > 0, "dynamic range must be positive");
    require(sigma > 0, "window sigma must be positive");
  }
};

enum class SimMeasure { euclidean, ssim };

struct IndexPair {
  int i, j;
};

// Sparse symmetric pairwise similarity store. Entries are keyed on the
// unordered pair; the pair list records the mask actually used.
struct SimilarityMatrix {
  SimMeasure measure = SimMeasure::ssim;
  std::vector<IndexPair> pairs;
  std::unordered_map<int64_t, double> values;

  static int64_t key(int i, int j) {
    if (i > j) std::swap(i, j);
    return (static_cast<int64_t>(i) << 32) | static_cast<uint32_t>(j);
  }
  void set(int i, int j, double v);
  bool has(int i, int j) const { return values.count(key(i, j)) > 0; }
  double get(int i, int j) const;
  size_t size() const { return values.size(); }
};

// Mean local SSIM over all valid window positions, in [-1, 1]; exactly 1 for
// identical images. Differentiable everywhere in the pixels.
double ssim_pair(const ImageView& x, const ImageView& y, const SSIMConfig& cfg);
double ssim_pair(const ImageBatch& batch, int i, int j, const SSIMConfig& cfg);

// As ssim_pair, but also accumulates scale * d(ssim)/d(pixels) into dx and/or
// dy (either may be null). Gradients are with respect to the raw pixel values
// in the view's declared range.
double ssim_pair_grad(const ImageView& x, const ImageView& y,
                      const SSIMConfig& cfg, double* dx, double* dy,
                      double scale);

// Evaluates ssim_pair for every requested pair (i != j, indices in range).
// Pairs are deduplicated on the unordered pair; evaluation is parallel over
// pairs with per-image windowed statistics shared between pairs.
SimilarityMatrix ssim_matrix(const ImageBatch& batch,
                             std::span<const IndexPair> pairs,
                             const SSIMConfig& cfg);

}  // namespace scgan
