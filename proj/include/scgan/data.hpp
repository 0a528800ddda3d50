#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scgan/image.hpp"
#include "scgan/tensor.hpp"

namespace scgan {

// In-memory dataset with train/test splits. Images are scaled to the
// generator's output range [-1, 1].
struct Dataset {
  std::string id;
  int channels = 1, height = 28, width = 28;
  Tensor train_images;  // [N, C, H, W]
  std::vector<int> train_labels;
  Tensor test_images;
  std::vector<int> test_labels;
  int num_classes = 10;
  bool from_subset = false;  // loaded from the bundled subset files

  int train_size() const { return train_images.dim(0); }
  int test_size() const { return test_images.dim(0); }
  ImageBatch train_batch(std::span<const int> indices) const;
  ImageBatch test_batch(std::span<const int> indices) const;
  // one-hot label rows for the conditional discriminator
  Tensor label_rows(std::span<const int> indices, bool train) const;
};

// Loads a dataset from `root`. For mnist/fashion-mnist the full IDX files
// (train-images-idx3-ubyte, ...) are preferred; the bundled
// subset-images-idx3-ubyte files are used otherwise with a per-class 80/20
// train/test split. A checksums.sha256 sidecar, when present, is verified.
// subset_limit > 0 truncates the train split (files are class-interleaved,
// so prefixes stay balanced). synthetic-factors ignores `root`.
Dataset ingest_dataset(const std::string& id, const std::string& root,
                       int subset_limit = 0);

// Ground-truth factor dataset interface for the disentanglement metric.
class FactorDataset {
 public:
  virtual ~FactorDataset() = default;
  virtual int n_factors() const = 0;
  virtual int cardinality(int factor) const = 0;
  // `count` images with `factor` fixed at `value`, remaining factors random.
  virtual ImageBatch sample_with_fixed(int factor, int value, int count,
                                       uint64_t seed) const = 0;
  virtual ImageBatch sample_random(int count, uint64_t seed) const = 0;
};

// Deterministic two-factor rendering: 4 shapes x 9 grid positions on a
// 16 x 16 canvas. Shapes have distinct pixel counts and sit centered in
// their cell, so both factors are exactly recoverable from pixels alone.
class SyntheticFactors : public FactorDataset {
 public:
  static constexpr int kSize = 16;
  static constexpr int kShapes = 4;
  static constexpr int kPositions = 9;

  int n_factors() const override { return 2; }
  int cardinality(int factor) const override;
  ImageBatch sample_with_fixed(int factor, int value, int count,
                               uint64_t seed) const override;
  ImageBatch sample_random(int count, uint64_t seed) const override;

  // Renders one combination; pixels in [-1, 1].
  static Tensor render(int shape, int position);
  // Exact decoder (pixel count -> shape, centroid -> position).
  static void decode(const ImageView& img, int* shape, int* position);

  // Enumerates all combinations `repeats` times as a trainable dataset;
  // labels are the shape factor.
  static Dataset as_dataset(int repeats);
};

}  // namespace scgan
