#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "scgan/data.hpp"
#include "scgan/models.hpp"

namespace scgan {

struct MetricReport {
  std::string metric;
  double value = 0.0;
  double uncertainty = std::nan("");  // SEM where defined
  uint64_t seed = 0;
  nlohmann::json config_snapshot;
  std::string config_hash;
  std::string extractor_hash;  // FID only
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

// -------------------------- Parzen log-likelihood ---------------------------

struct ParzenConfig {
  int sample_count = 10000;        // generated samples used by the CLI path
  std::vector<double> sigma_grid;  // empty = 20 log-spaced points in [0.01, 1]
  double validation_fraction = 0.1;
  uint64_t seed = 0;

  std::vector<double> resolved_grid() const;
  void validate() const;
};

// Gaussian kernel density over generated rows, evaluated on test rows. Sigma
// is picked on a validation split of the test rows (skipped for a 1-point
// grid); the report is mean +/- SEM over the remaining rows.
MetricReport parzen_loglik(const Tensor& generated, const Tensor& test,
                           const ParzenConfig& cfg);
MetricReport parzen_loglik(const ImageBatch& generated, const ImageBatch& test,
                           const ParzenConfig& cfg);

// --------------------------------- FID --------------------------------------

struct FIDConfig {
  std::string extractor = "dataset-classifier";  // or "raw-pixels"
  int sample_count = 10000;
  uint64_t seed = 0;
};

// Frechet distance between Gaussians fitted to the two feature sets
// (unbiased covariance + 1e-6 shrinkage).
double fid(const Tensor& features_real, const Tensor& features_fake);
// Closed form from exact moments; no shrinkage applied.
double fid_from_moments(const Tensor& mu1, const Tensor& cov1,
                        const Tensor& mu2, const Tensor& cov2);

// ------------------------------ FactorVAE -----------------------------------

using Representation = std::function<Tensor(const ImageBatch&)>;  // [B, D]

struct FactorVAEConfig {
  int votes = 800;
  int batch_per_vote = 64;
  int norm_samples = 800;
  double holdout_fraction = 0.2;
  uint64_t seed = 0;
};

// Majority-vote disentanglement score in [0, 1]: fix one factor, find the
// least-varying normalized representation dimension, train a majority-vote
// classifier on the (dimension -> factor) votes and report held-out accuracy.
MetricReport factorvae_score(const Representation& representation,
                             const FactorDataset& dataset,
                             const FactorVAEConfig& cfg);

// --------------------------- feature extractor ------------------------------

// Small convolutional classifier whose penultimate 128-d layer provides FID
// features. Persisted with a content hash so reports can state which
// extractor produced them.
class FeatureExtractor {
 public:
  // Trains on ds.train, enforcing the per-dataset test-accuracy floor
  // (mnist 0.98, fashion-mnist 0.88). Deterministic per seed.
  static FeatureExtractor train(const Dataset& ds, uint64_t seed);
  static FeatureExtractor load(const std::string& path);
  void save(const std::string& path) const;

  // Loads a cached extractor if present, else trains and caches.
  static FeatureExtractor cached(const Dataset& ds, uint64_t seed,
                                 const std::string& cache_dir);

  Tensor features(const ImageBatch& images) const;  // [N, 128]
  double test_accuracy() const { return test_accuracy_; }
  const std::string& content_hash() const { return hash_; }

  FeatureExtractor(FeatureExtractor&&) = default;
  FeatureExtractor& operator=(FeatureExtractor&&) = default;
  ~FeatureExtractor();

 private:
  FeatureExtractor();
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double test_accuracy_ = 0.0;
  std::string hash_;
};

// Raw flattened pixels as features (the "raw-pixels" FID extractor).
Tensor raw_pixel_features(const ImageBatch& images);

// ---------------------- GAN-side representations ----------------------------

// Post-hoc encoder E minimizing ||E(G(z,c)) - c||^2 over generated pairs;
// the default representation for constraint-based models, which lack a Q
// head. Returns a closure over an internally trained small CNN.
Representation train_posthoc_encoder(ModelBundle& bundle, int samples,
                                     uint64_t seed);

// Representation from the InfoGAN Q head.
Representation q_head_representation(ModelBundle& bundle);

// Generator-induced factor dataset used by `eval factor` on GAN checkpoints:
// factor 0 is the conditional code (class index, or quantized slot 0 for
// continuous codes); factor 1 is the quadrant of (z0, z1). This is a
// documented stand-in protocol; see README.
class GeneratorFactors : public FactorDataset {
 public:
  GeneratorFactors(ModelBundle& bundle, NoiseSpec noise, int code_bins = 8);
  int n_factors() const override { return 2; }
  int cardinality(int factor) const override;
  ImageBatch sample_with_fixed(int factor, int value, int count,
                               uint64_t seed) const override;
  ImageBatch sample_random(int count, uint64_t seed) const override;

 private:
  ImageBatch sample(int fixed_factor, int value, int count, uint64_t seed) const;
  ModelBundle& bundle_;
  NoiseSpec noise_;
  int code_bins_;
};

}  // namespace scgan
