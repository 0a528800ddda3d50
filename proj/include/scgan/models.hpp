#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include "scgan/constraint.hpp"
#include "scgan/image.hpp"
#include "scgan/latent.hpp"
#include "scgan/nn.hpp"

namespace scgan {

enum class ObjectiveKind { gan, cgan, infogan, scgan, modified };

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::modified;
  double lambda_info = 1.0;      // infogan mutual-information weight
  bool literal_minimax = false;  // generator uses log(1-D) instead of -log D
  std::optional<SCConfig> sc;

  void validate() const {
    const bool wants_sc =
        kind == ObjectiveKind::scgan || kind == ObjectiveKind::modified;
    if (wants_sc != sc.has_value())
      throw ConfigError("sc config must be present iff objective is scgan/modified");
    if (kind == ObjectiveKind::infogan)
      require(lambda_info > 0, "lambda_info must be positive");
    if (sc) {
      sc->validate();
      if (kind == ObjectiveKind::scgan)
        require(sc->variant == SCVariant::original,
                "scgan objective uses the original constraint");
      if (kind == ObjectiveKind::modified)
        require(sc->variant == SCVariant::modified,
                "modified objective uses the modified constraint");
    }
  }
};

// Network family shared by every objective: the two-dense/two-deconv
// generator and its mirrored discriminator, sized by image_size (must be a
// multiple of 4).
struct ArchDescriptor {
  int image_size = 28;
  int image_channels = 1;
  int noise_dim = 62;
  CodeSpec code;
  int base_channels = 64;
  int dense_units = 1024;
  bool batchnorm = true;
  bool conditional_d = false;  // cgan: one-hot code planes appended to D input
  bool q_head = false;         // infogan auxiliary head
  double leaky_slope = 0.1;

  int code_dim() const { return code.dim(); }
  int q_out_dim() const { return code.dim(); }
  void validate() const;
};

class Generator {
 public:
  Generator(const ArchDescriptor& arch, Rng& init_rng);
  // [B, C, H, W] in [-1, 1]
  ImageBatch forward(const LatentBatch& latent, Phase phase);
  void backward(const Tensor& dimages);
  std::vector<Param*> params() { return net_.params(); }
  std::vector<Tensor*> state() { return net_.state(); }

 private:
  ArchDescriptor arch_;
  Sequential net_;
};

struct DiscOut {
  Tensor logits;  // [B, 1]
  Tensor probs;   // [B, 1], sigmoid of logits
  Tensor q;       // [B, q_out] when the Q head exists, else empty
};

class Discriminator {
 public:
  Discriminator(const ArchDescriptor& arch, Rng& init_rng);
  // codes: required when arch.conditional_d (one-hot rows [B, k]); else null.
  DiscOut forward(const ImageBatch& images, const Tensor* codes, Phase phase);
  // dlogits: [B,1]; dq: [B,q_out] or null. Returns d(loss)/d(images).
  Tensor backward(const Tensor& dlogits, const Tensor* dq);
  std::vector<Param*> trunk_params();  // trunk + adversarial head
  std::vector<Param*> q_params();
  std::vector<Tensor*> state();

 private:
  ArchDescriptor arch_;
  Sequential trunk_;
  Sequential head_;
  Sequential qnet_;
  Tensor trunk_out_;
  std::vector<int> input_shape_;
};

struct ModelBundle {
  ArchDescriptor arch;
  ObjectiveConfig objective;
  std::unique_ptr<Generator> g;
  std::unique_ptr<Discriminator> d;
  AdamOpt opt_g, opt_d;
  int64_t step = 0;
  uint64_t master_seed = 0;

  static ModelBundle create(const ArchDescriptor& arch,
                            const ObjectiveConfig& objective,
                            const AdamConfig& adam_g, const AdamConfig& adam_d,
                            uint64_t master_seed);
  std::vector<Param*> g_side_params();  // generator + Q head
  std::vector<Param*> d_side_params();  // trunk + adversarial head
};

// ---------------------------------------------------------------------------
// Objective values. Probabilities are clamped to [1e-7, 1-1e-7] inside logs.
// ---------------------------------------------------------------------------

inline constexpr double kProbClamp = 1e-7;

// V(D,G) = mean log d_real + mean log(1 - d_fake).
double gan_value(std::span<const double> d_real, std::span<const double> d_fake);

// Identical arithmetic; the conditioning happened inside D.
double cgan_value(std::span<const double> d_real_given_c,
                  std::span<const double> d_fake_given_c);

// L_I(G,Q) = mean log Q(c|x). Discrete codes: q holds softmax logits.
// Continuous codes: q holds Gaussian means with fixed sigma = 1.
double infogan_lower_bound(const Tensor& q, const LatentBatch& codes);

// Entropy H(c) of the code prior; reported separately, never differentiated.
double code_entropy(const CodeSpec& spec);

struct ObjectiveDiagnostics {
  double sc_value = std::nan("");
  ContributionStats sc_stats;
  double info_lower_bound = std::nan("");
  double mean_d_real = std::nan("");
  double mean_d_fake = std::nan("");
  int64_t sc_pair_count = 0;
};

struct TotalObjective {
  double d_loss = 0.0;
  double g_loss = 0.0;
  ObjectiveDiagnostics diag;
};

// Evaluates both losses on one batch without touching parameters or running
// statistics. real_codes: one-hot label rows for the conditional D (cgan
// only, may be null otherwise). pair_seed drives the modified constraint's
// subsampling.
TotalObjective total_objective(ModelBundle& bundle, const ImageBatch& real,
                               const Tensor* real_codes,
                               const LatentBatch& latent, uint64_t pair_seed);

// ---------------------------------------------------------------------------
// Checkpoints: versioned container with architecture, objective, parameters,
// optimizer state, batchnorm buffers, step counter and master seed.
// ---------------------------------------------------------------------------
void save_checkpoint(ModelBundle& bundle, const std::string& path);
ModelBundle load_checkpoint(const std::string& path);

}  // namespace scgan
