#pragma once

#include <cstdint>
#include <span>

#include "scgan/rng.hpp"
#include "scgan/tensor.hpp"

namespace scgan {

enum class NoiseDist { uniform, normal };

struct NoiseSpec {
  int dim = 62;
  NoiseDist distribution = NoiseDist::uniform;  // uniform(-1,1)
};

enum class CodeKind { discrete, continuous };

// Conditional code layout. Discrete: one-hot over `cardinality` classes.
// Continuous: `cardinality` scalar slots, each in [range_lo, range_hi].
struct CodeSpec {
  CodeKind kind = CodeKind::discrete;
  int cardinality = 10;
  double range_lo = -1.0;
  double range_hi = 1.0;

  int dim() const { return cardinality; }
  double range_width() const { return range_hi - range_lo; }
  void validate() const;
};

struct LatentBatch {
  Tensor z;  // [batch, noise_dim]
  Tensor c;  // [batch, code_dim]
  CodeSpec spec;

  int batch() const { return z.dim(0); }
  std::span<const double> code(int i) const {
    return {c.ptr() + static_cast<size_t>(i) * c.dim(1),
            static_cast<size_t>(c.dim(1))};
  }
  // Discrete class index of row i.
  int class_of(int i) const;
};

// Draws one batch of (z, c). Discrete classes are i.i.d. uniform unless
// `stratified` is set, in which case classes are dealt round-robin and the
// assignment order shuffled (exactly balanced when batch % cardinality == 0).
LatentBatch sample_latent(const NoiseSpec& noise, const CodeSpec& code,
                          int batch, uint64_t seed, bool stratified = false);

// Agreement weight in [0,1] between two code rows.
//   discrete:   <c_i, c_j>, which is 1 for equal one-hots and 0 otherwise.
//   continuous: 1 - min(1, mean_k |c_ik - c_jk| / range_width), so equal
//               codes weigh 1 and far codes weigh 0.
double code_agreement(std::span<const double> ci, std::span<const double> cj,
                      const CodeSpec& spec);

}  // namespace scgan
