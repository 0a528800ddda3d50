#include "scgan/latent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace scgan {

void CodeSpec::validate() const {
  require(cardinality >= 2, "code cardinality must be >= 2");
  require(range_hi > range_lo, "continuous code range must be non-empty");
}

int LatentBatch::class_of(int i) const {
  require(spec.kind == CodeKind::discrete, "class_of requires discrete codes");
  const double* row = c.ptr() + static_cast<size_t>(i) * c.dim(1);
  for (int k = 0; k < c.dim(1); ++k)
    if (row[k] == 1.0) return k;
  throw InvalidArgument("code row is not one-hot");
}

LatentBatch sample_latent(const NoiseSpec& noise, const CodeSpec& code,
                          int batch, uint64_t seed, bool stratified) {
  require(batch >= 1, "batch must be >= 1");
  require(noise.dim >= 1, "noise dim must be >= 1");
  code.validate();

  Rng rng(seed);
  LatentBatch out;
  out.spec = code;
  out.z = Tensor({batch, noise.dim});
  out.c = Tensor({batch, code.dim()}, 0.0);

  for (int64_t i = 0; i < out.z.size(); ++i)
    out.z[i] = noise.distribution == NoiseDist::uniform ? rng.uniform(-1.0, 1.0)
                                                        : rng.normal();

  if (code.kind == CodeKind::discrete) {
    std::vector<int> classes(batch);
    if (stratified) {
      for (int i = 0; i < batch; ++i) classes[i] = i % code.cardinality;
      rng.shuffle(classes);
    } else {
      for (int i = 0; i < batch; ++i) classes[i] = rng.below(code.cardinality);
    }
    for (int i = 0; i < batch; ++i) out.c.at(i, classes[i]) = 1.0;
  } else {
    for (int64_t i = 0; i < out.c.size(); ++i)
      out.c[i] = rng.uniform(code.range_lo, code.range_hi);
  }
  return out;
}

double code_agreement(std::span<const double> ci, std::span<const double> cj,
                      const CodeSpec& spec) {
  require(ci.size() == cj.size(), "code vectors have mismatched dimensions");
  require(static_cast<int>(ci.size()) == spec.dim(),
          "code vector does not conform to spec");
  if (spec.kind == CodeKind::discrete) {
    double dot = 0.0;
    for (size_t k = 0; k < ci.size(); ++k) dot += ci[k] * cj[k];
    return dot;
  }
  double mean_abs = 0.0;
  for (size_t k = 0; k < ci.size(); ++k) mean_abs += std::abs(ci[k] - cj[k]);
  mean_abs /= static_cast<double>(ci.size());
  return 1.0 - std::min(1.0, mean_abs / spec.range_width());
}

}  // namespace scgan
