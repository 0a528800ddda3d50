#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scgan/errors.hpp"

namespace scgan {

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact by
// the standard); the distributions are implemented here rather than taken
// from <random> so that sampled sequences do not depend on the standard
// library vendor.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // Independent substream for (stream id, step). Used by training so that a
  // resumed run draws exactly the sequence an uninterrupted run would.
  static Rng for_step(uint64_t master_seed, uint64_t stream_id, uint64_t step) {
    return Rng(mix(mix(master_seed, 0x9e3779b97f4a7c15ull + stream_id), step));
  }

  uint64_t next() { return eng_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two engine draws.
  double normal() {
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Uniform integer in [0, n); rejection-sampled, no modulo bias.
  int below(int n) {
    require(n > 0, "Rng::below requires n > 0");
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x;
    do {
      x = eng_();
    } while (x >= limit);
    return static_cast<int>(x % un);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(static_cast<int>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (is.fail()) throw InvalidArgument("malformed RNG state string");
  }

 private:
  static uint64_t mix(uint64_t a, uint64_t b) {
    // splitmix64 finalizer over the combined word
    uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 eng_;
};

// Stream ids used by the training loop; kept here so checkpoint resume and
// tests agree on the layout.
enum RngStream : uint64_t {
  kStreamInit = 1,
  kStreamData = 2,
  kStreamLatentD = 3,
  kStreamLatentG = 4,
  kStreamPairs = 5,
  kStreamEval = 6,
};

}  // namespace scgan
