#pragma once

#include "scgan/tensor.hpp"

namespace scgan {

// Declared pixel range of an image tensor. Generators emit tanh outputs in
// [-1,1] ("sym"); SSIM and the sample-grid encoder work on [0,1] ("unit").
enum class ImageRange { unit, sym };

inline double range_lo(ImageRange r) { return r == ImageRange::unit ? 0.0 : -1.0; }
inline double range_hi(ImageRange) { return 1.0; }

// Non-owning view of one image in CHW layout.
struct ImageView {
  const double* data;
  int channels, height, width;
  ImageRange range;

  int64_t size() const {
    return static_cast<int64_t>(channels) * height * width;
  }
};

struct ImageBatch {
  Tensor pixels;  // [batch, channels, height, width]
  ImageRange range = ImageRange::sym;

  ImageBatch() = default;
  ImageBatch(Tensor t, ImageRange r) : pixels(std::move(t)), range(r) {
    require(pixels.ndim() == 4, "image batch must be 4-D [B,C,H,W]");
  }

  int batch() const { return pixels.dim(0); }
  int channels() const { return pixels.dim(1); }
  int height() const { return pixels.dim(2); }
  int width() const { return pixels.dim(3); }

  ImageView image(int i) const {
    require(i >= 0 && i < batch(), "image index out of range");
    return {pixels.ptr() + static_cast<size_t>(i) * channels() * height() * width(),
            channels(), height(), width(), range};
  }

  // Invariant check: finite values within the declared range.
  void validate() const {
    const double lo = range_lo(range) - 1e-9, hi = range_hi(range) + 1e-9;
    for (double v : pixels.data) {
      require(std::isfinite(v), "image batch contains non-finite values");
      require(v >= lo && v <= hi, "image batch violates its declared range");
    }
  }
};

}  // namespace scgan
