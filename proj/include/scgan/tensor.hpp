#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "scgan/errors.hpp"

namespace scgan {

// Dense row-major tensor of doubles. All numeric state in the toolkit (model
// parameters, activations, images, feature matrices) lives in these.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel(shape)) {}
  Tensor(std::vector<int> s, double fill)
      : shape(std::move(s)), data(numel(shape), fill) {}

  static int64_t numel(const std::vector<int>& s) {
    int64_t n = 1;
    for (int d : s) {
      require(d >= 0, "tensor dimensions must be non-negative");
      n *= d;
    }
    return n;
  }

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape.size()); }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }

  double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

  // 2-D / 4-D accessors for readability in tests and small code paths.
  double& at(int i, int j) { return data[static_cast<size_t>(i) * dim(1) + j]; }
  double at(int i, int j) const { return data[static_cast<size_t>(i) * dim(1) + j]; }
  double& at(int b, int c, int y, int x) {
    return data[((static_cast<size_t>(b) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }
  double at(int b, int c, int y, int x) const {
    return data[((static_cast<size_t>(b) * dim(1) + c) * dim(2) + y) * dim(3) + x];
  }

  Tensor reshaped(std::vector<int> s) const {
    require(numel(s) == size(), "reshape changes element count");
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
  }
};

}  // namespace scgan
