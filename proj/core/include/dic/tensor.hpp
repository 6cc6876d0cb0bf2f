#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dic/error.hpp"

namespace dic {

/// Dense 4-D array in NCHW order, double precision. The batch currency of the
/// network code; images convert to and from it at module boundaries.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int n, int c, int h, int w, double fill = 0.0)
      : n_(n), c_(c), h_(h), w_(w),
        v_(static_cast<std::size_t>(n) * c * h * w, fill) {
    if (n <= 0 || c <= 0 || h <= 0 || w <= 0)
      throw ShapeError("Tensor dims must be positive");
  }

  static Tensor zeros_like(const Tensor& t) {
    return Tensor(t.n_, t.c_, t.h_, t.w_);
  }

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  double& operator()(int in, int ic, int iy, int ix) {
    return v_[((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix];
  }
  double operator()(int in, int ic, int iy, int ix) const {
    return v_[((static_cast<std::size_t>(in) * c_ + ic) * h_ + iy) * w_ + ix];
  }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& raw() { return v_; }
  const std::vector<double>& raw() const { return v_; }

  /// Pointer to the first element of sample `in` (c*h*w contiguous values).
  double* sample(int in) {
    return v_.data() + static_cast<std::size_t>(in) * c_ * h_ * w_;
  }
  const double* sample(int in) const {
    return v_.data() + static_cast<std::size_t>(in) * c_ * h_ * w_;
  }

  void fill(double x) { v_.assign(v_.size(), x); }

 private:
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> v_;
};

inline bool all_finite(const Tensor& t) {
  for (double x : t.raw())
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace dic
