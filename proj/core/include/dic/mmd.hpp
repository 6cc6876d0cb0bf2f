#pragma once

#include <span>
#include <vector>

#include "dic/error.hpp"

namespace dic {

/// One frozen-perceptron embedding.
using FeatureVector = std::vector<double>;

/// n feature vectors of uniform dimensionality.
struct FeatureBatch {
  int dim = 0;
  std::vector<double> data;  // row-major, count() x dim

  FeatureBatch() = default;
  FeatureBatch(int count, int d) : dim(d), data(static_cast<std::size_t>(count) * d, 0.0) {}

  int count() const {
    return dim == 0 ? 0 : static_cast<int>(data.size() / static_cast<std::size_t>(dim));
  }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  std::span<double> row(int i) {
    return {data.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)};
  }
  void push_back(std::span<const double> v);
  void validate() const;
};

/// Convex combination of Gaussian kernels: bandwidths sigma_u > 0 and weights
/// beta_u on the simplex (sum to one, non-negative).
struct KernelMixture {
  std::vector<double> bandwidths;
  std::vector<double> weights;

  void validate() const;

  /// Single Gaussian kernel as a degenerate mixture.
  static KernelMixture single(double sigma);

  /// m kernels with sigma_u = sigma_med * 2^(u-4), u = 1..m, uniform weights.
  /// The standard geometric ladder around a reference scale.
  static KernelMixture ladder(double sigma_med, int m);
};

/// exp(-||a-b||^2 / (2 sigma^2)). Throws ShapeError on dimension mismatch and
/// ConfigError when sigma <= 0.
double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                       double sigma);

/// sum_u beta_u * k_u(a, b) over the mixture's Gaussian components.
double mixture_kernel(std::span<const double> a, std::span<const double> b,
                      const KernelMixture& km);

/// Biased V-statistic estimator of squared MMD between equal-size batches:
///   (1/n^2) [ sum_ii' k(X_i,X_i') + sum_ii' k(Y_i,Y_i') - 2 sum_ij k(X_i,Y_j) ].
/// Non-negative up to numerical slack; zero iff the batches are identical
/// multisets.
double mmd_squared(const FeatureBatch& x, const FeatureBatch& y,
                   const KernelMixture& km);

/// d(mmd_squared)/dY_i for all i, same layout as y. The X side is treated as
/// constant (original-image features never receive gradients).
FeatureBatch mmd_squared_grad_y(const FeatureBatch& x, const FeatureBatch& y,
                                const KernelMixture& km);

/// Median of pairwise Euclidean distances within a batch; the reference scale
/// for KernelMixture::ladder. Returns a tiny positive floor when all vectors
/// coincide.
double median_pairwise_distance(const FeatureBatch& x);

}  // namespace dic
