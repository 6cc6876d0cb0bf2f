#pragma once

// Shared helpers for the test suites. Test-only code.

#include <cmath>
#include <vector>

#include "dic/image.hpp"
#include "dic/mmd.hpp"
#include "dic/rng.hpp"
#include "dic/tensor.hpp"

namespace dic::test {

inline Image random_image(int h, int w, Rng& rng) {
  Image img(h, w);
  for (double& v : img.values) v = rng.uniform();
  return img;
}

inline FeatureBatch random_feature_batch(int n, int d, Rng& rng, double scale = 1.0) {
  FeatureBatch batch(n, d);
  for (double& v : batch.data) v = scale * rng.normal();
  return batch;
}

inline Tensor random_tensor(int n, int c, int h, int w, Rng& rng, double scale = 1.0) {
  Tensor t(n, c, h, w);
  for (double& v : t.raw()) v = scale * rng.normal();
  return t;
}

/// Relative agreement check used by all gradient tests:
/// |a - b| <= tol * max(|a|, |b|) + abs_floor.
inline bool close_rel(double a, double b, double tol, double abs_floor = 1e-10) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace dic::test
