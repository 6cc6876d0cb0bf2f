#include "dic/mmd.hpp"

#include <algorithm>
#include <cmath>

namespace dic {

namespace {

constexpr double kSimplexTol = 1e-9;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Pairwise squared-distance matrix between rows of a and rows of b.
std::vector<double> sq_dist_matrix(const FeatureBatch& a, const FeatureBatch& b) {
  const int na = a.count(), nb = b.count();
  std::vector<double> d(static_cast<std::size_t>(na) * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      d[static_cast<std::size_t>(i) * nb + j] = sq_dist(a.row(i), b.row(j));
  return d;
}

// Mixture kernel evaluated on a precomputed squared distance.
double mixture_on_sqdist(double d2, const KernelMixture& km) {
  double s = 0.0;
  for (std::size_t u = 0; u < km.bandwidths.size(); ++u) {
    double sig = km.bandwidths[u];
    s += km.weights[u] * std::exp(-d2 / (2.0 * sig * sig));
  }
  return s;
}

}  // namespace

void FeatureBatch::push_back(std::span<const double> v) {
  if (dim == 0) dim = static_cast<int>(v.size());
  if (static_cast<int>(v.size()) != dim)
    throw ShapeError("feature vector dimension mismatch");
  data.insert(data.end(), v.begin(), v.end());
}

void FeatureBatch::validate() const {
  if (dim <= 0 || data.empty() || data.size() % static_cast<std::size_t>(dim) != 0)
    throw ShapeError("feature batch must hold n >= 1 vectors of uniform dim");
  for (double v : data)
    if (!std::isfinite(v)) throw NumericError("non-finite feature value");
}

void KernelMixture::validate() const {
  if (bandwidths.empty() || bandwidths.size() != weights.size())
    throw ConfigError("kernel mixture needs matching bandwidth/weight lists");
  double sum = 0.0;
  for (double b : bandwidths)
    if (!(b > 0.0)) throw ConfigError("kernel bandwidths must be strictly positive");
  for (double w : weights) {
    if (w < -kSimplexTol) throw ConfigError("kernel weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ConfigError("kernel weights must sum to 1");
}

KernelMixture KernelMixture::single(double sigma) {
  KernelMixture km;
  km.bandwidths = {sigma};
  km.weights = {1.0};
  km.validate();
  return km;
}

KernelMixture KernelMixture::ladder(double sigma_med, int m) {
  if (m < 1) throw ConfigError("kernel count must be >= 1");
  if (!(sigma_med > 0.0)) throw ConfigError("ladder reference scale must be positive");
  KernelMixture km;
  km.bandwidths.resize(m);
  km.weights.assign(m, 1.0 / m);
  for (int u = 1; u <= m; ++u)
    km.bandwidths[u - 1] = sigma_med * std::pow(2.0, u - 4);
  km.validate();
  return km;
}

double gaussian_kernel(std::span<const double> a, std::span<const double> b,
                       double sigma) {
  if (a.size() != b.size()) throw ShapeError("kernel arguments differ in dimension");
  if (!(sigma > 0.0)) throw ConfigError("kernel bandwidth must be positive");
  return std::exp(-sq_dist(a, b) / (2.0 * sigma * sigma));
}

double mixture_kernel(std::span<const double> a, std::span<const double> b,
                      const KernelMixture& km) {
  km.validate();
  if (a.size() != b.size()) throw ShapeError("kernel arguments differ in dimension");
  return mixture_on_sqdist(sq_dist(a, b), km);
}

double mmd_squared(const FeatureBatch& x, const FeatureBatch& y,
                   const KernelMixture& km) {
  km.validate();
  x.validate();
  y.validate();
  if (x.count() != y.count())
    throw ShapeError("mmd batches must have equal size");
  if (x.dim != y.dim) throw ShapeError("mmd batches must share dimensionality");
  const int n = x.count();

  const std::vector<double> dxx = sq_dist_matrix(x, x);
  const std::vector<double> dyy = sq_dist_matrix(y, y);
  const std::vector<double> dxy = sq_dist_matrix(x, y);

  double kxx = 0.0, kyy = 0.0, kxy = 0.0;
  for (std::size_t i = 0; i < dxx.size(); ++i) {
    kxx += mixture_on_sqdist(dxx[i], km);
    kyy += mixture_on_sqdist(dyy[i], km);
    kxy += mixture_on_sqdist(dxy[i], km);
  }
  const double inv_n2 = 1.0 / (static_cast<double>(n) * n);
  return inv_n2 * (kxx + kyy - 2.0 * kxy);
}

FeatureBatch mmd_squared_grad_y(const FeatureBatch& x, const FeatureBatch& y,
                                const KernelMixture& km) {
  km.validate();
  x.validate();
  y.validate();
  if (x.count() != y.count()) throw ShapeError("mmd batches must have equal size");
  if (x.dim != y.dim) throw ShapeError("mmd batches must share dimensionality");
  const int n = y.count();
  const int d = y.dim;
  const double inv_n2 = 1.0 / (static_cast<double>(n) * n);

  FeatureBatch grad(n, d);
  // d/db of exp(-||a-b||^2/(2s^2)) is k(a,b) * (a-b) / s^2.
  auto add_kernel_grad = [&](std::span<const double> a, std::span<const double> b,
                             std::span<double> out, double scale) {
    double d2 = sq_dist(a, b);
    for (std::size_t u = 0; u < km.bandwidths.size(); ++u) {
      double sig = km.bandwidths[u];
      double k = km.weights[u] * std::exp(-d2 / (2.0 * sig * sig));
      double f = scale * k / (sig * sig);
      for (int t = 0; t < d; ++t) out[t] += f * (a[t] - b[t]);
    }
  };

  for (int j = 0; j < n; ++j) {
    std::span<double> gj = grad.row(j);
    // YY double sum: index j appears as both arguments; the two occurrences
    // contribute symmetrically (the i = j diagonal term has zero gradient).
    for (int i = 0; i < n; ++i) {
      if (i == j) continue;
      add_kernel_grad(y.row(i), y.row(j), gj, 2.0 * inv_n2);
    }
    // Cross term -2 sum_ij k(X_i, Y_j).
    for (int i = 0; i < n; ++i)
      add_kernel_grad(x.row(i), y.row(j), gj, -2.0 * inv_n2);
  }
  return grad;
}

double median_pairwise_distance(const FeatureBatch& x) {
  x.validate();
  const int n = x.count();
  if (n < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      dists.push_back(std::sqrt(sq_dist(x.row(i), x.row(j))));
  std::sort(dists.begin(), dists.end());
  double med;
  std::size_t m = dists.size();
  if (m % 2 == 1) med = dists[m / 2];
  else med = 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
  return std::max(med, 1e-12);
}

}  // namespace dic
