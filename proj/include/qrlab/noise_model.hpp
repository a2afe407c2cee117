#pragma once

#include <string>
#include <vector>

#include "qrlab/rng.hpp"

namespace qrlab {

/// One Gaussian component N(mean, variance) with mixing weight.
struct NoiseComponent {
  double weight = 1.0;
  double mean = 0.0;
  double variance = 1.0;
};

/// Integrals of (z - center)^k phi_z(z) over an interval, k = 0, 1, 2.
struct IntervalMoments {
  double m0 = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
};

/// One-dimensional noise law P_z: a Gaussian or a finite Gaussian mixture.
///
/// Immutable after construction. Every functional the fixed-point theory
/// needs (density, slope, CDF, quantile, interval moments) is closed form.
class NoiseModel {
 public:
  static NoiseModel gaussian(double mean, double variance);
  static NoiseModel mixture(std::vector<NoiseComponent> components);

  /// Mixture with a narrow bump sitting just left of the 0.9-quantile, so the
  /// density falls steeply there and the first-order bias coefficient of the
  /// learned intercept is positive for alpha near 0.9.
  static NoiseModel steep_mixture();

  double density(double t) const;
  double density_deriv(double t) const;
  double cdf(double t) const;
  /// 1 - cdf(t), computed without cancellation in the upper tail.
  double survival(double t) const;
  /// z_a with cdf(z_a) = a. Throws DomainError unless 0 < a < 1.
  double quantile(double a) const;

  /// Raw moments: integrals of z^k phi_z(z) over [lo, hi]; endpoints may be
  /// +-infinity. Throws DomainError if lo > hi.
  IntervalMoments partial_moments(double lo, double hi) const;
  /// Integrals of (z - center)^k phi_z(z) over [lo, hi]. Accurate in the
  /// relative sense even for very narrow intervals.
  IntervalMoments centered_moments(double lo, double hi, double center) const;

  double mean() const;
  double variance() const;
  double max_std() const;
  /// True when phi_z(t) = phi_z(-t) for all t (components pair up).
  bool is_symmetric() const;
  bool is_gaussian() const { return components_.size() == 1; }

  double sample(Rng& rng) const;

  const std::vector<NoiseComponent>& components() const { return components_; }
  std::string describe() const;

 private:
  explicit NoiseModel(std::vector<NoiseComponent> components);

  std::vector<NoiseComponent> components_;
  std::vector<double> stds_;
};

}  // namespace qrlab
