#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "qrlab/erm.hpp"
#include "qrlab/noise_model.hpp"
#include "qrlab/quadrature.hpp"

namespace qrlab {

struct CoverageReport {
  std::optional<double> exact;      ///< only when the generating model is known
  std::optional<double> empirical;
  Eigen::Index n_test = 0;
  double alpha = 0.0;
  double gap = 0.0;  ///< alpha minus the exact coverage if known, else the empirical one
};

/// Coverage of x -> <w, x> + b under y = <w_star, x> + z, x ~ N(0, I):
/// E_G[Phi_z(||w - w_star|| G + b)]. No test set needed.
double exact_coverage(const QuantileFit& fit, const Eigen::VectorXd& w_star,
                      const NoiseModel& noise, const QuadratureSpec& quad = {});

/// Fraction of rows with y <= <w, x> + b; ties count as covered.
double empirical_coverage(const QuantileFit& fit, const Dataset& test);

/// exact and/or empirical coverage in one record.
CoverageReport coverage_report(const QuantileFit& fit, double alpha, const Dataset* test,
                               const QuadratureSpec& quad = {});

/// Heteroscedastic model y = mu(x) + sigma(x) z whose alpha-quantile is
/// exactly <w_star, x> + b_star:
///   sigma(x) = clip(sigma0 + sigma1 * tanh(||x||^2 / d), sigma_lo, sigma_hi),
///   mu(x)    = <w_star, x> + b_star - sigma(x) z_alpha.
/// x is standard normal or uniform on [-1, 1]^d; both are symmetric and
/// sigma(x) = sigma(-x).
struct RelaxedModel {
  enum class Design { kGaussian, kUniformCube };

  double alpha = 0.9;
  Design design = Design::kGaussian;
  double sigma0 = 0.5;
  double sigma1 = 0.5;
  double sigma_lo = 0.25;
  double sigma_hi = 2.0;
  NoiseModel noise = NoiseModel::gaussian(0.0, 1.0);

  /// Throws DomainError unless the noise is a zero-mean Gaussian (symmetric
  /// and unimodal) and the sigma bounds are positive and ordered.
  void validate() const;
  double sigma(const Eigen::VectorXd& x) const;
};

struct RelaxedCoverage {
  double coverage = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo estimate of P(y <= <w_hat, x> + b_star) under the relaxed
/// model, with its binomial standard error. Deterministic in seed.
RelaxedCoverage relaxed_coverage(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                                 double b_star, const RelaxedModel& model, std::int64_t n_mc,
                                 std::uint64_t seed);

}  // namespace qrlab
