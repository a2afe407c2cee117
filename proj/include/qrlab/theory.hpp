#pragma once

#include <array>
#include <optional>

#include "qrlab/noise_model.hpp"
#include "qrlab/quadrature.hpp"

namespace qrlab {

/// First-order coefficients of the fixed-point root as kappa -> 0:
/// tau^2 ~ tau0_sq*kappa, lambda ~ lambda0*kappa, b ~ z_alpha + b0*kappa.
struct ExpansionConstants {
  double tau0_sq = 0.0;
  double lambda0 = 0.0;
  double b0 = 0.0;
  double z_alpha = 0.0;
};

/// Requires alpha in [0.5, 1) and phi_z(z_alpha) >= 1e-12.
ExpansionConstants expansion_constants(double alpha, const NoiseModel& noise);

/// alpha - (alpha - 1/2) * kappa.
double coverage_linear_approx(double alpha, double kappa);

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

/// Residuals of the fixed-point system in raw variables:
///   tau^2 kappa - lambda^2 E[e'^2],  tau kappa - lambda E[e' G],  E[e'].
Vec3 system_residual(double tau, double lambda, double b, double alpha, double kappa,
                     const NoiseModel& noise, const QuadratureSpec& quad = {});

/// The same system in the rescaled variables used at small kappa, where
/// tau = tau_bar*sqrt(kappa), lambda = lambda_bar*kappa and
/// b = z_alpha + b_bar*kappa. Equals the raw residual divided by
/// (kappa^2, kappa^1.5, kappa).
Vec3 transformed_residual(double tau_bar, double lambda_bar, double b_bar, double alpha,
                          double kappa, const NoiseModel& noise, const QuadratureSpec& quad = {});

/// kappa -> 0 limit of the Jacobian of transformed_residual with respect to
/// (tau_bar, lambda_bar, b_bar).
Mat3 limit_jacobian(double tau_bar, double lambda_bar, double alpha, const NoiseModel& noise);

struct SolveOpts {
  double tol = 1e-10;
  int max_iter = 200;
  QuadratureSpec quad{};
  double kappa_max = 0.95;
  /// Below this kappa the solve runs in the rescaled variables.
  double transform_below = 0.05;
  /// Raw (tau, lambda, b) starting point; defaults to the expansion point.
  std::optional<Vec3> initial;
};

struct TheorySolution {
  double alpha = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  double b = 0.0;
  /// Max-abs residual of the system that was solved (raw or rescaled).
  double residual = 0.0;
  double coverage = 0.0;
  double c_alpha_kappa = 0.0;
  int iterations = 0;
  bool transformed = false;
  /// kappa > 0.5, beyond the range the small-kappa theory is checked on.
  bool extrapolated = false;
};

/// Damped Newton with a forward-difference Jacobian, started at the
/// expansion point and falling back to continuation in kappa. Throws
/// NonConvergence if the residual never drops below opts.tol.
TheorySolution solve_system(double alpha, double kappa, const NoiseModel& noise,
                            const SolveOpts& opts = {});

/// Gradient of the convex-concave function
///   D(tau, b, tau_g, beta) = beta*tau_g/2 + E[e_{l_b}(tau G + Z; tau_g/beta)]/kappa - tau*beta
/// with respect to (tau, b, tau_g, beta).
std::array<double, 4> saddle_gradient(double tau, double b, double tau_g, double beta,
                                      double alpha, double kappa, const NoiseModel& noise,
                                      const QuadratureSpec& quad = {});

/// Max-abs gradient of D at the point (tau, b, tau, tau/lambda) that a root
/// of the fixed-point system maps to.
double saddle_stationarity(const TheorySolution& sol, double alpha, double kappa,
                           const NoiseModel& noise, const QuadratureSpec& quad = {});

}  // namespace qrlab
