#pragma once

#include "qrlab/noise_model.hpp"
#include "qrlab/quadrature.hpp"

namespace qrlab {

/// Expectations of the envelope slope e'(tau*G + Z; lambda) of the shifted
/// pinball loss, (G, Z) ~ N(0,1) x P_z.
struct SystemMoments {
  double m_sq = 0.0;  ///< E[e'^2]
  double m_g = 0.0;   ///< E[e' G]
  double m_1 = 0.0;   ///< E[e']
};

/// Conditional on each Gauss-Hermite node g the slope is piecewise linear
/// in Z with breakpoints b-(1-alpha)lambda-tau*g and b+alpha*lambda-tau*g, so
/// the Z-expectation is assembled exactly from the noise CDF and interval
/// moments; only the average over g is a quadrature. quad.nodes is a floor:
/// the rule is refined when tau is large against the narrowest noise
/// component.
SystemMoments system_moments(double tau, double lambda, double b, double alpha,
                             const NoiseModel& noise, const QuadratureSpec& quad = {});

/// E[Phi_z(scale*G + shift)], G ~ N(0,1), clamped to [0,1]. Node count as
/// for system_moments.
double coverage_integral(double scale, double shift, const NoiseModel& noise,
                         const QuadratureSpec& quad = {});

}  // namespace qrlab
