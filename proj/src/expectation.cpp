#include "qrlab/expectation.hpp"

#include <algorithm>
#include <cmath>

#include "qrlab/errors.hpp"

namespace qrlab {
namespace {

struct Conditional {
  double e1;
  double e2;
};

// E[e'(c0 + Z)] and E[e'(c0 + Z)^2] where the band of the envelope in terms
// of Z is [center - (1-alpha)lambda, center + alpha*lambda].
Conditional conditional_slope(double center, double lambda, double alpha,
                              const NoiseModel& noise) {
  const double lo = center - (1.0 - alpha) * lambda;
  const double hi = center + alpha * lambda;
  const double below = noise.cdf(lo);
  const double above = noise.survival(hi);
  const IntervalMoments band = noise.centered_moments(lo, hi, center);
  Conditional out;
  out.e1 = alpha * above - (1.0 - alpha) * below + band.m1 / lambda;
  out.e2 = alpha * alpha * above + (1.0 - alpha) * (1.0 - alpha) * below +
           band.m2 / (lambda * lambda);
  return out;
}

// The G-integrand varies on the scale sigma_min/scale, so the rule is
// refined (doubling from the requested size, at most 1024 nodes) until
// roughly sqrt(nodes)/4 exceeds scale/sigma_min.
int effective_nodes(double scale, const NoiseModel& noise, int requested) {
  double sigma_min = noise.max_std();
  for (const NoiseComponent& c : noise.components()) sigma_min = std::min(sigma_min, std::sqrt(c.variance));
  const double ratio = scale / sigma_min;
  const double needed = 16.0 * (ratio + 0.5) * (ratio + 0.5);
  int n = requested;
  while (n < needed && n < 1024) n *= 2;
  return std::max(requested, std::min(n, 1024));
}

}  // namespace

SystemMoments system_moments(double tau, double lambda, double b, double alpha,
                             const NoiseModel& noise, const QuadratureSpec& quad) {
  if (!(lambda > 0.0)) throw DomainError("system_moments: lambda must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("system_moments: alpha must lie in (0,1)");
  if (!(tau >= 0.0)) throw DomainError("system_moments: tau must be nonnegative");
  if (quad.nodes < 2) throw DomainError("system_moments: need at least two quadrature nodes");

  SystemMoments out;
  if (tau == 0.0) {
    const Conditional c = conditional_slope(b, lambda, alpha, noise);
    out.m_1 = c.e1;
    out.m_sq = c.e2;
    return out;
  }

  const QuadratureRule& rule = gauss_hermite(effective_nodes(tau, noise, quad.nodes));
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double g = rule.nodes[i];
    const double w = rule.weights[i];
    // e'(tau*g + Z) has its band at Z in b - tau*g + [-(1-alpha)lambda, alpha*lambda].
    const Conditional c = conditional_slope(b - tau * g, lambda, alpha, noise);
    out.m_1 += w * c.e1;
    out.m_sq += w * c.e2;
    out.m_g += w * c.e1 * g;
  }
  return out;
}

double coverage_integral(double scale, double shift, const NoiseModel& noise,
                         const QuadratureSpec& quad) {
  if (!(scale >= 0.0)) throw DomainError("coverage_integral: scale must be nonnegative");
  if (scale == 0.0) return noise.cdf(shift);
  if (quad.nodes < 2) throw DomainError("coverage_integral: need at least two quadrature nodes");
  const QuadratureRule& rule = gauss_hermite(effective_nodes(scale, noise, quad.nodes));
  double out = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    out += rule.weights[i] * noise.cdf(scale * rule.nodes[i] + shift);
  }
  return std::clamp(out, 0.0, 1.0);
}

}  // namespace qrlab
