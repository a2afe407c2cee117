#include "qrlab/theory.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "qrlab/errors.hpp"
#include "qrlab/expectation.hpp"

namespace qrlab {
namespace {

constexpr double kLambdaFloor = 1e-12;

double max_abs(const Vec3& v) {
  return std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2])});
}

double norm2(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 transformed_residual_at(double tau_bar, double lambda_bar, double b_bar, double alpha,
                             double kappa, double z_alpha, const NoiseModel& noise,
                             const QuadratureSpec& quad) {
  const double root_kappa = std::sqrt(kappa);
  const SystemMoments m = system_moments(tau_bar * root_kappa, lambda_bar * kappa,
                                         z_alpha + b_bar * kappa, alpha, noise, quad);
  return {tau_bar * tau_bar - lambda_bar * lambda_bar * m.m_sq,
          tau_bar - lambda_bar * m.m_g / root_kappa, m.m_1 / kappa};
}

struct NewtonOutcome {
  Vec3 point{};
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

using Residual = std::function<Vec3(const Vec3&)>;
using Admissible = std::function<bool(const Vec3&)>;

// Damped Newton on a 3x3 system. The step is halved (at most 30 times) until
// the Euclidean residual decreases and the trial stays admissible. Once the
// residual is below tol, up to three more steps polish the root while they
// still reduce it.
NewtonOutcome damped_newton(const Residual& f, const Admissible& ok, Vec3 p, double tol,
                            int max_iter, double first_step) {
  NewtonOutcome out;
  Vec3 fp = f(p);
  out.point = p;
  out.residual = max_abs(fp);
  int polish = 0;
  for (int it = 0; it < max_iter; ++it) {
    if (!std::isfinite(out.residual)) return out;
    if (out.residual <= tol) {
      out.converged = true;
      if (polish++ == 3) return out;
    }
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      double h = 1e-6 * std::max(1.0, std::abs(p[j]));
      Vec3 q = p;
      q[j] += h;
      if (!ok(q)) {
        h = -h;
        q[j] = p[j] + h;
      }
      const Vec3 fq = f(q);
      for (int i = 0; i < 3; ++i) jac(i, j) = (fq[i] - fp[i]) / h;
    }
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(jac);
    if (!lu.isInvertible()) return out;
    const Eigen::Vector3d step = lu.solve(-Eigen::Vector3d(fp[0], fp[1], fp[2]));

    const double base = norm2(fp);
    double scale = first_step;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
      const Vec3 trial{p[0] + scale * step(0), p[1] + scale * step(1), p[2] + scale * step(2)};
      if (!ok(trial)) continue;
      const Vec3 ft = f(trial);
      if (std::isfinite(norm2(ft)) && norm2(ft) < base) {
        p = trial;
        fp = ft;
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) return out;
    out.point = p;
    out.residual = max_abs(fp);
  }
  out.converged = out.residual <= tol;
  return out;
}

struct Attempt {
  NewtonOutcome newton;
  bool transformed = false;
  Vec3 raw{};  // (tau, lambda, b)
};

Attempt attempt_solve(double alpha, double kappa, double z_alpha, const NoiseModel& noise,
                      const SolveOpts& opts, const Vec3& raw_start, double first_step) {
  Attempt a;
  a.transformed = kappa < opts.transform_below;
  if (a.transformed) {
    const double root_kappa = std::sqrt(kappa);
    const Residual f = [&](const Vec3& p) {
      return transformed_residual_at(p[0], p[1], p[2], alpha, kappa, z_alpha, noise, opts.quad);
    };
    const Admissible ok = [&](const Vec3& p) { return p[0] >= 0.0 && p[1] * kappa >= kLambdaFloor; };
    const Vec3 start{raw_start[0] / root_kappa, raw_start[1] / kappa,
                     (raw_start[2] - z_alpha) / kappa};
    a.newton = damped_newton(f, ok, start, opts.tol, opts.max_iter, first_step);
    const Vec3& p = a.newton.point;
    a.raw = {p[0] * root_kappa, p[1] * kappa, z_alpha + p[2] * kappa};
  } else {
    const Residual f = [&](const Vec3& p) {
      return system_residual(p[0], p[1], p[2], alpha, kappa, noise, opts.quad);
    };
    const Admissible ok = [](const Vec3& p) { return p[0] >= 0.0 && p[1] >= kLambdaFloor; };
    a.newton = damped_newton(f, ok, raw_start, opts.tol, opts.max_iter, first_step);
    a.raw = a.newton.point;
  }
  return a;
}

Vec3 expansion_start(const ExpansionConstants& c, double kappa) {
  return {std::sqrt(c.tau0_sq * kappa), c.lambda0 * kappa, c.z_alpha + c.b0 * kappa};
}

}  // namespace

ExpansionConstants expansion_constants(double alpha, const NoiseModel& noise) {
  if (!(alpha >= 0.5 && alpha < 1.0)) {
    throw DomainError("expansion constants need alpha in [0.5, 1)");
  }
  ExpansionConstants c;
  c.z_alpha = noise.quantile(alpha);
  const double dens = noise.density(c.z_alpha);
  if (!(dens >= 1e-12)) throw DomainError("noise density vanishes at the alpha-quantile");
  const double slope = noise.density_deriv(c.z_alpha);
  c.tau0_sq = alpha * (1.0 - alpha) / (dens * dens);
  c.lambda0 = 1.0 / dens;
  c.b0 = (-alpha * (1.0 - alpha) * slope - (2.0 * alpha - 1.0) * dens * dens) /
         (2.0 * dens * dens * dens);
  return c;
}

double coverage_linear_approx(double alpha, double kappa) {
  return alpha - (alpha - 0.5) * kappa;
}

Vec3 system_residual(double tau, double lambda, double b, double alpha, double kappa,
                     const NoiseModel& noise, const QuadratureSpec& quad) {
  const SystemMoments m = system_moments(tau, lambda, b, alpha, noise, quad);
  return {tau * tau * kappa - lambda * lambda * m.m_sq, tau * kappa - lambda * m.m_g, m.m_1};
}

Vec3 transformed_residual(double tau_bar, double lambda_bar, double b_bar, double alpha,
                          double kappa, const NoiseModel& noise, const QuadratureSpec& quad) {
  if (!(kappa > 0.0)) throw DomainError("transformed_residual: kappa must be positive");
  return transformed_residual_at(tau_bar, lambda_bar, b_bar, alpha, kappa,
                                 noise.quantile(alpha), noise, quad);
}

Mat3 limit_jacobian(double tau_bar, double lambda_bar, double alpha, const NoiseModel& noise) {
  const double z = noise.quantile(alpha);
  const double dens = noise.density(z);
  const double slope = noise.density_deriv(z);
  Mat3 j{};
  j[0] = {2.0 * tau_bar, -2.0 * lambda_bar * alpha * (1.0 - alpha), 0.0};
  j[1] = {1.0 - lambda_bar * dens, -tau_bar * dens, 0.0};
  j[2] = {-tau_bar * slope, (0.5 - alpha) * dens, -dens};
  return j;
}

TheorySolution solve_system(double alpha, double kappa, const NoiseModel& noise,
                            const SolveOpts& opts) {
  if (!(alpha > 0.5 && alpha < 1.0)) throw DomainError("solve_system: alpha must lie in (0.5, 1)");
  if (!(kappa > 0.0 && kappa <= opts.kappa_max)) {
    throw DomainError("solve_system: kappa must lie in (0, " + std::to_string(opts.kappa_max) + "]");
  }
  const ExpansionConstants ec = expansion_constants(alpha, noise);
  const Vec3 start = opts.initial.value_or(expansion_start(ec, kappa));

  int iterations = 0;
  Attempt best;
  best.newton.residual = std::numeric_limits<double>::infinity();
  // (0, 0, z_alpha) solves the system trivially; it is not the ERM limit.
  auto degenerate = [](const Attempt& a) { return a.raw[0] < 1e-8 || a.raw[1] < 1e-8; };
  auto keep = [&](const Attempt& a) {
    iterations += a.newton.iterations;
    if (degenerate(a)) return false;
    if (a.newton.residual < best.newton.residual) best = a;
    return a.newton.converged;
  };

  bool done = keep(attempt_solve(alpha, kappa, ec.z_alpha, noise, opts, start, 1.0));
  // Restart with twice the damping.
  if (!done) done = keep(attempt_solve(alpha, kappa, ec.z_alpha, noise, opts, start, 0.5));
  // Continuation in kappa from the small-kappa regime, where the expansion
  // point is an accurate start.
  if (!done) {
    constexpr int kSteps = 20;
    Vec3 raw = expansion_start(ec, kappa / kSteps);
    bool path_ok = true;
    for (int s = 1; s <= kSteps && path_ok; ++s) {
      const double k = kappa * s / kSteps;
      const Attempt a = attempt_solve(alpha, k, ec.z_alpha, noise, opts, raw, 1.0);
      iterations += a.newton.iterations;
      path_ok = a.newton.converged && !degenerate(a);
      raw = a.raw;
      if (s == kSteps) done = keep(a);
    }
  }
  if (!done) {
    throw NonConvergence("fixed-point system did not converge", best.newton.residual,
                         best.raw[0], best.raw[1], best.raw[2]);
  }

  TheorySolution sol;
  sol.alpha = alpha;
  sol.kappa = kappa;
  sol.tau = best.raw[0];
  sol.lambda = best.raw[1];
  sol.b = best.raw[2];
  sol.residual = best.newton.residual;
  sol.iterations = iterations;
  sol.transformed = best.transformed;
  sol.extrapolated = kappa > 0.5;
  sol.coverage = coverage_integral(sol.tau, sol.b, noise, opts.quad);
  sol.c_alpha_kappa = alpha - sol.coverage;
  return sol;
}

std::array<double, 4> saddle_gradient(double tau, double b, double tau_g, double beta,
                                      double alpha, double kappa, const NoiseModel& noise,
                                      const QuadratureSpec& quad) {
  if (!(beta > 0.0) || !(tau_g > 0.0)) throw DomainError("saddle_gradient: need tau_g, beta > 0");
  const SystemMoments m = system_moments(tau, tau_g / beta, b, alpha, noise, quad);
  return {m.m_g / kappa - beta, -m.m_1 / kappa,
          beta / 2.0 - m.m_sq / (2.0 * kappa * beta),
          tau_g / 2.0 - tau + tau_g * m.m_sq / (2.0 * kappa * beta * beta)};
}

double saddle_stationarity(const TheorySolution& sol, double alpha, double kappa,
                           const NoiseModel& noise, const QuadratureSpec& quad) {
  const auto grad =
      saddle_gradient(sol.tau, sol.b, sol.tau, sol.tau / sol.lambda, alpha, kappa, noise, quad);
  double out = 0.0;
  for (double g : grad) out = std::max(out, std::abs(g));
  return out;
}

}  // namespace qrlab
