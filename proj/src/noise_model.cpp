#include "qrlab/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qrlab/errors.hpp"
#include "qrlab/quadrature.hpp"

namespace qrlab {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/sqrt(2*pi)

double std_pdf(double u) {
  if (std::isinf(u)) return 0.0;
  return kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

double std_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }
double std_sf(double u) { return 0.5 * std::erfc(u / std::numbers::sqrt2); }

// Phi(b) - Phi(a) for a <= b, evaluated on whichever tail avoids cancellation.
double std_mass(double a, double b) {
  if (a >= 0.0) return std_sf(a) - std_sf(b);
  return std_cdf(b) - std_cdf(a);
}

// u * phi(u), with the infinite endpoints mapped to their zero limit.
double u_pdf(double u) {
  if (std::isinf(u)) return 0.0;
  return u * std_pdf(u);
}

// Standardized width below which interval moments are integrated by
// Gauss-Legendre instead of the closed form, whose terms cancel to O(width^2).
constexpr double kNarrowWidth = 0.25;
constexpr int kNarrowNodes = 12;

IntervalMoments component_moments(const NoiseComponent& c, double sd, double lo, double hi,
                                  double center) {
  IntervalMoments out;
  if (!(hi > lo)) return out;
  const double a = (lo - c.mean) / sd;
  const double b = (hi - c.mean) / sd;

  if (std::isfinite(a) && std::isfinite(b) && b - a < kNarrowWidth) {
    const QuadratureRule& rule = gauss_legendre(kNarrowNodes);
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double z = mid + half * rule.nodes[j];
      const double dens = std_pdf((z - c.mean) / sd) / sd;
      const double w = rule.weights[j] * half * dens;
      const double dz = z - center;
      out.m0 += w;
      out.m1 += w * dz;
      out.m2 += w * dz * dz;
    }
    return out;
  }

  const double delta = c.mean - center;
  const double i0 = std_mass(a, b);
  const double j1 = std_pdf(a) - std_pdf(b);
  const double j2 = i0 + u_pdf(a) - u_pdf(b);
  out.m0 = i0;
  out.m1 = sd * j1 + delta * i0;
  out.m2 = sd * sd * j2 + 2.0 * sd * delta * j1 + delta * delta * i0;
  return out;
}

}  // namespace

NoiseModel::NoiseModel(std::vector<NoiseComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw DomainError("noise model needs at least one component");
  double total = 0.0;
  for (const NoiseComponent& c : components_) {
    if (!std::isfinite(c.mean) || !std::isfinite(c.variance) || !(c.variance > 0.0)) {
      throw DomainError("noise component needs finite mean and positive variance");
    }
    if (!(c.weight >= 0.0)) throw DomainError("noise component weight must be nonnegative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("noise mixture weights must sum to 1");
  stds_.reserve(components_.size());
  for (const NoiseComponent& c : components_) stds_.push_back(std::sqrt(c.variance));
}

NoiseModel NoiseModel::gaussian(double mean, double variance) {
  return NoiseModel({NoiseComponent{1.0, mean, variance}});
}

NoiseModel NoiseModel::mixture(std::vector<NoiseComponent> components) {
  return NoiseModel(std::move(components));
}

NoiseModel NoiseModel::steep_mixture() {
  return NoiseModel({NoiseComponent{0.8, 0.0, 1.0}, NoiseComponent{0.2, 1.0, 0.04}});
}

double NoiseModel::density(double t) const {
  double out = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    out += components_[i].weight * std_pdf((t - components_[i].mean) / stds_[i]) / stds_[i];
  }
  return out;
}

double NoiseModel::density_deriv(double t) const {
  double out = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const double u = (t - components_[i].mean) / stds_[i];
    out -= components_[i].weight * u * std_pdf(u) / (stds_[i] * stds_[i]);
  }
  return out;
}

double NoiseModel::cdf(double t) const {
  double out = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    out += components_[i].weight * std_cdf((t - components_[i].mean) / stds_[i]);
  }
  return std::clamp(out, 0.0, 1.0);
}

double NoiseModel::survival(double t) const {
  double out = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    out += components_[i].weight * std_sf((t - components_[i].mean) / stds_[i]);
  }
  return std::clamp(out, 0.0, 1.0);
}

double NoiseModel::quantile(double a) const {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("quantile level must lie in (0, 1)");

  // Signed distance to the target, taken on the tail that keeps precision.
  const bool upper = a > 0.5;
  auto excess = [&](double t) { return upper ? (1.0 - a) - survival(t) : cdf(t) - a; };

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const NoiseComponent& c : components_) {
    lo = std::min(lo, c.mean);
    hi = std::max(hi, c.mean);
  }
  lo -= 12.0 * max_std();
  hi += 12.0 * max_std();
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }

  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    const double dens = density(t);
    if (!(dens > 0.0)) break;
    const double next = t - excess(t) / dens;
    if (!(next >= lo && next <= hi)) break;
    t = next;
  }
  return t;
}

IntervalMoments NoiseModel::partial_moments(double lo, double hi) const {
  return centered_moments(lo, hi, 0.0);
}

IntervalMoments NoiseModel::centered_moments(double lo, double hi, double center) const {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
    throw DomainError("interval moments need lo <= hi");
  }
  IntervalMoments out;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const IntervalMoments part = component_moments(components_[i], stds_[i], lo, hi, center);
    out.m0 += components_[i].weight * part.m0;
    out.m1 += components_[i].weight * part.m1;
    out.m2 += components_[i].weight * part.m2;
  }
  return out;
}

double NoiseModel::mean() const {
  double out = 0.0;
  for (const NoiseComponent& c : components_) out += c.weight * c.mean;
  return out;
}

double NoiseModel::variance() const {
  const double mu = mean();
  double out = 0.0;
  for (const NoiseComponent& c : components_) {
    out += c.weight * (c.variance + (c.mean - mu) * (c.mean - mu));
  }
  return out;
}

double NoiseModel::max_std() const { return *std::max_element(stds_.begin(), stds_.end()); }

bool NoiseModel::is_symmetric() const {
  constexpr double kTol = 1e-12;
  std::vector<bool> used(components_.size(), false);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (used[i]) continue;
    const NoiseComponent& c = components_[i];
    bool matched = false;
    for (std::size_t j = i; j < components_.size() && !matched; ++j) {
      if (used[j] && j != i) continue;
      const NoiseComponent& m = components_[j];
      if (std::abs(m.mean + c.mean) <= kTol && std::abs(m.variance - c.variance) <= kTol &&
          std::abs(m.weight - c.weight) <= kTol) {
        used[i] = used[j] = true;
        matched = true;
      }
    }
    if (!matched) return false;
  }
  return true;
}

double NoiseModel::sample(Rng& rng) const {
  std::size_t k = 0;
  if (components_.size() > 1) {
    const double u = rng.uniform();
    double acc = 0.0;
    k = components_.size() - 1;
    for (std::size_t i = 0; i < components_.size(); ++i) {
      acc += components_[i].weight;
      if (u < acc) {
        k = i;
        break;
      }
    }
  }
  return components_[k].mean + stds_[k] * rng.normal();
}

std::string NoiseModel::describe() const {
  std::ostringstream os;
  os.precision(15);
  if (components_.size() == 1) {
    os << "gaussian(" << components_[0].mean << "," << components_[0].variance << ")";
    return os.str();
  }
  os << "mixture(";
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) os << ";";
    os << components_[i].weight << ":" << components_[i].mean << ":" << components_[i].variance;
  }
  os << ")";
  return os.str();
}

}  // namespace qrlab
