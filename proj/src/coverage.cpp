#include "qrlab/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "qrlab/errors.hpp"
#include "qrlab/expectation.hpp"
#include "qrlab/rng.hpp"

namespace qrlab {

double exact_coverage(const QuantileFit& fit, const Eigen::VectorXd& w_star,
                      const NoiseModel& noise, const QuadratureSpec& quad) {
  if (fit.w.size() != w_star.size()) {
    throw DimensionMismatch("exact_coverage: fit and w_star dimensions differ");
  }
  return coverage_integral((fit.w - w_star).norm(), fit.b, noise, quad);
}

double empirical_coverage(const QuantileFit& fit, const Dataset& test) {
  if (test.n() == 0) throw EmptyTestSet("empirical_coverage: test set is empty");
  if (fit.w.size() != test.d()) {
    throw DimensionMismatch("empirical_coverage: fit and test dimensions differ");
  }
  const Eigen::VectorXd pred = (test.x * fit.w).array() + fit.b;
  Eigen::Index covered = 0;
  for (Eigen::Index i = 0; i < test.n(); ++i) {
    if (test.y(i) <= pred(i)) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(test.n());
}

CoverageReport coverage_report(const QuantileFit& fit, double alpha, const Dataset* test,
                               const QuadratureSpec& quad) {
  CoverageReport report;
  report.alpha = alpha;
  if (test != nullptr) {
    report.n_test = test->n();
    report.empirical = empirical_coverage(fit, *test);
    if (test->truth) report.exact = exact_coverage(fit, test->truth->w_star, test->truth->noise, quad);
  }
  if (report.exact) {
    report.gap = alpha - *report.exact;
  } else if (report.empirical) {
    report.gap = alpha - *report.empirical;
  }
  return report;
}

void RelaxedModel::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("relaxed model: alpha must lie in (0, 1)");
  if (!noise.is_gaussian() || noise.components()[0].mean != 0.0) {
    throw DomainError("relaxed model: noise must be a zero-mean Gaussian");
  }
  if (!(sigma_lo > 0.0 && sigma_lo <= sigma_hi)) {
    throw DomainError("relaxed model: need 0 < sigma_lo <= sigma_hi");
  }
}

double RelaxedModel::sigma(const Eigen::VectorXd& x) const {
  const double d = static_cast<double>(x.size());
  return std::clamp(sigma0 + sigma1 * std::tanh(x.squaredNorm() / d), sigma_lo, sigma_hi);
}

RelaxedCoverage relaxed_coverage(const Eigen::VectorXd& w_hat, const Eigen::VectorXd& w_star,
                                 double b_star, const RelaxedModel& model, std::int64_t n_mc,
                                 std::uint64_t seed) {
  model.validate();
  if (w_hat.size() != w_star.size()) throw DimensionMismatch("relaxed_coverage: dimensions differ");
  if (n_mc < 2) throw DomainError("relaxed_coverage: need at least two Monte-Carlo draws");
  const double z_alpha = model.noise.quantile(model.alpha);
  const Eigen::Index d = w_star.size();
  Rng rng(seed, Stream::kMonteCarlo);
  Eigen::VectorXd x(d);
  std::int64_t covered = 0;
  for (std::int64_t k = 0; k < n_mc; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) {
      x(j) = model.design == RelaxedModel::Design::kGaussian ? rng.normal()
                                                             : 2.0 * rng.uniform() - 1.0;
    }
    const double s = model.sigma(x);
    const double mu = x.dot(w_star) + b_star - s * z_alpha;
    const double y = mu + s * model.noise.sample(rng);
    if (y <= x.dot(w_hat) + b_star) ++covered;
  }
  RelaxedCoverage out;
  const double n = static_cast<double>(n_mc);
  out.coverage = static_cast<double>(covered) / n;
  out.std_error = std::sqrt(out.coverage * (1.0 - out.coverage) / n);
  return out;
}

}  // namespace qrlab
