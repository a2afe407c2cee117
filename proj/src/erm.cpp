#include "qrlab/erm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qrlab/errors.hpp"
#include "qrlab/pinball.hpp"
#include "qrlab/rng.hpp"

namespace qrlab {
namespace {

constexpr double kConvergedRiskChange = 1e-5;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
}

// Risk of the residual vector; fills psi with the pinball subgradients.
double risk_and_subgrad(const Eigen::VectorXd& r, double alpha, Eigen::VectorXd& psi) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    const double t = r(i);
    if (t > 0.0) {
      total += alpha * t;
      psi(i) = alpha;
    } else {
      total -= (1.0 - alpha) * t;
      psi(i) = -(1.0 - alpha);
    }
  }
  return total / static_cast<double>(r.size());
}

double risk_of(const Eigen::VectorXd& r, double alpha) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    total += r(i) > 0.0 ? alpha * r(i) : -(1.0 - alpha) * r(i);
  }
  return total / static_cast<double>(r.size());
}

double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

bool lexicographically_less(const Eigen::VectorXd& w1, double b1, const Eigen::VectorXd& w2,
                            double b2) {
  for (Eigen::Index j = 0; j < w1.size(); ++j) {
    if (w1(j) != w2(j)) return w1(j) < w2(j);
  }
  return b1 < b2;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1 || x.cols() < 1) throw DataError("dataset needs n >= 1 rows and d >= 1 columns");
  if (y.size() != x.rows()) throw DimensionMismatch("dataset: label count differs from row count");
  if (!x.allFinite() || !y.allFinite()) throw DataError("dataset contains non-finite values");
  if (truth && truth->w_star.size() != x.cols()) {
    throw DimensionMismatch("dataset: w_star length differs from feature count");
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
    out.y(static_cast<Eigen::Index>(i)) = y(rows[i]);
  }
  out.truth = truth;
  return out;
}

double FitConfig::learning_rate(int step) const {
  if (const auto* decay = std::get_if<StepDecay>(&schedule)) {
    double lr = decay->initial_lr;
    for (int s : decay->decay_steps) {
      if (step > s) lr /= decay->decay_factor;
    }
    return lr;
  }
  return std::get<InverseSqrt>(schedule).beta / std::sqrt(static_cast<double>(step));
}

void FitConfig::validate() const {
  if (max_steps < 1) throw DomainError("fit config: max_steps must be at least 1");
  if (const auto* decay = std::get_if<StepDecay>(&schedule)) {
    if (!(decay->initial_lr > 0.0)) throw DomainError("fit config: initial_lr must be positive");
    if (!(decay->decay_factor > 0.0)) throw DomainError("fit config: decay_factor must be positive");
  } else if (!(std::get<InverseSqrt>(schedule).beta > 0.0)) {
    throw DomainError("fit config: beta must be positive");
  }
}

Dataset generate_linear_data(Eigen::Index n, Eigen::Index d, const Eigen::VectorXd& w_star,
                             const NoiseModel& noise, std::uint64_t seed) {
  if (n < 1 || d < 1) throw DomainError("generate_linear_data: need n, d >= 1");
  if (w_star.size() != d) throw DimensionMismatch("generate_linear_data: w_star must have length d");
  Rng rng(seed, Stream::kData);
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = rng.normal();
    data.y(i) = data.x.row(i).dot(w_star) + noise.sample(rng);
  }
  data.truth = SyntheticTruth{w_star, noise};
  return data;
}

double empirical_risk(const Eigen::VectorXd& w, double b, const Dataset& data, double alpha) {
  check_alpha(alpha);
  if (w.size() != data.d()) throw DimensionMismatch("empirical_risk: w length differs from d");
  if (data.n() < 1) throw DataError("empirical_risk: empty dataset");
  Eigen::VectorXd r = data.y - data.x * w;
  r.array() -= b;
  return risk_of(r, alpha);
}

QuantileFit fit_subgradient(const Dataset& data, double alpha, const FitConfig& cfg) {
  check_alpha(alpha);
  cfg.validate();
  data.validate();
  const Eigen::Index n = data.n();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(data.d());
  double b = 0.0;
  Eigen::VectorXd r(n);
  Eigen::VectorXd psi(n);

  QuantileFit best;
  best.w = w;
  best.final_risk = std::numeric_limits<double>::infinity();
  double prev_risk = std::numeric_limits<double>::quiet_NaN();
  double last_change = std::numeric_limits<double>::infinity();

  auto observe = [&](double risk) {
    if (risk < best.final_risk) {
      best.final_risk = risk;
      best.w = w;
      best.b = b;
    }
    if (!std::isnan(prev_risk)) last_change = std::abs(risk - prev_risk);
    prev_risk = risk;
  };

  for (int t = 1; t <= cfg.max_steps; ++t) {
    r.noalias() = data.y - data.x * w;
    r.array() -= b;
    observe(risk_and_subgrad(r, alpha, psi));
    // The risk gradient is -(1/n) sum psi_i [x_i, 1].
    const double lr = cfg.learning_rate(t);
    w.noalias() += (lr * inv_n) * (data.x.transpose() * psi);
    b += lr * inv_n * psi.sum();
  }
  r.noalias() = data.y - data.x * w;
  r.array() -= b;
  observe(risk_of(r, alpha));

  best.steps_run = cfg.max_steps;
  best.converged = last_change < kConvergedRiskChange;
  best.final_risk = empirical_risk(best.w, best.b, data, alpha);
  return best;
}

QuantileFit fit_sgd(const Dataset& data, double alpha, const SgdConfig& cfg) {
  check_alpha(alpha);
  data.validate();
  if (cfg.batch_size < 1 || cfg.epochs < 1 || !(cfg.initial_lr > 0.0)) {
    throw DomainError("sgd config: need batch_size >= 1, epochs >= 1, initial_lr > 0");
  }
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  Rng rng(cfg.seed, Stream::kBatch);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  Eigen::VectorXd vel_w = Eigen::VectorXd::Zero(d);
  double vel_b = 0.0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  QuantileFit best;
  best.w = w;
  best.final_risk = empirical_risk(w, b, data, alpha);
  double prev_risk = best.final_risk;
  double last_change = std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad_w(d);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.initial_lr;
    for (int e : cfg.decay_epochs) {
      if (epoch >= e) lr /= cfg.decay_factor;
    }
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index stop = std::min<Eigen::Index>(n, start + cfg.batch_size);
      grad_w.setZero();
      double grad_b = 0.0;
      for (Eigen::Index k = start; k < stop; ++k) {
        const Eigen::Index i = order[static_cast<std::size_t>(k)];
        const double psi = pinball_subgrad(data.y(i) - data.x.row(i).dot(w) - b, alpha);
        grad_w.noalias() -= psi * data.x.row(i).transpose();
        grad_b -= psi;
      }
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      vel_w = cfg.momentum * vel_w + inv_batch * grad_w;
      vel_b = cfg.momentum * vel_b + inv_batch * grad_b;
      w -= lr * vel_w;
      b -= lr * vel_b;
    }
    const double risk = empirical_risk(w, b, data, alpha);
    if (risk < best.final_risk) {
      best.final_risk = risk;
      best.w = w;
      best.b = b;
    }
    last_change = std::abs(risk - prev_risk);
    prev_risk = risk;
  }
  best.steps_run = cfg.epochs;
  best.converged = last_change < kConvergedRiskChange;
  return best;
}

QuantileFit lp_oracle(const Dataset& data, double alpha) {
  check_alpha(alpha);
  data.validate();
  const int n = static_cast<int>(data.n());
  const int d = static_cast<int>(data.d());
  const int m = d + 1;
  if (n > 60 || d > 6 || binomial(n, std::min(m, n)) > 2e7) {
    throw BudgetExceeded("lp_oracle: instance exceeds the enumeration budget (n <= 60, d <= 6)");
  }
  if (n < m) {
    // Underdetermined: any interpolator is optimal; use the minimum-norm one.
    QuantileFit fit = min_norm_interpolator(data);
    fit.final_risk = empirical_risk(fit.w, fit.b, data, alpha);
    return fit;
  }

  QuantileFit best;
  best.final_risk = std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<int> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd a(m, m);
  Eigen::VectorXd rhs(m);
  Eigen::VectorXd r(n);
  while (true) {
    for (int k = 0; k < m; ++k) {
      a.row(k).head(d) = data.x.row(idx[static_cast<std::size_t>(k)]);
      a(k, d) = 1.0;
      rhs(k) = data.y(idx[static_cast<std::size_t>(k)]);
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() == m) {
      const Eigen::VectorXd theta = lu.solve(rhs);
      const Eigen::VectorXd w = theta.head(d);
      const double b = theta(d);
      r.noalias() = data.y - data.x * w;
      r.array() -= b;
      const double risk = risk_of(r, alpha);
      const double tie = 1e-12 * std::max(1.0, std::abs(best.final_risk));
      if (!found || risk < best.final_risk - tie ||
          (std::abs(risk - best.final_risk) <= tie && lexicographically_less(w, b, best.w, best.b))) {
        best.final_risk = std::min(risk, best.final_risk);
        best.w = w;
        best.b = b;
        found = true;
      }
    }
    // Next combination in lexicographic order.
    int k = m - 1;
    while (k >= 0 && idx[static_cast<std::size_t>(k)] == n - m + k) --k;
    if (k < 0) break;
    ++idx[static_cast<std::size_t>(k)];
    for (int j = k + 1; j < m; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (!found) throw DegenerateData("lp_oracle: no nondegenerate (d+1)-subset");
  best.final_risk = empirical_risk(best.w, best.b, data, alpha);
  best.converged = true;
  return best;
}

QuantileFit min_norm_interpolator(const Dataset& data) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  if (d + 1 < n) throw DomainError("min_norm_interpolator: needs d + 1 >= n");
  Eigen::MatrixXd xt(n, d + 1);
  xt.leftCols(d) = data.x;
  xt.col(d).setOnes();
  const Eigen::MatrixXd gram = xt * xt.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw SingularGram("min_norm_interpolator: augmented Gram matrix is singular");
  }
  const Eigen::VectorXd theta = xt.transpose() * gram.ldlt().solve(data.y);
  QuantileFit fit;
  fit.w = theta.head(d);
  fit.b = theta(d);
  // Interpolation makes the risk zero for every alpha; report it at 0.5.
  fit.final_risk = empirical_risk(fit.w, fit.b, data, 0.5);
  fit.converged = true;
  return fit;
}

LeastSquaresFit fit_least_squares(const Dataset& train, const Dataset& holdout) {
  train.validate();
  holdout.validate();
  if (holdout.d() != train.d()) throw DimensionMismatch("fit_least_squares: feature counts differ");
  if (train.n() <= train.d()) throw RankDeficient("fit_least_squares: needs more rows than columns");
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(train.x);
  const Eigen::VectorXd diag = qr.matrixR().diagonal().cwiseAbs();
  if (qr.rank() < train.d() || !(diag.minCoeff() > 0.0) || diag.maxCoeff() / diag.minCoeff() > 1e12) {
    throw RankDeficient("fit_least_squares: design matrix is rank deficient");
  }
  LeastSquaresFit out;
  out.w = qr.solve(train.y);
  const Eigen::VectorXd resid = holdout.y - holdout.x * out.w;
  out.sigma_hat = std::sqrt(resid.squaredNorm() / static_cast<double>(holdout.n()));
  return out;
}

}  // namespace qrlab
