#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "qrlab/noise_model.hpp"

namespace qrlab {

/// Parameters of the linear-Gaussian model y = <w_star, x> + z that
/// generated a synthetic dataset.
struct SyntheticTruth {
  Eigen::VectorXd w_star;
  NoiseModel noise;
};

struct Dataset {
  Eigen::MatrixXd x;  ///< n x d
  Eigen::VectorXd y;  ///< n
  std::optional<SyntheticTruth> truth;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index d() const { return x.cols(); }
  /// Throws DataError on empty or non-finite data, DimensionMismatch on shape.
  void validate() const;
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

struct QuantileFit {
  Eigen::VectorXd w;
  double b = 0.0;
  double final_risk = 0.0;
  int steps_run = 0;
  /// Risk changed by less than 1e-5 over the last iteration.
  bool converged = false;
};

/// Piecewise-constant learning rate, divided by decay_factor at each listed
/// step (steps are 1-based; the rate drops for steps after the listed one).
struct StepDecay {
  double initial_lr = 0.01;
  double decay_factor = 10.0;
  std::vector<int> decay_steps{25000};
};

/// eta_t = beta / sqrt(t).
struct InverseSqrt {
  double beta = 0.1;
};

struct FitConfig {
  std::variant<StepDecay, InverseSqrt> schedule = StepDecay{};
  int max_steps = 50000;
  std::uint64_t seed = 0;

  double learning_rate(int step) const;
  void validate() const;
};

/// Mini-batch SGD with heavy-ball momentum, used for CSV data.
struct SgdConfig {
  double initial_lr = 1e-3;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 1500;
  std::vector<int> decay_epochs{500, 1000};
  double decay_factor = 10.0;
  std::uint64_t seed = 0;
};

/// x rows i.i.d. N(0, I_d); y = <w_star, x> + z with z ~ noise. Deterministic in seed.
Dataset generate_linear_data(Eigen::Index n, Eigen::Index d, const Eigen::VectorXd& w_star,
                             const NoiseModel& noise, std::uint64_t seed);

/// Mean pinball loss of the residuals y - <w, x> - b.
double empirical_risk(const Eigen::VectorXd& w, double b, const Dataset& data, double alpha);

/// Full-batch subgradient descent on the empirical pinball risk from
/// (w, b) = 0. Returns the lowest-risk iterate seen.
QuantileFit fit_subgradient(const Dataset& data, double alpha, const FitConfig& cfg = {});

/// Mini-batch momentum SGD; returns the lowest full-risk end-of-epoch iterate.
QuantileFit fit_sgd(const Dataset& data, double alpha, const SgdConfig& cfg);

/// Exact empirical-risk minimizer by enumerating all (d+1)-point basic
/// solutions. Needs n <= 60, d <= 6 and at most 2e7 subsets; throws
/// BudgetExceeded otherwise and DegenerateData without a nondegenerate subset.
QuantileFit lp_oracle(const Dataset& data, double alpha);

/// theta = X~^T (X~ X~^T)^{-1} y over augmented features x~ = [x, 1].
/// Needs d + 1 >= n; throws SingularGram if cond(X~ X~^T) > 1e12.
QuantileFit min_norm_interpolator(const Dataset& data);

struct LeastSquaresFit {
  Eigen::VectorXd w;
  double sigma_hat = 0.0;
};

/// Ordinary least squares on `train` (no implicit intercept); sigma_hat is
/// the root-mean-square residual on `holdout`. Throws RankDeficient.
LeastSquaresFit fit_least_squares(const Dataset& train, const Dataset& holdout);

}  // namespace qrlab
