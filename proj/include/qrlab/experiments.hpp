#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qrlab/config.hpp"
#include "qrlab/erm.hpp"
#include "qrlab/noise_model.hpp"
#include "qrlab/table.hpp"

namespace qrlab {

/// Simulation grid for the linear-Gaussian model. n = round(d / kappa).
struct SweepConfig {
  std::vector<double> alphas{0.8, 0.9, 0.95};
  std::vector<double> kappas{0.05, 0.1, 0.2, 0.3, 0.5};
  int d = 100;
  int seeds = 8;
  NoiseModel noise = NoiseModel::gaussian(0.0, 0.25);
  double w_star_norm = 1.0;
  FitConfig fit{};
  int quad_nodes = 64;
  std::string output_path = "sweep.csv";
  int parallelism = 1;
  std::uint64_t master_seed = 0;

  /// Keys: alphas, kappas, d, seeds, noise/noise_mean/noise_var/mixture,
  /// w_star_norm, steps, lr, decay_factor, decay_steps, schedule
  /// (step|sqrt), beta, quad_nodes, output, parallelism, master_seed.
  static SweepConfig from_config(const Config& cfg);
  /// Throws ConfigError on an invalid grid.
  void validate() const;
};

struct ExperimentCell {
  double alpha = 0.0;
  double kappa = 0.0;
  int seed = 0;
  int n = 0;
  int d = 0;
  double coverage_exact = 0.0;
  double coverage_analytical = 0.0;  ///< NaN when the fixed-point solve failed
  double coverage_linear = 0.0;
  double w_err_sq = 0.0;
  double b_gap = 0.0;
  double final_risk = 0.0;
  bool converged = false;
};

/// Per-(alpha, kappa) mean and sample standard deviation over seeds.
struct CellAggregate {
  double alpha = 0.0;
  double kappa = 0.0;
  int n = 0;
  int d = 0;
  int seeds = 0;
  double coverage_analytical = 0.0;
  double coverage_linear = 0.0;
  double coverage_exact_mean = 0.0, coverage_exact_std = 0.0;
  double w_err_sq_mean = 0.0, w_err_sq_std = 0.0;
  double b_gap_mean = 0.0, b_gap_std = 0.0;
  double final_risk_mean = 0.0, final_risk_std = 0.0;
  double converged_fraction = 0.0;
};

/// Worker count: QRLAB_THREADS when set, else `requested`; at least one.
int effective_parallelism(int requested);

/// Sample size for dimension d at ratio kappa.
int sample_size(int d, double kappa);

/// Direction uniform on the sphere of the given radius.
Eigen::VectorXd random_w_star(int d, double radius, std::uint64_t seed);

/// Runs every (alpha, kappa, seed) cell; rows come back in (alpha, kappa,
/// seed) order regardless of the worker count.
std::vector<ExperimentCell> run_sweep(const SweepConfig& cfg);
std::vector<CellAggregate> aggregate_cells(const std::vector<ExperimentCell>& cells);

CsvTable cells_table(const std::vector<ExperimentCell>& cells);
CsvTable aggregate_table(const std::vector<CellAggregate>& aggregates);
/// "out/sweep.csv" -> "out/sweep_aggregate.csv".
std::string aggregate_path(const std::string& output_path);

struct OverparamConfig {
  int d = 400;
  int n = 50;
  int seeds = 8;
  NoiseModel noise = NoiseModel::gaussian(0.0, 1.0);
  double w_star_norm = 1.0;
  int quad_nodes = 64;
  std::uint64_t master_seed = 0;
};

struct OverparamRow {
  int seed = 0;
  int n = 0;
  int d = 0;
  double coverage_exact = 0.0;
  double deviation = 0.0;  ///< |coverage - 0.5|
  double w_err_sq = 0.0;
  double b = 0.0;
  std::string status = "ok";
};

/// Coverage of the minimum-norm interpolator per seed. Requires d >= 4n.
std::vector<OverparamRow> run_overparam(const OverparamConfig& cfg);
CsvTable overparam_table(const std::vector<OverparamRow>& rows);

struct PseudoLabelConfig {
  std::string csv_path;
  std::vector<double> alphas{0.9};
  std::vector<double> kappas{0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  int seeds = 8;
  double test_fraction = 0.2;
  /// Share of the training split held out to estimate sigma_hat.
  double holdout_fraction = 0.2;
  /// "sgd" (mini-batch momentum) or "full" (full-batch subgradient).
  std::string optimizer = "sgd";
  SgdConfig sgd{};
  FitConfig fit{};
  std::string output_path = "pseudo.csv";
  int parallelism = 1;
  std::uint64_t master_seed = 0;

  static PseudoLabelConfig from_config(const Config& cfg);
};

struct PseudoLabelRow {
  double alpha = 0.0;
  double kappa = 0.0;
  int seed = 0;
  std::string arm;  ///< "true" or "pseudo"
  int n = 0;
  int d = 0;
  double coverage = 0.0;
};

/// Linear quantile regression on true labels vs labels redrawn from a
/// least-squares linear-Gaussian fit, with the training set subsampled to
/// n = round(d/kappa). Throws InsufficientRows when the split is too small.
std::vector<PseudoLabelRow> run_pseudo_label(const PseudoLabelConfig& cfg);
CsvTable pseudo_label_table(const std::vector<PseudoLabelRow>& rows);
CsvTable pseudo_label_aggregate_table(const std::vector<PseudoLabelRow>& rows);

struct BiasRow {
  double alpha = 0.0;
  double kappa = 0.0;
  int seeds = 0;
  double b_gap_mean = 0.0;
  double b_gap_std = 0.0;
  double b0_kappa = 0.0;    ///< first-order prediction b0 * kappa
  double b_star_gap = 0.0;  ///< b_star(kappa) - z_alpha from the fixed-point solve
};

/// Learned-intercept error b_hat - z_alpha against its predictions.
std::vector<BiasRow> run_bias_study(const SweepConfig& cfg);
CsvTable bias_table(const std::vector<BiasRow>& rows);

}  // namespace qrlab
