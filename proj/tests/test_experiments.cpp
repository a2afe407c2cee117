#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qrlab/coverage.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/experiments.hpp"
#include "qrlab/rng.hpp"
#include "qrlab/theory.hpp"

using qrlab::SweepConfig;

namespace {

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.alphas = {0.8, 0.9};
  cfg.kappas = {0.2, 0.5};
  cfg.d = 20;
  cfg.seeds = 3;
  cfg.fit.max_steps = 3000;
  cfg.fit.schedule = qrlab::StepDecay{0.01, 10.0, {1500}};
  cfg.master_seed = 11;
  return cfg;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
}

std::string write_synthetic_csv(const std::string& name, int rows, int d, std::uint64_t seed) {
  const auto path = std::filesystem::temp_directory_path() / name;
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(d, -1.0, 1.0);
  const qrlab::Dataset data = qrlab::generate_linear_data(rows, d, w, qrlab::NoiseModel::gaussian(0, 1), seed);
  std::ofstream out(path);
  for (int j = 0; j < d; ++j) out << "x" << j << ',';
  out << "y\n";
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < d; ++j) out << 3.0 * data.x(i, j) + j << ',';
    out << data.y(i) << '\n';
  }
  return path.string();
}

}  // namespace

TEST(Sweep, SingleCellSmoke) {
  SweepConfig cfg = small_sweep();
  cfg.alphas = {0.9};
  cfg.kappas = {0.1};
  cfg.seeds = 1;
  const auto cells = qrlab::run_sweep(cfg);
  ASSERT_EQ(cells.size(), 1u);
  const auto& c = cells[0];
  EXPECT_EQ(c.n, 200);
  for (double v : {c.coverage_exact, c.coverage_analytical, c.coverage_linear, c.w_err_sq, c.b_gap, c.final_risk}) {
    EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_NEAR(c.coverage_linear, 0.86, 1e-15);
  EXPECT_EQ(qrlab::cells_table(cells).rows.size(), 1u);
}

TEST(Sweep, OrderAndDeterminismAcrossWorkers) {
  SweepConfig cfg = small_sweep();
  cfg.parallelism = 1;
  const auto a = qrlab::run_sweep(cfg);
  cfg.parallelism = 4;
  const auto b = qrlab::run_sweep(cfg);
  ASSERT_EQ(a.size(), 12u);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].alpha, cfg.alphas[i / 6]);
    EXPECT_EQ(a[i].kappa, cfg.kappas[(i / 3) % 2]);
    EXPECT_EQ(a[i].seed, static_cast<int>(i % 3));
    EXPECT_EQ(a[i].coverage_exact, b[i].coverage_exact);
    EXPECT_EQ(a[i].w_err_sq, b[i].w_err_sq);
    EXPECT_EQ(a[i].b_gap, b[i].b_gap);
  }
  EXPECT_EQ(qrlab::cells_table(a).to_string(), qrlab::cells_table(b).to_string());
  cfg.master_seed = 12;
  EXPECT_NE(qrlab::run_sweep(cfg)[0].coverage_exact, a[0].coverage_exact);
}

TEST(Sweep, AggregatesRecomputeFromCells) {
  const auto cells = qrlab::run_sweep(small_sweep());
  const auto aggs = qrlab::aggregate_cells(cells);
  ASSERT_EQ(aggs.size(), 4u);
  for (std::size_t g = 0; g < aggs.size(); ++g) {
    std::vector<double> cov, err, gap;
    for (std::size_t i = 3 * g; i < 3 * g + 3; ++i) {
      cov.push_back(cells[i].coverage_exact);
      err.push_back(cells[i].w_err_sq);
      gap.push_back(cells[i].b_gap);
    }
    EXPECT_EQ(aggs[g].seeds, 3);
    EXPECT_NEAR(aggs[g].coverage_exact_mean, mean_of(cov), 1e-12);
    EXPECT_NEAR(aggs[g].coverage_exact_std, sample_std(cov), 1e-12);
    EXPECT_NEAR(aggs[g].w_err_sq_mean, mean_of(err), 1e-12);
    EXPECT_NEAR(aggs[g].b_gap_std, sample_std(gap), 1e-12);
  }
  const auto table = qrlab::aggregate_table(aggs);
  EXPECT_EQ(table.rows.size(), 4u);
  EXPECT_NE(std::find(table.header.begin(), table.header.end(), "coverage_exact_mean"), table.header.end());
  EXPECT_EQ(qrlab::aggregate_path("out/sweep.csv"), "out/sweep_aggregate.csv");
}

TEST(Sweep, CellsHeader) {
  const auto t = qrlab::cells_table({});
  const std::vector<std::string> expected{"alpha", "kappa", "seed", "n", "d", "coverage_exact",
                                          "coverage_analytical", "coverage_linear", "w_err_sq",
                                          "b_gap", "final_risk", "converged"};
  EXPECT_EQ(t.header, expected);
}

TEST(Sweep, CoverageIgnoresDirectionOfTruth) {
  // Rotating the design by an orthogonal Q maps the subgradient path w_t to
  // Q w_t, so a random truth direction and an axis-aligned one give the same
  // coverage on paired data.
  const int d = 6, n = 60;
  qrlab::Rng rng(3);
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
  const auto noise = qrlab::NoiseModel::gaussian(0, 0.25);
  const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(d, 0);
  const qrlab::Dataset axis = qrlab::generate_linear_data(n, d, e1, noise, 5);
  qrlab::Dataset rotated = axis;
  rotated.x = axis.x * q.transpose();
  const Eigen::VectorXd w_rot = q * e1;
  qrlab::FitConfig fc;
  fc.max_steps = 5000;
  const auto f1 = qrlab::fit_subgradient(axis, 0.9, fc);
  const auto f2 = qrlab::fit_subgradient(rotated, 0.9, fc);
  EXPECT_NEAR(qrlab::exact_coverage(f1, e1, noise), qrlab::exact_coverage(f2, w_rot, noise), 1e-9);
  EXPECT_NEAR(qrlab::random_w_star(d, 2.0, 9).norm(), 2.0, 1e-14);
}

TEST(Sweep, ConfigParsingAndValidation) {
  const auto cfg = SweepConfig::from_config(qrlab::Config::parse(
      "alphas = 0.8, 0.9\nkappas = 0.1:0.1:0.3\nd = 30\nseeds = 2\nsteps = 100\nnoise = steep_mixture\n"));
  EXPECT_EQ(cfg.kappas.size(), 3u);
  EXPECT_EQ(cfg.fit.max_steps, 100);
  EXPECT_FALSE(cfg.noise.is_symmetric());
  EXPECT_THROW(SweepConfig::from_config(qrlab::Config::parse("bogus = 1")), qrlab::ConfigError);
  EXPECT_THROW(SweepConfig::from_config(qrlab::Config::parse("alphas = 0.4")), qrlab::ConfigError);
  EXPECT_THROW(SweepConfig::from_config(qrlab::Config::parse("kappas = 0")), qrlab::ConfigError);
  EXPECT_THROW(SweepConfig::from_config(qrlab::Config::parse("kappas = 1.5")), qrlab::ConfigError);
  EXPECT_THROW(SweepConfig::from_config(qrlab::Config::parse("quad_nodes = 1")), qrlab::ConfigError);
}

TEST(Parallelism, EnvironmentOverride) {
  ::unsetenv("QRLAB_THREADS");
  EXPECT_EQ(qrlab::effective_parallelism(0), 1);
  EXPECT_EQ(qrlab::effective_parallelism(3), 3);
  ::setenv("QRLAB_THREADS", "5", 1);
  EXPECT_EQ(qrlab::effective_parallelism(2), 5);
  ::setenv("QRLAB_THREADS", "junk", 1);
  EXPECT_EQ(qrlab::effective_parallelism(2), 2);
  ::unsetenv("QRLAB_THREADS");
}

TEST(Overparam, CoverageNearHalf) {
  qrlab::OverparamConfig cfg;
  const auto rows = qrlab::run_overparam(cfg);
  ASSERT_EQ(rows.size(), 8u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok");
    EXPECT_NEAR(r.deviation, std::abs(r.coverage_exact - 0.5), 1e-15);
    EXPECT_LE(r.deviation, 0.15);
  }
  EXPECT_EQ(qrlab::overparam_table(rows).rows.size(), 8u);
}

TEST(Overparam, SinglePointAndErrors) {
  qrlab::OverparamConfig cfg;
  cfg.n = 1;
  cfg.d = 10;
  cfg.seeds = 2;
  const auto rows = qrlab::run_overparam(cfg);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(std::isfinite(rows[0].coverage_exact));
  cfg.d = 3;
  EXPECT_THROW(qrlab::run_overparam(cfg), qrlab::ConfigError);
}

TEST(PseudoLabel, TwoArmsPerCell) {
  qrlab::PseudoLabelConfig cfg;
  cfg.csv_path = write_synthetic_csv("qrlab_pseudo_a.csv", 2000, 5, 1);
  cfg.kappas = {0.05, 0.2};
  cfg.seeds = 2;
  cfg.sgd.epochs = 50;
  cfg.sgd.decay_epochs = {25};
  const auto rows = qrlab::run_pseudo_label(cfg);
  ASSERT_EQ(rows.size(), 8u);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    EXPECT_EQ(rows[i].arm, "true");
    EXPECT_EQ(rows[i + 1].arm, "pseudo");
    EXPECT_EQ(rows[i].kappa, rows[i + 1].kappa);
    EXPECT_EQ(rows[i].n, qrlab::sample_size(5, rows[i].kappa));
    EXPECT_GT(rows[i].coverage, 0.5);
    EXPECT_LE(rows[i].coverage, 1.0);
  }
  const auto agg = qrlab::pseudo_label_aggregate_table(rows);
  EXPECT_EQ(agg.rows.size(), 4u);
  EXPECT_EQ(qrlab::pseudo_label_table(rows).rows.size(), 8u);
  // Same seeds give the same table.
  EXPECT_EQ(qrlab::pseudo_label_table(qrlab::run_pseudo_label(cfg)).to_string(),
            qrlab::pseudo_label_table(rows).to_string());
}

TEST(PseudoLabel, ArmsAgreeOnGaussianData) {
  // Labels already follow a linear-Gaussian model, so both arms see the same
  // distribution and their mean coverages agree within sampling noise.
  qrlab::PseudoLabelConfig cfg;
  cfg.csv_path = write_synthetic_csv("qrlab_pseudo_b.csv", 5000, 4, 2);
  cfg.kappas = {0.1};
  cfg.seeds = 6;
  cfg.optimizer = "full";
  cfg.fit.max_steps = 5000;
  const auto rows = qrlab::run_pseudo_label(cfg);
  std::vector<double> t, p;
  for (const auto& r : rows) (r.arm == "true" ? t : p).push_back(r.coverage);
  const double spread = std::max(sample_std(t), sample_std(p));
  EXPECT_LE(std::abs(mean_of(t) - mean_of(p)), 2 * spread + 0.01);
}

TEST(PseudoLabel, Errors) {
  qrlab::PseudoLabelConfig cfg;
  cfg.csv_path = write_synthetic_csv("qrlab_pseudo_c.csv", 50, 5, 3);
  cfg.kappas = {0.01};
  cfg.seeds = 1;
  EXPECT_THROW(qrlab::run_pseudo_label(cfg), qrlab::InsufficientRows);
  cfg.csv_path = "/nonexistent/data.csv";
  EXPECT_THROW(qrlab::run_pseudo_label(cfg), qrlab::DataError);
  EXPECT_THROW(qrlab::PseudoLabelConfig::from_config(qrlab::Config::parse("optimizer = adam")),
               qrlab::ConfigError);
}

TEST(BiasStudy, ColumnsMatchTheory) {
  SweepConfig cfg = small_sweep();
  cfg.alphas = {0.9};
  cfg.kappas = {0.1};
  const auto rows = qrlab::run_bias_study(cfg);
  ASSERT_EQ(rows.size(), 1u);
  const auto ec = qrlab::expansion_constants(0.9, cfg.noise);
  EXPECT_NEAR(rows[0].b0_kappa, ec.b0 * 0.1, 1e-14);
  const auto sol = qrlab::solve_system(0.9, 0.1, cfg.noise);
  EXPECT_NEAR(rows[0].b_star_gap, sol.b - cfg.noise.quantile(0.9), 1e-10);
  EXPECT_LT(rows[0].b_star_gap, 0.0);
  EXPECT_EQ(rows[0].seeds, 3);
  EXPECT_EQ(qrlab::bias_table(rows).rows.size(), 1u);
}

TEST(BiasStudy, SteepMixturePredictsPositiveShift) {
  SweepConfig cfg = small_sweep();
  cfg.alphas = {0.9};
  cfg.kappas = {0.1};
  cfg.seeds = 1;
  cfg.noise = qrlab::NoiseModel::steep_mixture();
  const auto rows = qrlab::run_bias_study(cfg);
  EXPECT_GT(rows[0].b0_kappa, 0.0);
  EXPECT_GT(rows[0].b_star_gap, 0.0);
}
