#include <gtest/gtest.h>

#include <cmath>

#include "qrlab/coverage.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/rng.hpp"

using qrlab::NoiseModel;
using qrlab::QuantileFit;

namespace {

QuantileFit make_fit(Eigen::VectorXd w, double b) {
  QuantileFit f;
  f.w = std::move(w);
  f.b = b;
  return f;
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

}  // namespace

TEST(ExactCoverage, GaussianClosedForm) {
  const NoiseModel noise = NoiseModel::gaussian(0, 0.25);
  Eigen::VectorXd w_star(3);
  w_star << 0.6, 0.0, -0.8;
  for (double r : {0.0, 0.1, 0.5, 2.0}) {
    Eigen::VectorXd w = w_star;
    w(1) += r;
    for (double b : {0.0, 0.64, 1.1}) {
      const double exact = qrlab::exact_coverage(make_fit(w, b), w_star, noise);
      EXPECT_NEAR(exact, normal_cdf(b / std::sqrt(0.25 + r * r)), 1e-12);
    }
  }
}

TEST(ExactCoverage, PerfectFitGivesAlpha) {
  const NoiseModel noise = NoiseModel::steep_mixture();
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  EXPECT_NEAR(qrlab::exact_coverage(make_fit(w, noise.quantile(0.9)), w, noise), 0.9, 1e-12);
  EXPECT_THROW(qrlab::exact_coverage(make_fit(w, 0.0), Eigen::VectorXd::Ones(3), noise),
               qrlab::DimensionMismatch);
}

TEST(ExactCoverage, AgreesWithLargeTestSet) {
  const NoiseModel noise = NoiseModel::steep_mixture();
  Eigen::VectorXd w_star(2);
  w_star << 1.0, -0.5;
  const QuantileFit fit = make_fit(Eigen::Vector2d(0.8, -0.2), 1.2);
  const qrlab::Dataset test = qrlab::generate_linear_data(400000, 2, w_star, noise, 5);
  const double p = qrlab::exact_coverage(fit, w_star, noise);
  EXPECT_NEAR(qrlab::empirical_coverage(fit, test), p, 4 * std::sqrt(p * (1 - p) / 400000));
}

TEST(EmpiricalCoverage, TiesCountAsCovered) {
  qrlab::Dataset d;
  d.x = Eigen::MatrixXd::Zero(4, 1);
  d.y = Eigen::Vector4d(0.0, 1.0, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(qrlab::empirical_coverage(make_fit(Eigen::VectorXd::Zero(1), 1.0), d), 0.75);
  EXPECT_DOUBLE_EQ(qrlab::empirical_coverage(make_fit(Eigen::VectorXd::Zero(1), -1.0), d), 0.0);
}

TEST(EmpiricalCoverage, Errors) {
  qrlab::Dataset d;
  d.x = Eigen::MatrixXd::Zero(0, 2);
  d.y = Eigen::VectorXd::Zero(0);
  EXPECT_THROW(qrlab::empirical_coverage(make_fit(Eigen::VectorXd::Zero(2), 0.0), d), qrlab::EmptyTestSet);
  d.x = Eigen::MatrixXd::Zero(3, 2);
  d.y = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(qrlab::empirical_coverage(make_fit(Eigen::VectorXd::Zero(1), 0.0), d), qrlab::DimensionMismatch);
}

TEST(CoverageReport, PrefersExact) {
  const NoiseModel noise = NoiseModel::gaussian(0, 0.25);
  const Eigen::VectorXd w_star = Eigen::VectorXd::Zero(2);
  const qrlab::Dataset test = qrlab::generate_linear_data(1000, 2, w_star, noise, 3);
  const QuantileFit fit = make_fit(Eigen::Vector2d(0.1, 0.0), 0.5);
  const auto rep = qrlab::coverage_report(fit, 0.9, &test);
  ASSERT_TRUE(rep.exact && rep.empirical);
  EXPECT_EQ(rep.n_test, 1000);
  EXPECT_DOUBLE_EQ(rep.gap, 0.9 - *rep.exact);

  qrlab::Dataset unknown = test;
  unknown.truth.reset();
  const auto rep2 = qrlab::coverage_report(fit, 0.9, &unknown);
  EXPECT_FALSE(rep2.exact);
  EXPECT_DOUBLE_EQ(rep2.gap, 0.9 - *rep2.empirical);

  const auto empty = qrlab::coverage_report(fit, 0.9, nullptr);
  EXPECT_FALSE(empty.exact || empty.empirical);
}

TEST(RelaxedModel, ValidatesAndIsSymmetric) {
  qrlab::RelaxedModel m;
  EXPECT_NO_THROW(m.validate());
  qrlab::Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x(j) = 3 * rng.normal();
    const double s = m.sigma(x);
    EXPECT_DOUBLE_EQ(s, m.sigma(-x));
    EXPECT_GE(s, m.sigma_lo);
    EXPECT_LE(s, m.sigma_hi);
  }
  qrlab::RelaxedModel bad = m;
  bad.noise = NoiseModel::steep_mixture();
  EXPECT_THROW(bad.validate(), qrlab::DomainError);
  bad = m;
  bad.noise = NoiseModel::gaussian(0.3, 1.0);
  EXPECT_THROW(bad.validate(), qrlab::DomainError);
  bad = m;
  bad.sigma_lo = 3.0;
  EXPECT_THROW(bad.validate(), qrlab::DomainError);
}

TEST(RelaxedCoverage, ExactAtTruth) {
  qrlab::RelaxedModel m;
  const Eigen::VectorXd w_star = Eigen::VectorXd::Ones(4) * 0.5;
  const auto c = qrlab::relaxed_coverage(w_star, w_star, 0.3, m, 200000, 1);
  EXPECT_NEAR(c.coverage, 0.9, 4 * c.std_error);
  EXPECT_NEAR(c.std_error, std::sqrt(0.09 / 200000), 1e-5);
}

TEST(RelaxedCoverage, UnderCoversAndGrowsWithRadius) {
  for (auto design : {qrlab::RelaxedModel::Design::kGaussian, qrlab::RelaxedModel::Design::kUniformCube}) {
    qrlab::RelaxedModel m;
    m.design = design;
    const Eigen::VectorXd w_star = Eigen::VectorXd::Zero(4);
    Eigen::VectorXd w1 = w_star, w2 = w_star;
    w1(0) = 0.3;
    w2(0) = 0.8;
    const auto a = qrlab::relaxed_coverage(w1, w_star, 0.0, m, 200000, 2);
    const auto b = qrlab::relaxed_coverage(w2, w_star, 0.0, m, 200000, 2);
    EXPECT_LT(a.coverage, 0.9 - 2 * a.std_error);
    EXPECT_LT(b.coverage, a.coverage);
  }
}

TEST(RelaxedCoverage, DeterministicAndErrors) {
  qrlab::RelaxedModel m;
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(2);
  EXPECT_EQ(qrlab::relaxed_coverage(w, w * 0.5, 0.0, m, 1000, 9).coverage,
            qrlab::relaxed_coverage(w, w * 0.5, 0.0, m, 1000, 9).coverage);
  EXPECT_THROW(qrlab::relaxed_coverage(w, Eigen::VectorXd::Ones(3), 0.0, m, 1000, 9), qrlab::DimensionMismatch);
  EXPECT_THROW(qrlab::relaxed_coverage(w, w, 0.0, m, 1, 9), qrlab::DomainError);
}
