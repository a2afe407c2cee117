#include "qrlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "qrlab/coverage.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/rng.hpp"
#include "qrlab/theory.hpp"

namespace qrlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs body(i) for i in [0, count) on `workers` threads. Results must be
// written to per-index slots; the first exception is rethrown.
template <typename Body>
void parallel_for(std::size_t count, int workers, Body body) {
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return out;
}

FitConfig fit_from_config(const Config& cfg) {
  FitConfig fit;
  fit.max_steps = static_cast<int>(cfg.get_int("steps", fit.max_steps));
  const std::string schedule = cfg.get_string("schedule", "step");
  if (schedule == "step") {
    StepDecay decay;
    decay.initial_lr = cfg.get_double("lr", decay.initial_lr);
    decay.decay_factor = cfg.get_double("decay_factor", decay.decay_factor);
    if (cfg.has("decay_steps")) {
      decay.decay_steps.clear();
      for (double s : cfg.get_list("decay_steps", {})) decay.decay_steps.push_back(static_cast<int>(s));
    } else {
      decay.decay_steps = {fit.max_steps / 2};
    }
    fit.schedule = decay;
  } else if (schedule == "sqrt") {
    fit.schedule = InverseSqrt{cfg.get_double("beta", InverseSqrt{}.beta)};
  } else {
    throw ConfigError("schedule must be 'step' or 'sqrt', got '" + schedule + "'");
  }
  try {
    fit.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return fit;
}

const std::set<std::string> kFitKeys{"steps", "schedule", "lr", "decay_factor", "decay_steps", "beta"};

std::set<std::string> with_fit_keys(std::set<std::string> keys) {
  keys.insert(kFitKeys.begin(), kFitKeys.end());
  return keys;
}

struct SweepRun {
  std::vector<ExperimentCell> cells;
  // Indexed [alpha][kappa]; NaN-filled when the solve failed.
  std::vector<std::vector<TheorySolution>> solutions;
  std::vector<std::vector<bool>> solved;
};

SweepRun simulate(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t na = cfg.alphas.size();
  const std::size_t nk = cfg.kappas.size();
  const std::size_t ns = static_cast<std::size_t>(cfg.seeds);
  const QuadratureSpec quad{cfg.quad_nodes};
  const int workers = effective_parallelism(cfg.parallelism);

  SweepRun run;
  run.solutions.assign(na, std::vector<TheorySolution>(nk));
  run.solved.assign(na, std::vector<bool>(nk, false));
  parallel_for(na * nk, workers, [&](std::size_t idx) {
    const std::size_t ai = idx / nk;
    const std::size_t ki = idx % nk;
    SolveOpts opts;
    opts.quad = quad;
    try {
      run.solutions[ai][ki] = solve_system(cfg.alphas[ai], cfg.kappas[ki], cfg.noise, opts);
      run.solved[ai][ki] = true;
    } catch (const NonConvergence&) {
    } catch (const DomainError&) {
    }
  });

  std::vector<double> z_alpha(na);
  for (std::size_t ai = 0; ai < na; ++ai) z_alpha[ai] = cfg.noise.quantile(cfg.alphas[ai]);

  run.cells.resize(na * nk * ns);
  parallel_for(run.cells.size(), workers, [&](std::size_t idx) {
    const std::size_t ai = idx / (nk * ns);
    const std::size_t ki = (idx / ns) % nk;
    const std::size_t s = idx % ns;
    const double alpha = cfg.alphas[ai];
    const double kappa = cfg.kappas[ki];
    const int n = sample_size(cfg.d, kappa);

    const Eigen::VectorXd w_star =
        random_w_star(cfg.d, cfg.w_star_norm, derive_seed(cfg.master_seed, Stream::kTruth, {ai, ki, s}));
    const Dataset data = generate_linear_data(n, cfg.d, w_star, cfg.noise,
                                              derive_seed(cfg.master_seed, Stream::kData, {ai, ki, s}));
    const QuantileFit fit = fit_subgradient(data, alpha, cfg.fit);

    ExperimentCell& cell = run.cells[idx];
    cell.alpha = alpha;
    cell.kappa = kappa;
    cell.seed = static_cast<int>(s);
    cell.n = n;
    cell.d = cfg.d;
    cell.coverage_exact = exact_coverage(fit, w_star, cfg.noise, quad);
    cell.coverage_analytical = run.solved[ai][ki] ? run.solutions[ai][ki].coverage : kNaN;
    cell.coverage_linear = coverage_linear_approx(alpha, kappa);
    cell.w_err_sq = (fit.w - w_star).squaredNorm();
    cell.b_gap = fit.b - z_alpha[ai];
    cell.final_risk = fit.final_risk;
    cell.converged = fit.converged;
  });
  return run;
}

// Splits `count` shuffled indices: the first `first` go to one side.
std::vector<Eigen::Index> permutation(Eigen::Index count, Rng& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(count));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  return idx;
}

struct PreparedSplit {
  Dataset train;
  Dataset test;
  Eigen::VectorXd pseudo_train_y;
  Eigen::VectorXd pseudo_test_y;
};

PreparedSplit prepare_split(const Dataset& all, const PseudoLabelConfig& cfg, std::size_t seed) {
  Rng split_rng(cfg.master_seed, Stream::kSplit, {seed});
  const std::vector<Eigen::Index> order = permutation(all.n(), split_rng);
  const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(all.n())));
  if (n_test < 1 || n_test >= order.size()) throw InsufficientRows("pseudo-label: test split is empty");
  PreparedSplit out;
  out.train = all.subset({order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_test)});
  out.test = all.subset({order.end() - static_cast<std::ptrdiff_t>(n_test), order.end()});

  // Standardize features with training statistics.
  const Eigen::RowVectorXd mean = out.train.x.colwise().mean();
  Eigen::RowVectorXd sd =
      ((out.train.x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(out.train.n()))
          .sqrt();
  for (Eigen::Index j = 0; j < sd.size(); ++j) {
    if (!(sd(j) > 1e-12)) sd(j) = 1.0;
  }
  out.train.x = (out.train.x.rowwise() - mean).array().rowwise() / sd.array();
  out.test.x = (out.test.x.rowwise() - mean).array().rowwise() / sd.array();

  // Least squares with an intercept column on part of the training split,
  // residual scale from the held-out remainder.
  auto augment = [](const Dataset& d) {
    Dataset a;
    a.x.resize(d.n(), d.d() + 1);
    a.x.leftCols(d.d()) = d.x;
    a.x.col(d.d()).setOnes();
    a.y = d.y;
    return a;
  };
  const Dataset train_aug = augment(out.train);
  const auto n_hold =
      static_cast<Eigen::Index>(std::llround(cfg.holdout_fraction * static_cast<double>(train_aug.n())));
  if (n_hold < 1 || n_hold >= train_aug.n()) throw InsufficientRows("pseudo-label: hold-out split is empty");
  std::vector<Eigen::Index> fit_rows(static_cast<std::size_t>(train_aug.n() - n_hold));
  std::vector<Eigen::Index> hold_rows(static_cast<std::size_t>(n_hold));
  std::iota(fit_rows.begin(), fit_rows.end(), Eigen::Index{0});
  std::iota(hold_rows.begin(), hold_rows.end(), train_aug.n() - n_hold);
  const LeastSquaresFit ls = fit_least_squares(train_aug.subset(fit_rows), train_aug.subset(hold_rows));

  Rng label_rng(cfg.master_seed, Stream::kPseudoLabel, {seed});
  auto pseudo = [&](const Dataset& d) {
    Eigen::VectorXd y(d.n());
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      y(i) = d.x.row(i).dot(ls.w.head(d.d())) + ls.w(d.d()) + ls.sigma_hat * label_rng.normal();
    }
    return y;
  };
  out.pseudo_train_y = pseudo(out.train);
  out.pseudo_test_y = pseudo(out.test);
  return out;
}

}  // namespace

int effective_parallelism(int requested) {
  if (const char* env = std::getenv("QRLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return std::max(1, requested);
}

int sample_size(int d, double kappa) {
  return static_cast<int>(std::llround(static_cast<double>(d) / kappa));
}

Eigen::VectorXd random_w_star(int d, double radius, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd w(d);
  do {
    for (int j = 0; j < d; ++j) w(j) = rng.normal();
  } while (w.norm() == 0.0);
  return radius * w / w.norm();
}

SweepConfig SweepConfig::from_config(const Config& cfg) {
  cfg.require_known(with_fit_keys({"alphas", "kappas", "d", "seeds", "noise", "noise_mean",
                                   "noise_var", "mixture", "w_star_norm", "quad_nodes", "output",
                                   "parallelism", "master_seed"}));
  SweepConfig out;
  out.alphas = cfg.get_list("alphas", out.alphas);
  out.kappas = cfg.get_list("kappas", out.kappas);
  out.d = static_cast<int>(cfg.get_int("d", out.d));
  out.seeds = static_cast<int>(cfg.get_int("seeds", out.seeds));
  out.noise = noise_from_config(cfg, out.noise);
  out.w_star_norm = cfg.get_double("w_star_norm", out.w_star_norm);
  out.fit = fit_from_config(cfg);
  out.quad_nodes = static_cast<int>(cfg.get_int("quad_nodes", out.quad_nodes));
  out.output_path = cfg.get_string("output", out.output_path);
  out.parallelism = static_cast<int>(cfg.get_int("parallelism", out.parallelism));
  out.master_seed = static_cast<std::uint64_t>(cfg.get_int("master_seed", 0));
  out.validate();
  return out;
}

void SweepConfig::validate() const {
  if (alphas.empty() || kappas.empty()) throw ConfigError("sweep: alphas and kappas must be nonempty");
  for (double a : alphas) {
    if (!(a > 0.5 && a < 1.0)) throw ConfigError("sweep: every alpha must lie in (0.5, 1)");
  }
  if (d < 1 || seeds < 1) throw ConfigError("sweep: need d >= 1 and seeds >= 1");
  for (double k : kappas) {
    if (!(k > 0.0)) throw ConfigError("sweep: every kappa must be positive");
    if (sample_size(d, k) < d + 1) throw ConfigError("sweep: kappa too large, round(d/kappa) < d + 1");
  }
  if (quad_nodes < 2) throw ConfigError("sweep: quad_nodes must be at least 2");
  if (!(w_star_norm >= 0.0)) throw ConfigError("sweep: w_star_norm must be nonnegative");
}

std::vector<ExperimentCell> run_sweep(const SweepConfig& cfg) { return simulate(cfg).cells; }

std::vector<CellAggregate> aggregate_cells(const std::vector<ExperimentCell>& cells) {
  std::vector<CellAggregate> out;
  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    while (j < cells.size() && cells[j].alpha == cells[i].alpha && cells[j].kappa == cells[i].kappa) ++j;
    std::vector<double> cov, werr, bgap, risk;
    double conv = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      cov.push_back(cells[k].coverage_exact);
      werr.push_back(cells[k].w_err_sq);
      bgap.push_back(cells[k].b_gap);
      risk.push_back(cells[k].final_risk);
      conv += cells[k].converged ? 1.0 : 0.0;
    }
    CellAggregate a;
    a.alpha = cells[i].alpha;
    a.kappa = cells[i].kappa;
    a.n = cells[i].n;
    a.d = cells[i].d;
    a.seeds = static_cast<int>(j - i);
    a.coverage_analytical = cells[i].coverage_analytical;
    a.coverage_linear = cells[i].coverage_linear;
    const MeanStd c = mean_std(cov), w = mean_std(werr), b = mean_std(bgap), r = mean_std(risk);
    a.coverage_exact_mean = c.mean;
    a.coverage_exact_std = c.std;
    a.w_err_sq_mean = w.mean;
    a.w_err_sq_std = w.std;
    a.b_gap_mean = b.mean;
    a.b_gap_std = b.std;
    a.final_risk_mean = r.mean;
    a.final_risk_std = r.std;
    a.converged_fraction = conv / static_cast<double>(a.seeds);
    out.push_back(a);
    i = j;
  }
  return out;
}

CsvTable cells_table(const std::vector<ExperimentCell>& cells) {
  CsvTable t;
  t.header = {"alpha",         "kappa",          "seed",     "n",     "d",
              "coverage_exact", "coverage_analytical", "coverage_linear", "w_err_sq", "b_gap",
              "final_risk",    "converged"};
  for (const ExperimentCell& c : cells) {
    t.rows.push_back({format_number(c.alpha), format_number(c.kappa), std::to_string(c.seed),
                      std::to_string(c.n), std::to_string(c.d), format_number(c.coverage_exact),
                      format_number(c.coverage_analytical), format_number(c.coverage_linear),
                      format_number(c.w_err_sq), format_number(c.b_gap), format_number(c.final_risk),
                      c.converged ? "1" : "0"});
  }
  return t;
}

CsvTable aggregate_table(const std::vector<CellAggregate>& aggregates) {
  CsvTable t;
  t.header = {"alpha",
              "kappa",
              "n",
              "d",
              "seeds",
              "coverage_analytical",
              "coverage_linear",
              "coverage_exact_mean",
              "coverage_exact_std",
              "w_err_sq_mean",
              "w_err_sq_std",
              "b_gap_mean",
              "b_gap_std",
              "final_risk_mean",
              "final_risk_std",
              "converged_mean"};
  for (const CellAggregate& a : aggregates) {
    t.rows.push_back({format_number(a.alpha), format_number(a.kappa), std::to_string(a.n),
                      std::to_string(a.d), std::to_string(a.seeds), format_number(a.coverage_analytical),
                      format_number(a.coverage_linear), format_number(a.coverage_exact_mean),
                      format_number(a.coverage_exact_std), format_number(a.w_err_sq_mean),
                      format_number(a.w_err_sq_std), format_number(a.b_gap_mean),
                      format_number(a.b_gap_std), format_number(a.final_risk_mean),
                      format_number(a.final_risk_std), format_number(a.converged_fraction)});
  }
  return t;
}

std::string aggregate_path(const std::string& output_path) {
  const std::string suffix = ".csv";
  if (output_path.size() >= suffix.size() &&
      output_path.compare(output_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return output_path.substr(0, output_path.size() - suffix.size()) + "_aggregate.csv";
  }
  return output_path + "_aggregate.csv";
}

std::vector<OverparamRow> run_overparam(const OverparamConfig& cfg) {
  if (cfg.n < 1 || cfg.seeds < 1) throw ConfigError("overparam: need n >= 1 and seeds >= 1");
  if (cfg.d < 4 * cfg.n) throw ConfigError("overparam: requires d >= 4n");
  const QuadratureSpec quad{cfg.quad_nodes};
  std::vector<OverparamRow> rows(static_cast<std::size_t>(cfg.seeds));
  for (int s = 0; s < cfg.seeds; ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    OverparamRow& row = rows[static_cast<std::size_t>(s)];
    row.seed = s;
    row.n = cfg.n;
    row.d = cfg.d;
    const Eigen::VectorXd w_star =
        random_w_star(cfg.d, cfg.w_star_norm, derive_seed(cfg.master_seed, Stream::kTruth, {us}));
    const Dataset data = generate_linear_data(cfg.n, cfg.d, w_star, cfg.noise,
                                              derive_seed(cfg.master_seed, Stream::kData, {us}));
    try {
      const QuantileFit fit = min_norm_interpolator(data);
      row.coverage_exact = exact_coverage(fit, w_star, cfg.noise, quad);
      row.deviation = std::abs(row.coverage_exact - 0.5);
      row.w_err_sq = (fit.w - w_star).squaredNorm();
      row.b = fit.b;
    } catch (const SingularGram&) {
      row.coverage_exact = row.deviation = row.w_err_sq = row.b = kNaN;
      row.status = "singular_gram";
    }
  }
  return rows;
}

CsvTable overparam_table(const std::vector<OverparamRow>& rows) {
  CsvTable t;
  t.header = {"seed", "n", "d", "coverage_exact", "deviation", "w_err_sq", "b", "status"};
  for (const OverparamRow& r : rows) {
    t.rows.push_back({std::to_string(r.seed), std::to_string(r.n), std::to_string(r.d),
                      format_number(r.coverage_exact), format_number(r.deviation),
                      format_number(r.w_err_sq), format_number(r.b), r.status});
  }
  return t;
}

PseudoLabelConfig PseudoLabelConfig::from_config(const Config& cfg) {
  cfg.require_known(with_fit_keys({"csv", "alphas", "kappas", "seeds", "test_fraction",
                                   "holdout_fraction", "optimizer", "epochs", "batch_size",
                                   "momentum", "sgd_lr", "decay_epochs", "output", "parallelism",
                                   "master_seed"}));
  PseudoLabelConfig out;
  out.csv_path = cfg.get_string("csv", out.csv_path);
  out.alphas = cfg.get_list("alphas", out.alphas);
  out.kappas = cfg.get_list("kappas", out.kappas);
  out.seeds = static_cast<int>(cfg.get_int("seeds", out.seeds));
  out.test_fraction = cfg.get_double("test_fraction", out.test_fraction);
  out.holdout_fraction = cfg.get_double("holdout_fraction", out.holdout_fraction);
  out.optimizer = cfg.get_string("optimizer", out.optimizer);
  out.sgd.epochs = static_cast<int>(cfg.get_int("epochs", out.sgd.epochs));
  out.sgd.batch_size = static_cast<int>(cfg.get_int("batch_size", out.sgd.batch_size));
  out.sgd.momentum = cfg.get_double("momentum", out.sgd.momentum);
  out.sgd.initial_lr = cfg.get_double("sgd_lr", out.sgd.initial_lr);
  if (cfg.has("decay_epochs")) {
    out.sgd.decay_epochs.clear();
    for (double e : cfg.get_list("decay_epochs", {})) out.sgd.decay_epochs.push_back(static_cast<int>(e));
  }
  out.fit = fit_from_config(cfg);
  out.output_path = cfg.get_string("output", out.output_path);
  out.parallelism = static_cast<int>(cfg.get_int("parallelism", out.parallelism));
  out.master_seed = static_cast<std::uint64_t>(cfg.get_int("master_seed", 0));
  if (out.optimizer != "sgd" && out.optimizer != "full") {
    throw ConfigError("optimizer must be 'sgd' or 'full'");
  }
  for (double a : out.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("pseudo: every alpha must lie in (0, 1)");
  }
  for (double k : out.kappas) {
    if (!(k > 0.0)) throw ConfigError("pseudo: every kappa must be positive");
  }
  if (out.seeds < 1) throw ConfigError("pseudo: seeds must be at least 1");
  if (!(out.test_fraction > 0.0 && out.test_fraction < 1.0) ||
      !(out.holdout_fraction > 0.0 && out.holdout_fraction < 1.0)) {
    throw ConfigError("pseudo: split fractions must lie in (0, 1)");
  }
  return out;
}

std::vector<PseudoLabelRow> run_pseudo_label(const PseudoLabelConfig& cfg) {
  Dataset all = dataset_from_csv(read_numeric_csv(cfg.csv_path));
  all.validate();
  const int d = static_cast<int>(all.d());
  const std::size_t ns = static_cast<std::size_t>(cfg.seeds);
  const std::size_t nk = cfg.kappas.size();
  const std::size_t na = cfg.alphas.size();

  std::vector<PreparedSplit> splits;
  splits.reserve(ns);
  for (std::size_t s = 0; s < ns; ++s) splits.push_back(prepare_split(all, cfg, s));
  for (double kappa : cfg.kappas) {
    const int n = sample_size(d, kappa);
    if (n < 1 || n > splits.front().train.n()) {
      throw InsufficientRows("pseudo-label: kappa " + format_number(kappa) + " needs " +
                             std::to_string(n) + " training rows, have " +
                             std::to_string(splits.front().train.n()));
    }
  }

  // One job per (alpha, kappa, seed), each emitting a true-label and a
  // pseudo-label row.
  std::vector<PseudoLabelRow> rows(na * nk * ns * 2);
  parallel_for(na * nk * ns, effective_parallelism(cfg.parallelism), [&](std::size_t idx) {
    const std::size_t ai = idx / (nk * ns);
    const std::size_t ki = (idx / ns) % nk;
    const std::size_t s = idx % ns;
    const PreparedSplit& split = splits[s];
    const int n = sample_size(d, cfg.kappas[ki]);

    Rng sub_rng(cfg.master_seed, Stream::kSubsample, {s, ki});
    std::vector<Eigen::Index> picked = permutation(split.train.n(), sub_rng);
    picked.resize(static_cast<std::size_t>(n));

    for (int arm = 0; arm < 2; ++arm) {
      Dataset train = split.train.subset(picked);
      Dataset test = split.test;
      if (arm == 1) {
        for (std::size_t i = 0; i < picked.size(); ++i) {
          train.y(static_cast<Eigen::Index>(i)) = split.pseudo_train_y(picked[i]);
        }
        test.y = split.pseudo_test_y;
      }
      QuantileFit fit;
      if (cfg.optimizer == "sgd") {
        SgdConfig sgd = cfg.sgd;
        sgd.seed = derive_seed(cfg.master_seed, Stream::kBatch, {s, ki, ai, static_cast<std::uint64_t>(arm)});
        fit = fit_sgd(train, cfg.alphas[ai], sgd);
      } else {
        fit = fit_subgradient(train, cfg.alphas[ai], cfg.fit);
      }
      PseudoLabelRow& row = rows[2 * idx + static_cast<std::size_t>(arm)];
      row.alpha = cfg.alphas[ai];
      row.kappa = cfg.kappas[ki];
      row.seed = static_cast<int>(s);
      row.arm = arm == 0 ? "true" : "pseudo";
      row.n = n;
      row.d = d;
      row.coverage = empirical_coverage(fit, test);
    }
  });
  return rows;
}

CsvTable pseudo_label_table(const std::vector<PseudoLabelRow>& rows) {
  CsvTable t;
  t.header = {"alpha", "kappa", "seed", "arm", "n", "d", "coverage"};
  for (const PseudoLabelRow& r : rows) {
    t.rows.push_back({format_number(r.alpha), format_number(r.kappa), std::to_string(r.seed), r.arm,
                      std::to_string(r.n), std::to_string(r.d), format_number(r.coverage)});
  }
  return t;
}

CsvTable pseudo_label_aggregate_table(const std::vector<PseudoLabelRow>& rows) {
  CsvTable t;
  t.header = {"alpha", "kappa", "arm", "n", "d", "seeds", "coverage_mean", "coverage_std"};
  // Group by (alpha, kappa, arm) in first-appearance order.
  std::vector<std::size_t> firsts;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    bool seen = false;
    for (std::size_t f : firsts) {
      seen = seen || (rows[f].alpha == rows[i].alpha && rows[f].kappa == rows[i].kappa && rows[f].arm == rows[i].arm);
    }
    if (!seen) firsts.push_back(i);
  }
  for (std::size_t f : firsts) {
    std::vector<double> cov;
    for (const PseudoLabelRow& r : rows) {
      if (r.alpha == rows[f].alpha && r.kappa == rows[f].kappa && r.arm == rows[f].arm) cov.push_back(r.coverage);
    }
    const MeanStd ms = mean_std(cov);
    t.rows.push_back({format_number(rows[f].alpha), format_number(rows[f].kappa), rows[f].arm,
                      std::to_string(rows[f].n), std::to_string(rows[f].d), std::to_string(cov.size()),
                      format_number(ms.mean), format_number(ms.std)});
  }
  return t;
}

std::vector<BiasRow> run_bias_study(const SweepConfig& cfg) {
  const SweepRun run = simulate(cfg);
  const std::vector<CellAggregate> agg = aggregate_cells(run.cells);
  std::vector<BiasRow> rows;
  const std::size_t nk = cfg.kappas.size();
  for (std::size_t i = 0; i < agg.size(); ++i) {
    const std::size_t ai = i / nk;
    const std::size_t ki = i % nk;
    const ExpansionConstants ec = expansion_constants(agg[i].alpha, cfg.noise);
    BiasRow row;
    row.alpha = agg[i].alpha;
    row.kappa = agg[i].kappa;
    row.seeds = agg[i].seeds;
    row.b_gap_mean = agg[i].b_gap_mean;
    row.b_gap_std = agg[i].b_gap_std;
    row.b0_kappa = ec.b0 * agg[i].kappa;
    row.b_star_gap = run.solved[ai][ki] ? run.solutions[ai][ki].b - ec.z_alpha : kNaN;
    rows.push_back(row);
  }
  return rows;
}

CsvTable bias_table(const std::vector<BiasRow>& rows) {
  CsvTable t;
  t.header = {"alpha", "kappa", "seeds", "b_gap_mean", "b_gap_std", "b0_kappa", "b_star_gap"};
  for (const BiasRow& r : rows) {
    t.rows.push_back({format_number(r.alpha), format_number(r.kappa), std::to_string(r.seeds),
                      format_number(r.b_gap_mean), format_number(r.b_gap_std),
                      format_number(r.b0_kappa), format_number(r.b_star_gap)});
  }
  return t;
}

}  // namespace qrlab
