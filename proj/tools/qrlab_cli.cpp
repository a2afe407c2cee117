#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numeric>
#include <sstream>
#include <string>

#include "qrlab/config.hpp"
#include "qrlab/coverage.hpp"
#include "qrlab/erm.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/experiments.hpp"
#include "qrlab/rng.hpp"
#include "qrlab/table.hpp"
#include "qrlab/theory.hpp"

using namespace qrlab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// "gaussian:MEAN,VAR", "mixture:w,m,v,...", or "steep_mixture".
NoiseModel parse_noise(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  Config cfg;
  cfg.set("noise", kind);
  if (colon != std::string::npos) {
    const std::vector<double> v = parse_number_list(text.substr(colon + 1));
    if (kind == "gaussian") {
      if (v.size() != 2) throw ConfigError("--noise gaussian:MEAN,VAR takes two numbers");
      cfg.set("noise_mean", format_number(v[0]));
      cfg.set("noise_var", format_number(v[1]));
    } else {
      cfg.set("mixture", text.substr(colon + 1));
    }
  }
  return noise_from_config(cfg, NoiseModel::gaussian(0.0, 0.25));
}

void print_table(const CsvTable& t) { std::cout << t.to_string(); }

int cmd_theory(double alpha, double kappa, const std::string& noise_text, double tol, int nodes) {
  SolveOpts opts;
  opts.tol = tol;
  opts.quad.nodes = nodes;
  const NoiseModel noise = parse_noise(noise_text);
  const TheorySolution s = solve_system(alpha, kappa, noise, opts);
  CsvTable t;
  t.header = {"alpha", "kappa", "tau",      "lambda",     "b",
              "coverage", "c_alpha_kappa", "residual", "iterations", "extrapolated"};
  t.rows.push_back({format_number(s.alpha), format_number(s.kappa), format_number(s.tau),
                    format_number(s.lambda), format_number(s.b), format_number(s.coverage),
                    format_number(s.c_alpha_kappa), format_number(s.residual),
                    std::to_string(s.iterations), s.extrapolated ? "1" : "0"});
  print_table(t);
  return 0;
}

struct FitArgs {
  std::string csv;
  std::string test_csv;
  double alpha = 0.9;
  std::string model = "linear";
  std::string schedule = "step";
  std::string optimizer = "full";
  int steps = 50000;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::string out;
};

int cmd_fit(const FitArgs& a) {
  if (a.model != "linear") throw ConfigError("only --model linear is supported");
  Dataset all = dataset_from_csv(read_numeric_csv(a.csv));
  all.validate();
  Dataset train, test;
  if (!a.test_csv.empty()) {
    train = std::move(all);
    test = dataset_from_csv(read_numeric_csv(a.test_csv));
    if (test.d() != train.d()) throw DimensionMismatch("test CSV has a different number of features");
  } else {
    Rng rng(a.seed, Stream::kSplit);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(all.n()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    const auto n_test = static_cast<std::ptrdiff_t>(
        std::llround(a.test_fraction * static_cast<double>(all.n())));
    if (n_test < 1 || n_test >= all.n()) throw InsufficientRows("too few rows for a train/test split");
    train = all.subset({order.begin(), order.end() - n_test});
    test = all.subset({order.end() - n_test, order.end()});
  }

  QuantileFit fit;
  if (a.optimizer == "sgd") {
    SgdConfig sgd;
    sgd.seed = derive_seed(a.seed, Stream::kBatch);
    fit = fit_sgd(train, a.alpha, sgd);
  } else if (a.optimizer == "full") {
    FitConfig cfg;
    cfg.max_steps = a.steps;
    cfg.seed = a.seed;
    if (a.schedule == "sqrt") {
      cfg.schedule = InverseSqrt{};
    } else if (a.schedule == "step") {
      cfg.schedule = StepDecay{0.01, 10.0, {a.steps / 2}};
    } else {
      throw ConfigError("--schedule must be step or sqrt");
    }
    fit = fit_subgradient(train, a.alpha, cfg);
  } else {
    throw ConfigError("--optimizer must be full or sgd");
  }

  std::cout << "alpha," << format_number(a.alpha) << "\n";
  std::cout << "b," << format_number(fit.b) << "\n";
  for (Eigen::Index j = 0; j < fit.w.size(); ++j) {
    std::cout << "w" << j << "," << format_number(fit.w(j)) << "\n";
  }
  std::cout << "final_risk," << format_number(fit.final_risk) << "\n";
  std::cout << "converged," << (fit.converged ? 1 : 0) << "\n";
  std::cout << "train_coverage," << format_number(empirical_coverage(fit, train)) << "\n";
  std::cout << "test_coverage," << format_number(empirical_coverage(fit, test)) << "\n";

  if (!a.out.empty()) {
    nlohmann::json j;
    j["alpha"] = a.alpha;
    j["b"] = fit.b;
    j["w"] = std::vector<double>(fit.w.data(), fit.w.data() + fit.w.size());
    write_text_atomic(a.out, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_coverage(const std::string& fit_path, const std::string& test_path) {
  std::ifstream in(fit_path);
  if (!in) throw DataError("cannot open fit file " + fit_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed fit file: ") + e.what());
  }
  QuantileFit fit;
  double alpha = 0.0;
  try {
    const auto w = j.at("w").get<std::vector<double>>();
    fit.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    fit.b = j.at("b").get<double>();
    alpha = j.value("alpha", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fit file needs numeric 'w' and 'b': ") + e.what());
  }
  const Dataset test = dataset_from_csv(read_numeric_csv(test_path));
  if (test.d() != fit.w.size()) throw DimensionMismatch("test CSV feature count differs from the fit");
  const CoverageReport r = coverage_report(fit, alpha, &test);
  CsvTable t;
  t.header = {"alpha", "n_test", "coverage_empirical", "gap"};
  t.rows.push_back({format_number(alpha), std::to_string(r.n_test), format_number(*r.empirical),
                    format_number(r.gap)});
  print_table(t);
  return 0;
}

int cmd_sweep(const std::string& path) {
  const SweepConfig cfg = SweepConfig::from_config(Config::load(path));
  const std::vector<ExperimentCell> cells = run_sweep(cfg);
  write_csv_atomic(cfg.output_path, cells_table(cells));
  write_csv_atomic(aggregate_path(cfg.output_path), aggregate_table(aggregate_cells(cells)));
  std::cerr << "wrote " << cfg.output_path << " and " << aggregate_path(cfg.output_path) << "\n";
  return 0;
}

int cmd_overparam(const OverparamConfig& cfg, const std::string& noise_text, const std::string& out) {
  OverparamConfig c = cfg;
  c.noise = parse_noise(noise_text);
  const CsvTable t = overparam_table(run_overparam(c));
  if (out.empty()) {
    print_table(t);
  } else {
    write_csv_atomic(out, t);
  }
  return 0;
}

int cmd_pseudo(const std::string& csv, const std::string& config_path) {
  Config raw = config_path.empty() ? Config{} : Config::load(config_path);
  raw.set("csv", csv);
  const PseudoLabelConfig cfg = PseudoLabelConfig::from_config(raw);
  const std::vector<PseudoLabelRow> rows = run_pseudo_label(cfg);
  write_csv_atomic(cfg.output_path, pseudo_label_table(rows));
  write_csv_atomic(aggregate_path(cfg.output_path), pseudo_label_aggregate_table(rows));
  std::cerr << "wrote " << cfg.output_path << " and " << aggregate_path(cfg.output_path) << "\n";
  return 0;
}

int cmd_bias(const std::string& path) {
  const SweepConfig cfg = SweepConfig::from_config(Config::load(path));
  write_csv_atomic(cfg.output_path, bias_table(run_bias_study(cfg)));
  std::cerr << "wrote " << cfg.output_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear quantile regression: ERM fits, asymptotic coverage theory, experiments"};
  app.require_subcommand(1);

  double alpha = 0.9, kappa = 0.1, tol = 1e-10;
  int nodes = 64;
  std::string noise_text = "gaussian:0,0.25";
  auto* theory = app.add_subcommand("theory", "Solve the fixed-point system at (alpha, kappa)");
  theory->add_option("--alpha", alpha, "Nominal level in (0.5, 1)")->required();
  theory->add_option("--kappa", kappa, "Ratio d/n")->required();
  theory->add_option("--noise", noise_text, "gaussian:MEAN,VAR | mixture:w,m,v,... | steep_mixture");
  theory->add_option("--tol", tol, "Residual tolerance");
  theory->add_option("--quad-nodes", nodes, "Gauss-Hermite nodes");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit linear quantile regression to a CSV");
  fit->add_option("--csv", fa.csv, "Training CSV, last column is the label")->required();
  fit->add_option("--alpha", fa.alpha, "Quantile level in (0, 1)")->required();
  fit->add_option("--model", fa.model, "Model family (linear)");
  fit->add_option("--schedule", fa.schedule, "step | sqrt");
  fit->add_option("--optimizer", fa.optimizer, "full | sgd");
  fit->add_option("--steps", fa.steps, "Full-batch steps");
  fit->add_option("--seed", fa.seed, "Seed for the split and batching");
  fit->add_option("--test", fa.test_csv, "Test CSV; default is a random 20% split");
  fit->add_option("--out", fa.out, "Write the fitted parameters as JSON");

  std::string fit_path, test_path;
  auto* cov = app.add_subcommand("coverage", "Empirical coverage of a saved fit");
  cov->add_option("--fit", fit_path, "JSON written by fit --out")->required();
  cov->add_option("--test", test_path, "Test CSV")->required();

  std::string config_path;
  auto* sweep = app.add_subcommand("sweep", "Simulation sweep over (alpha, kappa, seed)");
  sweep->add_option("--config", config_path, "Config file")->required();

  OverparamConfig oc;
  std::string over_noise = "gaussian:0,1", over_out;
  auto* over = app.add_subcommand("overparam", "Coverage of the minimum-norm interpolator");
  over->add_option("--d", oc.d, "Dimension")->required();
  over->add_option("--n", oc.n, "Sample size")->required();
  over->add_option("--seeds", oc.seeds, "Number of seeds")->required();
  over->add_option("--noise", over_noise, "Noise law");
  over->add_option("--w-star-norm", oc.w_star_norm, "Norm of w_star");
  over->add_option("--master-seed", oc.master_seed, "Master seed");
  over->add_option("--out", over_out, "Output CSV (default stdout)");

  std::string pseudo_csv, pseudo_config;
  auto* pseudo = app.add_subcommand("pseudo", "True-label vs pseudo-label coverage on a CSV");
  pseudo->add_option("--csv", pseudo_csv, "Data CSV")->required();
  pseudo->add_option("--config", pseudo_config, "Config file");

  std::string bias_config;
  auto* bias = app.add_subcommand("bias", "Learned-intercept bias study");
  bias->add_option("--config", bias_config, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*theory) return cmd_theory(alpha, kappa, noise_text, tol, nodes);
    if (*fit) return cmd_fit(fa);
    if (*cov) return cmd_coverage(fit_path, test_path);
    if (*sweep) return cmd_sweep(config_path);
    if (*over) return cmd_overparam(oc, over_noise, over_out);
    if (*pseudo) return cmd_pseudo(pseudo_csv, pseudo_config);
    if (*bias) return cmd_bias(bias_config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NonConvergence& e) {
    std::cerr << "solver did not converge: " << e.what() << " (best residual "
              << e.best_residual() << ")\n";
    return 1;
  }
  return 1;
}
