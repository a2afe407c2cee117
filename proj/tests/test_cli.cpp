#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "qrlab/erm.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(QRLAB_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.out += buf.data();
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::filesystem::path scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "qrlab_cli_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_csv(const std::string& name, int rows) {
  const auto path = scratch() / name;
  Eigen::VectorXd w(2);
  w << 1.0, -0.5;
  const auto data = qrlab::generate_linear_data(rows, 2, w, qrlab::NoiseModel::gaussian(0, 0.25), 4);
  std::ofstream out(path);
  out << "a,b,y\n";
  for (int i = 0; i < rows; ++i) out << data.x(i, 0) << ',' << data.x(i, 1) << ',' << data.y(i) << '\n';
  return path.string();
}

}  // namespace

TEST(Cli, TheoryPrintsRow) {
  const Result r = run("theory --alpha 0.9 --kappa 0.1");
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("0.8572"), std::string::npos) << r.out;
}

TEST(Cli, FitAndCoverageRoundTrip) {
  const std::string train = write_csv("train.csv", 400);
  const std::string test = write_csv("test.csv", 200);
  const std::string params = (scratch() / "fit.json").string();
  Result r = run("fit --csv " + train + " --alpha 0.9 --steps 5000 --test " + test + " --out " + params);
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("test_coverage"), std::string::npos);
  r = run("coverage --fit " + params + " --test " + test);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("coverage_empirical"), std::string::npos);
}

TEST(Cli, OverparamWritesCsv) {
  const std::string out = (scratch() / "over.csv").string();
  const Result r = run("overparam --d 40 --n 10 --seeds 2 --out " + out);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(out));
}

TEST(Cli, SweepWritesBothFiles) {
  const auto cfg = scratch() / "sweep.cfg";
  const auto out = scratch() / "sweep.csv";
  std::ofstream(cfg) << "alphas = 0.9\nkappas = 0.5\nd = 10\nseeds = 2\nsteps = 200\noutput = " << out.string()
                     << "\n";
  const Result r = run("sweep --config " + cfg.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(std::filesystem::exists(out));
  EXPECT_TRUE(std::filesystem::exists(scratch() / "sweep_aggregate.csv"));
}

TEST(Cli, ConfigErrorsExitTwo) {
  EXPECT_EQ(run("theory --alpha 0.3 --kappa 0.1").code, 2);
  EXPECT_EQ(run("theory --alpha 0.9").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  const auto cfg = scratch() / "bad.cfg";
  std::ofstream(cfg) << "unknown_key = 1\n";
  EXPECT_EQ(run("sweep --config " + cfg.string()).code, 2);
  EXPECT_EQ(run("theory --alpha 0.9 --kappa 0.1 --noise cauchy").code, 2);
}

TEST(Cli, DataErrorsExitThree) {
  const auto bad = scratch() / "bad.csv";
  std::ofstream(bad) << "a,y\n1,2\n3\n";
  EXPECT_EQ(run("fit --csv " + bad.string() + " --alpha 0.9").code, 3);
  EXPECT_EQ(run("fit --csv /nonexistent/x.csv --alpha 0.9").code, 3);
}
