#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrlab/config.hpp"
#include "qrlab/errors.hpp"
#include "qrlab/table.hpp"

using qrlab::Config;

TEST(NumberList, ListsAndRanges) {
  EXPECT_EQ(qrlab::parse_number_list("0.8, 0.9"), (std::vector<double>{0.8, 0.9}));
  const auto r = qrlab::parse_number_list("0.02:0.02:0.5");
  ASSERT_EQ(r.size(), 25u);
  EXPECT_EQ(r[4], 0.1);
  EXPECT_EQ(r.back(), 0.5);
  EXPECT_EQ(qrlab::parse_number_list("1, 2:1:4, 9"), (std::vector<double>{1, 2, 3, 4, 9}));
  EXPECT_THROW(qrlab::parse_number_list("1:2"), qrlab::ConfigError);
  EXPECT_THROW(qrlab::parse_number_list("1:0:3"), qrlab::ConfigError);
  EXPECT_THROW(qrlab::parse_number_list("abc"), qrlab::ConfigError);
}

TEST(ConfigParse, KeysCommentsAndTypes) {
  const Config c = Config::parse("# header\nalpha = 0.9  # trailing\n\nd=100\nname = run one\n");
  EXPECT_DOUBLE_EQ(c.get_double("alpha", 0), 0.9);
  EXPECT_EQ(c.get_int("d", 0), 100);
  EXPECT_EQ(c.get_string("name", ""), "run one");
  EXPECT_EQ(c.get_int("missing", 7), 7);
  EXPECT_THROW(c.get_int("alpha", 0), qrlab::ConfigError);
  EXPECT_THROW(Config::parse("no equals sign"), qrlab::ConfigError);
  EXPECT_THROW(Config::parse(" = 3"), qrlab::ConfigError);
  EXPECT_THROW(c.require_known({"alpha", "d"}), qrlab::ConfigError);
  EXPECT_NO_THROW(c.require_known({"alpha", "d", "name"}));
  EXPECT_THROW(Config::load("/nonexistent/qrlab.cfg"), qrlab::ConfigError);
}

TEST(ConfigNoise, Kinds) {
  const auto fallback = qrlab::NoiseModel::gaussian(0, 1);
  EXPECT_DOUBLE_EQ(qrlab::noise_from_config(Config::parse(""), fallback).variance(), 1.0);
  const auto g = qrlab::noise_from_config(Config::parse("noise = gaussian\nnoise_var = 0.25"), fallback);
  EXPECT_DOUBLE_EQ(g.variance(), 0.25);
  const auto m = qrlab::noise_from_config(Config::parse("noise = mixture\nmixture = 0.5,-1,1,0.5,1,1"), fallback);
  EXPECT_EQ(m.components().size(), 2u);
  EXPECT_FALSE(qrlab::noise_from_config(Config::parse("noise = steep_mixture"), fallback).is_symmetric());
  EXPECT_THROW(qrlab::noise_from_config(Config::parse("noise = cauchy"), fallback), qrlab::ConfigError);
  EXPECT_THROW(qrlab::noise_from_config(Config::parse("noise = mixture\nmixture = 1,0"), fallback), qrlab::ConfigError);
  EXPECT_THROW(qrlab::noise_from_config(Config::parse("noise = gaussian\nnoise_var = -1"), fallback), qrlab::ConfigError);
}

TEST(FormatNumber, RoundTrip) {
  EXPECT_EQ(qrlab::format_number(0.1), "0.1");
  EXPECT_EQ(qrlab::format_number(std::nan("")), "nan");
  EXPECT_EQ(qrlab::format_number(-1.0 / 0.0), "-inf");
  for (double v : {1.0 / 3.0, 6.02e23, -2.5e-300}) EXPECT_EQ(std::stod(qrlab::format_number(v)), v);
}

TEST(NumericCsv, ParsesWithBomAndBlankLines) {
  const auto csv = qrlab::parse_numeric_csv("\xEF\xBB\xBFx1, x2 ,y\r\n1,2,3\r\n\n4.5,-6,7e-1\n");
  EXPECT_EQ(csv.header, (std::vector<std::string>{"x1", "x2", "y"}));
  ASSERT_EQ(csv.values.rows(), 2);
  EXPECT_DOUBLE_EQ(csv.values(1, 2), 0.7);
  const auto data = qrlab::dataset_from_csv(csv);
  EXPECT_EQ(data.d(), 2);
  EXPECT_DOUBLE_EQ(data.y(0), 3.0);
}

TEST(NumericCsv, Errors) {
  EXPECT_THROW(qrlab::parse_numeric_csv(""), qrlab::DataError);
  EXPECT_THROW(qrlab::parse_numeric_csv("a,b\n1\n"), qrlab::DataError);
  EXPECT_THROW(qrlab::parse_numeric_csv("a,b\n1,x\n"), qrlab::DataError);
  EXPECT_THROW(qrlab::parse_numeric_csv("a,b\n1,nan\n"), qrlab::DataError);
  EXPECT_THROW(qrlab::parse_numeric_csv("a,b\n1;000,2\n"), qrlab::DataError);
  EXPECT_THROW(qrlab::dataset_from_csv(qrlab::parse_numeric_csv("y\n1\n")), qrlab::DataError);
  EXPECT_THROW(qrlab::dataset_from_csv(qrlab::parse_numeric_csv("x,y\n")), qrlab::DataError);
  EXPECT_THROW(qrlab::read_numeric_csv("/nonexistent/file.csv"), qrlab::DataError);
}

TEST(AtomicWrite, WritesAndReplaces) {
  const auto dir = std::filesystem::temp_directory_path() / "qrlab_table_test";
  std::filesystem::remove_all(dir);
  const std::string path = (dir / "sub" / "out.csv").string();
  qrlab::CsvTable t{{"a", "b"}, {{"1", "2"}}};
  qrlab::write_csv_atomic(path, t);
  t.rows.push_back({"3", "4"});
  qrlab::write_csv_atomic(path, t);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "a,b\n1,2\n3,4\n");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  EXPECT_EQ(qrlab::read_numeric_csv(path).values.rows(), 2);
  std::filesystem::remove_all(dir);
}
