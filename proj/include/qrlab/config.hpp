#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qrlab/noise_model.hpp"

namespace qrlab {

/// Flat `key = value` configuration. `#` starts a comment; lists are
/// comma-separated and an item `start:step:stop` expands to the inclusive
/// arithmetic progression.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  /// Throws ConfigError naming the first key not in `known`.
  void require_known(const std::set<std::string>& known) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Expands comma-separated numbers and `start:step:stop` ranges.
std::vector<double> parse_number_list(const std::string& text);

/// `noise = gaussian` (noise_mean, noise_var), `noise = mixture` with
/// `mixture = w1,m1,v1,w2,m2,v2,...`, or `noise = steep_mixture`.
NoiseModel noise_from_config(const Config& cfg, const NoiseModel& fallback);

}  // namespace qrlab
