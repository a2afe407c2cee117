#include "qrlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qrlab/errors.hpp"

namespace qrlab {
namespace {

std::string trim(const std::string& s) {
  const auto lo = s.find_first_not_of(" \t\r");
  if (lo == std::string::npos) return "";
  const auto hi = s.find_last_not_of(" \t\r");
  return s.substr(lo, hi - lo + 1);
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ConfigError(context + ": invalid number '" + t + "'");
  }
  return v;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    if (c1 == std::string::npos) {
      out.push_back(parse_double(item, "list"));
      continue;
    }
    const auto c2 = item.find(':', c1 + 1);
    if (c2 == std::string::npos) throw ConfigError("range must be start:step:stop, got '" + item + "'");
    const double start = parse_double(item.substr(0, c1), "range start");
    const double step = parse_double(item.substr(c1 + 1, c2 - c1 - 1), "range step");
    const double stop = parse_double(item.substr(c2 + 1), "range stop");
    if (!(step > 0.0) || stop < start) throw ConfigError("range needs step > 0 and stop >= start");
    const long long count = std::llround(std::floor((stop - start) / step + 1e-9));
    // Round to the step's decimal grid so 0.02:0.02:0.5 yields 0.1 exactly.
    for (long long k = 0; k <= count; ++k) {
      const double v = start + static_cast<double>(k) * step;
      out.push_back(std::round(v * 1e12) / 1e12);
    }
  }
  return out;
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second, key);
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const double v = parse_double(it->second, key);
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer");
  return static_cast<long long>(v);
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number_list(it->second);
}

void Config::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

NoiseModel noise_from_config(const Config& cfg, const NoiseModel& fallback) {
  if (!cfg.has("noise")) return fallback;
  const std::string kind = cfg.get_string("noise", "gaussian");
  try {
    if (kind == "gaussian") {
      return NoiseModel::gaussian(cfg.get_double("noise_mean", 0.0), cfg.get_double("noise_var", 1.0));
    }
    if (kind == "steep_mixture") return NoiseModel::steep_mixture();
    if (kind == "mixture") {
      const std::vector<double> flat = cfg.get_list("mixture", {});
      if (flat.empty() || flat.size() % 3 != 0) {
        throw ConfigError("mixture must list (weight, mean, var) triples");
      }
      std::vector<NoiseComponent> comps;
      for (std::size_t i = 0; i < flat.size(); i += 3) comps.push_back({flat[i], flat[i + 1], flat[i + 2]});
      return NoiseModel::mixture(std::move(comps));
    }
  } catch (const DomainError& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
  throw ConfigError("noise must be gaussian, mixture or steep_mixture, got '" + kind + "'");
}

}  // namespace qrlab
