#pragma once

// Experiment configuration: line-oriented "key = value" text, '#' comments.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kzk/errors.hpp"
#include "kzk/mode_dynamics.hpp"

namespace kzk {

struct ExperimentConfig {
  int L = 400;
  int L_eff = 40;
  std::vector<double> tau_list;
  double g0 = 5.0;
  Method method = Method::exact;
  std::optional<int> n_max_override;
  std::optional<double> breakdown_tol;
  bool reorth = true;
  double ode_tol = 1e-10;
  std::vector<double> t_grid;  ///< field values g
  std::filesystem::path out_dir = "kzk_out";
  int threads = 0;  ///< 0 = hardware concurrency
  std::size_t memory_budget_mb = 4096;
  std::filesystem::path spill_dir;  ///< empty: <out_dir>/spill
  double fit_tau_min = 8.0;
  double fit_tau_max = 64.0;

  void validate() const {
    if (L <= 0 || L % 2 != 0) throw ConfigError("L must be a positive even integer");
    if (L_eff < 2 || L_eff % 2 != 0) throw ConfigError("L_eff must be an even integer >= 2");
    if (L_eff > std::min(L, 56)) throw ConfigError("L_eff must not exceed min(L, 56)");
    if (tau_list.empty()) throw ConfigError("tau_list must not be empty");
    for (std::size_t i = 0; i < tau_list.size(); ++i) {
      if (!(tau_list[i] > 0.0)) throw ConfigError("tau_list entries must be positive");
      if (i > 0 && !(tau_list[i] > tau_list[i - 1])) throw ConfigError("tau_list must be ascending");
    }
    if (!(g0 > 1.0)) throw ConfigError("g0 must exceed 1");
    if (n_max_override && *n_max_override < 1) throw ConfigError("n_max_override must be >= 1");
    if (breakdown_tol && !(*breakdown_tol >= 0.0)) throw ConfigError("breakdown_tol must be >= 0");
    if (!(ode_tol >= 1e-14 && ode_tol <= 1e-6)) throw ConfigError("ode_tol must lie in [1e-14, 1e-6]");
    for (double g : t_grid)
      if (!(g >= 0.0 && g <= g0)) throw ConfigError("t_grid values must lie in [0, g0]");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (!(fit_tau_min < fit_tau_max)) throw ConfigError("fit window must be non-empty");
  }

  /// Worker count after KZK_THREADS and auto-detection.
  int resolved_threads() const {
    int n = threads;
    if (const char* env = std::getenv("KZK_THREADS"); env && *env) {
      int v = 0;
      const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), v);
      if (ec != std::errc{} || *ptr != '\0' || v < 0) throw ConfigError("KZK_THREADS must be a non-negative integer");
      n = v;
    }
    if (n == 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return n;
  }

  std::filesystem::path resolved_spill_dir() const {
    return spill_dir.empty() ? out_dir / "spill" : spill_dir;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

inline int parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || v < INT32_MIN || v > INT32_MAX)
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return static_cast<int>(v);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key + ": empty list item");
    out.push_back(parse_real(key, item));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, int> seen;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    seen[key] = line_no;
    try {
      if (key == "L") cfg.L = detail::parse_int(key, value);
      else if (key == "L_eff") cfg.L_eff = detail::parse_int(key, value);
      else if (key == "tau_list") cfg.tau_list = detail::parse_list(key, value);
      else if (key == "g0") cfg.g0 = detail::parse_real(key, value);
      else if (key == "method") {
        if (value == "exact") cfg.method = Method::exact;
        else if (value == "closed_form") cfg.method = Method::closed_form;
        else throw ConfigError("method: expected exact or closed_form, got '" + value + "'");
      } else if (key == "n_max_override") {
        if (value != "none") cfg.n_max_override = detail::parse_int(key, value);
      } else if (key == "breakdown_tol") {
        if (value != "auto") cfg.breakdown_tol = detail::parse_real(key, value);
      } else if (key == "reorth") cfg.reorth = detail::parse_bool(key, value);
      else if (key == "ode_tol") cfg.ode_tol = detail::parse_real(key, value);
      else if (key == "t_grid") cfg.t_grid = detail::parse_list(key, value);
      else if (key == "out_dir") cfg.out_dir = value;
      else if (key == "threads") cfg.threads = detail::parse_int(key, value);
      else if (key == "memory_budget_mb") {
        const int mb = detail::parse_int(key, value);
        if (mb < 0) throw ConfigError("memory_budget_mb must be >= 0");
        cfg.memory_budget_mb = static_cast<std::size_t>(mb);
      } else if (key == "spill_dir") cfg.spill_dir = value;
      else if (key == "fit_window") {
        const auto w = detail::parse_list(key, value);
        if (w.size() != 2) throw ConfigError("fit_window: expected two values 'min, max'");
        cfg.fit_tau_min = w[0];
        cfg.fit_tau_max = w[1];
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace kzk
