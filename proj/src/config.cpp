#include "roughmor/config.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "roughmor/csv_io.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/format.hpp"

namespace roughmor {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::exact: return "exact";
    case RunMode::sweep: return "sweep";
    case RunMode::probes: return "probes";
    case RunMode::simulate: return "simulate";
    case RunMode::gramian: return "gramian";
  }
  return "unknown";
}

std::string to_string(LossyStrategy strategy) {
  switch (strategy) {
    case LossyStrategy::p_only: return "p_only";
    case LossyStrategy::q_only: return "q_only";
    case LossyStrategy::alternating: return "alternating";
  }
  return "unknown";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw InvalidArgument("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

unsigned long long to_unsigned(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw InvalidArgument("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::size_t> to_ranks(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto r = to_unsigned(key, item);
    if (r < 1) throw InvalidArgument("config: ranks must be >= 1");
    out.push_back(static_cast<std::size_t>(r));
  }
  return out;
}

std::string ranks_string(const std::vector<std::size_t>& ranks) {
  std::string out;
  for (std::size_t i = 0; i < ranks.size(); ++i) out += (i ? "," : "") + std::to_string(ranks[i]);
  return out;
}

}  // namespace

void set_config_value(RunConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in), v = trim(value_in);
  if (key == "mode") {
    if (v == "exact") cfg.mode = RunMode::exact;
    else if (v == "sweep") cfg.mode = RunMode::sweep;
    else if (v == "probes") cfg.mode = RunMode::probes;
    else if (v == "simulate") cfg.mode = RunMode::simulate;
    else if (v == "gramian") cfg.mode = RunMode::gramian;
    else throw InvalidArgument("config: unknown mode '" + v + "'");
  } else if (key == "model") {
    if (v != "heat1d" && v != "file") throw InvalidArgument("config: model must be heat1d or file");
    cfg.model = v;
  } else if (key == "model_file") {
    cfg.model_file = v;
  } else if (key == "n") {
    cfg.n = static_cast<std::size_t>(to_unsigned(key, v));
  } else if (key == "heat_beta") {
    cfg.heat_beta = v;
  } else if (key == "heat_gamma") {
    cfg.heat_gamma = v;
  } else if (key == "heat_initial") {
    cfg.heat_initial = v;
  } else if (key == "hurst") {
    cfg.hurst = to_double(key, v);
  } else if (key == "horizon") {
    cfg.horizon = to_double(key, v);
  } else if (key == "step_exp") {
    cfg.step_exp = static_cast<int>(to_unsigned(key, v));
  } else if (key == "seed") {
    cfg.seed = to_unsigned(key, v);
  } else if (key == "tol_p") {
    cfg.tol_p = to_double(key, v);
  } else if (key == "tol_q") {
    cfg.tol_q = to_double(key, v);
  } else if (key == "target_ranks") {
    cfg.target_ranks = to_ranks(key, v);
  } else if (key == "lossy") {
    if (v == "alternating") cfg.lossy = LossyStrategy::alternating;
    else if (v == "p_only") cfg.lossy = LossyStrategy::p_only;
    else if (v == "q_only") cfg.lossy = LossyStrategy::q_only;
    else throw InvalidArgument("config: lossy must be alternating, p_only or q_only");
  } else if (key == "output_dir") {
    cfg.output_dir = v;
  } else if (key == "path_file") {
    cfg.path_file = v;
  } else if (key == "write_states") {
    cfg.write_states = to_bool(key, v);
  } else if (key == "probe_trials") {
    cfg.probe_trials = static_cast<std::size_t>(to_unsigned(key, v));
  } else if (key == "mc_paths") {
    cfg.mc_paths = static_cast<std::size_t>(to_unsigned(key, v));
  } else if (key == "mc_dt") {
    cfg.mc_dt = to_double(key, v);
  } else if (key == "mc_horizon") {
    cfg.mc_horizon = to_double(key, v);
  } else if (key == "include_unstable") {
    cfg.include_unstable = to_bool(key, v);
  } else {
    throw InvalidArgument("config: unknown key '" + key + "'");
  }
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key=value");
    }
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
}

std::string config_echo(const RunConfig& cfg) {
  std::map<std::string, std::string> kv{
      {"mode", to_string(cfg.mode)},
      {"model", cfg.model},
      {"model_file", cfg.model_file},
      {"n", std::to_string(cfg.n)},
      {"heat_beta", cfg.heat_beta},
      {"heat_gamma", cfg.heat_gamma},
      {"heat_initial", cfg.heat_initial},
      {"hurst", format_exact(cfg.hurst)},
      {"horizon", format_exact(cfg.horizon)},
      {"step_exp", std::to_string(cfg.step_exp)},
      {"seed", std::to_string(cfg.seed)},
      {"tol_p", format_exact(cfg.tol_p)},
      {"tol_q", format_exact(cfg.tol_q)},
      {"target_ranks", ranks_string(cfg.target_ranks)},
      {"lossy", to_string(cfg.lossy)},
      {"output_dir", cfg.output_dir.string()},
      {"path_file", cfg.path_file},
      {"write_states", cfg.write_states ? "true" : "false"},
      {"probe_trials", std::to_string(cfg.probe_trials)},
      {"mc_paths", std::to_string(cfg.mc_paths)},
      {"mc_dt", format_exact(cfg.mc_dt)},
      {"mc_horizon", format_exact(cfg.mc_horizon)},
      {"include_unstable", cfg.include_unstable ? "true" : "false"},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

std::size_t driver_steps(const RunConfig& cfg) {
  const double steps = std::ldexp(cfg.horizon, cfg.step_exp);
  const double rounded = std::round(steps);
  if (rounded < 1.0 || std::abs(steps - rounded) > 1e-9 * steps) {
    throw InvalidArgument("config: step 2^-" + std::to_string(cfg.step_exp) +
                          " must tile the horizon " + format_exact(cfg.horizon));
  }
  return static_cast<std::size_t>(rounded);
}

void validate(const RunConfig& cfg) {
  if (!(cfg.tol_p > 0.0 && cfg.tol_p < 1.0) || !(cfg.tol_q > 0.0 && cfg.tol_q < 1.0)) {
    throw InvalidArgument("config: tolerances must lie in (0, 1)");
  }
  if (!(cfg.hurst > 0.0 && cfg.hurst < 1.0)) throw InvalidArgument("config: hurst in (0, 1)");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
    throw InvalidArgument("config: horizon must be positive");
  }
  if (cfg.step_exp < 0 || cfg.step_exp > 30) throw InvalidArgument("config: step_exp in [0, 30]");
  if (driver_steps(cfg) < 2) throw InvalidArgument("config: need at least two driver steps");
  if (cfg.model == "file" && cfg.model_file.empty()) {
    throw InvalidArgument("config: model=file requires model_file");
  }
  if (cfg.model == "heat1d" && cfg.n < 2) throw InvalidArgument("config: n >= 2");
}

std::vector<SpatialFunction> parse_coefficient_list(const std::string& spec) {
  std::vector<SpatialFunction> out;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const std::string name = trim(item.substr(0, colon));
    std::vector<double> params;
    if (colon != std::string::npos) {
      std::istringstream ps(item.substr(colon + 1));
      std::string p;
      while (std::getline(ps, p, ',')) params.push_back(to_double(name, trim(p)));
    }
    out.push_back(builtin_function(name, params));
  }
  return out;
}

Heat1dConfig heat_config(const RunConfig& cfg) {
  Heat1dConfig h;
  h.n = cfg.n;
  h.beta = parse_coefficient_list(cfg.heat_beta);
  h.gamma = parse_coefficient_list(cfg.heat_gamma);
  const auto init = parse_coefficient_list(cfg.heat_initial);
  if (init.size() != 1) throw InvalidArgument("config: heat_initial takes one function");
  h.initial_profile = init[0];
  const auto d = static_cast<Eigen::Index>(h.beta.size());
  h.K = MatrixXd::Identity(d, d);
  return h;
}

BilinearRoughSystem build_model(const RunConfig& cfg) {
  if (cfg.model == "file") return parse_system_file(read_file(cfg.model_file));
  return build_heat1d(heat_config(cfg));
}

}  // namespace roughmor
