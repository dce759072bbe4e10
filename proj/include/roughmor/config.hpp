#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "roughmor/heat_model.hpp"
#include "roughmor/reduction.hpp"
#include "roughmor/system_model.hpp"

namespace roughmor {

enum class RunMode { exact, sweep, probes, simulate, gramian };

/// Everything an experiment run depends on. (config, seed) determines every
/// artifact byte.
struct RunConfig {
  RunMode mode = RunMode::exact;
  /// "heat1d" or "file".
  std::string model = "heat1d";
  std::string model_file;
  std::size_t n = 100;
  /// Heat coefficients as `name:p1,p2;name:...`, one entry per driver.
  std::string heat_beta = "constant:0.4;constant:-0.2";
  std::string heat_gamma = "sin-scaled:4;cos-scaled:4";
  std::string heat_initial = "gaussian-bump:1,0.5,2";
  double hurst = 0.4;
  double horizon = 0.5;
  /// Driver step 2^-step_exp.
  int step_exp = 10;
  std::uint64_t seed = 42;
  double tol_p = 1e-12;
  double tol_q = 1e-12;
  std::vector<std::size_t> target_ranks;
  LossyStrategy lossy = LossyStrategy::alternating;
  std::filesystem::path output_dir = "out";
  /// Reuse a stored driver instead of sampling one.
  std::string path_file;
  /// Also dump full-state trajectories.
  bool write_states = false;
  /// Probe suite settings.
  std::size_t probe_trials = 10000;
  std::size_t mc_paths = 100000;
  double mc_dt = 1e-3;
  double mc_horizon = 1.0;
  bool include_unstable = false;
};

std::string to_string(RunMode mode);
std::string to_string(LossyStrategy strategy);

/// Sets one key (same spelling as the config echo). Unknown keys and bad
/// values throw InvalidArgument.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies the key=value lines of a config file on top of `cfg`. Blank lines
/// and '#' comments are ignored.
void apply_config_text(RunConfig& cfg, const std::string& text);

/// Resolved configuration as sorted key=value lines.
std::string config_echo(const RunConfig& cfg);

/// Checks tolerances, Hurst index and that 2^-step_exp tiles the horizon.
void validate(const RunConfig& cfg);

/// Number of driver steps, horizon * 2^step_exp.
std::size_t driver_steps(const RunConfig& cfg);

/// Parses `name:p1,p2;name:...` into builtin coefficient functions.
std::vector<SpatialFunction> parse_coefficient_list(const std::string& spec);

Heat1dConfig heat_config(const RunConfig& cfg);

/// The heat model or the system read from cfg.model_file.
BilinearRoughSystem build_model(const RunConfig& cfg);

}  // namespace roughmor
