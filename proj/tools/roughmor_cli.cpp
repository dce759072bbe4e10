// roughmor: exact and lossy dimension reduction experiments for bilinear
// rough systems.
//
//   roughmor reduce  --n 100 --hurst 0.4 --horizon 0.5 --step-exp 10 --out run1
//   roughmor sweep   --ranks 5,7,9 --out sweep1
//   roughmor probes  --out probes1
//   roughmor simulate --model file --model-file sys.txt --path-file driver.csv
//   roughmor gramian --out g1
//
// Exit codes: 0 success, 1 precondition/stability failure or invalid input,
// 2 numerical failure, 3 probe failure.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "roughmor/config.hpp"
#include "roughmor/csv_io.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/experiments.hpp"
#include "roughmor/format.hpp"

namespace {

using namespace roughmor;

struct Flags {
  std::string config_file;
  std::vector<std::string> sets;
  std::string model, model_file, path_file, out, ranks, lossy;
  std::size_t n = 0;
  double hurst = 0.0, horizon = 0.0, tol_p = 0.0, tol_q = 0.0;
  int step_exp = -1;
  long long seed = -1;
  bool write_states = false, include_unstable = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "key=value config file");
  cmd->add_option("--set", f.sets, "override a config key (key=value), repeatable");
  cmd->add_option("--model", f.model, "heat1d or file")->check(CLI::IsMember({"heat1d", "file"}));
  cmd->add_option("--model-file", f.model_file, "system file (header 'n d p', then A, N_i, K, C, x0)");
  cmd->add_option("--n", f.n, "heat model grid size");
  cmd->add_option("--hurst", f.hurst, "Hurst index of the fBm driver");
  cmd->add_option("--horizon", f.horizon, "time horizon T");
  cmd->add_option("--step-exp", f.step_exp, "driver step 2^-m");
  cmd->add_option("--seed", f.seed, "driver seed");
  cmd->add_option("--tol-p", f.tol_p, "relative truncation tolerance for P");
  cmd->add_option("--tol-q", f.tol_q, "relative truncation tolerance for Q");
  cmd->add_option("--path-file", f.path_file, "reuse a stored driver CSV");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--write-states", f.write_states, "also dump full state trajectories");
}

RunConfig resolve(const Flags& f, RunMode mode) {
  RunConfig cfg;
  cfg.mode = mode;
  if (!f.config_file.empty()) apply_config_text(cfg, read_file(f.config_file));
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!f.model.empty()) cfg.model = f.model;
  if (!f.model_file.empty()) {
    cfg.model_file = f.model_file;
    if (f.model.empty()) cfg.model = "file";
  }
  if (f.n) cfg.n = f.n;
  if (f.hurst != 0.0) cfg.hurst = f.hurst;
  if (f.horizon != 0.0) cfg.horizon = f.horizon;
  if (f.step_exp >= 0) cfg.step_exp = f.step_exp;
  if (f.seed >= 0) cfg.seed = static_cast<std::uint64_t>(f.seed);
  if (f.tol_p != 0.0) cfg.tol_p = f.tol_p;
  if (f.tol_q != 0.0) cfg.tol_q = f.tol_q;
  if (!f.path_file.empty()) cfg.path_file = f.path_file;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.ranks.empty()) set_config_value(cfg, "target_ranks", f.ranks);
  if (!f.lossy.empty()) set_config_value(cfg, "lossy", f.lossy);
  if (f.write_states) cfg.write_states = true;
  if (f.include_unstable) cfg.include_unstable = true;
  return cfg;
}

int run(RunMode mode, const Flags& f) {
  const RunConfig cfg = resolve(f, mode);
  switch (mode) {
    case RunMode::exact: {
      const auto rep = run_exact_reduction(cfg);
      std::printf("orders %zu -> %zu -> %zu, relative L2 error %s\n", rep.full_order,
                  rep.order_after_p, rep.order_after_q, format_sci(rep.rel_l2_error).c_str());
      break;
    }
    case RunMode::sweep: {
      const auto rep = run_sweep(cfg);
      for (const auto& row : rep.rows) {
        std::printf("r=%zu order=%zu rel_L2_error=%s\n", row.requested_rank, row.order,
                    format_sci(row.rel_l2_error).c_str());
      }
      break;
    }
    case RunMode::probes: {
      const auto rep = run_probes(cfg);
      for (const auto& o : rep.outcomes) {
        std::printf("%-4s %-22s %-12s value=%s threshold=%s\n", o.passed ? "ok" : "FAIL",
                    o.probe.c_str(), o.fixture.c_str(), format_sci(o.value).c_str(),
                    format_sci(o.threshold).c_str());
      }
      if (!rep.all_passed()) return 3;
      break;
    }
    case RunMode::simulate: {
      const auto res = run_simulate(cfg);
      std::printf("simulated %zu steps\n", res.times.size() - 1);
      break;
    }
    case RunMode::gramian: {
      const auto rep = run_gramian(cfg);
      std::printf("P residual %s, Q residual %s\n", format_sci(rep.P.residual).c_str(),
                  format_sci(rep.Q.residual).c_str());
      break;
    }
  }
  std::printf("artifacts in %s\n", cfg.output_dir.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and lossy dimension reduction for bilinear rough systems"};
  app.require_subcommand(1);
  Flags f;
  auto* reduce = app.add_subcommand("reduce", "two-stage exact reduction, full vs reduced run");
  auto* sweep = app.add_subcommand("sweep", "lossy reduction error for a list of target ranks");
  auto* probes = app.add_subcommand("probes", "theory probes on builtin fixtures");
  auto* simulate = app.add_subcommand("simulate", "simulate the configured model");
  auto* gramian = app.add_subcommand("gramian", "algebraic Gramians and their spectra");
  for (auto* cmd : {reduce, sweep, probes, simulate, gramian}) add_common(cmd, f);
  sweep->add_option("--ranks", f.ranks, "comma-separated target ranks, e.g. 5,7,9");
  sweep->add_option("--lossy", f.lossy, "alternating, p_only or q_only");
  probes->add_flag("--include-unstable", f.include_unstable, "add the unstable negative control");

  CLI11_PARSE(app, argc, argv);

  RunMode mode = RunMode::exact;
  if (*sweep) mode = RunMode::sweep;
  if (*probes) mode = RunMode::probes;
  if (*simulate) mode = RunMode::simulate;
  if (*gramian) mode = RunMode::gramian;
  try {
    return run(mode, f);
  } catch (const PreconditionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
