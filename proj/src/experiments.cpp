#include "roughmor/experiments.hpp"

#include <chrono>
#include <cmath>
#include <functional>

#include "roughmor/csv_io.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/fixtures.hpp"
#include "roughmor/format.hpp"
#include "roughmor/gramians.hpp"
#include "roughmor/rde_solver.hpp"
#include "roughmor/reduction.hpp"
#include "roughmor/rng.hpp"

namespace roughmor {

namespace {

using Clock = std::chrono::steady_clock;

/// Output directory bookkeeping: atomic writes plus the list of produced
/// files for the summary.
class Artifacts {
 public:
  explicit Artifacts(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& contents) {
    write_file_atomic(dir_ / name, contents);
    if (name != "summary.txt" && name != "timings.txt") {
      for (const auto& f : files_) {
        if (f == name) return;
      }
      files_.push_back(name);
    }
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

class Timings {
 public:
  void mark(const std::string& label) {
    const auto now = Clock::now();
    text_ += label + "=" + format_sci(std::chrono::duration<double>(now - last_).count()) + "\n";
    last_ = now;
  }
  const std::string& text() const { return text_; }

 private:
  Clock::time_point last_ = Clock::now();
  std::string text_;
};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

/// Runs `body`, keeping summary.txt accurate when it throws.
template <typename F>
auto guarded(Artifacts& art, F&& body) {
  art.write("summary.txt", "status=incomplete\n");
  try {
    return body();
  } catch (const std::exception& e) {
    art.write("summary.txt", "status=failed\nerror=" + std::string(e.what()) + "\n");
    throw;
  }
}

StabilityReport require_stable(const BilinearRoughSystem& sys) {
  const StabilityReport rep = is_mean_square_stable(sys.without_nonlinearity());
  if (!rep.is_mean_square_stable) {
    throw PreconditionError("model is not mean-square stable (spectral abscissa " +
                            format_sci(rep.spectral_abscissa) + ", fixed-point rate " +
                            format_sci(rep.fixed_point_rate) + ")");
  }
  return rep;
}

DriverPath shared_driver_into(Artifacts& art, const RunConfig& cfg, std::size_t d) {
  DriverPath path;
  if (!cfg.path_file.empty()) {
    path = parse_driver_csv(read_file(cfg.path_file), DriverKind::fbm, cfg.hurst);
  } else {
    path = sample_fbm_path(cfg.hurst, d, cfg.horizon, driver_steps(cfg), cfg.seed);
  }
  if (path.dim() != d) {
    throw InvalidArgument("driver has " + std::to_string(path.dim()) +
                          " components, model expects " + std::to_string(d));
  }
  art.write("driver.csv", driver_csv(path));
  return parse_driver_csv(read_file(art.dir() / "driver.csv"), path.kind, path.hurst);
}

std::string stability_lines(const StabilityReport& s) {
  std::string out = "stability_method=";
  out += s.method == StabilityMethod::dense_spectrum ? "dense_spectrum" : "fixed_point_convergence";
  out += "\n";
  out += "spectral_abscissa=" + format_exact(s.spectral_abscissa) + "\n";
  out += "fixed_point_rate=" + format_exact(s.fixed_point_rate) + "\n";
  return out;
}

}  // namespace

DriverPath shared_driver(const RunConfig& cfg, std::size_t d) {
  Artifacts art(cfg.output_dir);
  return shared_driver_into(art, cfg, d);
}

ExactReductionReport run_exact_reduction(const RunConfig& cfg) {
  validate(cfg);
  Artifacts art(cfg.output_dir);
  return guarded(art, [&] {
    Timings timing;
    art.write("config.txt", config_echo(cfg));
    const BilinearRoughSystem sys = build_model(cfg);
    ExactReductionReport rep;
    rep.stability = require_stable(sys);
    rep.full_order = sys.order();
    timing.mark("build_and_stability_s");

    AlgebraicGramianOptions gopts;
    gopts.force_unstable = true;  // checked above
    const TwoStageResult two = two_stage_reduce(sys, cfg.tol_p, cfg.tol_q, gopts);
    rep.order_after_p = two.order_after_p;
    rep.order_after_q = two.order_after_q;
    rep.q_stage_skipped = two.q_stage_skipped;
    rep.p_residual = two.P.residual;
    timing.mark("two_stage_reduce_s");

    art.write("spectrum_P.csv", spectrum_csv(descending_eigenvalues(two.P.matrix)));
    if (!sys.has_nonlinearity()) {
      const GramianResult Qfull = solve_algebraic_gramian(sys, GramianSide::obs, gopts);
      art.write("spectrum_Q.csv", spectrum_csv(descending_eigenvalues(Qfull.matrix)));
    }
    if (two.Q_stage) {
      rep.q_residual = two.Q_stage->residual;
      art.write("spectrum_Q_stage.csv", spectrum_csv(descending_eigenvalues(two.Q_stage->matrix)));
    }
    std::vector<StageRow> stages{{"full", rep.full_order, std::nan("")},
                                 {"P", rep.order_after_p, cfg.tol_p}};
    if (!two.q_stage_skipped) stages.push_back({"Q", rep.order_after_q, cfg.tol_q});
    art.write("stages.csv", stages_csv(stages));
    timing.mark("spectra_s");

    const DriverPath path = shared_driver_into(art, cfg, sys.noise_dim());
    const SimulationResult full = rough_rk_simulate(sys, path);
    timing.mark("simulate_full_s");
    const SimulationResult red = rough_rk_simulate(two.model, path);
    timing.mark("simulate_reduced_s");

    art.write("output_full.csv", series_csv(full.times, full.outputs, "y"));
    art.write("output_reduced.csv", series_csv(red.times, red.outputs, "y"));
    if (cfg.write_states) {
      art.write("states_full.csv", series_csv(full.times, full.states, "x"));
      art.write("states_reduced.csv", series_csv(red.times, red.states, "x"));
    }
    const ErrorValue err = relative_L2_error(full.outputs, red.outputs, full.times);
    rep.rel_l2_error = err.value;
    rep.error_absolute = err.absolute;
    art.write("pointwise_error.csv",
              pointwise_error_csv(full.times, pointwise_relative_error(full.outputs, red.outputs,
                                                                       full.times)));

    std::string summary = "status=complete\n";
    summary += "full_order=" + std::to_string(rep.full_order) + "\n";
    summary += "order_after_P=" + std::to_string(rep.order_after_p) + "\n";
    summary += "order_after_Q=" + std::to_string(rep.order_after_q) + "\n";
    summary += "q_stage_skipped=" + std::string(rep.q_stage_skipped ? "true" : "false") + "\n";
    if (!two.notice.empty()) summary += "notice=" + two.notice + "\n";
    summary += "tol_P=" + format_exact(cfg.tol_p) + "\n";
    summary += "tol_Q=" + format_exact(cfg.tol_q) + "\n";
    summary += "P_residual=" + format_exact(rep.p_residual) + "\n";
    summary += "P_residual_tolerance=" + format_exact(two.P.tolerance) + "\n";
    if (two.Q_stage) {
      summary += "Q_stage_residual=" + format_exact(rep.q_residual) + "\n";
      summary += "Q_stage_residual_tolerance=" + format_exact(two.Q_stage->tolerance) + "\n";
    }
    summary += stability_lines(rep.stability);
    summary += "driver_steps=" + std::to_string(path.steps()) + "\n";
    summary += "driver_dt=" + format_exact(path.dt()) + "\n";
    summary += "K=" + std::string(sys.K().isIdentity(0.0) ? "identity" : "custom") + "\n";
    summary += "rel_L2_error=" + format_exact(rep.rel_l2_error) + "\n";
    summary += "rel_L2_error_absolute=" + std::string(rep.error_absolute ? "true" : "false") + "\n";
    summary += "files=" + join(art.files()) + "\n";
    rep.files = art.files();
    art.write("timings.txt", timing.text());
    art.write("summary.txt", summary);
    return rep;
  });
}

SweepReport run_sweep(const RunConfig& cfg) {
  validate(cfg);
  if (cfg.target_ranks.empty()) throw InvalidArgument("run_sweep: target_ranks is empty");
  Artifacts art(cfg.output_dir);
  return guarded(art, [&] {
    Timings timing;
    art.write("config.txt", config_echo(cfg));
    const BilinearRoughSystem sys = build_model(cfg);
    if (sys.has_nonlinearity()) throw PreconditionError("run_sweep: requires f == 0");
    const StabilityReport stab = require_stable(sys);
    AlgebraicGramianOptions gopts;
    gopts.force_unstable = true;
    const DriverPath path = shared_driver_into(art, cfg, sys.noise_dim());
    const SimulationResult full = rough_rk_simulate(sys, path);
    timing.mark("simulate_full_s");

    SweepReport rep;
    rep.exact_order = two_stage_reduce(sys, cfg.tol_p, cfg.tol_q, gopts).order_after_q;
    std::vector<std::pair<std::size_t, double>> table;
    std::string orders = "r,order\n";
    for (const std::size_t r : cfg.target_ranks) {
      const ReducedModel m = reduce_to_rank(sys, r, cfg.lossy, cfg.tol_p, cfg.tol_q, gopts);
      const SimulationResult red = rough_rk_simulate(m, path);
      const double e = relative_L2_error(full.outputs, red.outputs, full.times).value;
      rep.rows.push_back({r, m.system.order(), e});
      table.emplace_back(r, e);
      orders += std::to_string(r) + "," + std::to_string(m.system.order()) + "\n";
      timing.mark("rank_" + std::to_string(r) + "_s");
    }
    art.write("sweep.csv", sweep_csv(table));
    art.write("sweep_orders.csv", orders);

    std::string summary = "status=complete\n";
    summary += "full_order=" + std::to_string(sys.order()) + "\n";
    summary += "exact_order=" + std::to_string(rep.exact_order) + "\n";
    summary += "lossy=" + to_string(cfg.lossy) + "\n";
    summary += stability_lines(stab);
    for (const auto& row : rep.rows) {
      summary += "rel_L2_error_r" + std::to_string(row.requested_rank) + "=" +
                 format_exact(row.rel_l2_error) + "\n";
    }
    summary += "files=" + join(art.files()) + "\n";
    rep.files = art.files();
    art.write("timings.txt", timing.text());
    art.write("summary.txt", summary);
    return rep;
  });
}

bool ProbeReport::all_passed() const {
  for (const auto& o : outcomes) {
    if (!o.passed) return false;
  }
  return true;
}

ProbeReport run_probes(const RunConfig& cfg) {
  Artifacts art(cfg.output_dir);
  return guarded(art, [&] {
    art.write("config.txt", config_echo(cfg));
    std::vector<NamedSystem> fixtures = builtin_probe_fixtures();
    if (cfg.include_unstable) fixtures.push_back({"unstable3", unstable_fixture()});

    ProbeReport rep;
    auto record = [&rep](std::string probe, const std::string& fixture, double value,
                         double threshold, bool passed) {
      rep.outcomes.push_back({std::move(probe), fixture, value, threshold, passed});
    };

    for (std::size_t f = 0; f < fixtures.size(); ++f) {
      const auto& [name, sys] = fixtures[f];
      const StabilityReport stab = is_mean_square_stable(sys.without_nonlinearity());
      const double abscissa =
          stab.method == StabilityMethod::dense_spectrum ? stab.spectral_abscissa : stab.fixed_point_rate - 1.0;
      record("stability", name, abscissa, 0.0, stab.is_mean_square_stable);
      if (!stab.is_mean_square_stable) continue;

      for (const std::string shape : {"linear", "sine"}) {
        const DriverPath smooth = smooth_path(shape, sys.noise_dim(), 0.5, 200);
        const GronwallProbeResult g = smooth_quadratic_form_probe(sys, smooth, 4, 1e-6);
        record("gronwall_" + shape, name, g.min_gap_eigenvalue, -1e-6 * g.bound_norm, g.passed);
      }

      if (sys.order() >= 2) {
        const double scale = positivity_scale(sys);
        const double m = resolvent_positivity_probe(sys, cfg.probe_trials, derive_seed(cfg.seed, f));
        record("resolvent_positivity", name, m, -1e-10 * scale, m >= -1e-10 * scale);
      }

      if (!sys.has_nonlinearity()) {
        AlgebraicGramianOptions gopts;
        gopts.force_unstable = true;
        const GramianResult Q = solve_algebraic_gramian(sys, GramianSide::obs, gopts);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Q.matrix);
        const double top = eig.eigenvalues().maxCoeff();
        double worst = 0.0;
        for (Eigen::Index j = 0; j < eig.eigenvalues().size(); ++j) {
          if (eig.eigenvalues()(j) > cfg.tol_q * top) continue;
          const KernelResiduals k = check_kernel_preservation(sys, Q.matrix, eig.eigenvectors().col(j));
          const double rel = std::max({k.q_a_z, k.c_z, k.noise}) / k.scale;
          worst = std::max(worst, rel);
        }
        record("kernel_preservation", name, worst, 1e-8, worst <= 1e-8);
      }
    }

    // Monte-Carlo cross-check of the finite Gramian on the first fixture.
    {
      const auto& [name, sys] = fixtures.front();
      const double T = cfg.mc_horizon;
      const auto steps = static_cast<std::size_t>(std::llround(T / cfg.mc_dt));
      const GramianResult PT =
          integrate_gramian_ode(sys, GramianSide::reach, T, steps).gramian;
      const MonteCarloMoment mc =
          monte_carlo_second_moment(sys, GramianSide::reach, T, cfg.mc_paths, cfg.mc_dt, cfg.seed);
      const Eigen::Index n = PT.matrix.rows();
      std::size_t inside = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          if (std::abs(mc.integral(i, j) - PT.matrix(i, j)) <= 3.0 * mc.integral_std_error(i, j)) {
            ++inside;
          }
        }
      }
      const double frac = static_cast<double>(inside) / static_cast<double>(n * n);
      record("monte_carlo_gramian", name, frac, 0.95, frac >= 0.95);
    }

    std::string csv = "probe,fixture,value,threshold,passed\n";
    for (const auto& o : rep.outcomes) {
      csv += o.probe + "," + o.fixture + "," + format_exact(o.value) + "," +
             format_exact(o.threshold) + "," + (o.passed ? "true" : "false") + "\n";
    }
    art.write("probes.csv", csv);
    std::size_t failed = 0;
    for (const auto& o : rep.outcomes) failed += o.passed ? 0 : 1;
    std::string summary = std::string("status=complete\n") +
                          "probes=" + std::to_string(rep.outcomes.size()) + "\n" +
                          "failed=" + std::to_string(failed) + "\n" +
                          "all_passed=" + (failed == 0 ? "true" : "false") + "\n" +
                          "files=" + join(art.files()) + "\n";
    rep.files = art.files();
    art.write("summary.txt", summary);
    return rep;
  });
}

SimulationResult run_simulate(const RunConfig& cfg) {
  validate(cfg);
  Artifacts art(cfg.output_dir);
  return guarded(art, [&] {
    art.write("config.txt", config_echo(cfg));
    const BilinearRoughSystem sys = build_model(cfg);
    const DriverPath path = shared_driver_into(art, cfg, sys.noise_dim());
    SimulationResult res = rough_rk_simulate(sys, path);
    art.write("output.csv", series_csv(res.times, res.outputs, "y"));
    if (cfg.write_states) art.write("states.csv", series_csv(res.times, res.states, "x"));
    std::string summary = "status=complete\n";
    summary += "order=" + std::to_string(sys.order()) + "\n";
    summary += "driver_steps=" + std::to_string(path.steps()) + "\n";
    summary += "max_newton_iterations=" + std::to_string(res.diagnostics.max_newton_iterations) + "\n";
    summary += "max_linear_residual=" + format_exact(res.diagnostics.max_linear_residual) + "\n";
    summary += "files=" + join(art.files()) + "\n";
    art.write("summary.txt", summary);
    return res;
  });
}

GramianReport run_gramian(const RunConfig& cfg) {
  validate(cfg);
  Artifacts art(cfg.output_dir);
  return guarded(art, [&] {
    art.write("config.txt", config_echo(cfg));
    const BilinearRoughSystem sys = build_model(cfg);
    const StabilityReport stab = require_stable(sys);
    AlgebraicGramianOptions gopts;
    gopts.force_unstable = true;
    GramianResult P = solve_algebraic_gramian(sys, GramianSide::reach, gopts);
    GramianResult Q = solve_algebraic_gramian(sys, GramianSide::obs, gopts);
    art.write("spectrum_P.csv", spectrum_csv(descending_eigenvalues(P.matrix)));
    art.write("spectrum_Q.csv", spectrum_csv(descending_eigenvalues(Q.matrix)));
    std::string summary = "status=complete\n";
    summary += "order=" + std::to_string(sys.order()) + "\n";
    summary += stability_lines(stab);
    summary += "P_residual=" + format_exact(P.residual) + "\n";
    summary += "P_residual_tolerance=" + format_exact(P.tolerance) + "\n";
    summary += "P_iterations=" + std::to_string(P.iterations) + "\n";
    summary += "Q_residual=" + format_exact(Q.residual) + "\n";
    summary += "Q_residual_tolerance=" + format_exact(Q.tolerance) + "\n";
    summary += "Q_iterations=" + std::to_string(Q.iterations) + "\n";
    summary += "P_rank_at_tol=" + std::to_string(truncate_psd_spectrum(P.matrix, cfg.tol_p).rank()) + "\n";
    summary += "Q_rank_at_tol=" + std::to_string(truncate_psd_spectrum(Q.matrix, cfg.tol_q).rank()) + "\n";
    summary += "files=" + join(art.files()) + "\n";
    art.write("summary.txt", summary);
    return GramianReport{std::move(P), std::move(Q), art.files()};
  });
}

}  // namespace roughmor
