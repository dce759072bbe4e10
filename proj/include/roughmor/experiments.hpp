#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "roughmor/config.hpp"
#include "roughmor/drivers.hpp"
#include "roughmor/system_model.hpp"

namespace roughmor {

/// Samples the configured fBm driver (or loads cfg.path_file), stores it as
/// `driver.csv` in the output directory and returns the path parsed back
/// from that file, so every consumer sees the stored bytes.
DriverPath shared_driver(const RunConfig& cfg, std::size_t d);

struct ExactReductionReport {
  std::size_t full_order = 0;
  std::size_t order_after_p = 0;
  std::size_t order_after_q = 0;
  bool q_stage_skipped = false;
  double rel_l2_error = 0.0;
  bool error_absolute = false;
  double p_residual = 0.0;
  double q_residual = 0.0;
  StabilityReport stability{};
  std::vector<std::string> files;
};

/// Model -> stability check -> two-stage reduction -> full and reduced
/// simulation on one stored driver. Writes config.txt, spectrum_P.csv,
/// spectrum_Q.csv (Q of the full model), spectrum_Q_stage.csv (Q of the
/// stage-1 model), stages.csv, driver.csv, output_full.csv,
/// output_reduced.csv, pointwise_error.csv, summary.txt and timings.txt.
/// summary.txt reads `status=incomplete` until the run finishes and
/// `status=failed` if a stage throws.
ExactReductionReport run_exact_reduction(const RunConfig& cfg);

struct SweepRow {
  std::size_t requested_rank;
  std::size_t order;
  double rel_l2_error;
};

struct SweepReport {
  std::size_t exact_order = 0;
  std::vector<SweepRow> rows;
  std::vector<std::string> files;
};

/// Lossy reductions to each cfg.target_ranks entry against the full model
/// on one stored driver; writes sweep.csv (`r,rel_L2_error`) plus
/// sweep_orders.csv, driver.csv, config.txt, summary.txt, timings.txt.
SweepReport run_sweep(const RunConfig& cfg);

struct ProbeOutcome {
  std::string probe;
  std::string fixture;
  double value;
  double threshold;
  bool passed;
};

struct ProbeReport {
  std::vector<ProbeOutcome> outcomes;
  std::vector<std::string> files;
  bool all_passed() const;
};

/// Stability, Gronwall, resolvent-positivity, kernel-preservation and
/// Monte-Carlo Gramian probes on the builtin fixtures (plus the unstable
/// negative control when cfg.include_unstable). Writes probes.csv and
/// summary.txt.
ProbeReport run_probes(const RunConfig& cfg);

/// Simulates the configured model; writes output.csv (and states.csv when
/// cfg.write_states), driver.csv, config.txt, summary.txt.
SimulationResult run_simulate(const RunConfig& cfg);

struct GramianReport {
  GramianResult P;
  GramianResult Q;
  std::vector<std::string> files;
};

/// Algebraic P and Q of the configured model; writes spectrum_P.csv,
/// spectrum_Q.csv, config.txt, summary.txt.
GramianReport run_gramian(const RunConfig& cfg);

}  // namespace roughmor
