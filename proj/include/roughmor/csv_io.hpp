#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "roughmor/drivers.hpp"
#include "roughmor/rde_solver.hpp"
#include "roughmor/system_model.hpp"

namespace roughmor {

namespace fs = std::filesystem;

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partially written artifact.
void write_file_atomic(const fs::path& path, const std::string& contents);

std::string read_file(const fs::path& path);

/// `index,eigenvalue` (1-based index, descending eigenvalues).
std::string spectrum_csv(const VectorXd& eigenvalues);

struct StageRow {
  std::string stage;
  std::size_t order;
  /// NaN for the unreduced model.
  double tolerance;
};

/// `stage,order,tolerance`
std::string stages_csv(const std::vector<StageRow>& rows);

/// `t,W1,...,Wd`
std::string driver_csv(const DriverPath& path);

/// Parses `driver_csv` output. The time column must be uniform and start at
/// t0; the loaded path is tagged with `kind` and `hurst`.
DriverPath parse_driver_csv(const std::string& text,
                            DriverKind kind = DriverKind::fbm, double hurst = 0.5);

/// `t,<prefix>1,...` with one row per time node.
std::string series_csv(const std::vector<double>& times, const MatrixXd& values,
                       const std::string& prefix);

/// `t,rel_err`; zero-denominator nodes are written as `nan`.
std::string pointwise_error_csv(const std::vector<double>& times, const PointwiseError& err);

/// `r,rel_L2_error`
std::string sweep_csv(const std::vector<std::pair<std::size_t, double>>& rows);

/// Plain-text system file: header `n d p`, then row-major blocks A, N_1 ...
/// N_d, K (d x d), C (p x n) and x0 (n values), whitespace separated.
/// Lines starting with '#' are comments.
BilinearRoughSystem parse_system_file(const std::string& text);
std::string system_file(const BilinearRoughSystem& sys);

}  // namespace roughmor
