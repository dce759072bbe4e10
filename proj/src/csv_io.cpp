#include "roughmor/csv_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "roughmor/errors.hpp"
#include "roughmor/format.hpp"

namespace roughmor {

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw NumericalError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string spectrum_csv(const VectorXd& eigenvalues) {
  std::string out = "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_exact(eigenvalues(i)) + "\n";
  }
  return out;
}

std::string stages_csv(const std::vector<StageRow>& rows) {
  std::string out = "stage,order,tolerance\n";
  for (const auto& r : rows) {
    out += r.stage + "," + std::to_string(r.order) + "," +
           (std::isnan(r.tolerance) ? std::string("nan") : format_exact(r.tolerance)) + "\n";
  }
  return out;
}

std::string series_csv(const std::vector<double>& times, const MatrixXd& values,
                       const std::string& prefix) {
  if (static_cast<Eigen::Index>(times.size()) != values.rows()) {
    throw InvalidArgument("series_csv: times and values disagree in length");
  }
  std::string out = "t";
  for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + prefix + std::to_string(j + 1);
  out += "\n";
  for (Eigen::Index k = 0; k < values.rows(); ++k) {
    out += format_exact(times[static_cast<std::size_t>(k)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + format_exact(values(k, j));
    out += "\n";
  }
  return out;
}

std::string driver_csv(const DriverPath& path) {
  validate(path);
  std::vector<double> times(path.steps() + 1);
  for (std::size_t k = 0; k < times.size(); ++k) times[k] = path.time(k);
  return series_csv(times, path.values, "W");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument(where + ": cannot parse number '" + s + "'");
  }
  while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
  if (used != s.size()) throw InvalidArgument(where + ": trailing characters in '" + s + "'");
  return v;
}

}  // namespace

DriverPath parse_driver_csv(const std::string& text, DriverKind kind, double hurst) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("driver csv: empty input");
  const auto header = split(line, ',');
  if (header.size() < 2 || header[0] != "t") {
    throw InvalidArgument("driver csv: header must be t,W1,...,Wd");
  }
  const std::size_t d = header.size() - 1;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != d + 1) throw InvalidArgument("driver csv: ragged row");
    times.push_back(parse_double(cells[0], "driver csv"));
    std::vector<double> r(d);
    for (std::size_t j = 0; j < d; ++j) r[j] = parse_double(cells[j + 1], "driver csv");
    rows.push_back(std::move(r));
  }
  if (rows.size() < 2) throw InvalidArgument("driver csv: need at least two rows");
  DriverPath path;
  path.t0 = times.front();
  path.T = times.back();
  path.kind = kind;
  path.hurst = hurst;
  path.name = "file";
  path.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t j = 0; j < d; ++j) {
      path.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rows[k][j];
    }
  }
  const double dt = path.dt();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - path.time(k)) > 1e-9 * std::max(dt, std::abs(path.T))) {
      throw InvalidArgument("driver csv: time grid is not uniform");
    }
  }
  validate(path);
  return path;
}

std::string pointwise_error_csv(const std::vector<double>& times, const PointwiseError& err) {
  if (times.size() != err.values.size()) {
    throw InvalidArgument("pointwise_error_csv: length mismatch");
  }
  std::string out = "t,rel_err\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out += format_exact(times[k]) + "," +
           (err.zero_denominator[k] ? std::string("nan") : format_exact(err.values[k])) + "\n";
  }
  return out;
}

std::string sweep_csv(const std::vector<std::pair<std::size_t, double>>& rows) {
  std::string out = "r,rel_L2_error\n";
  for (const auto& [r, e] : rows) out += std::to_string(r) + "," + format_exact(e) + "\n";
  return out;
}

BilinearRoughSystem parse_system_file(const std::string& text) {
  std::istringstream lines(text);
  std::string line, body;
  while (std::getline(lines, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    body += line + "\n";
  }
  std::istringstream in(body);
  std::vector<double> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(parse_double(tok, "system file"));
  if (tokens.size() < 3) throw InvalidArgument("system file: missing header 'n d p'");
  const auto as_count = [](double v) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw InvalidArgument("system file: header entries must be positive integers");
    }
    return static_cast<Eigen::Index>(v);
  };
  const Eigen::Index n = as_count(tokens[0]), d = as_count(tokens[1]), p = as_count(tokens[2]);
  const std::size_t expected = 3 + static_cast<std::size_t>(n * n * (1 + d) + d * d + p * n + n);
  if (tokens.size() != expected) {
    throw InvalidArgument("system file: expected " + std::to_string(expected - 3) +
                          " numbers after the header, found " +
                          std::to_string(tokens.size() - 3));
  }
  std::size_t pos = 3;
  auto block = [&](Eigen::Index rows, Eigen::Index cols) {
    MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = tokens[pos++];
    }
    return M;
  };
  MatrixXd A = block(n, n);
  std::vector<MatrixXd> N;
  for (Eigen::Index i = 0; i < d; ++i) N.push_back(block(n, n));
  MatrixXd K = block(d, d);
  MatrixXd C = block(p, n);
  VectorXd x0 = block(n, 1).col(0);
  return BilinearRoughSystem(std::move(A), std::move(N), std::move(K), std::move(C),
                             std::move(x0));
}

std::string system_file(const BilinearRoughSystem& sys) {
  std::string out = std::to_string(sys.order()) + " " + std::to_string(sys.noise_dim()) + " " +
                    std::to_string(sys.output_dim()) + "\n";
  auto block = [&out](const MatrixXd& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      for (Eigen::Index j = 0; j < M.cols(); ++j) {
        out += (j ? " " : "") + format_exact(M(i, j));
      }
      out += "\n";
    }
  };
  block(sys.A());
  for (const auto& Ni : sys.N()) block(Ni);
  block(sys.K());
  block(sys.C());
  block(sys.x0().transpose());
  return out;
}

}  // namespace roughmor
