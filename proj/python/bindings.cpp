#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "roughmor/config.hpp"
#include "roughmor/drivers.hpp"
#include "roughmor/errors.hpp"
#include "roughmor/experiments.hpp"
#include "roughmor/gramians.hpp"
#include "roughmor/heat_model.hpp"
#include "roughmor/rde_solver.hpp"
#include "roughmor/reduction.hpp"
#include "roughmor/system_model.hpp"

namespace py = pybind11;
using namespace roughmor;

namespace {

GramianSide parse_side(const std::string& side) {
  if (side == "reach" || side == "P") return GramianSide::reach;
  if (side == "obs" || side == "Q") return GramianSide::obs;
  throw InvalidArgument("side must be 'reach' or 'obs'");
}

DriverPath to_path(const MatrixXd& values, double T, double hurst) {
  DriverPath p;
  p.T = T;
  p.values = values;
  p.hurst = hurst;
  p.kind = DriverKind::fbm;
  validate(p);
  return p;
}

py::dict simulation_dict(const SimulationResult& r) {
  py::dict d;
  d["times"] = r.times;
  d["states"] = r.states;
  d["outputs"] = r.outputs;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Exact and lossy Gramian-based reduction of bilinear rough systems";

  static py::exception<PreconditionError> precondition(m, "PreconditionError", PyExc_RuntimeError);
  static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const PreconditionError& e) {
      PyErr_SetString(precondition.ptr(), e.what());
    } catch (const NumericalError& e) {
      PyErr_SetString(numerical.ptr(), e.what());
    }
  });

  py::class_<BilinearRoughSystem>(m, "System")
      .def(py::init([](const MatrixXd& A, const std::vector<MatrixXd>& N, const MatrixXd& K,
                       const MatrixXd& C, const VectorXd& x0, bool cubic) {
             return BilinearRoughSystem(A, N, K, C, x0,
                                        cubic ? std::optional(cubic_damping()) : std::nullopt);
           }),
           py::arg("A"), py::arg("N"), py::arg("K"), py::arg("C"), py::arg("x0"),
           py::arg("cubic_damping") = false)
      .def_property_readonly("A", &BilinearRoughSystem::A)
      .def_property_readonly("N", py::overload_cast<>(&BilinearRoughSystem::N, py::const_))
      .def_property_readonly("K", &BilinearRoughSystem::K)
      .def_property_readonly("C", &BilinearRoughSystem::C)
      .def_property_readonly("x0", &BilinearRoughSystem::x0)
      .def_property_readonly("order", &BilinearRoughSystem::order)
      .def_property_readonly("has_nonlinearity", &BilinearRoughSystem::has_nonlinearity)
      .def("__repr__", [](const BilinearRoughSystem& s) {
        return "<System n=" + std::to_string(s.order()) + " d=" + std::to_string(s.noise_dim()) +
               " p=" + std::to_string(s.output_dim()) + ">";
      });

  m.def("heat1d", [](std::size_t n) { return build_heat1d(default_heat_config(n)); },
        py::arg("n") = 100, "Finite-difference rough heat model with the default coefficients.");

  m.def("apply_lyapunov", &apply_lyapunov, py::arg("system"), py::arg("X"));

  m.def("stability", [](const BilinearRoughSystem& s) {
    const auto r = is_mean_square_stable(s);
    py::dict d;
    d["stable"] = r.is_mean_square_stable;
    d["spectral_abscissa"] = r.spectral_abscissa;
    d["fixed_point_rate"] = r.fixed_point_rate;
    d["method"] = r.method == StabilityMethod::dense_spectrum ? "dense_spectrum"
                                                              : "fixed_point_convergence";
    return d;
  }, py::arg("system"));

  m.def("gramian", [](const BilinearRoughSystem& s, const std::string& side, double tol) {
    AlgebraicGramianOptions o;
    o.tol = tol;
    const auto g = solve_algebraic_gramian(s, parse_side(side), o);
    py::dict d;
    d["matrix"] = g.matrix;
    d["residual"] = g.residual;
    d["tolerance"] = g.tolerance;
    d["iterations"] = g.iterations;
    return d;
  }, py::arg("system"), py::arg("side") = "reach", py::arg("tol") = 1e-12,
        "Algebraic Gramian: 'reach' solves x0 x0^T + L(P) = 0, 'obs' C^T C + L*(Q) = 0.");

  m.def("gramian_residual", [](const BilinearRoughSystem& s, const MatrixXd& G,
                               const std::string& side) {
    return gramian_residual(s, G, parse_side(side)).value;
  }, py::arg("system"), py::arg("G"), py::arg("side") = "reach");

  m.def("truncate", [](const MatrixXd& G, double tol) {
    return truncate_psd_spectrum(G, tol).V;
  }, py::arg("G"), py::arg("tol") = 1e-12, "Orthonormal basis of eigenvalues above tol * lambda_max.");

  m.def("two_stage_reduce", [](const BilinearRoughSystem& s, double tol_p, double tol_q) {
    const auto r = two_stage_reduce(s, tol_p, tol_q);
    py::dict d;
    d["system"] = r.model.system;
    d["V"] = r.model.basis.V;
    d["orders"] = std::vector<std::size_t>{r.full_order, r.order_after_p, r.order_after_q};
    d["q_stage_skipped"] = r.q_stage_skipped;
    return d;
  }, py::arg("system"), py::arg("tol_p") = 1e-12, py::arg("tol_q") = 1e-12);

  m.def("reduce_to_rank", [](const BilinearRoughSystem& s, std::size_t rank) {
    const auto r = reduce_to_rank(s, rank, LossyStrategy::alternating, 1e-12, 1e-12);
    py::dict d;
    d["system"] = r.system;
    d["V"] = r.basis.V;
    return d;
  }, py::arg("system"), py::arg("rank"));

  m.def("fbm", [](double H, std::size_t d, double T, std::size_t M, std::uint64_t seed) {
    return sample_fbm_path(H, d, T, M, seed).values;
  }, py::arg("hurst"), py::arg("d"), py::arg("T"), py::arg("steps"), py::arg("seed"),
        "(steps + 1) x d fractional Brownian motion samples on a uniform grid of [0, T].");

  m.def("simulate", [](const BilinearRoughSystem& s, const MatrixXd& W, double T) {
    return simulation_dict(rough_rk_simulate(s, to_path(W, T, 0.5)));
  }, py::arg("system"), py::arg("W"), py::arg("T"),
        "Two-stage DIRK rough solver on the driver samples W over [0, T].");

  m.def("relative_l2_error", [](const MatrixXd& y, const MatrixXd& yr,
                                const std::vector<double>& t) {
    return relative_L2_error(y, yr, t).value;
  }, py::arg("y"), py::arg("y_reduced"), py::arg("times"));

  m.def("run_exact_reduction", [](const std::map<std::string, std::string>& settings) {
    RunConfig cfg;
    for (const auto& [k, v] : settings) set_config_value(cfg, k, v);
    validate(cfg);
    const auto r = run_exact_reduction(cfg);
    py::dict d;
    d["orders"] = std::vector<std::size_t>{r.full_order, r.order_after_p, r.order_after_q};
    d["rel_l2_error"] = r.rel_l2_error;
    d["files"] = r.files;
    return d;
  }, py::arg("settings"), "Full experiment with key=value settings as in config files.");
}
