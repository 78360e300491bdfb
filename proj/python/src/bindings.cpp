#include "rcusum/config.hpp"
#include "rcusum/cusum.hpp"
#include "rcusum/detector.hpp"
#include "rcusum/errors.hpp"
#include "rcusum/lfp.hpp"
#include "rcusum/quadratic.hpp"
#include "rcusum/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

namespace py = pybind11;
using namespace rcusum;

namespace {

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["procedure"] = r.procedure;
  d["d"] = r.d;
  d["gamma"] = r.gamma;
  d["b"] = r.b;
  d["epsilon_star"] = r.epsilon_star;
  d["arl_mean"] = r.arl.mean;
  d["arl_se"] = r.arl.se;
  d["wdd_mean"] = r.wdd.mean;
  d["wdd_sd"] = r.wdd.sd;
  d["censored_fraction"] = r.wdd.censored_fraction;
  d["trials"] = r.trials;
  d["seed"] = r.seed;
  d["efficiency_factor"] = r.efficiency_factor;
  return d;
}

Covariance as_cov(const Matrix& sigma) { return Covariance(sigma); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Robust CUSUM detectors for Gaussian uncertainty classes";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error.ptr());
  py::register_exception<DomainError>(m, "DomainError", error.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  py::class_<VectorSet>(m, "VectorSet")
      .def_static("singleton", &VectorSet::singleton, py::arg("point"))
      .def_static("l2_ball", &VectorSet::l2_ball, py::arg("center"), py::arg("radius"))
      .def_static("l1_ball", &VectorSet::l1_ball, py::arg("center"), py::arg("radius"))
      .def_static("box", &VectorSet::box, py::arg("lower"), py::arg("upper"))
      .def_property_readonly("dim", &VectorSet::dim)
      .def_property_readonly("kind", &VectorSet::kind)
      .def("project", [](const VectorSet& s, const Vector& x) { return project(s, x); }, py::arg("x"))
      .def("contains", [](const VectorSet& s, const Vector& x, double tol) { return contains(s, x, tol); },
           py::arg("x"), py::arg("tol") = 1e-9);

  py::class_<MatrixSet>(m, "MatrixSet")
      .def_static("singleton", &MatrixSet::singleton, py::arg("theta"))
      .def_static("spectral_ball", &MatrixSet::spectral_ball, py::arg("dim"), py::arg("radius"))
      .def_static("interval", &MatrixSet::interval, py::arg("base"), py::arg("direction"), py::arg("low"),
                  py::arg("high"))
      .def_property_readonly("dim", &MatrixSet::dim)
      .def_property_readonly("kind", &MatrixSet::kind)
      .def("contains", [](const MatrixSet& s, const Matrix& t, double tol) { return contains(s, t, tol); },
           py::arg("theta"), py::arg("tol") = 1e-9);

  py::class_<LfpSolution>(m, "LfpSolution")
      .def_readonly("mu0_star", &LfpSolution::mu0_star)
      .def_readonly("mu1_star", &LfpSolution::mu1_star)
      .def_readonly("delta_sq", &LfpSolution::delta_sq)
      .def_readonly("epsilon_star", &LfpSolution::epsilon_star)
      .def_readonly("iterations", &LfpSolution::iterations)
      .def_readonly("residual", &LfpSolution::residual)
      .def_readonly("degenerate_pair", &LfpSolution::degenerate_pair);

  m.def(
      "solve_lfp",
      [](const VectorSet& m0, const VectorSet& m1, const Matrix& sigma, double tol, long max_iters) {
        return solve_lfp(m0, m1, as_cov(sigma), LfpOptions{tol, max_iters});
      },
      py::arg("m0"), py::arg("m1"), py::arg("sigma"), py::arg("tol") = 1e-9, py::arg("max_iters") = 200000,
      "Least favorable mean pair of two mean sets under a common covariance.");

  py::class_<AffineDetector>(m, "AffineDetector")
      .def_readonly("a", &AffineDetector::a)
      .def_readonly("c", &AffineDetector::c)
      .def_readonly("epsilon_star", &AffineDetector::epsilon_star)
      .def("__call__", [](const AffineDetector& d, const Vector& xi) { return d(xi); }, py::arg("xi"));

  py::class_<QuadraticDetector>(m, "QuadraticDetector")
      .def_readonly("H", &QuadraticDetector::H)
      .def_readonly("h", &QuadraticDetector::h)
      .def_readonly("kappa_const", &QuadraticDetector::kappa_const)
      .def_readonly("epsilon_star", &QuadraticDetector::epsilon_star)
      .def("__call__", [](const QuadraticDetector& d, const Vector& xi) { return d(xi); }, py::arg("xi"));

  m.def(
      "affine_detector",
      [](const LfpSolution& sol, const Matrix& sigma) { return build_affine_detector(sol, as_cov(sigma)); },
      py::arg("lfp"), py::arg("sigma"));

  py::class_<SaddleSolution>(m, "SaddleSolution")
      .def_readonly("h_star", &SaddleSolution::h_star)
      .def_readonly("H_star", &SaddleSolution::H_star)
      .def_readonly("theta0_star", &SaddleSolution::theta0_star)
      .def_readonly("theta1_star", &SaddleSolution::theta1_star)
      .def_readonly("sv", &SaddleSolution::sv)
      .def_readonly("gap", &SaddleSolution::gap)
      .def_readonly("epsilon_star", &SaddleSolution::epsilon_star)
      .def_readonly("iterations", &SaddleSolution::iterations);

  // Covariance-shift detector for singleton means; returns (solution, detector).
  m.def(
      "quadratic_detector",
      [](const MatrixSet& u0, const Vector& mean0, const MatrixSet& u1, const Vector& mean1, double beta,
         double gap_tol, long max_iters) {
        const ClassSetup s0 = make_class_setup(u0, MeanLift::singleton(mean0));
        const ClassSetup s1 = make_class_setup(u1, MeanLift::singleton(mean1));
        const SaddleSolution sol = solve_saddle(s0, s1, SaddleOptions{beta, gap_tol, max_iters});
        return py::make_tuple(sol, build_quadratic_detector(sol, s0, s1));
      },
      py::arg("u0"), py::arg("mean0"), py::arg("u1"), py::arg("mean1"), py::arg("beta") = 0.99,
      py::arg("gap_tol") = 1e-4, py::arg("max_iters") = 20000);

  m.def("threshold_from_gamma", &threshold_from_gamma, py::arg("gamma"), py::arg("epsilon_star"));

  m.def(
      "cusum_path",
      [](const Vector& increments) {
        Vector out(increments.size());
        CusumState s(INFINITY);
        for (long t = 0; t < increments.size(); ++t) {
          s = step(s, increments(t));
          out(t) = s.statistic;
        }
        return out;
      },
      py::arg("increments"), "CUSUM statistic after each increment, starting from 0.");

  m.def(
      "estimate_arl",
      [](const Detector& det, double b, const Vector& mean, const Matrix& sigma, long trials, long horizon,
         std::uint64_t seed, int threads) {
        py::gil_scoped_release release;
        SimOptions opts;
        opts.threads = threads;
        const ArlEstimate e = estimate_arl(det, b, Gaussian(mean, sigma), trials, horizon, seed, opts);
        return std::make_tuple(e.mean, e.se, e.censored_fraction);
      },
      py::arg("detector"), py::arg("b"), py::arg("mean"), py::arg("sigma"), py::arg("trials"),
      py::arg("horizon"), py::arg("seed") = 1, py::arg("threads") = 1,
      "Mean no-change run length: (mean, standard error, censored fraction).");

  m.def(
      "estimate_delay",
      [](const Detector& det, double b, const Vector& mean0, const Matrix& sigma0, const Vector& mean1,
         const Matrix& sigma1, long trials, long kappa, long horizon, std::uint64_t seed, int threads) {
        py::gil_scoped_release release;
        SimOptions opts;
        opts.threads = threads;
        const ChangeScenario sc{Gaussian(mean0, sigma0), Gaussian(mean1, sigma1), kappa};
        const DelayEstimate e = estimate_wdd(det, b, sc, trials, seed, opts, horizon);
        return std::make_tuple(e.mean, e.sd, e.censored_fraction);
      },
      py::arg("detector"), py::arg("b"), py::arg("mean0"), py::arg("sigma0"), py::arg("mean1"), py::arg("sigma1"),
      py::arg("trials"), py::arg("kappa") = 1, py::arg("horizon") = 10000, py::arg("seed") = 1,
      py::arg("threads") = 1, "Detection delay after a change at kappa: (mean, sd, censored fraction).");

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("dimension", &ExperimentConfig::dimension)
      .def_readonly("gamma", &ExperimentConfig::gamma)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_property_readonly("scenarios",
                             [](const ExperimentConfig& c) {
                               std::vector<std::string> names;
                               for (const auto& s : c.scenarios) names.push_back(s.name);
                               return names;
                             })
      .def("to_yaml", &serialize_config)
      .def("__eq__", [](const ExperimentConfig& a, const ExperimentConfig& b) { return a == b; });

  m.def("load_config", &load_config, py::arg("path"));
  m.def("parse_config", [](const std::string& text) { return parse_config(text); }, py::arg("text"));

  m.def(
      "run_experiment",
      [](const ExperimentConfig& cfg, int threads, std::optional<std::string> scenario) {
        ExperimentOptions opts;
        opts.threads = threads;
        opts.only_scenario = std::move(scenario);
        std::vector<RunReport> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(cfg, opts);
        }
        py::list out;
        for (const RunReport& r : rows) out.append(report_dict(r));
        return out;
      },
      py::arg("config"), py::arg("threads") = 1, py::arg("scenario") = py::none(),
      "Robust and baseline rows for every scenario, as dicts.");
}
