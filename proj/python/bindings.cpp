#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "l1ac/certificates.hpp"
#include "l1ac/driver.hpp"

namespace py = pybind11;
using namespace l1ac;

namespace {

Eigen::MatrixXd trace_matrix(const sim::Trace& tr) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(tr.rows.size()),
                    static_cast<Eigen::Index>(tr.columns.size()));
  for (Eigen::Index r = 0; r < M.rows(); ++r)
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      M(r, c) = tr.rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  return M;
}

py::dict run_config(const std::string& config_text, bool with_reference) {
  const auto sc = config::parse(config_text);
  sim::Trace tr;
  nlohmann::json summary;
  if (sc.is_aircraft) {
    tr = l2f::run_l2f(sc.aircraft);
  } else if (with_reference) {
    tr = sim::run_comparison(sc.linear);
  } else {
    tr = sim::run_scenario(sc.linear);
  }
  tr.config_hash = sc.hash;
  tr.tool_version = driver::kVersion;

  py::dict out;
  out["columns"] = tr.columns;
  out["data"] = trace_matrix(tr);
  py::dict sups;
  for (const auto& [k, v] : tr.sups) sups[py::str(k)] = v;
  out["sups"] = sups;
  out["aborted"] = tr.aborted;
  out["abort_reason"] = tr.abort_reason;
  out["config_hash"] = tr.config_hash;
  return out;
}

}  // namespace

PYBIND11_MODULE(_l1ac, m) {
  m.doc() = "switched L1 adaptive control toolkit (C++ core)";
  m.attr("__version__") = driver::kVersion;

  // dense linear algebra primitives
  m.def("expm", &la::expm, py::arg("A"), py::arg("t") = 1.0,
        "matrix exponential e^{A t} (Pade 13 with scaling and squaring)");
  m.def("pinv", &la::pinv, py::arg("B"), "Moore-Penrose pseudo-inverse via SVD");
  m.def("bperp", &la::bperp, py::arg("B"),
        "orthonormal basis of the null space of B^T");
  m.def("lyap_solve", &la::lyap_solve, py::arg("A"), py::arg("Q"),
        "solve A^T P + P A = -Q for Hurwitz A and SPD Q");
  m.def("gev_max", &la::gev_max, py::arg("P"), py::arg("Q"),
        "smallest mu with P <= mu Q");
  m.def("dwell_time", &cert::dwell_time, py::arg("lambda_"), py::arg("mu"),
        py::arg("a_star"), "ln(mu) / ((1 - a_star) lambda)");

  // scenario-level operations; configs are JSON documents (text)
  m.def("simulate",
        [](const std::string& config) { return run_config(config, false); },
        py::arg("config_json"),
        "run a scenario (plant + controller, or the aircraft stack)");
  m.def("compare",
        [](const std::string& config) { return run_config(config, true); },
        py::arg("config_json"),
        "co-simulate with the reference and ideal systems");
  m.def("certify",
        [](const std::string& config) {
          const auto sc = config::parse(config);
          return driver::certificate_to_json(driver::certify_scenario(sc)).dump();
        },
        py::arg("config_json"),
        "stability/performance certificate as a JSON string");
  m.def("theorem1_check",
        [](const std::string& config) {
          const auto sc = config::parse(config);
          if (sc.is_aircraft)
            throw std::invalid_argument("theorem1_check applies to linear scenarios");
          const auto cert_rep = cert::certify(sc.linear, sc.cert_opts);
          nlohmann::json j;
          j["certificate"] = driver::certificate_to_json(cert_rep);
          if (cert_rep.feasible) {
            const auto tr = sim::run_comparison(sc.linear);
            j["theorem1"] = driver::theorem1_to_json(cert::theorem1_report(cert_rep, tr));
          }
          return j.dump();
        },
        py::arg("config_json"),
        "certify, co-simulate and evaluate the five performance bounds");
  m.def("monte_carlo",
        [](const std::string& config, int n_runs, std::uint64_t seed) {
          const auto sc = config::parse(config);
          if (sc.is_aircraft)
            throw std::invalid_argument("monte_carlo applies to linear scenarios");
          const auto res = sim::monte_carlo_sweep(sc.linear, n_runs, seed);
          py::dict out;
          py::list runs;
          for (const auto& sups : res.per_run_sups) {
            py::dict d;
            for (const auto& [k, v] : sups) d[py::str(k)] = v;
            runs.append(d);
          }
          py::dict worst;
          for (const auto& [k, v] : res.worst) worst[py::str(k)] = v;
          out["per_run_sups"] = runs;
          out["worst"] = worst;
          return out;
        },
        py::arg("config_json"), py::arg("n_runs"), py::arg("seed"),
        "Monte Carlo sweep over uncertainty realizations");
}
