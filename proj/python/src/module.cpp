#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <filesystem>
#include <sstream>

#include "becmf/io.hpp"

namespace py = pybind11;
using namespace becmf;

namespace {

RunConfig config_from(const std::string& text, const std::string& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc, base_dir);
}

std::string dump(const Json& j) { return j.dump(); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "condensate / thermal cloud solvers";

  // Exception args are (message, kind) and (message, key).
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> base_store;
  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> config_store;
  base_store.call_once_and_store_result(
      [&]() { return py::object(py::reinterpret_steal<py::object>(PyErr_NewException("becmf._core.BecError", PyExc_RuntimeError, nullptr))); });
  config_store.call_once_and_store_result([&]() {
    return py::object(py::reinterpret_steal<py::object>(
        PyErr_NewException("becmf._core.ConfigError", base_store.get_stored().ptr(), nullptr)));
  });
  m.attr("BecError") = base_store.get_stored();
  m.attr("ConfigError") = config_store.get_stored();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      PyErr_SetObject(config_store.get_stored().ptr(), py::make_tuple(e.what(), e.key()).ptr());
    } catch (const Error& e) {
      PyErr_SetObject(base_store.get_stored().ptr(), py::make_tuple(e.what(), to_string(e.kind())).ptr());
    }
  });

  m.def("normalize_config", [](const std::string& text, const std::string& base_dir) {
    return dump(to_json(config_from(text, base_dir)));
  }, py::arg("config"), py::arg("base_dir") = "");

  m.def("stationary", [](const std::string& text, const std::string& base_dir) {
    const RunConfig c = config_from(text, base_dir);
    py::gil_scoped_release nogil;
    return dump(to_json(scf_solve(c.scf)));
  }, py::arg("config"), py::arg("base_dir") = "");

  m.def("full_eps", [](const std::string& text, double eps, const std::string& base_dir) {
    const RunConfig c = config_from(text, base_dir);
    py::gil_scoped_release nogil;
    return dump(to_json(full_epsilon_solve(c.scf, eps)));
  }, py::arg("config"), py::arg("epsilon"), py::arg("base_dir") = "");

  m.def("expand", [](const std::string& text, int order, const std::string& base_dir) {
    const RunConfig c = config_from(text, base_dir);
    py::gil_scoped_release nogil;
    return dump(to_json(expand(c.scf, order, c.expansion)));
  }, py::arg("config"), py::arg("order") = 2, py::arg("base_dir") = "");

  m.def("sweep", [](const std::string& text, std::vector<double> eps, const std::string& base_dir) {
    RunConfig c = config_from(text, base_dir);
    if (!eps.empty()) c.sweep.epsilons = std::move(eps);
    py::gil_scoped_release nogil;
    return dump(to_json(run_sweep(c.scf, c.sweep)));
  }, py::arg("config"), py::arg("epsilons") = std::vector<double>{}, py::arg("base_dir") = "");

  m.def("evolve", [](const std::string& text, std::optional<double> t_final, std::optional<double> dt,
                     const std::string& base_dir) {
    RunConfig c = config_from(text, base_dir);
    if (t_final) c.dynamics.t_final = *t_final;
    if (dt) c.dynamics.dt = *dt;
    py::gil_scoped_release nogil;
    const Trajectory tr = evolve(scf_solve(c.scf), c.dynamics);
    std::ostringstream csv;
    write_observables_csv(csv, tr.rows);
    return std::make_pair(dump(to_json(tr)), csv.str());
  }, py::arg("config"), py::arg("t_final") = py::none(), py::arg("dt") = py::none(), py::arg("base_dir") = "");

  m.def("h_minus_one_norm_sq", [](const std::string& micro, int dim) {
    const Microstructure ms = parse_microstructure(Json::parse(micro), dim);
    return std::make_pair(h_minus_one_norm_sq(ms), h_minus_one_norm_sq_quadrature(ms));
  }, py::arg("microstructure"), py::arg("dim") = 1);

  m.def("occupation", &occupation, py::arg("z"), py::arg("beta"), py::arg("mu_j"));

  m.def("solve_thermo", [](double beta, double N, double mu, const std::vector<double>& mu_j) {
    ThermoParams p{beta, N, static_cast<int>(mu_j.size())};
    const ThermoState s = solve_xi_z_order0(p, mu, mu_j);
    py::dict d;
    d["xi"] = s.xi;
    d["log_z"] = s.log_z;
    d["n_j"] = s.n;
    d["constraint_residual"] = s.constraint_residual(N);
    return d;
  }, py::arg("beta"), py::arg("N"), py::arg("mu"), py::arg("mu_j"));

  m.def("lowest_eigenpairs", [](int dim, double half_width, int points, const Eigen::VectorXd& potential, int count) {
    const Grid g = build_grid(dim, half_width, points);
    const EigenResult r = eigensolve_lowest(build_hamiltonian(g, potential), count);
    Eigen::MatrixXd vecs(static_cast<Eigen::Index>(g.size()), count);
    for (int k = 0; k < count; ++k) vecs.col(k) = r.vectors[static_cast<std::size_t>(k)].values();
    return std::make_pair(r.values, vecs);
  }, py::arg("dim"), py::arg("half_width"), py::arg("points"), py::arg("potential"), py::arg("count"));

  m.def("node_coordinates", [](double half_width, int points) {
    const Grid g = build_grid(1, half_width, points);
    Eigen::VectorXd x(points);
    for (int i = 0; i < points; ++i) x[i] = g.coordinate(i);
    return x;
  }, py::arg("half_width"), py::arg("points"));
}
