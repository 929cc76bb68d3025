#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lri/bounds.hpp"
#include "lri/cli.hpp"
#include "lri/error.hpp"
#include "lri/geometry.hpp"
#include "lri/io.hpp"
#include "lri/matrices.hpp"
#include "lri/prooftrace.hpp"

namespace py = pybind11;
using namespace lri;

namespace {

py::dict contact_dict(const ContactSet& c) {
  py::dict d;
  d["indices"] = c.indices;
  d["signs"] = c.signs;
  d["weights"] = c.weights;
  d["weight_sum"] = c.weight_sum;
  d["residual"] = c.residual;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Low-rank approximations of the identity: constructions, bounds and proof replay.";

  // Translators run newest first, so the base class goes in before the subclasses.
  static py::exception<Error> base(m, "LriError", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ConstructionError>(m, "ConstructionError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<RankDeficiencyError>(m, "RankDeficiencyError", base.ptr());
  py::register_exception<NonconvergenceError>(m, "NonconvergenceError", base.ptr());
  py::register_exception<SizeError>(m, "SizeError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  py::class_<FactoredMatrix>(m, "FactoredMatrix")
      .def(py::init([](Matrix left, Matrix right) { return FactoredMatrix(std::move(left), std::move(right)); }),
           py::arg("left"), py::arg("right"))
      .def_property_readonly("N", &FactoredMatrix::n_dim)
      .def_property_readonly("n", &FactoredMatrix::rank_budget)
      .def_property_readonly("left", &FactoredMatrix::left)
      .def_property_readonly("right", &FactoredMatrix::right)
      .def_property_readonly("kind", [](const FactoredMatrix& a) { return std::string(to_string(a.provenance().kind)); })
      .def_property_readonly("seed", [](const FactoredMatrix& a) { return a.provenance().seed; })
      .def_property_readonly("parameters", [](const FactoredMatrix& a) { return a.provenance().parameters; })
      .def("dense", [](const FactoredMatrix& a) { return RowMatrix(a.dense()); })
      .def("__repr__", [](const FactoredMatrix& a) {
        std::ostringstream s;
        s << "<FactoredMatrix " << to_string(a.provenance().kind) << " N=" << a.n_dim() << " n=" << a.rank_budget() << ">";
        return s.str();
      });

  m.def("make_random_sign", &make_random_sign, py::arg("N"), py::arg("n"), py::arg("seed"));
  m.def("make_identity", &make_identity, py::arg("N"));
  m.def(
      "make_block_sparse",
      [](std::size_t N, std::size_t n, std::uint64_t seed, std::size_t block_size, const std::string& generator) {
        BlockSparseOptions o;
        o.block_size = block_size;
        o.generator = block_generator_from_string(generator);
        return make_block_sparse(N, n, seed, o);
      },
      py::arg("N"), py::arg("n"), py::arg("seed"), py::arg("block_size") = 0, py::arg("generator") = "auto");

  m.def("approx_error", &approx_error);
  m.def(
      "distribution_function",
      [](const FactoredMatrix& a, double gamma) {
        const DensityProfile p = distribution_function(a, gamma);
        py::dict d;
        d["gamma"] = p.gamma;
        d["global_density"] = p.global_density;
        d["column_densities"] = p.column_densities;
        d["nnz_fraction"] = p.nnz_fraction;
        return d;
      },
      py::arg("A"), py::arg("gamma"));
  m.def("numerical_rank", &numerical_rank, py::arg("A"), py::arg("tol") = 1e-10);
  m.def("singular_values", &singular_values);

  m.def("encode_irlm", [](const FactoredMatrix& a) { return py::bytes(encode_irlm(a)); });
  m.def("decode_irlm", [](const py::bytes& b) { return decode_irlm(std::string(b)); });
  m.def("write_irlm", [](const std::string& path, const FactoredMatrix& a) { write_irlm(path, a); });
  m.def("read_irlm", [](const std::string& path) { return read_irlm(path); });

  m.def(
      "rank_factorize",
      [](const FactoredMatrix& a, double tol) {
        const Subspace s = rank_factorize(a, tol);
        return py::make_tuple(s.basis, s.coords);
      },
      py::arg("A"), py::arg("tol") = 1e-10);
  m.def(
      "mvee",
      [](const Matrix& points, double tol) {
        const MveeResult r = mvee(points, tol);
        py::dict d;
        d["shape"] = r.ellipsoid.shape();
        d["log_det"] = r.ellipsoid.log_det();
        d["contacts"] = contact_dict(r.contacts);
        d["design"] = r.design;
        d["iterations"] = r.iterations;
        d["gap"] = r.gap;
        d["max_containment"] = r.max_containment;
        return d;
      },
      py::arg("points"), py::arg("tol") = 1e-7);
  m.def(
      "contact_points",
      [](const Matrix& shape, const Matrix& points, double tol) { return contact_dict(contact_points(Ellipsoid(shape), points, tol)); },
      py::arg("shape"), py::arg("points"), py::arg("tol"));
  m.def(
      "l1_lower_constant",
      [](const Matrix& contacts, const Matrix& shape, const std::string& method) {
        if (method != "exact" && method != "sampled") throw ParameterError("method must be exact or sampled");
        const L1Constant c =
            l1_lower_constant(contacts, Ellipsoid(shape), method == "exact" ? L1Method::exact : L1Method::sampled);
        py::dict d;
        d["mu"] = c.mu;
        d["c_hat"] = c.c_hat;
        d["mu_lower"] = c.mu_lower;
        d["certified"] = c.certified;
        d["minimizer"] = c.minimizer;
        return d;
      },
      py::arg("contacts"), py::arg("shape"), py::arg("method") = "exact");
  m.def(
      "auerbach_basis",
      [](const Matrix& points, double delta) {
        const AuerbachBasis b = auerbach_basis(points, delta);
        py::dict d;
        d["indices"] = b.indices;
        d["signs"] = b.signs;
        d["coefficient_bound"] = b.coefficient_bound;
        d["abs_det"] = b.abs_det;
        d["swaps"] = b.swaps;
        return d;
      },
      py::arg("points"), py::arg("delta") = 0.01);

  m.def("probabilistic_upper_bound", &probabilistic_upper_bound, py::arg("N"), py::arg("n"));
  m.def("volume_rank_lower_bound", &volume_rank_lower_bound, py::arg("N"));
  m.def("theorem_density_bound", &theorem_density_bound, py::arg("N"), py::arg("n"), py::arg("c"));
  m.def("gamma_threshold", &gamma_threshold, py::arg("N"), py::arg("n"), py::arg("c"));
  m.def("turan_edge_bound", &turan_edge_bound, py::arg("N"), py::arg("M"));
  m.def("implied_density_lower", &implied_density_lower, py::arg("N"), py::arg("M"));
  m.def("width_incompressibility_M", &width_incompressibility_M, py::arg("n"), py::arg("gamma"));
  m.def("volume_argument_verify", [](const FactoredMatrix& a) {
    const VolumeReport r = volume_argument_verify(a);
    py::dict d;
    d["premise_ok"] = r.premise_ok;
    d["error"] = r.error;
    d["separated"] = r.separated;
    d["diameter_ok"] = r.diameter_ok;
    d["rank_ok"] = r.rank_ok;
    d["required_rank"] = r.required_rank;
    d["violations"] = r.violations;
    return d;
  });
  m.def(
      "max_clique",
      [](const FactoredMatrix& a, double gamma, std::size_t cap) {
        const GammaGraph g = gamma_graph(a, gamma);
        return py::make_tuple(max_clique(g, cap), g.edge_count());
      },
      py::arg("A"), py::arg("gamma"), py::arg("vertex_cap") = default_vertex_cap,
      "Maximum clique of the gamma graph of A, and the graph's edge count.");

  m.def(
      "trace_json",
      [](const FactoredMatrix& a, double gamma, const std::string& basis, std::optional<double> manual_eps,
         double C, double C1, double mvee_tol) {
        TraceConfig cfg;
        cfg.gamma = gamma;
        cfg.basis = basis_mode_from_string(basis);
        if (manual_eps) {
          cfg.eps_rule = EpsRule::manual;
          cfg.manual_eps = manual_eps;
        }
        cfg.C = C;
        cfg.C1 = C1;
        cfg.mvee_tol = mvee_tol;
        py::gil_scoped_release release;
        return to_json(trace(a, cfg));
      },
      py::arg("A"), py::arg("gamma"), py::arg("basis") = "lemmaA", py::arg("manual_eps") = py::none(),
      py::arg("C") = 1.0, py::arg("C1") = 1.0, py::arg("mvee_tol") = 1e-6);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"lri"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
