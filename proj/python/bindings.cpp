#include <array>

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "itep/cli.hpp"
#include "itep/oracle_1d.hpp"
#include "itep/pencil_spectra.hpp"
#include "itep/resolvent_analysis.hpp"

namespace py = pybind11;
using namespace itep;

namespace {

MediumProfile constant_profile(const std::string& kind, double q) {
  MediumProfile p;
  p.kind = parse_kind(kind);
  p.q.data = {q};
  return p;
}

BoundaryPair pair(const std::pair<int, int>& bc) {
  BoundaryPair b{bc.first, bc.second};
  validate(b);
  return b;
}

}  // namespace

PYBIND11_MODULE(_itep, m) {
  m.doc() = "Quadratic operator pencils of interior transmission type";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "ItepError", PyExc_RuntimeError);

  m.def(
      "run_cli", [](const std::vector<std::string>& args) { return cli::run(args); }, py::arg("args"),
      "Runs one CLI subcommand in-process and returns its exit code.");

  m.def(
      "principal_symbol",
      [](const std::string& kind, double q, double xi_sq, cplx lambda) {
        return principal_symbol(parse_kind(kind), {q, xi_sq, lambda});
      },
      py::arg("kind"), py::arg("q"), py::arg("xi_sq"), py::arg("lam"));

  m.def(
      "condition1_roots",
      [](const std::string& kind, double q, double xi_sq) {
        const auto r = condition1_roots(parse_kind(kind), q, xi_sq);
        return std::vector<cplx>(r.begin(), r.end());
      },
      py::arg("kind"), py::arg("q"), py::arg("xi_sq"));

  py::class_<DiscretePencil>(m, "Pencil")
      .def_property_readonly("dim", &DiscretePencil::dim)
      .def("resolvent_norm", [](const DiscretePencil& p, cplx l) { return resolvent_norm(p, l); }, py::arg("lam"));

  m.def(
      "assemble",
      [](const std::string& kind, double q, std::pair<int, int> bc, int n, double a, double b) {
        return assemble_pencil(constant_profile(kind, q), make_grid(a, b, n), pair(bc));
      },
      py::arg("kind"), py::arg("q"), py::arg("bc"), py::arg("n") = 64, py::arg("a") = 0.0, py::arg("b") = 1.0,
      "Constant-q pencil on (a, b).");

  m.def(
      "eigenvalues",
      [](const std::string& kind, double q, std::pair<int, int> bc, int n, int n_ref) {
        const MediumProfile prof = constant_profile(kind, q);
        const DiscretePencil P = assemble_pencil(prof, make_grid(0, 1, n), pair(bc));
        EigenOptions opt;
        if (n_ref > 0)
          opt.reference = std::make_shared<const DiscretePencil>(assemble_pencil(prof, make_grid(0, 1, n_ref), pair(bc)));
        py::list out;
        {
          py::gil_scoped_release release;
          const EigenSolution eig = eigen(linearize(P), opt);
          py::gil_scoped_acquire acquire;
          for (const auto& c : eig.clusters)
            out.append(py::dict(py::arg("lam") = c.lambda, py::arg("multiplicity") = c.multiplicity,
                                py::arg("chain_length") = c.chain_length(), py::arg("residual") = c.residual,
                                py::arg("trusted") = c.trusted));
        }
        return out;
      },
      py::arg("kind"), py::arg("q"), py::arg("bc"), py::arg("n") = 64, py::arg("n_ref") = 0,
      "Eigenvalue clusters on (0, 1), sorted by distance to the reference point.");

  m.def(
      "find_roots",
      [](const std::string& kind, double q, std::pair<int, int> bc, double L, std::array<double, 4> rect) {
        const CharacteristicFunction cf{parse_kind(kind), q, L, pair(bc)};
        std::vector<std::pair<cplx, int>> out;
        for (const auto& r : find_roots(cf, {rect[0], rect[1], rect[2], rect[3]})) out.emplace_back(r.lambda, r.multiplicity);
        return out;
      },
      py::arg("kind"), py::arg("q"), py::arg("bc"), py::arg("L"), py::arg("rect"),
      "Roots of the characteristic function in [re0, re1] x [im0, im1] with multiplicities.");

  m.def(
      "torus_embedding_sum",
      [](int n, double p, long long cutoff) {
        const TorusSum s = torus_embedding_sum(n, p, cutoff);
        return std::make_pair(s.partial, s.tail_bound);
      },
      py::arg("n"), py::arg("p"), py::arg("cutoff"));
}
