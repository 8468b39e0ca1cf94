#include <memory>
#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ergolab/cli.hpp"
#include "ergolab/concentration.hpp"
#include "ergolab/cz_maximal.hpp"
#include "ergolab/dynamics.hpp"
#include "ergolab/error.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/selectors.hpp"
#include "ergolab/selftest.hpp"

namespace py = pybind11;
using namespace ergolab;

namespace {

std::vector<std::int64_t> to_vector(const IntSequence& s) { return {s.values().begin(), s.values().end()}; }

std::vector<std::int64_t> coords(const GroupModel& g, const Element& e) {
  const std::size_t n = g.kind() == GroupKind::kCyclic ? 1 : static_cast<std::size_t>(g.rank());
  return {e.c.begin(), e.c.begin() + static_cast<std::ptrdiff_t>(n)};
}

Element from_coords(const std::vector<std::int64_t>& v) {
  if (v.size() > kMaxCoords) throw UsageError("at most 4 coordinates");
  Element e;
  for (std::size_t i = 0; i < v.size(); ++i) e.c[i] = v[i];
  return e;
}

}  // namespace

PYBIND11_MODULE(_ergolab, m) {
  m.doc() = "Random sparse ergodic averages on groups of polynomial growth";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
  py::register_exception<UndefinedError>(m, "UndefinedError", base.ptr());
  py::register_exception<OutOfRangeError>(m, "OutOfRangeError", base.ptr());

  py::class_<GroupModel>(m, "Group")
      .def(py::init([](const std::string& spec) { return make_group(spec); }), py::arg("spec"))
      .def("describe", &GroupModel::describe)
      .def_property_readonly("growth_degree", &GroupModel::growth_degree)
      .def_property_readonly("symmetric", &GroupModel::symmetric)
      .def("multiply", [](const GroupModel& g, const std::vector<std::int64_t>& a,
                          const std::vector<std::int64_t>& b) {
        return coords(g, g.multiply(from_coords(a), from_coords(b)));
      })
      .def("inverse", [](const GroupModel& g, const std::vector<std::int64_t>& a) {
        return coords(g, g.inverse(from_coords(a)));
      })
      .def("word_length", [](const GroupModel& g, const std::vector<std::int64_t>& a) {
        return word_length(g, from_coords(a));
      })
      .def("__repr__", [](const GroupModel& g) { return "Group('" + g.describe() + "')"; });

  m.def(
      "ball",
      [](const GroupModel& g, std::uint32_t radius, std::size_t cap) {
        const Ball b = word_ball(g, radius, cap);
        py::list out;
        for (std::size_t i = 0; i < b.size(); ++i) {
          out.append(py::make_tuple(coords(g, b.elements()[i]), b.lengths()[i]));
        }
        return out;
      },
      py::arg("group"), py::arg("radius"), py::arg("cap") = kDefaultBallCap,
      "Elements of S_N with their word lengths, in breadth-first order.");
  m.def("sphere_sizes", &sphere_sizes, py::arg("group"), py::arg("radius"), py::arg("cap") = kDefaultBallCap);

  py::class_<TauProfile>(m, "Profile")
      .def(py::init([](const std::string& spec) { return parse_profile(spec); }), py::arg("spec"))
      .def_static("power_law", &TauProfile::power_law, py::arg("alpha"))
      .def("__call__", &TauProfile::operator(), py::arg("n"))
      .def("describe", &TauProfile::describe)
      .def("__repr__", [](const TauProfile& p) { return "Profile('" + p.describe() + "')"; });

  m.def("beta_interval", &beta_interval, py::arg("n"), py::arg("profile"));
  m.def(
      "sample_sequence",
      [](const TauProfile& p, std::uint64_t limit, std::uint64_t seed) {
        return to_vector(sample_sequence(p, limit, seed));
      },
      py::arg("profile"), py::arg("limit"), py::arg("seed"));
  m.def(
      "banach_density",
      [](const std::vector<std::int64_t>& seq, std::uint64_t window, std::uint64_t nmax) {
        return banach_density_windowed(IntSequence(seq), window, nmax);
      },
      py::arg("sequence"), py::arg("window"), py::arg("nmax"));
  m.def(
      "block_sequence",
      [](const std::string& growth, unsigned jmax, std::uint64_t max_elements) {
        const BlockSequence bs = block_sequence(parse_growth(growth), jmax, BlockOptions{max_elements});
        std::vector<std::pair<std::int64_t, std::int64_t>> blocks;
        for (const Block& b : bs.blocks) blocks.emplace_back(b.v, b.w);
        return py::make_tuple(blocks, to_vector(bs.sequence), bs.truncated);
      },
      py::arg("growth"), py::arg("jmax"), py::arg("max_elements") = 10'000'000,
      "(blocks as [v, w) pairs, sequence, truncated)");
  m.def(
      "block_probability",
      [](const TauProfile& p, unsigned r, unsigned k, std::uint64_t n) {
        const BlockProbability b = block_probability_bounds(p, r, k, n);
        return py::make_tuple(b.lower, b.exact, b.upper);
      },
      py::arg("profile"), py::arg("r"), py::arg("m"), py::arg("n"), "(lower, exact, upper)");

  m.def(
      "random_average",
      [](const std::string& system, const std::string& observable, double x, std::uint32_t radius,
         const TauProfile& p, std::uint64_t seed) {
        const DynSystem sys = make_system(system);
        const Observable f = make_observable(sys, observable);
        auto ball = std::make_shared<const Ball>(word_ball(sys.group(), radius));
        Point pt;
        pt.x[0] = x;
        return random_average(sys, f, pt, sample_field(ball, p, seed));
      },
      py::arg("system"), py::arg("observable"), py::arg("x"), py::arg("radius"), py::arg("profile"),
      py::arg("seed"));

  m.def("partition_count", &partition_count, py::arg("n"));
  m.def(
      "moment_exact",
      [](const GroupModel& g, const std::vector<std::vector<std::int64_t>>& support,
         const std::vector<double>& tau, unsigned order) {
        std::vector<Element> e;
        for (const auto& c : support) e.push_back(from_coords(c));
        return moment_exact_small(CenteredField(g, std::move(e), tau), order);
      },
      py::arg("group"), py::arg("support"), py::arg("tau"), py::arg("m"));

  m.def(
      "cz_check",
      [](const std::vector<std::pair<std::vector<std::int64_t>, double>>& phi, double lambda) {
        if (phi.empty()) throw UsageError("phi must be nonempty");
        const GroupModel g = GroupModel::lattice(static_cast<int>(phi.front().first.size()), true);
        std::vector<Term> terms;
        for (const auto& [c, v] : phi) terms.push_back({from_coords(c), v});
        const AlgebraElement f = AlgebraElement::from_terms(g, std::move(terms));
        const CZDecomposition d = cz_decompose(f, lambda);
        const CZCheck c = check_invariants(d, f, d.constant, 1e-9);
        py::dict out;
        out["bad_cubes"] = d.bad.size();
        out["recombines"] = c.recombines;
        out["good_bounded"] = c.good_bounded;
        out["pieces_bounded"] = c.pieces_bounded;
        out["disjoint"] = c.disjoint;
        out["measure_bounded"] = c.measure_bounded;
        return out;
      },
      py::arg("phi"), py::arg("lambda_"), "Decomposes phi on Z^d and reports each invariant.");

  m.def("selftest", []() {
    std::vector<std::pair<std::string, bool>> out;
    for (const SelfCheck& c : selftest_checks()) {
      bool ok = false;
      try {
        ok = c.run();
      } catch (const std::exception&) {
        ok = false;
      }
      out.emplace_back(c.name, ok);
    }
    return out;
  });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "(exit code, stdout, stderr) of the ergolab command line.");
}
