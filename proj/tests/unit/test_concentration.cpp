#include <cmath>
#include <set>

#include "doctest.h"
#include "ergolab/concentration.hpp"
#include "ergolab/error.hpp"
#include "ergolab/rng.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

// E ||(X~ * X)^M||_2^2 by enumerating every outcome with naive convolution.
double moment_oracle(const CenteredField& field, unsigned m) {
  const GroupModel& g = field.group();
  const std::size_t n = field.size();
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double pr = 1.0;
    oracle::Coeffs x;
    for (std::size_t i = 0; i < n; ++i) {
      const double t = field.tau()[i];
      const bool on = (mask >> i) & 1u;
      pr *= on ? t : 1.0 - t;
      x[field.support()[i].c] += (on ? 1.0 : 0.0) - t;
    }
    const oracle::Coeffs base = oracle::convolve(g, oracle::involution(g, x), x);
    oracle::Coeffs power = base;
    for (unsigned k = 1; k < m; ++k) power = oracle::convolve(g, power, base);
    total += pr * oracle::l2_squared(power);
  }
  return total;
}

std::vector<Element> random_support(const GroupModel& g, CounterStream& s, std::size_t n) {
  std::set<Element> out;
  while (out.size() < n) {
    Element e;
    for (int k = 0; k < g.rank(); ++k) e.c[static_cast<std::size_t>(k)] = s.between(-8, 8);
    if (g.kind() == GroupKind::kCyclic) e.c[0] = s.between(0, g.modulus() - 1);
    out.insert(e);
  }
  return {out.begin(), out.end()};
}

}  // namespace

TEST_CASE("partition counts match the recursion") {
  for (unsigned n = 0; n <= 16; ++n) CHECK(partition_count(n) == oracle::no_singleton_partitions(n));
  CHECK(partition_count(4) == 4);
  CHECK(partition_count(8) == 715);
}

TEST_CASE("exact moments match outcome enumeration") {
  CounterStream s(1);
  for (const GroupModel& g : {GroupModel::lattice(1), GroupModel::heisenberg()}) {
    for (unsigned m : {1u, 2u}) {
      for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> tau;
        auto support = random_support(g, s, 6);
        for (std::size_t i = 0; i < support.size(); ++i) tau.push_back(0.1 + 0.8 * s.uniform());
        const CenteredField field(g, support, tau);
        CHECK(moment_exact_small(field, m) == doctest::Approx(moment_oracle(field, m)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("monte carlo moments agree with the exact value") {
  CounterStream s(2);
  const GroupModel g = GroupModel::heisenberg();
  const CenteredField field = CenteredField::with_constant(g, random_support(g, s, 8), 0.4);
  const double exact = moment_exact_small(field, 1);
  const MomentEstimate e = moment_bound_mc(field, 1, 20000, 3, 2);
  CHECK(std::abs(e.estimate - exact) <= 4 * e.standard_error);
  CHECK(e.partition_bound == 4);
  CHECK(e.bound_applies == (field.variance_sum() >= 1.0));
  if (e.bound_applies) CHECK(exact <= 4 * std::pow(field.variance_sum(), 2.0));
  CHECK_THROWS_AS(moment_bound_mc(field, 1, 50, 3), UsageError);
}

TEST_CASE("monte carlo results are independent of the worker count") {
  CounterStream s(3);
  const GroupModel g = GroupModel::lattice(1);
  const CenteredField field = CenteredField::with_constant(g, random_support(g, s, 7), 0.3);
  const MomentEstimate a = moment_bound_mc(field, 2, 3000, 8, 1), b = moment_bound_mc(field, 2, 3000, 8, 3);
  CHECK(a.estimate == b.estimate);
  CHECK(a.standard_error == b.standard_error);
}

TEST_CASE("shift graph colorings are valid") {
  CounterStream s(4);
  const GroupModel groups[] = {GroupModel::lattice(1), GroupModel::lattice(2), GroupModel::heisenberg(),
                               GroupModel::cyclic(9)};
  for (const GroupModel& g : groups) {
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t cap = g.kind() == GroupKind::kCyclic ? static_cast<std::size_t>(g.modulus()) : 12;
      const auto e = random_support(g, s, 1 + s.below(cap));
      Element h;
      do {
        for (int k = 0; k < g.rank(); ++k) h.c[static_cast<std::size_t>(k)] = s.between(-2, 2);
        if (g.kind() == GroupKind::kCyclic) h.c[0] = s.between(0, g.modulus() - 1);
      } while (g.is_identity(h));
      const ColoringPartition p = shift_graph_coloring(g, e, h);
      CHECK(p.classes.size() <= 3);
      CHECK(coloring_is_valid(g, e, p));
    }
  }
}

TEST_CASE("odd cycles need three colors") {
  for (std::int64_t q : {3, 5, 7, 9}) {
    const GroupModel g = GroupModel::cyclic(q);
    std::vector<Element> all;
    for (std::int64_t r = 0; r < q; ++r) all.push_back(make_element(r));
    const ColoringPartition p = shift_graph_coloring(g, all, make_element(1));
    CHECK(p.classes.size() == 3);
    CHECK(coloring_is_valid(g, all, p));
  }
  const GroupModel even = GroupModel::cyclic(6);
  std::vector<Element> all;
  for (std::int64_t r = 0; r < 6; ++r) all.push_back(make_element(r));
  CHECK(shift_graph_coloring(even, all, make_element(1)).classes.size() == 2);
  CHECK_THROWS_AS(shift_graph_coloring(even, all, make_element(0)), UsageError);
}

TEST_CASE("a coloring with a shared variable is rejected") {
  const GroupModel g = GroupModel::lattice(1);
  const std::vector<Element> e{make_element(0), make_element(1), make_element(2)};
  ColoringPartition bad;
  bad.h = make_element(1);
  bad.classes = {{make_element(0), make_element(1)}};
  CHECK_FALSE(coloring_is_valid(g, e, bad));
}

TEST_CASE("chernoff tails stay below the displayed bound") {
  CounterStream s(5);
  const GroupModel g = GroupModel::lattice(1);
  const CenteredField field = CenteredField::with_constant(g, random_support(g, s, 12), 0.5);
  const ChernoffReport r = chernoff_tail_check(field, 3.0, 5000, 9, 2);
  CHECK(r.pass);
  CHECK(r.bound == doctest::Approx(6.0 * 144 * std::max(std::exp(-9.0 / 36), std::exp(-0.5))));
  CHECK(r.vacuous == (r.bound >= 1.0));
}

TEST_CASE("nu coefficients at the identity") {
  const auto rows = nu_conv_bound_check(GroupModel::lattice(1), TauProfile::power_law(0.4), 4, 8, 0.1, 1);
  REQUIRE(rows.size() == 5);
  for (const NuBoundRow& r : rows) {
    CHECK(r.identity == doctest::Approx(r.identity_formula).epsilon(1e-12));
    CHECK(r.identity_ratio == doctest::Approx(r.identity * r.beta / 3.0).epsilon(1e-12));
  }
}

TEST_CASE("near optimality exact term is the variance product sum") {
  const NearOptimality n = near_optimality_estimate(GroupModel::lattice(1), 0.4, 5, make_element(3), 4000, 2, 2);
  const TauProfile p = TauProfile::power_law(0.4);
  double b = beta_interval(32, p), sum = 0.0;
  for (int g = 0; g + 3 <= 32; ++g) {
    const double v1 = p(g) * (1 - p(g)), v2 = p(g + 3) * (1 - p(g + 3));
    sum += v1 * v2;
  }
  CHECK(n.exact == doctest::Approx(sum / std::pow(b, 4)).epsilon(1e-9));
  CHECK(std::abs(n.estimate - n.exact) <= 5 * n.standard_error + 1e-15);
}

TEST_CASE("tail schedule precondition") {
  const TailReport r = borel_cantelli_tail_report(GroupModel::lattice(1), 0.4, 2, 0.1, 2, 6, 4, 1);
  CHECK(r.precondition);  // 1 * 3 > 4 * 0.4
  CHECK(r.rows.size() == 5);
  for (const TailRow& row : r.rows) CHECK(row.lambda == doctest::Approx(std::pow(row.j, -2.2)));
  const TailReport q = borel_cantelli_tail_report(GroupModel::lattice(1), 0.6, 1, 0.1, 2, 4, 3, 1);
  CHECK_FALSE(q.precondition);  // 1 * 1 > 2 * 0.6 fails
}
