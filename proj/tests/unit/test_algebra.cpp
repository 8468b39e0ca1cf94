#include <cmath>

#include "doctest.h"
#include "ergolab/error.hpp"
#include "ergolab/group_algebra.hpp"
#include "ergolab/rng.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

AlgebraElement random_element(const GroupModel& g, CounterStream& s, int terms, std::int64_t r) {
  std::vector<Term> out;
  for (int i = 0; i < terms; ++i) {
    Element e;
    for (int k = 0; k < g.rank(); ++k) e.c[static_cast<std::size_t>(k)] = s.between(-r, r);
    if (g.kind() == GroupKind::kCyclic) e.c[0] = s.between(0, g.modulus() - 1);
    out.push_back(Term{e, s.uniform() * 2.0 - 1.0});
  }
  return AlgebraElement::from_terms(g, std::move(out));
}

const GroupModel kGroups[] = {GroupModel::lattice(1), GroupModel::lattice(2, true),
                              GroupModel::heisenberg(), GroupModel::cyclic(6)};

}  // namespace

TEST_CASE("convolution matches the naive double sum") {
  CounterStream s(5);
  for (const GroupModel& g : kGroups) {
    for (int trial = 0; trial < 40; ++trial) {
      const AlgebraElement f = random_element(g, s, 12, 4), h = random_element(g, s, 9, 4);
      const auto expected = oracle::convolve(g, oracle::to_map(f), oracle::to_map(h));
      CHECK(oracle::same(oracle::to_map(convolve(f, h)), expected, 1e-12));
    }
  }
}

TEST_CASE("convolution is associative and involution reverses order") {
  CounterStream s(6);
  for (const GroupModel& g : kGroups) {
    for (int trial = 0; trial < 20; ++trial) {
      const AlgebraElement a = random_element(g, s, 6, 3), b = random_element(g, s, 6, 3),
                           c = random_element(g, s, 6, 3);
      CHECK(approx_equal(convolve(convolve(a, b), c), convolve(a, convolve(b, c)), 1e-10));
      CHECK(approx_equal(involution(convolve(a, b)), convolve(involution(b), involution(a)), 1e-12));
      CHECK(approx_equal(involution(involution(a)), a));
    }
  }
}

TEST_CASE("young and triangle inequalities") {
  CounterStream s(7);
  for (const GroupModel& g : kGroups) {
    for (int trial = 0; trial < 30; ++trial) {
      const AlgebraElement a = random_element(g, s, 10, 5), b = random_element(g, s, 10, 5);
      const AlgebraElement ab = convolve(a, b);
      CHECK(lp_norm(ab, Norm::kOne) <= lp_norm(a, Norm::kOne) * lp_norm(b, Norm::kOne) + 1e-12);
      CHECK(lp_norm(ab, Norm::kTwo) <= lp_norm(a, Norm::kOne) * lp_norm(b, Norm::kTwo) + 1e-12);
      CHECK(lp_norm(ab, Norm::kInf) <= lp_norm(a, Norm::kTwo) * lp_norm(b, Norm::kTwo) + 1e-12);
      CHECK(lp_norm(a + b, Norm::kOne) <= lp_norm(a, Norm::kOne) + lp_norm(b, Norm::kOne) + 1e-12);
    }
  }
}

TEST_CASE("single coefficients agree with the full product") {
  CounterStream s(8);
  const GroupModel h = GroupModel::heisenberg();
  for (int trial = 0; trial < 30; ++trial) {
    const AlgebraElement a = random_element(h, s, 8, 2), b = random_element(h, s, 8, 2);
    const AlgebraElement ab = convolve(a, b);
    for (const Term& t : ab.terms()) {
      CHECK(convolution_coefficient(a, b, t.g) == doctest::Approx(t.coeff).epsilon(1e-12));
    }
  }
}

TEST_CASE("operator norm bound dominates right convolution on samples") {
  CounterStream s(9);
  for (const GroupModel& g : kGroups) {
    const AlgebraElement f = random_element(g, s, 8, 3);
    const double bound = op_norm_upper_bound(f, 3);
    for (int trial = 0; trial < 20; ++trial) {
      const AlgebraElement psi = random_element(g, s, 15, 6);
      CHECK(lp_norm(convolve(psi, f), Norm::kTwo) <= bound * lp_norm(psi, Norm::kTwo) * (1 + 1e-9));
    }
    // The bound decreases towards the true norm as M grows.
    CHECK(op_norm_upper_bound(f, 4) <= op_norm_upper_bound(f, 1) * (1 + 1e-12));
  }
}

TEST_CASE("self-adjoint powers match the oracle") {
  CounterStream s(10);
  const GroupModel h = GroupModel::heisenberg();
  const AlgebraElement f = random_element(h, s, 5, 2);
  const auto ff = oracle::convolve(h, oracle::involution(h, oracle::to_map(f)), oracle::to_map(f));
  CHECK(oracle::same(oracle::to_map(conv_power_selfadjoint(f, 1)), ff, 1e-12));
  CHECK(oracle::same(oracle::to_map(conv_power_selfadjoint(f, 2)), oracle::convolve(h, ff, ff), 1e-12));
}

TEST_CASE("zero sums are dropped and groups must match") {
  const GroupModel z = GroupModel::lattice(1);
  const AlgebraElement a = AlgebraElement::from_terms(z, {{make_element(2), 1.0}, {make_element(2), -1.0}});
  CHECK(a.empty());
  const AlgebraElement b = AlgebraElement::delta(z, make_element(1));
  CHECK_THROWS_AS(convolve(b, AlgebraElement::delta(GroupModel::heisenberg(), make_element(1))), UsageError);
  CHECK(inner_product(b, b) == 1.0);
}

TEST_CASE("support cap raises a resource error") {
  CounterStream s(12);
  const GroupModel z = GroupModel::lattice(2, true);
  const AlgebraElement a = random_element(z, s, 60, 100), b = random_element(z, s, 60, 100);
  CHECK_THROWS_AS(convolve(a, b, 100), ResourceError);
}
