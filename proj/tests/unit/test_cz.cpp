#include <cmath>

#include "doctest.h"
#include "ergolab/cz_maximal.hpp"
#include "ergolab/error.hpp"
#include "ergolab/rng.hpp"
#include "oracles.hpp"

using namespace ergolab;

namespace {

AlgebraElement random_phi(int d, CounterStream& s) {
  const GroupModel g = GroupModel::lattice(d, true);
  std::vector<Term> terms;
  const int n = 1 + static_cast<int>(s.below(25));
  const std::int64_t span = 2 + static_cast<std::int64_t>(s.below(60));
  for (int i = 0; i < n; ++i) {
    Element e;
    for (int k = 0; k < d; ++k) e.c[static_cast<std::size_t>(k)] = s.between(-span, span);
    terms.push_back({e, (s.uniform() * 2 - 1) * std::pow(10.0, s.uniform() * 2)});
  }
  return AlgebraElement::from_terms(g, terms);
}

bool cubes_overlap(const DyadicCube& a, const DyadicCube& b) {
  const DyadicCube& big = a.level >= b.level ? a : b;
  const DyadicCube& small = a.level >= b.level ? b : a;
  const unsigned shift = big.level - small.level;
  for (int k = 0; k < a.dimension; ++k) {
    const auto i = static_cast<std::size_t>(k);
    if ((small.index[i] >> shift) != big.index[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("cube primitives") {
  const DyadicCube q = cube_of(make_element(-3, 5), 2, 2);
  CHECK(q.index[0] == -1);
  CHECK(q.index[1] == 1);
  CHECK(q.volume() == 16);
  CHECK(q.contains(make_element(-4, 7)));
  CHECK_FALSE(q.contains(make_element(0, 5)));
  CHECK(q.contains(cube_of(make_element(-3, 5), 0, 2)));
  CHECK(q.distance(make_element(2, 5)) == 3);
  const std::vector<Element> region{make_element(0), make_element(1), make_element(9)};
  CHECK(dyadic_cover(2, region, 1).size() == 2);
  CHECK(stopping_level(1.0) == 0);
  CHECK(stopping_level(5.0) == 3);
  CHECK(stopping_level(8.0) == 3);
}

TEST_CASE("calderon zygmund invariants on random inputs") {
  CounterStream s(13);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + trial % 2;
    const AlgebraElement phi = random_phi(d, s);
    const double l1 = lp_norm(phi, Norm::kOne);
    const double lambda = l1 * std::pow(2.0, -1.0 - 8.0 * s.uniform());
    const CZDecomposition dec = cz_decompose(phi, lambda);
    REQUIRE(dec.constant == std::pow(2.0, d + 1));

    oracle::Coeffs total = oracle::to_map(dec.good);
    double measure = 0.0;
    for (std::size_t i = 0; i < dec.bad.size(); ++i) {
      const BadPiece& b = dec.bad[i];
      for (const auto& [k, v] : oracle::to_map(b.piece)) total[k] += v;
      for (const Term& t : b.piece.terms()) CHECK(b.cube.contains(t.g));
      double sum = 0.0;
      for (const Term& t : b.piece.terms()) sum += t.coeff;
      CHECK(std::abs(sum) <= 1e-9 * std::max(1.0, l1));
      CHECK(lp_norm(b.piece, Norm::kOne) <= lambda * static_cast<double>(b.cube.volume()) * (1 + 1e-12));
      measure += static_cast<double>(b.cube.volume());
      for (std::size_t j = 0; j < i; ++j) CHECK_FALSE(cubes_overlap(b.cube, dec.bad[j].cube));
    }
    CHECK(oracle::same(total, oracle::to_map(phi), 1e-9));
    CHECK(lp_norm(dec.good, Norm::kInf) <= std::pow(2.0, d) * lambda * (1 + 1e-12));
    CHECK(measure <= dec.constant / lambda * l1 * (1 + 1e-12));
    CHECK(check_invariants(dec, phi, dec.constant, 1e-9).all());
  }
}

TEST_CASE("bounded inputs produce no bad cubes") {
  CounterStream s(14);
  const GroupModel g = GroupModel::lattice(1, true);
  std::vector<Term> terms;
  for (int i = 0; i < 50; ++i) terms.push_back({make_element(i), 0.5 + 0.5 * s.uniform()});
  const AlgebraElement phi = AlgebraElement::from_terms(g, terms);
  const CZDecomposition dec = cz_decompose(phi, 1.0);
  CHECK(dec.bad.empty());
  CHECK(approx_equal(dec.good, phi));
}

TEST_CASE("a tall spike is isolated") {
  const GroupModel g = GroupModel::lattice(1, true);
  const AlgebraElement phi = AlgebraElement::delta(g, make_element(5), 100.0);
  const CZDecomposition dec = cz_decompose(phi, 1.0);
  REQUIRE(dec.bad.size() == 1);
  CHECK(dec.bad.front().cube.contains(make_element(5)));
  CHECK(check_invariants(dec, phi, dec.constant).all());
}

TEST_CASE("invariant checker flags a broken decomposition") {
  const GroupModel g = GroupModel::lattice(1, true);
  const AlgebraElement phi = AlgebraElement::delta(g, make_element(0), 50.0);
  CZDecomposition dec = cz_decompose(phi, 1.0);
  dec.good = dec.good + AlgebraElement::delta(g, make_element(3), 1.0);
  CHECK_FALSE(check_invariants(dec, phi, dec.constant).recombines);
}

TEST_CASE("cz rejects non lattice input and bad heights") {
  const AlgebraElement h = AlgebraElement::delta(GroupModel::heisenberg(), make_element(1), 1.0);
  CHECK_THROWS_AS(cz_decompose(h, 1.0), UsageError);
  const AlgebraElement z = AlgebraElement::delta(GroupModel::lattice(1), make_element(1), 1.0);
  CHECK_THROWS(cz_decompose(z, 0.0));
}

TEST_CASE("bad part split by threshold") {
  const GroupModel g = GroupModel::lattice(1, true);
  std::vector<Term> terms{{make_element(0), 40.0}, {make_element(1), 2.0}, {make_element(40), -30.0}};
  const AlgebraElement phi = AlgebraElement::from_terms(g, terms);
  const CZDecomposition dec = cz_decompose(phi, 1.0);
  const BadSplit split = split_bad(dec, 3, 4.0, 1.0);
  for (std::size_t i = 0; i < dec.bad.size(); ++i) {
    CHECK(approx_equal(split.small[i] + split.large[i], dec.bad[i].piece));
    for (const Term& t : split.small[i].terms()) CHECK(std::abs(t.coeff) > 4.0);
    for (const Term& t : split.large[i].terms()) CHECK(std::abs(t.coeff) <= 4.0);
  }
}

TEST_CASE("random and expected measures are probability-like") {
  auto ball = std::make_shared<const Ball>(word_ball(GroupModel::lattice(1), 1024));
  const TauProfile p = TauProfile::power_law(0.4);
  const AlgebraElement e = expected_measure(*ball, p);
  double mass = 0.0;
  for (const Term& t : e.terms()) mass += t.coeff;
  CHECK(mass == doctest::Approx(1.0));
  const SelectorField f = sample_field(ball, p, 3);
  const AlgebraElement mu = random_measure(f);
  CHECK(static_cast<double>(mu.support_size()) == static_cast<double>(f.selected_count()));
  for (const Term& t : mu.terms()) CHECK(t.coeff == doctest::Approx(1.0 / f.beta()));
}

TEST_CASE("weak constants of the identity measure are at most one") {
  const GroupModel g = GroupModel::lattice(1, true);
  const std::vector<AlgebraElement> measures{AlgebraElement::delta(g, make_element(0))};
  const auto corpus = weak_corpus(9, 64, 1);
  CHECK(corpus.size() == 9);
  std::vector<double> grid;
  for (int i = 0; i < 8; ++i) grid.push_back(0.95 * std::pow(2.0, -i));
  const WeakConstantReport r = maximal_weak11_empirical(measures, corpus, grid);
  CHECK(r.constant <= 1.0 + 1e-12);
  CHECK(r.per_function.size() == 9);
}

TEST_CASE("weak corpus is reproducible") {
  const auto a = weak_corpus(6, 128, 5), b = weak_corpus(6, 128, 5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(approx_equal(a[i], b[i], 0.0));
    for (const Term& t : a[i].terms()) CHECK((t.g.c[0] >= 0 && t.g.c[0] < 128));
  }
}

TEST_CASE("doubling check on geometric and flat radii") {
  std::vector<double> geometric, flat(12, 1.0);
  for (int j = 0; j < 12; ++j) geometric.push_back(std::pow(2.0, j));
  const DoublingReport a = r_j_doubling_check(geometric);
  CHECK(a.bounded);
  CHECK(a.c0 <= 2.0);
  CHECK_FALSE(r_j_doubling_check(flat).bounded);
}

TEST_CASE("e4 containment for pieces convolved with a ball measure") {
  const GroupModel g = GroupModel::lattice(1, true);
  const AlgebraElement piece = AlgebraElement::from_terms(g, {{make_element(8), 1.0}, {make_element(11), -1.0}});
  const DyadicCube q = cube_of(make_element(8), 2, 1);
  const AlgebraElement near = AlgebraElement::from_terms(g, {{make_element(0), 0.5}, {make_element(3), 0.5}});
  const AlgebraElement far = AlgebraElement::delta(g, make_element(100));
  CHECK(e4_containment(q, piece, near));
  CHECK_FALSE(e4_containment(q, piece, far));
}
