#include "ergolab/selftest.hpp"

#include <cmath>
#include <memory>
#include <numeric>

#include "ergolab/concentration.hpp"
#include "ergolab/cz_maximal.hpp"
#include "ergolab/dynamics.hpp"
#include "ergolab/error.hpp"
#include "ergolab/general_averages.hpp"
#include "ergolab/group_algebra.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/selectors.hpp"

namespace ergolab {

namespace {

bool close(double a, double b, double tol = 1e-12) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

AlgebraElement on_z(std::vector<std::pair<std::int64_t, double>> pts) {
  std::vector<Term> terms;
  for (auto [n, c] : pts) terms.push_back(Term{make_element(n), c});
  return AlgebraElement::from_terms(GroupModel::lattice(1), std::move(terms));
}

std::shared_ptr<const Ball> z_ball(std::uint32_t n) {
  return std::make_shared<const Ball>(word_ball(GroupModel::lattice(1), n));
}

std::vector<SelfCheck> group_checks() {
  const GroupModel z = GroupModel::lattice(1);
  const GroupModel z2 = GroupModel::lattice(2);
  return {
      {"heis3 descriptor is H3 with symmetric generators",
       [] {
         const GroupModel h = make_group("heis3");
         return h.kind() == GroupKind::kHeisenberg && h.symmetric() &&
                h.generators().size() == 4;
       }},
      {"ball of radius 0 on Z is the identity",
       [z] {
         const Ball b = word_ball(z, 0);
         return b.size() == 1 && b.elements()[0] == Element{} && b.lengths()[0] == 0;
       }},
      {"word length of the identity is 0",
       [] {
         for (const char* spec : {"zd:1", "zd:3", "heis3", "cyclic:7"}) {
           const GroupModel g = make_group(spec);
           if (word_length(g, g.identity()) != 0) return false;
         }
         return true;
       }},
      {"growth slope of Z^2 to radius 64 is near 2",
       [z2] { return std::abs(growth_exponent_estimate(z2, 64).slope - 2.0) <= 0.1; }},
      {"growth slope of Z to radius 64 is near 1",
       [z] { return std::abs(growth_exponent_estimate(z, 64).slope - 1.0) <= 0.1; }},
      {"translate defect of S_100 by 1 on Z is 2/101",
       [z] { return close(ball_translate_defect(z, make_element(1), 100), 2.0 / 101.0); }},
      {"translate defect by the identity on Z^2 is 0",
       [z2] { return ball_translate_defect(z2, Element{}, 7) == 0.0; }},
  };
}

std::vector<SelfCheck> algebra_checks() {
  return {
      {"delta_1 * delta_2 = delta_3",
       [] { return approx_equal(convolve(on_z({{1, 1}}), on_z({{2, 1}})), on_z({{3, 1}})); }},
      {"(delta_0 + delta_1)^2 is binomial",
       [] {
         const auto f = on_z({{0, 1}, {1, 1}});
         return approx_equal(convolve(f, f), on_z({{0, 1}, {1, 2}, {2, 1}}));
       }},
      {"involution reflects 2 delta_1",
       [] { return approx_equal(involution(on_z({{1, 2}})), on_z({{-1, 2}})); }},
      {"involution fixes delta_0",
       [] { return approx_equal(involution(on_z({{0, 1}})), on_z({{0, 1}})); }},
      {"involution is an involution",
       [] {
         const GroupModel h = make_group("heis3");
         for (std::uint64_t trial = 0; trial < 20; ++trial) {
           CounterStream rng(derive_seed(11, trial));
           std::vector<Term> terms;
           const auto count = rng.between(1, 50);
           for (std::int64_t i = 0; i < count; ++i) {
             terms.push_back(Term{make_element(rng.between(-5, 5), rng.between(-5, 5),
                                               rng.between(-5, 5)),
                                  rng.uniform() - 0.5});
           }
           const auto f = AlgebraElement::from_terms(h, std::move(terms));
           if (!approx_equal(involution(involution(f)), f)) return false;
         }
         return true;
       }},
      {"(delta_1~ * delta_1)^3 = delta_0",
       [] { return approx_equal(conv_power_selfadjoint(on_z({{1, 1}}), 3), on_z({{0, 1}})); }},
      {"(f~ * f) for delta_0 + delta_1",
       [] {
         return approx_equal(conv_power_selfadjoint(on_z({{0, 1}, {1, 1}}), 1),
                             on_z({{-1, 1}, {0, 2}, {1, 1}}));
       }},
      {"l2 norm of delta_0 + delta_1 is sqrt 2",
       [] { return close(lp_norm(on_z({{0, 1}, {1, 1}}), Norm::kTwo), std::sqrt(2.0)); }},
      {"norms of the zero element vanish",
       [] {
         const AlgebraElement zero(GroupModel::lattice(1));
         return lp_norm(zero, Norm::kOne) == 0.0 && lp_norm(zero, Norm::kTwo) == 0.0 &&
                lp_norm(zero, Norm::kInf) == 0.0;
       }},
      {"l1 norm of 3 delta_0 - 4 delta_1 is 7",
       [] { return close(lp_norm(on_z({{0, 3}, {1, -4}}), Norm::kOne), 7.0); }},
      {"operator bound of delta_5 is 1",
       [] {
         for (unsigned m = 1; m <= 4; ++m) {
           if (!close(op_norm_upper_bound(on_z({{5, 1}}), m), 1.0)) return false;
         }
         return true;
       }},
  };
}

std::vector<SelfCheck> selector_checks() {
  const GroupModel z = GroupModel::lattice(1);
  return {
      {"beta of the identity ball is 0",
       [] {
         for (const char* spec : {"zd:1", "zd:2", "heis3", "cyclic:5"}) {
           if (beta(word_ball(make_group(spec), 0), TauProfile::power_law(0.4)) != 0.0) {
             return false;
           }
         }
         return true;
       }},
      {"beta with tau = 1 on S_10 of Z is 10",
       [z] { return beta(word_ball(z, 10), TauProfile::constant(1.0)) == 10.0; }},
      {"tau = 1 selects every non-identity element",
       [] {
         const auto f = sample_field(z_ball(20), TauProfile::constant(1.0), 3);
         for (std::size_t i = 0; i < f.values().size(); ++i) {
           if (f.values()[i] != (f.ball().lengths()[i] > 0 ? 1 : 0)) return false;
         }
         return true;
       }},
      {"tau = 0 selects nothing",
       [] { return sample_field(z_ball(20), TauProfile::constant(0.0), 3).selected_count() == 0; }},
      {"all-ones field on {0..5} extracts 1..5",
       [] {
         const auto seq = extract_sequence(sample_field(z_ball(5), TauProfile::constant(1.0), 1));
         return std::vector<std::int64_t>(seq.values().begin(), seq.values().end()) ==
                std::vector<std::int64_t>{1, 2, 3, 4, 5};
       }},
      {"all-zeros field extracts nothing",
       [] {
         return extract_sequence(sample_field(z_ball(5), TauProfile::constant(0.0), 1)).empty();
       }},
      {"full interval has windowed density 1",
       [] {
         std::vector<std::int64_t> v(1001);
         std::iota(v.begin(), v.end(), 0);
         const IntSequence seq(std::move(v));
         return banach_density_windowed(seq, 10, 1000) == 1.0 &&
                banach_density_windowed(seq, 100, 1000) == 1.0;
       }},
      {"multiples of 5 have windowed density 0.2",
       [] {
         std::vector<std::int64_t> v;
         for (std::int64_t n = 0; n <= 10000; n += 5) v.push_back(n);
         return close(banach_density_windowed(IntSequence(std::move(v)), 100, 5000), 0.2);
       }},
      {"blocks for F(k) = k obey the length and order rules",
       [] {
         const auto bs = block_sequence(parse_growth("k"), 3);
         std::int64_t prev_v = 1, prev_w = 0;
         for (const Block& b : bs.blocks) {
           if (!(b.v > prev_w && b.v < b.w && b.w - b.v >= prev_v)) return false;
           prev_v = b.v;
           prev_w = b.w;
         }
         return bs.blocks.size() == 3 && bs.blocks[0].v == 2 && bs.blocks[0].w == 3;
       }},
      {"tau = 1 keeps the base sequence",
       [] {
         const auto base = block_sequence(parse_growth("k^2"), 4).sequence;
         const auto sub = random_subsequence(base, TauProfile::constant(1.0), 9);
         return std::equal(base.values().begin(), base.values().end(), sub.values().begin(),
                           sub.values().end());
       }},
      {"tau = 0 keeps nothing",
       [] {
         const auto base = block_sequence(parse_growth("k^2"), 4).sequence;
         return random_subsequence(base, TauProfile::constant(0.0), 9).empty();
       }},
      {"all-success block probability is tau^r",
       [] {
         const auto p = block_probability_bounds(TauProfile::constant(0.3), 6, 6, 2);
         return close(p.exact, std::pow(0.3, 6)) && p.lower <= p.exact && p.exact <= p.upper;
       }},
  };
}

std::vector<SelfCheck> dynamics_checks() {
  return {
      {"cos(2 pi x) integrates to 0",
       [] {
         const auto sys = make_system("rotation:golden");
         return make_observable(sys, "cos1").integral == 0.0;
       }},
      {"indicator of 0 on Z_5 integrates to 0.2",
       [] {
         const auto sys = make_system("cycle:5");
         return close(make_observable(sys, "indicator0").integral, 0.2);
       }},
      {"constant 1 on T^2 integrates to 1",
       [] {
         const auto sys = make_system("torus:2");
         return make_observable(sys, "const:1").integral == 1.0;
       }},
      {"ergodic average of a constant is the constant",
       [] {
         const auto sys = make_system("torus:2");
         const auto f = make_observable(sys, "const:2.5");
         for (std::uint32_t n : {0u, 1u, 5u, 20u}) {
           if (!close(ergodic_average(sys, f, Point{{0.3, 0.7, 0.0}}, n), 2.5)) return false;
         }
         return true;
       }},
      {"rotation by 0 fixes the average",
       [] {
         const auto sys = DynSystem::rotation(0.0);
         const auto f = make_observable(sys, "cos1");
         const Point x{{0.137, 0.0, 0.0}};
         for (std::uint32_t n : {0u, 3u, 50u}) {
           if (!close(ergodic_average(sys, f, x, n), f.eval(x))) return false;
         }
         return true;
       }},
      {"constant tau gives the average off the identity",
       [] {
         const auto sys = make_system("rotation:golden");
         const auto f = make_observable(sys, "cos1");
         const Point x{{0.2, 0.0, 0.0}};
         const auto field = sample_field(z_ball(30), TauProfile::constant(0.4), 5);
         double acc = 0.0;
         for (std::int64_t n = 1; n <= 30; ++n) acc += f.eval(sys.act(make_element(n), x));
         return close(expected_average(sys, f, x, field), acc / 30.0);
       }},
      {"expected average of a constant is the constant",
       [] {
         const auto sys = make_system("rotation:golden");
         const auto f = make_observable(sys, "const:-1.5");
         const auto field = sample_field(z_ball(30), TauProfile::power_law(0.4), 5);
         return close(expected_average(sys, f, Point{}, field), -1.5);
       }},
      {"all-ones random average is the average off the identity",
       [] {
         const auto sys = make_system("rotation:golden");
         const auto f = make_observable(sys, "cos1");
         const Point x{{0.6, 0.0, 0.0}};
         const auto field = sample_field(z_ball(25), TauProfile::constant(1.0), 5);
         double acc = 0.0;
         for (std::int64_t n = 1; n <= 25; ++n) acc += f.eval(sys.act(make_element(n), x));
         return close(random_average(sys, f, x, field), acc / 25.0);
       }},
      {"all-zeros random average is 0",
       [] {
         const auto sys = make_system("rotation:golden");
         const auto f = make_observable(sys, "cos1");
         const auto ball = z_ball(25);
         const SelectorField field(ball, TauProfile::constant(0.5), 5,
                                   std::vector<std::uint8_t>(ball->size(), 0));
         return random_average(sys, f, Point{}, field) == 0.0;
       }},
      {"zero observable has zero deviations",
       [] {
         const auto sys = make_system("rotation:golden");
         const auto f = make_observable(sys, "const:0");
         DiagnosticOptions o;
         o.radii = {16, 64, 256};
         o.seeds = {1, 2, 3};
         const auto r = convergence_diagnostic(sys, f, TauProfile::power_law(0.4), o);
         for (const auto& t : r.per_seed) {
           for (double d : t.deviations) {
             if (std::abs(d) > 1e-12) return false;
           }
         }
         return true;
       }},
      {"transference with the identity measure",
       [] {
         const auto sys = make_system("heis");
         const auto f = make_observable(sys, "cos1");
         const auto mu = AlgebraElement::delta(sys.group(), Element{});
         return transference_identity_check(sys, f, Point{{0.1, 0.2, 0.3}}, 4, {mu}).agree;
       }},
      {"transference with the zero measure",
       [] {
         const auto sys = make_system("rotation:golden");
         const auto f = make_observable(sys, "cos1");
         const AlgebraElement zero(sys.group());
         return transference_identity_check(sys, f, Point{}, 8, {zero}).agree;
       }},
  };
}

std::vector<SelfCheck> concentration_checks() {
  const GroupModel z = GroupModel::lattice(1);
  return {
      {"deterministic selectors have zero moments",
       [z] {
         const auto field = CenteredField::with_constant(
             z, {make_element(1), make_element(2), make_element(4)}, 1.0);
         return moment_exact_small(field, 1) == 0.0 && moment_exact_small(field, 2) == 0.0;
       }},
      {"tau = 1 Monte-Carlo moment is 0",
       [z] {
         const auto field = CenteredField::with_constant(
             z, {make_element(1), make_element(2), make_element(4)}, 1.0);
         return moment_bound_mc(field, 1, 200, 3).estimate == 0.0;
       }},
      {"odd cycle on Z_3 needs three colors",
       [] {
         const GroupModel c3 = GroupModel::cyclic(3);
         const std::vector<Element> e{make_element(0), make_element(1), make_element(2)};
         const auto p = shift_graph_coloring(c3, e, make_element(1));
         return p.classes.size() == 3 && coloring_is_valid(c3, e, p);
       }},
      {"no shifted pairs gives an empty partition",
       [z] {
         const std::vector<Element> e{make_element(0)};
         return shift_graph_coloring(z, e, make_element(1)).classes.empty();
       }},
      {"huge threshold has empty tail",
       [z] {
         std::vector<Element> e;
         for (std::int64_t n = 1; n <= 12; ++n) e.push_back(make_element(n));
         const auto field = CenteredField::with_constant(z, e, 0.5);
         const auto r = chernoff_tail_check(field, 1000.0, 200, 5);
         return r.empirical == 0.0 && r.bound < 1e-9;
       }},
      {"tau = 1 has empty tail",
       [z] {
         std::vector<Element> e;
         for (std::int64_t n = 1; n <= 12; ++n) e.push_back(make_element(n));
         const auto field = CenteredField::with_constant(z, e, 1.0);
         return chernoff_tail_check(field, 0.5, 200, 5).empirical == 0.0;
       }},
      {"identity coefficient matches its formula",
       [z] {
         const auto rows = nu_conv_bound_check(z, TauProfile::power_law(0.4), 3, 7, 0.1, 4);
         for (const auto& r : rows) {
           if (!close(r.identity, r.identity_formula, 1e-10)) return false;
         }
         return true;
       }},
      {"tau = 1 makes nu vanish",
       [] {
         const auto field = sample_field(z_ball(64), TauProfile::constant(1.0), 2);
         return nu_measure(field).empty();
       }},
      {"tau = 1 near-optimality estimate is 0",
       [z] {
         return near_optimality_estimate(z, 0.0, 4, make_element(1), 100, 2).estimate == 0.0;
       }},
      {"tau = 1 tail report is identically 0",
       [z] {
         const auto r = borel_cantelli_tail_report(z, 0.0, 1, 0.5, 2, 6, 3, 2);
         for (const auto& row : r.rows) {
           if (row.lhs != 0.0 || row.exceeds) return false;
         }
         return r.exceedances_beyond == 0;
       }},
      {"tail norms are submultiplicative",
       [z] {
         const auto r = borel_cantelli_tail_report(z, 0.4, 2, 0.5, 2, 7, 3, 2);
         for (const auto& row : r.rows) {
           if (row.lhs > row.one_norm_power * (1.0 + 1e-12)) return false;
         }
         return true;
       }},
  };
}

std::vector<SelfCheck> cz_checks() {
  return {
      {"level 1 cubes over {0..5}",
       [] {
         std::vector<Element> region;
         for (std::int64_t n = 0; n <= 5; ++n) region.push_back(make_element(n));
         const auto cubes = dyadic_cover(1, region, 1);
         return cubes.size() == 3 && cubes[0].index[0] == 0 && cubes[1].index[0] == 1 &&
                cubes[2].index[0] == 2;
       }},
      {"level 0 cubes in Z^2 are singletons",
       [] {
         const std::vector<Element> region{make_element(0, 0), make_element(3, -2),
                                           make_element(-1, 5)};
         const auto cubes = dyadic_cover(0, region, 2);
         for (const auto& q : cubes) {
           if (q.volume() != 1) return false;
         }
         return cubes.size() == 3;
       }},
      {"each level 1 cube lies in one level 3 cube",
       [] {
         std::vector<Element> region;
         for (std::int64_t n = -20; n <= 20; ++n) region.push_back(make_element(n));
         const auto fine = dyadic_cover(1, region, 1);
         const auto coarse = dyadic_cover(3, region, 1);
         for (const auto& q : fine) {
           int parents = 0;
           for (const auto& p : coarse) parents += p.contains(q) ? 1 : 0;
           if (parents != 1) return false;
         }
         return true;
       }},
      {"small phi has no bad part",
       [] {
         const auto phi = on_z({{0, 0.9}, {1, -0.5}, {7, 1.0}});
         const auto d = cz_decompose(phi, 1.0);
         return d.bad.empty() && approx_equal(d.good, phi);
       }},
      {"huge r_j leaves the whole piece large",
       [] {
         const auto d = cz_decompose(on_z({{0, 40.0}, {3, -7.0}}), 1.0);
         const auto split = split_bad(d, 3, 1e12, 1.0);
         for (std::size_t i = 0; i < split.cubes.size(); ++i) {
           if (!split.small[i].empty() || !approx_equal(split.large[i], d.bad[i].piece)) {
             return false;
           }
         }
         return !d.bad.empty();
       }},
      {"tiny r_j moves the whole piece to small",
       [] {
         const auto d = cz_decompose(on_z({{0, 40.0}, {3, -7.0}}), 1.0);
         const auto split = split_bad(d, 3, 1e-300, 1.0);
         for (std::size_t i = 0; i < split.cubes.size(); ++i) {
           if (!split.large[i].empty() || !approx_equal(split.small[i], d.bad[i].piece)) {
             return false;
           }
         }
         return !d.bad.empty();
       }},
      {"identity measure has weak constant at most 1",
       [] {
         const auto corpus = weak_corpus(12, 256, 3);
         const auto mu = AlgebraElement::delta(GroupModel::lattice(1), Element{});
         return maximal_weak11_empirical({mu}, corpus, {0.9, 0.5, 0.25, 0.1, 0.01}, 1)
                    .constant <= 1.0 + 1e-12;
       }},
      {"r_j = 2^j has doubling constant 2",
       [] {
         std::vector<double> r;
         for (int j = 1; j <= 40; ++j) r.push_back(std::ldexp(1.0, j));
         const auto d = r_j_doubling_check(r);
         return d.bounded && d.c0 < 2.0 && d.c0 > 1.999;
       }},
      {"constant r_j is unbounded",
       [] { return !r_j_doubling_check(std::vector<double>(40, 3.0)).bounded; }},
  };
}

std::vector<SelfCheck> general_checks() {
  const GroupModel z = GroupModel::lattice(1);
  return {
      {"singleton cell has product size 1",
       [z] {
         const GroupModel h = make_group("heis3");
         return product_set_size(z, {make_element(9)}, 3).value == 1.0 &&
                product_set_size(h, {make_element(1, 2, 3)}, 2).value == 1.0;
       }},
      {"interval difference set has 2n + 1 points",
       [z] {
         std::vector<Element> cell;
         for (std::int64_t n = 0; n <= 37; ++n) cell.push_back(make_element(n));
         const auto p = product_set_size(z, cell, 1);
         return p.exact && p.value == 75.0;
       }},
      {"dyadic sets are covered by [0, 2^N]",
       [] {
         std::vector<std::int64_t> base(1023);
         std::iota(base.begin(), base.end(), 1);
         const auto fam =
             SetFamily::from_sequence_dyadic(IntSequence(base), TauProfile::power_law(0.3), 10);
         IntervalCover cover;
         for (std::size_t n = 0; n < fam.set_count(); ++n) {
           const double top = std::ldexp(1.0, static_cast<int>(fam.set_label(n)));
           cover.cells.push_back({Interval{0, static_cast<std::int64_t>(top)}});
           cover.radius.push_back(top);
         }
         const auto r = thm53_hypothesis_check(fam, cover, 1, 0.1, 1, 10);
         return r.covered && r.diameters_ok && r.cells_within_k;
       }},
      {"alpha = 0.6 is refused",
       [] {
         PipelineOptions o;
         o.alpha = 0.6;
         o.seeds = {1};
         const auto r = pipeline_theorem_faster(o);
         return r.refused && !r.pass;
       }},
  };
}

}  // namespace

std::vector<SelfCheck> selftest_checks() {
  std::vector<SelfCheck> all;
  for (auto part : {group_checks(), algebra_checks(), selector_checks(), dynamics_checks(),
                    concentration_checks(), cz_checks(), general_checks()}) {
    for (auto& c : part) all.push_back(std::move(c));
  }
  return all;
}

}  // namespace ergolab
