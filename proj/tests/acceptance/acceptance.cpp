// One PASS/FAIL line per acceptance criterion. Tolerances and sample sizes
// are fixed here; the process exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ergolab/cli.hpp"
#include "ergolab/concentration.hpp"
#include "ergolab/cz_maximal.hpp"
#include "ergolab/dynamics.hpp"
#include "ergolab/general_averages.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/selectors.hpp"
#include "ergolab/stats.hpp"

using namespace ergolab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

std::vector<std::uint64_t> seeds_1_to(std::uint64_t n) {
  std::vector<std::uint64_t> s(n);
  for (std::uint64_t i = 0; i < n; ++i) s[i] = i + 1;
  return s;
}

Element random_element(const GroupModel& g, CounterStream& s, std::int64_t r) {
  Element e;
  if (g.kind() == GroupKind::kCyclic) {
    e.c[0] = s.between(0, g.modulus() - 1);
  } else {
    for (int k = 0; k < g.rank(); ++k) e.c[static_cast<std::size_t>(k)] = s.between(-r, r);
  }
  return e;
}

std::vector<Element> random_set(const GroupModel& g, CounterStream& s, std::size_t n, std::int64_t r) {
  std::set<Element> out;
  while (out.size() < n) out.insert(random_element(g, s, r));
  return {out.begin(), out.end()};
}

// 1. Monte-Carlo moments within 4 SE of enumeration; Lemma 3.2 bound.
constexpr std::size_t kC1Trials = 4000;
constexpr double kC1Sigmas = 4.0;

Verdict criterion1() {
  CounterStream s(101);
  std::size_t cases = 0, agree = 0, bound_cases = 0, bound_ok = 0;
  double worst_z = 0.0;
  for (const GroupModel& g : {GroupModel::lattice(1), GroupModel::heisenberg()}) {
    for (std::size_t n = 1; n <= 10; ++n) {
      for (unsigned m : {1u, 2u}) {
        std::vector<double> tau(n);
        for (double& t : tau) t = 0.05 + 0.9 * s.uniform();
        const CenteredField field(g, random_set(g, s, n, 6), tau);
        const double exact = moment_exact_small(field, m);
        const MomentEstimate e = moment_bound_mc(field, m, kC1Trials, derive_seed(7, cases), 0);
        const double z = e.standard_error > 0 ? std::abs(e.estimate - exact) / e.standard_error
                                              : (std::abs(e.estimate - exact) > 1e-12 ? 1e9 : 0.0);
        worst_z = std::max(worst_z, z);
        ++cases;
        agree += z <= kC1Sigmas;
        if (field.variance_sum() >= 1.0) {
          ++bound_cases;
          bound_ok += exact <= static_cast<double>(partition_count(4 * m)) *
                                   std::pow(field.variance_sum(), 2.0 * m) * (1 + 1e-12);
        }
      }
    }
  }
  std::ostringstream d;
  d << agree << "/" << cases << " within 4 SE (worst " << fmt("%.2f", worst_z) << " SE), bound "
    << bound_ok << "/" << bound_cases;
  return {agree == cases && bound_ok == bound_cases, d.str()};
}

// 2. Coloring soundness over 10^4 instances; odd cycles need three colors.
constexpr std::size_t kC2Instances = 10000;

// Whether the functional graph g -> hg restricted to E has an odd cycle.
bool has_odd_cycle(const GroupModel& g, const std::vector<Element>& e, const Element& h) {
  const std::set<Element> in(e.begin(), e.end());
  std::set<Element> seen;
  for (const Element& start : e) {
    if (seen.count(start)) continue;
    std::vector<Element> path{start};
    std::map<Element, std::size_t> pos{{start, 0}};
    Element cur = start;
    while (true) {
      const Element next = g.multiply(h, cur);
      if (!in.count(next) || seen.count(next)) break;
      if (pos.count(next)) {
        if ((path.size() - pos[next]) % 2 == 1) return true;
        break;
      }
      pos[next] = path.size();
      path.push_back(next);
      cur = next;
    }
    seen.insert(path.begin(), path.end());
  }
  return false;
}

Verdict criterion2() {
  CounterStream s(202);
  const GroupModel groups[] = {GroupModel::lattice(1), GroupModel::lattice(2), GroupModel::heisenberg(),
                               GroupModel::cyclic(7)};
  std::size_t valid = 0, odd = 0, odd_three = 0, too_many = 0;
  for (std::size_t i = 0; i < kC2Instances; ++i) {
    const GroupModel& g = groups[i % 4];
    const std::size_t cap = g.kind() == GroupKind::kCyclic ? 7 : 16;
    const auto e = random_set(g, s, 1 + s.below(cap), 10);
    Element h;
    do {
      h = random_element(g, s, 2);
    } while (g.is_identity(h));
    const ColoringPartition p = shift_graph_coloring(g, e, h);
    valid += coloring_is_valid(g, e, p);
    too_many += p.classes.size() > 3;
    if (has_odd_cycle(g, e, h)) {
      ++odd;
      odd_three += p.classes.size() == 3;
    }
  }
  std::ostringstream d;
  d << valid << "/" << kC2Instances << " valid, " << too_many << " over three classes, odd cycles "
    << odd_three << "/" << odd << " with three classes";
  return {valid == kC2Instances && too_many == 0 && odd > 0 && odd_three == odd, d.str()};
}

// 3. Poisson-binomial tails inside the block sandwich.
constexpr std::size_t kC3Tuples = 1000;

Verdict criterion3() {
  CounterStream s(303);
  std::size_t inside = 0, oracle_ok = 0;
  for (std::size_t i = 0; i < kC3Tuples; ++i) {
    TauProfile p = TauProfile::power_law(0.05 + 0.9 * s.uniform());
    if (i % 4 == 1) p = TauProfile::inverse_log();
    if (i % 4 == 2) p = TauProfile::constant(0.05 + 0.9 * s.uniform());
    if (i % 4 == 3) p = TauProfile::table({0.9, 0.7, 0.4, 0.2, 0.1});
    const unsigned r = 1 + static_cast<unsigned>(s.below(12));
    const unsigned m = 1 + static_cast<unsigned>(s.below(r));
    const std::uint64_t n = 1 + s.below(200);
    const BlockProbability b = block_probability_bounds(p, r, m, n);
    inside += b.lower <= b.exact * (1 + 1e-12) && b.exact <= std::min(1.0, b.upper) * (1 + 1e-12);
    double exact = 0.0;
    for (unsigned mask = 0; mask < (1u << r); ++mask) {
      if (static_cast<unsigned>(__builtin_popcount(mask)) < m) continue;
      double pr = 1.0;
      for (unsigned k = 0; k < r; ++k) {
        const double t = p(r * n + k);
        pr *= (mask >> k) & 1u ? t : 1.0 - t;
      }
      exact += pr;
    }
    oracle_ok += std::abs(exact - b.exact) <= 1e-10 * std::max(1.0, exact);
  }
  std::ostringstream d;
  d << inside << "/" << kC3Tuples << " inside the sandwich, " << oracle_ok << "/" << kC3Tuples
    << " match subset enumeration";
  return {inside == kC3Tuples && oracle_ok == kC3Tuples, d.str()};
}

// 4. Growth laws.
constexpr double kC4BallTol = 0.05, kC4HeisTol = 0.3, kC4BetaTol = 0.05, kC4SquareTol = 0.05;

double beta_slope(int d, double alpha) {
  const GroupModel g = GroupModel::lattice(d);
  const TauProfile p = TauProfile::power_law(alpha);
  const auto levels = sphere_sizes(g, 1u << 14);
  std::vector<double> x, y;
  for (unsigned k = 8; k <= 14; ++k) {
    const std::uint32_t n = 1u << k;
    x.push_back(n);
    y.push_back(beta_from_levels(std::span(levels).first(n + 1), p));
  }
  return stats::log_log_slope(x, y);
}

double square_slope(int d, double alpha) {
  const GroupModel g = GroupModel::lattice(d);
  const TauProfile p = TauProfile::power_law(alpha);
  const auto levels = sphere_sizes(g, 1u << 14);
  std::vector<double> x, y;
  for (unsigned j = 6; j <= 14; ++j) {
    const std::uint32_t n = 1u << j;
    x.push_back(n);
    y.push_back(tau_square_sum(std::span(levels).first(n + 1), p));
  }
  return stats::log_log_slope(x, y);
}

Verdict criterion4() {
  const double z = growth_exponent_estimate(GroupModel::lattice(1), 64).slope;
  const double z2 = growth_exponent_estimate(GroupModel::lattice(2), 64).slope;
  const double h = growth_exponent_estimate(GroupModel::heisenberg(), 24).slope;
  bool ok = std::abs(z - 1) <= kC4BallTol && std::abs(z2 - 2) <= kC4BallTol && std::abs(h - 4) <= kC4HeisTol;
  std::ostringstream d;
  d << fmt("|S_N| slopes Z %.3f Z2 %.3f H3 %.3f; beta", z, z2, h);
  for (int dim : {1, 2}) {
    const double b = beta_slope(dim, 0.4);
    ok &= std::abs(b - (dim - 0.4)) <= kC4BetaTol;
    d << fmt(" Z^%.0f %.3f", dim, b);
  }
  d << "; sum tau^2";
  const std::pair<int, double> square_cases[] = {{2, 0.4}, {1, 0.1}, {1, 0.25}};
  for (const auto& [dim, alpha] : square_cases) {
    const double v = square_slope(dim, alpha);
    ok &= std::abs(v - (dim - 2 * alpha)) <= kC4SquareTol;
    d << fmt(" Z^%.0f a=%.2f %.3f", dim, alpha, v);
  }
  d << fmt(" (Z a=0.40 %.3f, not gated)", square_slope(1, 0.4));
  return {ok, d.str()};
}

// 5. Corollary 4.4 ratios for 18 of 20 seeds at each j in [8, 12].
constexpr std::size_t kC5Quorum = 18;

Verdict criterion5() {
  const auto seeds = seeds_1_to(20);
  std::vector<std::size_t> good(5, 0), identity_good(5, 0);
  for (std::uint64_t seed : seeds) {
    const auto rows = nu_conv_bound_check(GroupModel::lattice(1), TauProfile::power_law(0.4), 8, 12, 0.1, seed);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      identity_good[k] += rows[k].identity_ratio <= 1.0;
      good[k] += rows[k].identity_ratio <= 1.0 && rows[k].off_ratio <= 1.0;
    }
  }
  bool ok = true;
  std::ostringstream d;
  d << "seeds within both bounds at j=8..12:";
  for (std::size_t k = 0; k < 5; ++k) {
    d << " " << good[k];
    ok &= good[k] >= kC5Quorum;
  }
  d << " (identity ratio alone:";
  for (std::size_t k = 0; k < 5; ++k) d << " " << identity_good[k];
  d << ")";
  return {ok, d.str()};
}

// 6. Convergence trend on the golden rotation.
constexpr double kC6FinalTol = 0.02;

Verdict criterion6() {
  const DynSystem sys = make_system("rotation:golden");
  const Observable f = make_observable(sys, "cos1");
  DiagnosticOptions o;
  for (unsigned j = 10; j <= 20; ++j) o.radii.push_back(1u << j);
  o.seeds = seeds_1_to(20);
  o.workers = 0;
  const AverageReport r = convergence_diagnostic(sys, f, TauProfile::power_law(0.4), o);
  const bool decreasing = strictly_decreasing_tail(r.medians, 4);
  const double last = r.medians.back();
  std::ostringstream d;
  d << "last four medians";
  for (std::size_t i = r.medians.size() - 4; i < r.medians.size(); ++i) d << fmt(" %.5f", r.medians[i]);
  d << (decreasing ? ", strictly decreasing" : ", not strictly decreasing") << fmt(", final %.5f", last);
  return {decreasing && last <= kC6FinalTol, d.str()};
}

// 7. Banach density.
constexpr double kC7Threshold = 0.05;
constexpr std::size_t kC7Quorum = 18;

Verdict criterion7() {
  const TauProfile p = TauProfile::power_law(0.4);
  const auto seeds = seeds_1_to(20);
  std::size_t within = 0;
  std::vector<double> at_max;
  std::map<std::uint64_t, std::vector<double>> scaled;
  for (std::uint64_t seed : seeds) {
    const IntSequence seq = sample_sequence(p, 1'000'000, seed);
    const double dens = banach_density_windowed(seq, 1000, 1'000'000);
    at_max.push_back(dens);
    within += dens <= kC7Threshold;
    // Median trend read with the window growing as Nmax^(2/3).
    for (std::uint64_t nmax : {10'000ull, 100'000ull, 1'000'000ull}) {
      const auto m = static_cast<std::uint64_t>(std::llround(std::pow(double(nmax), 2.0 / 3.0)));
      scaled[nmax].push_back(banach_density_windowed(seq, m, nmax));
    }
  }
  const double m4 = stats::median(scaled[10'000]), m5 = stats::median(scaled[100'000]),
               m6 = stats::median(scaled[1'000'000]);
  const bool trend = m4 > m5 && m5 > m6;
  std::ostringstream d;
  d << within << "/20 seeds with density <= 0.05 at m=1000" << fmt(" (median %.4f)", stats::median(at_max))
    << fmt("; medians at Nmax=1e4,1e5,1e6: %.4f %.4f %.4f", m4, m5, m6);
  return {within >= kC7Quorum && trend, d.str()};
}

// 8. Calderon-Zygmund invariants on 200 random pairs.
constexpr std::size_t kC8Pairs = 200;

Verdict criterion8() {
  CounterStream s(808);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < kC8Pairs; ++i) {
    const int d = 1 + static_cast<int>(i % 2);
    const GroupModel g = GroupModel::lattice(d, true);
    std::vector<Term> terms;
    const std::size_t n = 1 + s.below(40);
    const std::int64_t span = 2 + static_cast<std::int64_t>(s.below(200));
    for (std::size_t k = 0; k < n; ++k) {
      terms.push_back({random_element(g, s, span), (2 * s.uniform() - 1) * std::pow(10.0, 3 * s.uniform())});
    }
    const AlgebraElement phi = AlgebraElement::from_terms(g, terms);
    const double lambda = lp_norm(phi, Norm::kOne) * std::pow(2.0, -12.0 * s.uniform());
    const CZDecomposition dec = cz_decompose(phi, lambda);
    // C frozen at 2^(d+1), independent of the decomposition's own field.
    ok += check_invariants(dec, phi, std::pow(2.0, d + 1), 1e-9).all();
  }
  return {ok == kC8Pairs, std::to_string(ok) + "/" + std::to_string(kC8Pairs) + " pairs satisfy every invariant"};
}

// 9. Weak (1,1) stability.
Verdict criterion9() {
  WeakStabilityOptions o;
  o.alpha = 0.4;
  o.jmax = 12;
  o.corpus_size = 30;
  o.grid = 12;
  o.seeds = seeds_1_to(20);
  o.spread_limit = 2.0;
  const WeakStabilityReport r = weak11_stability(o);
  bool finite = true;
  for (double c : r.deterministic_constants) finite &= std::isfinite(c) && c > 0;
  std::ostringstream d;
  d << fmt("seed spread %.3f (limit 2), E mu constants", r.spread);
  for (double c : r.deterministic_constants) d << fmt(" %.4f", c);
  d << fmt(" (spread %.3f)", r.deterministic_spread);
  return {r.stable && r.deterministic_stable && finite, d.str()};
}

// 10. Transference identity.
constexpr double kC10Tol = 1e-9;

Verdict criterion10() {
  CounterStream s(1010);
  std::size_t configs = 0, agree = 0, comparisons = 0;
  double worst = 0.0;
  const std::pair<const char*, std::uint32_t> systems[] = {
      {"rotation:golden", 32}, {"rotation:1/4", 32}, {"cycle:7", 32}, {"torus:2", 16}, {"heis", 6}};
  for (const auto& [spec, kmax] : systems) {
    const DynSystem sys = make_system(spec);
    const Observable f = make_observable(sys, sys.space() == SpaceKind::kCycle ? "indicator0" : "cos1");
    std::vector<AlgebraElement> measures;
    for (int m = 0; m < 3; ++m) {
      std::vector<Term> terms;
      for (int t = 0; t < 8; ++t) terms.push_back({random_element(sys.group(), s, 4), s.uniform()});
      measures.push_back(AlgebraElement::from_terms(sys.group(), terms));
    }
    auto ball = std::make_shared<const Ball>(word_ball(sys.group(), 4));
    measures.push_back(random_measure(sample_field(ball, TauProfile::power_law(0.4), 3)));
    for (std::uint32_t k : {std::uint32_t{1}, kmax / 2, kmax}) {
      const Point x = sys.from_uniform({s.uniform(), s.uniform(), s.uniform()});
      const TransferenceResult r = transference_identity_check(sys, f, x, k, measures, kC10Tol);
      ++configs;
      agree += r.agree;
      comparisons += r.comparisons;
      worst = std::max(worst, r.max_error);
    }
  }
  std::ostringstream d;
  d << agree << "/" << configs << " configurations, " << comparisons << " comparisons, max error "
    << fmt("%.2e", worst);
  return {agree == configs, d.str()};
}

// 11. Pipeline for F(k) = k^2, alpha = 0.4.
Verdict criterion11() {
  PipelineOptions o;
  o.growth = "k^2";
  o.alpha = 0.4;
  o.seeds = seeds_1_to(20);
  const PipelineReport r = pipeline_theorem_faster(o);
  bool growth = r.base_growth_ok;
  for (const PipelineSeedRow& row : r.seeds) growth &= row.growth_ok;
  const bool t51 = r.thm51.bounded && r.thm51.fitted_decay > 0;
  const bool t53 = r.thm53.all();
  std::ostringstream d;
  d << (growth ? "n_k >= k^2 on every seed" : "growth violated") << ", density " << r.density_passes << "/"
    << r.seeds.size() << fmt(", thm51 decay %.3f", r.thm51.fitted_decay)
    << (r.thm51.bounded ? " bounded" : " unbounded") << fmt(", thm53 eps %.3f", r.thm53.fitted_eps)
    << (t53 ? " all checks" : " check failed");
  return {!r.refused && growth && r.density_ok && t51 && t53 && r.pass, d.str()};
}

// 12. Byte-identical payloads on rerun.
Verdict criterion12() {
  const std::vector<std::vector<std::string>> commands{
      {"ball", "--group", "heis3", "--radius", "6"},
      {"sequence", "--limit", "1e5", "--seed", "42"},
      {"density", "--limit", "1e5", "--seeds", "5"},
      {"blocks", "--jmax", "5"},
      {"average", "--nmax", "2^14", "--seeds", "5"},
      {"moments", "--group", "heis3", "--size", "8", "--m", "2", "--trials", "2000"},
      {"chernoff", "--size", "10", "--trials", "2000", "--seeds", "2"},
      {"nubound", "--jmax", "10", "--seeds", "3"},
      {"tails", "--jmax", "8", "--seeds", "3"},
      {"maximal", "--jmax", "8", "--seeds", "3", "--corpus-size", "10"},
      {"faster", "--max-elements", "2^14", "--limit", "1e5", "--seeds", "3"},
      {"selftest"}};
  std::size_t same = 0;
  std::string differing;
  for (const auto& c : commands) {
    std::string payload[2];
    for (std::string& p : payload) {
      std::ostringstream out, err;
      cli::run(c, out, err);
      p = cli::Json::parse(out.str())["payload"].dump();
    }
    if (payload[0] == payload[1]) {
      ++same;
    } else {
      differing += " " + c.front();
    }
  }
  // cz reads a file; run it on a generated input.
  const std::string path = "acceptance_phi.csv";
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    std::fputs("element,coefficient\n0;0,9\n1;0,-2\n5;7,4\n", f);
    std::fclose(f);
  }
  std::string cz[2];
  for (std::string& p : cz) {
    std::ostringstream out, err;
    cli::run({"cz", "--phi", path, "--lambda", "0.5"}, out, err);
    p = cli::Json::parse(out.str())["payload"].dump();
  }
  std::remove(path.c_str());
  const bool cz_same = cz[0] == cz[1];
  if (!cz_same) differing += " cz";
  const std::size_t total = commands.size() + 1;
  same += cz_same;
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " commands identical" +
                             (differing.empty() ? "" : ", differing:" + differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"exact-oracle equivalence", criterion1},
      {"coloring soundness", criterion2},
      {"chernoff sandwich", criterion3},
      {"growth laws", criterion4},
      {"nu convolution bound", criterion5},
      {"convergence trend", criterion6},
      {"banach density", criterion7},
      {"cz invariants", criterion8},
      {"weak (1,1) stability", criterion9},
      {"transference identity", criterion10},
      {"pipeline k^2", criterion11},
      {"determinism", criterion12}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += !v.pass;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
