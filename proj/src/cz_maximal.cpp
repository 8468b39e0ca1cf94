#include "ergolab/cz_maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

std::uint64_t DyadicCube::volume() const noexcept {
  return std::uint64_t{1} << (level * static_cast<unsigned>(dimension));
}

bool DyadicCube::contains(const Element& g) const noexcept {
  for (int i = 0; i < dimension; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if ((g.c[k] >> level) != index[k]) return false;
  }
  return true;
}

bool DyadicCube::contains(const DyadicCube& inner) const noexcept {
  if (inner.dimension != dimension || inner.level > level) return false;
  const unsigned shift = level - inner.level;
  for (int i = 0; i < dimension; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if ((inner.index[k] >> shift) != index[k]) return false;
  }
  return true;
}

std::int64_t DyadicCube::distance(const Element& g) const noexcept {
  std::int64_t best = 0;
  for (int i = 0; i < dimension; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const std::int64_t lo = index[k] * side();
    const std::int64_t hi = lo + side() - 1;
    best = std::max({best, lo - g.c[k], g.c[k] - hi});
  }
  return best;
}

DyadicCube cube_of(const Element& g, unsigned level, int dimension) {
  DyadicCube q;
  q.level = level;
  q.dimension = dimension;
  for (int i = 0; i < dimension; ++i) {
    const auto k = static_cast<std::size_t>(i);
    q.index[k] = g.c[k] >> level;
  }
  return q;
}

std::vector<DyadicCube> dyadic_cover(unsigned level, std::span<const Element> region,
                                     int dimension) {
  std::set<DyadicCube> cubes;
  for (const Element& g : region) cubes.insert(cube_of(g, level, dimension));
  return {cubes.begin(), cubes.end()};
}

namespace {

template <typename Fn>
void for_each_point(const DyadicCube& q, Fn&& fn) {
  const std::int64_t side = q.side();
  std::array<std::int64_t, kMaxCoords> offset{};
  while (true) {
    Element g;
    for (int i = 0; i < q.dimension; ++i) {
      const auto k = static_cast<std::size_t>(i);
      g.c[k] = q.index[k] * side + offset[k];
    }
    fn(g);
    int i = q.dimension - 1;
    while (i >= 0 && ++offset[static_cast<std::size_t>(i)] == side) {
      offset[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
}

void require_lattice(const AlgebraElement& phi) {
  if (phi.group().kind() != GroupKind::kLattice) {
    throw UsageError("dyadic cubes are built on Z^d only, got " + phi.group().describe());
  }
}

}  // namespace

CZDecomposition cz_decompose(const AlgebraElement& phi, double lambda, std::uint64_t volume_cap) {
  require_lattice(phi);
  if (!(lambda > 0.0)) throw UsageError("lambda must be positive");
  const GroupModel& group = phi.group();
  const int d = group.rank();
  CZDecomposition out{lambda, std::ldexp(lambda, -(d + 1)), std::ldexp(1.0, d + 1),
                      AlgebraElement(group), {}};
  const double height = out.stopping_height;
  const double mass = lp_norm(phi, Norm::kOne);
  unsigned top = 0;
  while (std::ldexp(1.0, static_cast<int>(top) * d) < mass / height) ++top;

  const auto terms = phi.terms();
  std::vector<std::size_t> remaining(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) remaining[i] = i;
  std::vector<DyadicCube> selected;
  for (unsigned s = top; s-- > 0;) {
    std::map<DyadicCube, double> sums;
    for (std::size_t i : remaining) sums[cube_of(terms[i].g, s, d)] += std::abs(terms[i].coeff);
    std::set<DyadicCube> picked;
    const double volume = std::ldexp(1.0, static_cast<int>(s) * d);
    for (const auto& [q, sum] : sums) {
      if (sum / volume > height) picked.insert(q);
    }
    if (picked.empty()) continue;
    selected.insert(selected.end(), picked.begin(), picked.end());
    std::erase_if(remaining,
                  [&](std::size_t i) { return picked.count(cube_of(terms[i].g, s, d)) > 0; });
  }
  std::sort(selected.begin(), selected.end());

  std::vector<Term> good_terms;
  for (std::size_t i : remaining) good_terms.push_back(terms[i]);
  std::vector<std::vector<Term>> inside(selected.size());
  for (const Term& t : terms) {
    for (unsigned s = 0; s < top; ++s) {
      const DyadicCube q = cube_of(t.g, s, d);
      auto it = std::lower_bound(selected.begin(), selected.end(), q);
      if (it != selected.end() && *it == q) {
        inside[static_cast<std::size_t>(it - selected.begin())].push_back(t);
        break;
      }
    }
  }
  // A cube where |phi| <= lambda throughout can stay in the good part.
  std::vector<std::uint8_t> keep(selected.size(), 0);
  std::uint64_t total_volume = 0;
  for (std::size_t c = 0; c < selected.size(); ++c) {
    keep[c] = std::any_of(inside[c].begin(), inside[c].end(),
                          [lambda](const Term& t) { return std::abs(t.coeff) > lambda; });
    if (keep[c]) {
      total_volume += selected[c].volume();
    } else {
      good_terms.insert(good_terms.end(), inside[c].begin(), inside[c].end());
    }
  }
  if (total_volume > volume_cap) {
    throw ResourceError("selected cubes cover " + std::to_string(total_volume) +
                        " points, above the cap of " + std::to_string(volume_cap));
  }
  for (std::size_t c = 0; c < selected.size(); ++c) {
    if (!keep[c]) continue;
    const DyadicCube& q = selected[c];
    double sum = 0.0;
    for (const Term& t : inside[c]) sum += t.coeff;
    const double average = sum / static_cast<double>(q.volume());
    const AlgebraElement local = AlgebraElement::from_terms(group, inside[c]);
    std::vector<Term> piece;
    for_each_point(q, [&](const Element& g) {
      piece.push_back(Term{g, local.coefficient(g) - average});
      if (average != 0.0) good_terms.push_back(Term{g, average});
    });
    out.bad.push_back(BadPiece{q, AlgebraElement::from_terms(group, std::move(piece)), average});
  }
  out.good = AlgebraElement::from_terms(group, std::move(good_terms));
  return out;
}

CZCheck check_invariants(const CZDecomposition& decomposition, const AlgebraElement& phi,
                         double constant, double tol) {
  CZCheck check;
  const double lambda = decomposition.lambda;
  const int d = phi.group().rank();
  AlgebraElement total = decomposition.good;
  std::vector<Term> all(decomposition.good.terms().begin(), decomposition.good.terms().end());
  for (const BadPiece& b : decomposition.bad) {
    all.insert(all.end(), b.piece.terms().begin(), b.piece.terms().end());
  }
  total = AlgebraElement::from_terms(phi.group(), std::move(all));
  check.recombines = approx_equal(total, phi, tol);
  check.good_sup = lp_norm(decomposition.good, Norm::kInf);
  check.good_bounded = check.good_sup <= std::ldexp(lambda, d) * (1.0 + tol);
  check.pieces_bounded = true;
  std::set<DyadicCube> cubes;
  std::set<unsigned> levels;
  for (const BadPiece& b : decomposition.bad) {
    const double volume = static_cast<double>(b.cube.volume());
    if (lp_norm(b.piece, Norm::kOne) > lambda * volume * (1.0 + tol)) check.pieces_bounded = false;
    for (const Term& t : b.piece.terms()) {
      if (!b.cube.contains(t.g)) check.pieces_bounded = false;
    }
    check.cube_measure += volume;
    cubes.insert(b.cube);
    levels.insert(b.cube.level);
  }
  check.disjoint = cubes.size() == decomposition.bad.size();
  for (const DyadicCube& q : cubes) {
    for (unsigned level : levels) {
      if (level <= q.level) continue;
      Element corner;
      for (int i = 0; i < d; ++i) {
        const auto k = static_cast<std::size_t>(i);
        corner.c[k] = q.index[k] * q.side();
      }
      if (cubes.count(cube_of(corner, level, d))) check.disjoint = false;
    }
  }
  check.measure_bounded =
      check.cube_measure <= constant / lambda * lp_norm(phi, Norm::kOne) * (1.0 + tol);
  return check;
}

BadSplit split_bad(const CZDecomposition& decomposition, unsigned j, double r_j, double lambda) {
  if (!(r_j > 0.0)) throw UsageError("r_j must be positive");
  BadSplit out;
  out.j = j;
  out.threshold = lambda * r_j;
  for (const BadPiece& b : decomposition.bad) {
    std::vector<Term> small, large;
    for (const Term& t : b.piece.terms()) {
      (std::abs(t.coeff) > out.threshold ? small : large).push_back(t);
    }
    out.cubes.push_back(b.cube);
    out.small.push_back(AlgebraElement::from_terms(b.piece.group(), std::move(small)));
    out.large.push_back(AlgebraElement::from_terms(b.piece.group(), std::move(large)));
  }
  return out;
}

AlgebraElement level_sum(const BadSplit& split, unsigned level) {
  if (split.large.empty()) throw UsageError("no bad pieces to sum");
  std::vector<Term> terms;
  for (std::size_t i = 0; i < split.cubes.size(); ++i) {
    if (split.cubes[i].level != level) continue;
    terms.insert(terms.end(), split.large[i].terms().begin(), split.large[i].terms().end());
  }
  return AlgebraElement::from_terms(split.large.front().group(), std::move(terms));
}

AlgebraElement random_measure(const SelectorField& field) {
  if (field.beta() == 0.0) throw UndefinedError("random measure with beta = 0");
  std::vector<Term> terms;
  const auto elements = field.ball().elements();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (field.values()[i]) terms.push_back(Term{elements[i], 1.0 / field.beta()});
  }
  return AlgebraElement::from_terms(field.ball().group(), std::move(terms));
}

AlgebraElement expected_measure(const Ball& ball, const TauProfile& profile) {
  const double b = beta(ball, profile);
  if (b == 0.0) throw UndefinedError("expected measure with beta = 0");
  std::vector<Term> terms;
  for (std::size_t i = 0; i < ball.size(); ++i) {
    const double tau = profile(ball.lengths()[i]);
    if (tau > 0.0) terms.push_back(Term{ball.elements()[i], tau / b});
  }
  return AlgebraElement::from_terms(ball.group(), std::move(terms));
}

std::vector<AlgebraElement> weak_corpus(std::size_t size, std::int64_t span, std::uint64_t seed) {
  if (span < 4) throw UsageError("corpus span must be at least 4");
  const GroupModel z = GroupModel::lattice(1);
  std::vector<AlgebraElement> out;
  for (std::size_t c = 0; c < size; ++c) {
    CounterStream rng(derive_seed(seed, c));
    std::vector<Term> terms;
    switch (c % 3) {
      case 0:
        terms.push_back(Term{make_element(rng.between(0, span - 1)), 1.0});
        break;
      case 1: {
        const auto count = rng.between(2, 8);
        for (std::int64_t i = 0; i < count; ++i) {
          const double sign = rng.below(2) ? 1.0 : -1.0;
          terms.push_back(Term{make_element(rng.between(0, span - 1)),
                               sign * (0.1 + 0.9 * rng.uniform())});
        }
        break;
      }
      default: {
        const std::int64_t length = rng.between(1, span / 4);
        const std::int64_t start = rng.between(0, span - length);
        for (std::int64_t n = start; n < start + length; ++n) {
          terms.push_back(Term{make_element(n), 1.0});
        }
      }
    }
    out.push_back(AlgebraElement::from_terms(z, std::move(terms)));
  }
  return out;
}

WeakConstantReport maximal_weak11_empirical(const std::vector<AlgebraElement>& measures,
                                            const std::vector<AlgebraElement>& corpus,
                                            const std::vector<double>& fractions,
                                            unsigned workers) {
  if (corpus.empty()) throw UsageError("weak (1,1) estimate needs a nonempty corpus");
  if (measures.empty()) throw UsageError("weak (1,1) estimate needs at least one measure");
  WeakConstantReport report;
  report.per_function.assign(corpus.size(), 0.0);
  parallel_for(corpus.size(), workers, [&](std::size_t c) {
    const AlgebraElement& phi = corpus[c];
    const double mass = lp_norm(phi, Norm::kOne);
    if (mass == 0.0) throw UsageError("corpus members must be nonzero");
    std::unordered_map<Element, double, ElementHash> sup;
    for (const AlgebraElement& mu : measures) {
      const AlgebraElement image = convolve(phi, mu);
      for (const Term& t : image.terms()) {
        double& v = sup[t.g];
        v = std::max(v, std::abs(t.coeff));
      }
    }
    std::vector<double> values;
    values.reserve(sup.size());
    for (const auto& [g, v] : sup) values.push_back(v);
    std::sort(values.begin(), values.end());
    const double top = values.empty() ? 0.0 : values.back();
    double best = 0.0;
    for (double f : fractions) {
      const double lambda = f * top;
      if (!(lambda > 0.0)) continue;
      const auto above = values.end() - std::upper_bound(values.begin(), values.end(), lambda);
      best = std::max(best, lambda * static_cast<double>(above) / mass);
    }
    report.per_function[c] = best;
  });
  report.constant = *std::max_element(report.per_function.begin(), report.per_function.end());
  return report;
}

WeakStabilityReport weak11_stability(const WeakStabilityOptions& options) {
  if (options.seeds.empty()) throw UsageError("weak (1,1) stability needs seeds");
  if (options.jmax == 0 || options.jmax > 24) throw UsageError("jmax must lie in [1, 24]");
  const GroupModel z = GroupModel::lattice(1);
  const TauProfile profile = TauProfile::power_law(options.alpha);
  unsigned top = options.jmax;
  for (unsigned j : options.deterministic_jmax) top = std::max(top, j);
  std::vector<std::shared_ptr<const Ball>> balls;
  for (unsigned j = 1; j <= top; ++j) {
    balls.push_back(std::make_shared<const Ball>(word_ball(z, 1u << j)));
  }
  const auto corpus = weak_corpus(options.corpus_size, std::int64_t{1} << options.jmax,
                                  options.corpus_seed);
  std::vector<double> fractions;
  for (std::size_t i = 0; i < options.grid; ++i) {
    fractions.push_back(0.95 * std::ldexp(1.0, -static_cast<int>(i)));
  }
  auto spread_of = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0.0 ? *hi / *lo : std::numeric_limits<double>::infinity();
  };

  WeakStabilityReport report;
  report.seed_constants.assign(options.seeds.size(), 0.0);
  parallel_for(options.seeds.size(), options.workers, [&](std::size_t s) {
    std::vector<AlgebraElement> measures;
    for (unsigned j = 1; j <= options.jmax; ++j) {
      measures.push_back(random_measure(sample_field(balls[j - 1], profile, options.seeds[s])));
    }
    report.seed_constants[s] = maximal_weak11_empirical(measures, corpus, fractions, 1).constant;
  });
  report.spread = spread_of(report.seed_constants);
  report.stable = report.spread <= options.spread_limit;
  for (unsigned jm : options.deterministic_jmax) {
    std::vector<AlgebraElement> measures;
    for (unsigned j = 1; j <= jm; ++j) measures.push_back(expected_measure(*balls[j - 1], profile));
    report.deterministic_constants.push_back(
        maximal_weak11_empirical(measures, corpus, fractions, options.workers).constant);
  }
  if (!report.deterministic_constants.empty()) {
    report.deterministic_spread = spread_of(report.deterministic_constants);
    report.deterministic_stable =
        std::isfinite(report.deterministic_spread) &&
        report.deterministic_spread <= options.spread_limit;
  }
  return report;
}

DoublingReport r_j_doubling_check(const std::vector<double>& r) {
  DoublingReport out;
  if (r.empty()) return out;
  double prefix = 0.0;
  for (double v : r) {
    if (!(v > 0.0)) throw UsageError("r_j must be positive");
    prefix += v;
    out.ratios.push_back(prefix / v);
  }
  out.c0 = *std::max_element(out.ratios.begin(), out.ratios.end());
  out.bounded = out.ratios.back() <= 1.5 * out.ratios[(out.ratios.size() - 1) / 2];
  return out;
}

unsigned stopping_level(double radius) {
  unsigned s = 0;
  while (std::ldexp(1.0, static_cast<int>(s)) < radius) ++s;
  return s;
}

bool e4_containment(const DyadicCube& cube, const AlgebraElement& piece,
                    const AlgebraElement& nu) {
  const AlgebraElement image = convolve(piece, nu);
  for (const Term& t : image.terms()) {
    if (cube.distance(t.g) > cube.side()) return false;
  }
  return true;
}

Lemma42Terms lemma42_terms(const AlgebraElement& b_s, const AlgebraElement& nu, double r_j,
                           double lambda, double eps, unsigned j) {
  Lemma42Terms out;
  const double lhs_norm = lp_norm(convolve(b_s, nu), Norm::kTwo);
  const double two = lp_norm(b_s, Norm::kTwo);
  out.lhs = lhs_norm * lhs_norm;
  out.term1 = two * two / r_j;
  out.term2 = lambda * std::exp2(-eps * j) * lp_norm(b_s, Norm::kOne);
  const double denom = out.term1 + out.term2;
  out.required_constant = denom > 0.0 ? out.lhs / denom : 0.0;
  return out;
}

}  // namespace ergolab
