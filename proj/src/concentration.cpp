#include "ergolab/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/stats.hpp"

namespace ergolab {

// ---------------------------------------------------------------- fields

CenteredField::CenteredField(GroupModel group, std::vector<Element> support,
                             std::vector<double> tau)
    : group_(std::move(group)), support_(std::move(support)), tau_(std::move(tau)) {
  if (support_.size() != tau_.size()) throw UsageError("one mean per support element required");
  std::vector<Element> sorted = support_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw UsageError("support elements must be distinct");
  }
  for (double t : tau_) {
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("means must lie in [0, 1]");
  }
}

CenteredField CenteredField::with_constant(GroupModel group, std::vector<Element> support,
                                           double tau) {
  std::vector<double> taus(support.size(), tau);
  return CenteredField(std::move(group), std::move(support), std::move(taus));
}

CenteredField CenteredField::with_profile(GroupModel group, std::vector<Element> support,
                                          const TauProfile& profile) {
  std::vector<double> taus;
  taus.reserve(support.size());
  for (const Element& g : support) taus.push_back(profile(word_length(group, g)));
  return CenteredField(std::move(group), std::move(support), std::move(taus));
}

double CenteredField::variance_sum() const {
  double acc = 0.0;
  for (double t : tau_) acc += t * (1.0 - t);
  return acc;
}

double CenteredField::variance_square_sum() const {
  double acc = 0.0;
  for (double t : tau_) acc += t * (1.0 - t) * t * (1.0 - t);
  return acc;
}

std::vector<std::uint8_t> CenteredField::sample(std::uint64_t seed) const {
  std::vector<std::uint8_t> xi(support_.size());
  for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = selector_draw(seed, support_[i], tau_[i]);
  return xi;
}

AlgebraElement CenteredField::realize(const std::vector<std::uint8_t>& xi) const {
  std::vector<Term> terms;
  terms.reserve(support_.size());
  for (std::size_t i = 0; i < support_.size(); ++i) {
    terms.push_back(Term{support_[i], static_cast<double>(xi[i]) - tau_[i]});
  }
  return AlgebraElement::from_terms(group_, std::move(terms));
}

// ---------------------------------------------------------------- moments

std::uint64_t partition_count(unsigned n) {
  // a(n) = sum_{k=1}^{n-1} C(n-1, k) a(n-1-k): the block of element n holds
  // k of the others.
  std::vector<std::vector<std::uint64_t>> binom(n + 1);
  for (unsigned i = 0; i <= n; ++i) {
    binom[i].assign(i + 1, 1);
    for (unsigned k = 1; k < i; ++k) binom[i][k] = binom[i - 1][k - 1] + binom[i - 1][k];
  }
  std::vector<std::uint64_t> a(n + 1, 0);
  a[0] = 1;
  for (unsigned i = 2; i <= n; ++i) {
    for (unsigned k = 1; k <= i - 1; ++k) a[i] += binom[i - 1][k] * a[i - 1 - k];
  }
  return a[n];
}

namespace {

double moment_statistic(const AlgebraElement& x, unsigned m) {
  const double two = lp_norm(conv_power_selfadjoint(x, m), Norm::kTwo);
  return two * two;
}

double probability_of(const CenteredField& field, const std::vector<std::uint8_t>& xi) {
  double p = 1.0;
  for (std::size_t i = 0; i < xi.size(); ++i) p *= xi[i] ? field.tau()[i] : 1.0 - field.tau()[i];
  return p;
}

}  // namespace

double moment_exact_small(const CenteredField& field, unsigned m) {
  if (field.size() > kExactEnumerationCap) {
    throw ResourceError("exact enumeration is capped at |E| = " +
                        std::to_string(kExactEnumerationCap));
  }
  if (m < 1) throw UsageError("moment order M must be >= 1");
  const std::size_t n = field.size();
  double acc = 0.0;
  std::vector<std::uint8_t> xi(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) xi[i] = (mask >> i) & 1U;
    const double p = probability_of(field, xi);
    if (p == 0.0) continue;
    acc += p * moment_statistic(field.realize(xi), m);
  }
  return acc;
}

MomentEstimate moment_bound_mc(const CenteredField& field, unsigned m, std::size_t trials,
                               std::uint64_t seed, unsigned workers) {
  if (trials < 100) throw UsageError("moment estimation needs at least 100 trials");
  if (m < 1) throw UsageError("moment order M must be >= 1");
  std::vector<double> values(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    values[t] = moment_statistic(field.realize(field.sample(derive_seed(seed, t))), m);
  });
  MomentEstimate out;
  out.trials = trials;
  out.estimate = stats::mean(values);
  out.standard_error = stats::standard_error(values);
  out.variance_sum = field.variance_sum();
  out.rhs = std::pow(out.variance_sum, 2.0 * m);
  out.ratio = out.rhs > 0.0 ? out.estimate / out.rhs : 0.0;
  out.partition_bound = partition_count(4 * m);
  out.bound_applies = out.variance_sum >= 1.0;
  return out;
}

// ---------------------------------------------------------------- coloring

ColoringPartition shift_graph_coloring(const GroupModel& group, const std::vector<Element>& e,
                                       const Element& h) {
  if (group.is_identity(h)) throw UsageError("shift h must differ from the identity");
  const std::unordered_set<Element, ElementHash> members(e.begin(), e.end());
  // Vertices: indices of the products, kept in input order.
  std::vector<Element> vertices;
  std::unordered_set<Element, ElementHash> vertex_set;
  for (const Element& g : e) {
    if (members.count(group.multiply(h, g)) && vertex_set.insert(g).second) vertices.push_back(g);
  }
  const Element h_inv = group.inverse(h);
  std::unordered_map<Element, int, ElementHash> color;
  auto walk = [&](Element start, bool cycle) {
    std::vector<Element> chain;
    Element g = start;
    do {
      chain.push_back(g);
      g = group.multiply(h, g);
    } while (vertex_set.count(g) && !(cycle && g == start));
    for (std::size_t i = 0; i < chain.size(); ++i) color[chain[i]] = static_cast<int>(i % 2);
    if (cycle && chain.size() % 2 == 1) color[chain.back()] = 2;
  };
  for (const Element& g : vertices) {
    if (!vertex_set.count(group.multiply(h_inv, g))) walk(g, false);
  }
  for (const Element& g : vertices) {
    if (!color.count(g)) walk(g, true);
  }
  ColoringPartition out;
  out.h = h;
  std::vector<std::vector<Element>> classes(3);
  for (const Element& g : vertices) classes[static_cast<std::size_t>(color.at(g))].push_back(g);
  for (auto& c : classes) {
    if (!c.empty()) out.classes.push_back(std::move(c));
  }
  return out;
}

bool coloring_is_valid(const GroupModel& group, const std::vector<Element>& e,
                       const ColoringPartition& partition) {
  if (partition.classes.size() > 3) return false;
  const std::unordered_set<Element, ElementHash> members(e.begin(), e.end());
  std::unordered_set<Element, ElementHash> expected;
  for (const Element& g : e) {
    if (members.count(group.multiply(partition.h, g))) expected.insert(g);
  }
  std::unordered_set<Element, ElementHash> seen;
  for (const auto& cls : partition.classes) {
    std::unordered_set<Element, ElementHash> used;
    for (const Element& g : cls) {
      if (!expected.count(g) || !seen.insert(g).second) return false;
      if (!used.insert(g).second) return false;
      if (!used.insert(group.multiply(partition.h, g)).second) return false;
    }
  }
  return seen.size() == expected.size();
}

// ---------------------------------------------------------------- Chernoff

namespace {

double off_identity_sup(const AlgebraElement& p) {
  double best = 0.0;
  for (const Term& t : p.terms()) {
    if (!p.group().is_identity(t.g)) best = std::max(best, std::abs(t.coeff));
  }
  return best;
}

}  // namespace

ChernoffReport chernoff_tail_check(const CenteredField& field, double theta, std::size_t trials,
                                   std::uint64_t seed, unsigned workers) {
  if (!(theta > 0.0)) throw UsageError("theta must be positive");
  if (trials < 1) throw UsageError("Chernoff check needs at least one trial");
  ChernoffReport out;
  out.trials = trials;
  const double s2 = field.variance_square_sum();
  const double s = std::sqrt(s2);
  out.bound_applies = s2 >= 1.0;
  out.threshold = theta * s;
  const double e2 = static_cast<double>(field.size()) * static_cast<double>(field.size());
  out.bound = 6.0 * e2 * std::max(std::exp(-theta * theta / 36.0), std::exp(-theta / 6.0));
  out.in_proof_bound =
      6.0 * e2 * std::max(std::exp(-theta * theta / 36.0), std::exp(-theta * s / 6.0));
  out.vacuous = out.bound >= 1.0;
  std::vector<std::uint8_t> hits(trials, 0);
  parallel_for(trials, workers, [&](std::size_t t) {
    const AlgebraElement x = field.realize(field.sample(derive_seed(seed, t)));
    const double sup = off_identity_sup(convolve(x, involution(x)));
    hits[t] = out.threshold > 0.0 ? (sup >= out.threshold) : 0;
  });
  std::size_t count = 0;
  for (auto v : hits) count += v;
  out.empirical = static_cast<double>(count) / static_cast<double>(trials);
  if (out.vacuous) {
    out.pass = true;
  } else {
    out.standard_error = std::sqrt(out.bound * (1.0 - out.bound) / static_cast<double>(trials));
    out.pass = out.empirical <= out.bound + 3.0 * out.standard_error;
  }
  return out;
}

// ---------------------------------------------------------------- nu bounds

AlgebraElement nu_measure(const SelectorField& field) {
  std::vector<Term> terms;
  const auto elements = field.ball().elements();
  if (field.beta() == 0.0) return AlgebraElement(field.ball().group());
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const double eta = static_cast<double>(field.values()[i]) - field.tau_at(i);
    if (eta != 0.0) terms.push_back(Term{elements[i], eta / field.beta()});
  }
  return AlgebraElement::from_terms(field.ball().group(), std::move(terms));
}

std::vector<NuBoundRow> nu_conv_bound_check(const GroupModel& group, const TauProfile& profile,
                                            unsigned jmin, unsigned jmax, double kappa,
                                            std::uint64_t seed) {
  if (jmin > jmax || jmax > 30) throw UsageError("need jmin <= jmax <= 30");
  std::vector<NuBoundRow> rows;
  for (unsigned j = jmin; j <= jmax; ++j) {
    auto ball = std::make_shared<const Ball>(word_ball(group, 1U << j));
    const SelectorField field = sample_field(ball, profile, seed);
    NuBoundRow row;
    row.j = j;
    row.beta = field.beta();
    row.tau_square_sum = tau_square_sum(ball->level_counts(), profile);
    const AlgebraElement nu = nu_measure(field);
    const AlgebraElement p = convolve(nu, involution(nu));
    row.identity = p.coefficient(group.identity());
    double eta2 = 0.0;
    for (std::size_t i = 0; i < ball->size(); ++i) {
      const double eta = static_cast<double>(field.values()[i]) - field.tau_at(i);
      eta2 += eta * eta;
    }
    row.identity_formula = row.beta > 0.0 ? eta2 / (row.beta * row.beta) : 0.0;
    row.off_identity_sup = off_identity_sup(p);
    if (row.beta > 0.0) {
      row.identity_ratio = row.identity / (3.0 / row.beta);
      const double scale =
          std::sqrt(row.tau_square_sum) * std::exp2(kappa * j) / (row.beta * row.beta);
      row.off_ratio = scale > 0.0 ? row.off_identity_sup / scale : 0.0;
    }
    rows.push_back(row);
  }
  return rows;
}

NearOptimality near_optimality_estimate(const GroupModel& group, double alpha, unsigned j,
                                        const Element& h, std::size_t trials, std::uint64_t seed,
                                        unsigned workers) {
  if (group.is_identity(h)) throw UsageError("near-optimality needs h != e");
  if (trials < 2) throw UsageError("near-optimality needs at least two trials");
  const TauProfile profile = TauProfile::power_law(alpha);
  auto ball = std::make_shared<const Ball>(word_ball(group, 1U << j));
  const double b = beta(*ball, profile);
  NearOptimality out;
  out.scale = std::exp2((-3.0 * group.growth_degree() + 2.0 * alpha) * j);
  if (b == 0.0) return out;
  double acc = 0.0;
  const auto elements = ball->elements();
  const auto lengths = ball->lengths();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto other = ball->length_of(group.multiply(h, elements[i]));
    if (!other) continue;
    const double t1 = profile(lengths[i]);
    const double t2 = profile(*other);
    acc += t1 * (1.0 - t1) * t2 * (1.0 - t2);
  }
  out.exact = acc / (b * b * b * b);
  std::vector<double> values(trials);
  parallel_for(trials, workers, [&](std::size_t t) {
    const SelectorField field = sample_field(ball, profile, derive_seed(seed, t));
    const AlgebraElement nu = nu_measure(field);
    const double c = convolution_coefficient(nu, involution(nu), h);
    values[t] = c * c;
  });
  out.estimate = stats::mean(values);
  out.standard_error = stats::standard_error(values);
  out.ratio = out.scale > 0.0 ? out.estimate / out.scale : 0.0;
  return out;
}

TailReport borel_cantelli_tail_report(const GroupModel& group, double alpha, unsigned m,
                                      double eps, unsigned jmin, unsigned jmax, unsigned j0,
                                      std::uint64_t seed) {
  if (m < 1) throw UsageError("moment order M must be >= 1");
  if (jmin < 1 || jmin > jmax || jmax > 30) throw UsageError("need 1 <= jmin <= jmax <= 30");
  const TauProfile profile = TauProfile::power_law(alpha);
  const double d = group.growth_degree();
  TailReport report;
  report.precondition = d * (2.0 * m - 1.0) > 2.0 * m * alpha;
  for (unsigned j = jmin; j <= jmax; ++j) {
    auto ball = std::make_shared<const Ball>(word_ball(group, 1U << j));
    const SelectorField field = sample_field(ball, profile, seed);
    const AlgebraElement nu = nu_measure(field);
    TailRow row;
    row.j = j;
    row.lhs = lp_norm(conv_power_selfadjoint(nu, m), Norm::kOne);
    row.one_norm_power = std::pow(lp_norm(convolve(involution(nu), nu), Norm::kOne), m);
    row.lambda = std::pow(static_cast<double>(j), -static_cast<double>(m) * (1.0 + eps));
    row.exceeds = row.lhs > row.lambda;
    if (row.exceeds && j > j0) ++report.exceedances_beyond;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace ergolab
