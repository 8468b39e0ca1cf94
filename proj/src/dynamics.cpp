#include "ergolab/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/stats.hpp"

namespace ergolab {

namespace {

double frac(double v) { return v - std::floor(v); }

std::int64_t mod(std::int64_t a, std::int64_t q) { return ((a % q) + q) % q; }

std::int64_t parse_int(std::string_view s, std::string_view context) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("malformed integer in '" + std::string(context) + "'");
  }
  return v;
}

double parse_real(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("malformed number in '" + std::string(context) + "'");
  }
  return v;
}

const double kGoldenFrac = std::numbers::phi - 1.0;
const std::array<double, 3> kTorusTheta = {std::numbers::sqrt2 - 1.0, std::sqrt(3.0) - 1.0,
                                           std::sqrt(5.0) - 2.0};

// Additive recurrence constants 1 / phi_d^k, phi_d the positive root of
// x^(d+1) = x + 1.
std::array<double, 3> recurrence_constants(int d) {
  double phi = 2.0;
  for (int i = 0; i < 64; ++i) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) out[static_cast<std::size_t>(k)] = std::pow(1.0 / phi, k + 1);
  return out;
}

}  // namespace

DynSystem::DynSystem(std::string name, GroupModel group, SpaceKind space, int dimension)
    : name_(std::move(name)), group_(std::move(group)), space_(space), dimension_(dimension) {}

DynSystem DynSystem::rotation(double theta) {
  if (!std::isfinite(theta)) throw ConfigError("rotation angle must be finite");
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, theta);
  DynSystem sys("rotation:" + std::string(buf, res.ptr), GroupModel::lattice(1),
                SpaceKind::kCircle, 1);
  sys.theta_ = {frac(theta)};
  return sys;
}

DynSystem DynSystem::rational_rotation(std::int64_t p, std::int64_t q) {
  if (q < 1) throw ConfigError("rational rotation needs a positive denominator");
  const std::int64_t g = std::gcd(mod(p, q), q);
  const std::int64_t num = mod(p, q) / g;
  const std::int64_t den = q / g;
  DynSystem sys("rotation:" + std::to_string(num) + "/" + std::to_string(den),
                GroupModel::lattice(1), SpaceKind::kCircle, 1);
  sys.theta_ = {static_cast<double>(num) / static_cast<double>(den)};
  sys.numerator_ = num;
  sys.modulus_ = den;
  sys.period_ = den;
  return sys;
}

DynSystem DynSystem::torus(int dimension, std::vector<double> theta) {
  if (dimension < 1 || dimension > 3) throw ConfigError("torus systems need 1 <= d <= 3");
  if (theta.empty()) theta.assign(kTorusTheta.begin(), kTorusTheta.begin() + dimension);
  if (theta.size() != static_cast<std::size_t>(dimension)) {
    throw ConfigError("torus system needs one angle per dimension");
  }
  DynSystem sys("torus:" + std::to_string(dimension), GroupModel::lattice(dimension),
                SpaceKind::kTorus, dimension);
  for (double& t : theta) t = frac(t);
  sys.theta_ = std::move(theta);
  return sys;
}

DynSystem DynSystem::cycle(std::int64_t q) {
  if (q < 2) throw ConfigError("cycle systems need q >= 2");
  DynSystem sys("cycle:" + std::to_string(q), GroupModel::lattice(1), SpaceKind::kCycle, 1);
  sys.modulus_ = q;
  return sys;
}

DynSystem DynSystem::heisenberg(double theta1, double theta2) {
  DynSystem sys("heis", GroupModel::heisenberg(), SpaceKind::kTorus, 3);
  sys.theta_ = {frac(theta1), frac(theta2)};
  return sys;
}

Point DynSystem::act(const Element& g, const Point& p) const {
  Point out = p;
  if (space_ == SpaceKind::kCycle) {
    out.x[0] = static_cast<double>(mod(static_cast<std::int64_t>(p.x[0]) + g.c[0], modulus_));
    return out;
  }
  if (group_.kind() == GroupKind::kHeisenberg) {
    const double gp = static_cast<double>(g.c[0]);
    const double gq = static_cast<double>(g.c[1]);
    const double gr = static_cast<double>(g.c[2]);
    out.x[0] = frac(p.x[0] + frac(gp * theta_[0]));
    out.x[1] = frac(p.x[1] + frac(gq * theta_[1]));
    out.x[2] = frac(p.x[2] + frac(gr * theta_[1]) + frac(gp * p.x[1]));
    return out;
  }
  if (period_) {
    const std::int64_t step = mod(mod(g.c[0], modulus_) * numerator_, modulus_);
    out.x[0] = frac(p.x[0] + static_cast<double>(step) / static_cast<double>(modulus_));
    return out;
  }
  for (int i = 0; i < dimension_; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.x[k] = frac(p.x[k] + frac(static_cast<double>(g.c[k]) * theta_[k]));
  }
  return out;
}

Point DynSystem::from_uniform(const std::array<double, 3>& u) const {
  Point p;
  if (space_ == SpaceKind::kCycle) {
    p.x[0] = std::min(std::floor(u[0] * static_cast<double>(modulus_)),
                      static_cast<double>(modulus_ - 1));
    return p;
  }
  for (int i = 0; i < dimension_; ++i) p.x[static_cast<std::size_t>(i)] = u[static_cast<std::size_t>(i)];
  return p;
}

std::vector<Point> DynSystem::sample_points(std::size_t count) const {
  std::vector<Point> out;
  out.reserve(count + 1);
  const auto step = recurrence_constants(dimension_);
  for (std::size_t i = 1; i <= count; ++i) {
    std::array<double, 3> u{};
    for (std::size_t k = 0; k < 3; ++k) u[k] = frac(0.5 + static_cast<double>(i) * step[k]);
    out.push_back(from_uniform(u));
  }
  out.push_back(Point{});
  return out;
}

DynSystem make_system(std::string_view spec) {
  const auto colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : spec.substr(colon + 1);
  if (head == "rotation") {
    if (rest == "golden") return DynSystem::rotation(kGoldenFrac);
    if (rest == "sqrt2") return DynSystem::rotation(std::numbers::sqrt2 - 1.0);
    if (const auto slash = rest.find('/'); slash != std::string_view::npos) {
      return DynSystem::rational_rotation(parse_int(rest.substr(0, slash), spec),
                                          parse_int(rest.substr(slash + 1), spec));
    }
    if (!rest.empty()) return DynSystem::rotation(parse_real(rest, spec));
  }
  if (head == "torus" && !rest.empty()) {
    return DynSystem::torus(static_cast<int>(parse_int(rest, spec)));
  }
  if (head == "cycle" && !rest.empty()) return DynSystem::cycle(parse_int(rest, spec));
  if (head == "heis" && colon == std::string_view::npos) {
    return DynSystem::heisenberg(kGoldenFrac, std::numbers::sqrt2 - 1.0);
  }
  throw ConfigError("unknown system '" + std::string(spec) +
                    "' (expected rotation:golden, rotation:<p>/<q>, rotation:<theta>, "
                    "torus:<d>, cycle:<q> or heis)");
}

Observable make_observable(const DynSystem& sys, std::string_view spec) {
  const bool cycle = sys.space() == SpaceKind::kCycle;
  const double q = static_cast<double>(sys.modulus());
  const double scale = cycle ? 1.0 / q : 1.0;
  const auto colon = spec.find(':');
  const std::string_view head = spec.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : spec.substr(colon + 1);
  if (head == "cos1" && rest.empty()) {
    return {"cos1", [scale](const Point& p) { return std::cos(2.0 * std::numbers::pi * scale * p.x[0]); },
            0.0};
  }
  if (head == "cosk" && !rest.empty()) {
    const std::int64_t k = parse_int(rest, spec);
    const bool trivial = cycle ? k % sys.modulus() == 0 : k == 0;
    const double kd = static_cast<double>(k);
    return {std::string(spec),
            [scale, kd](const Point& p) { return std::cos(2.0 * std::numbers::pi * kd * scale * p.x[0]); },
            trivial ? 1.0 : 0.0};
  }
  if (head == "const" && !rest.empty()) {
    const double c = parse_real(rest, spec);
    return {std::string(spec), [c](const Point&) { return c; }, c};
  }
  if (head == "identity" && rest.empty()) {
    return {"identity", [](const Point& p) { return p.x[0]; }, cycle ? (q - 1.0) / 2.0 : 0.5};
  }
  if (head == "indicator0" && rest.empty()) {
    if (!cycle) throw ConfigError("indicator0 is defined on cycle systems only");
    return {"indicator0", [](const Point& p) { return p.x[0] == 0.0 ? 1.0 : 0.0; }, 1.0 / q};
  }
  throw ConfigError("unknown observable '" + std::string(spec) +
                    "' (expected cos1, cosk:<k>, const:<c>, identity or indicator0)");
}

double reference_value(const DynSystem& sys, const Observable& f, const Point& x) {
  if (!sys.period()) return f.integral;
  const std::int64_t q = *sys.period();
  double acc = 0.0;
  for (std::int64_t k = 0; k < q; ++k) acc += f.eval(sys.act(make_element(k), x));
  return acc / static_cast<double>(q);
}

namespace {

void require_ball_group(const DynSystem& sys, const Ball& ball) {
  if (!sys.group().same_group(ball.group())) {
    throw UsageError("ball over " + ball.group().describe() + " does not match system group " +
                     sys.group().describe());
  }
}

}  // namespace

double ergodic_average(const DynSystem& sys, const Observable& f, const Point& x,
                       const Ball& ball) {
  require_ball_group(sys, ball);
  double acc = 0.0;
  for (const Element& g : ball.elements()) acc += f.eval(sys.act(g, x));
  return acc / static_cast<double>(ball.size());
}

double ergodic_average(const DynSystem& sys, const Observable& f, const Point& x,
                       std::uint32_t radius, std::size_t cap) {
  return ergodic_average(sys, f, x, word_ball(sys.group(), radius, cap));
}

double expected_average(const DynSystem& sys, const Observable& f, const Point& x,
                        const SelectorField& field) {
  require_ball_group(sys, field.ball());
  if (field.beta() == 0.0) throw UndefinedError("expected average with beta(N) = 0");
  double acc = 0.0;
  const auto elements = field.ball().elements();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const double t = field.tau_at(i);
    if (t != 0.0) acc += t * f.eval(sys.act(elements[i], x));
  }
  return acc / field.beta();
}

double random_average(const DynSystem& sys, const Observable& f, const Point& x,
                      const SelectorField& field) {
  require_ball_group(sys, field.ball());
  if (field.beta() == 0.0) throw UndefinedError("random average with beta(N) = 0");
  double acc = 0.0;
  const auto elements = field.ball().elements();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (field.values()[i]) acc += f.eval(sys.act(elements[i], x));
  }
  return acc / field.beta();
}

AverageReport convergence_diagnostic(const DynSystem& sys, const Observable& f,
                                     const TauProfile& profile,
                                     const DiagnosticOptions& options) {
  if (options.radii.empty()) throw UsageError("diagnostic needs at least one radius");
  if (!std::is_sorted(options.radii.begin(), options.radii.end())) {
    throw UsageError("diagnostic radii must be increasing");
  }
  if (options.seeds.empty()) throw UsageError("diagnostic needs at least one seed");
  AverageReport report;
  report.radii = options.radii;
  const std::vector<Point> points =
      options.points.empty() ? sys.sample_points() : options.points;
  for (const Point& p : points) report.references.push_back(reference_value(sys, f, p));

  const Ball ball = word_ball(sys.group(), options.radii.back(), options.cap);
  if (!ball.level_ordered()) throw UsageError("diagnostic needs a level-ordered ball");
  std::vector<double> betas;
  for (std::uint32_t r : options.radii) {
    betas.push_back(beta_from_levels(
        std::span(ball.level_counts()).first(static_cast<std::size_t>(r) + 1), profile));
  }
  for (double b : betas) {
    if (b == 0.0) throw UndefinedError("random average with beta(N) = 0");
  }

  report.per_seed.resize(options.seeds.size());
  const auto elements = ball.elements();
  const auto lengths = ball.lengths();
  parallel_for(options.seeds.size(), options.workers, [&](std::size_t s) {
    SeedTrace& trace = report.per_seed[s];
    trace.seed = options.seeds[s];
    trace.values.assign(points.size(), std::vector<double>(options.radii.size(), 0.0));
    std::vector<double> sums(points.size(), 0.0);
    std::size_t next = 0;
    auto record = [&](std::size_t r) {
      for (std::size_t p = 0; p < points.size(); ++p) trace.values[p][r] = sums[p] / betas[r];
    };
    for (std::size_t i = 0; i < elements.size(); ++i) {
      while (next < options.radii.size() && lengths[i] > options.radii[next]) record(next++);
      if (!selector_draw(trace.seed, elements[i], profile(lengths[i]))) continue;
      for (std::size_t p = 0; p < points.size(); ++p) sums[p] += f.eval(sys.act(elements[i], points[p]));
    }
    while (next < options.radii.size()) record(next++);
    trace.deviations.assign(options.radii.size(), 0.0);
    for (std::size_t r = 0; r < options.radii.size(); ++r) {
      double acc = 0.0;
      for (std::size_t p = 0; p < points.size(); ++p) {
        acc += std::abs(trace.values[p][r] - report.references[p]);
      }
      trace.deviations[r] = acc / static_cast<double>(points.size());
    }
    const std::size_t tail = std::min<std::size_t>(3, options.radii.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
      const auto& v = trace.values[p];
      auto [lo, hi] = std::minmax_element(v.end() - static_cast<std::ptrdiff_t>(tail), v.end());
      trace.tail_oscillation = std::max(trace.tail_oscillation, *hi - *lo);
    }
  });
  for (std::size_t r = 0; r < options.radii.size(); ++r) {
    std::vector<double> column;
    for (const SeedTrace& t : report.per_seed) column.push_back(t.deviations[r]);
    report.medians.push_back(stats::median(std::move(column)));
  }
  return report;
}

bool strictly_decreasing_tail(const std::vector<double>& values, std::size_t count) {
  if (count > values.size()) return false;
  for (std::size_t i = values.size() - count + 1; i < values.size(); ++i) {
    if (!(values[i] < values[i - 1])) return false;
  }
  return true;
}

TransferenceResult transference_identity_check(const DynSystem& sys, const Observable& f,
                                               const Point& x, std::uint32_t k,
                                               const std::vector<AlgebraElement>& measures,
                                               double tol) {
  const GroupModel& group = sys.group();
  const Ball ball = word_ball(group.with_symmetric(true), k);
  TransferenceResult result;
  for (const AlgebraElement& mu : measures) {
    if (!mu.group().same_group(group)) {
      throw UsageError("measure over " + mu.group().describe() + " does not match system group");
    }
    std::unordered_map<Element, double, ElementHash> values;
    for (const Term& t : mu.terms()) {
      for (const Element& g : ball.elements()) {
        const Element vg = group.multiply(t.g, g);
        values.try_emplace(group.inverse(vg), f.eval(sys.act(vg, x)));
      }
    }
    std::vector<Term> terms;
    terms.reserve(values.size());
    for (const auto& [u, v] : values) terms.push_back(Term{u, v});
    const AlgebraElement phi = AlgebraElement::from_terms(group, std::move(terms));
    for (const Element& g : ball.elements()) {
      const Point tg = sys.act(g, x);
      double lhs = 0.0;
      for (const Term& t : mu.terms()) lhs += t.coeff * f.eval(sys.act(t.g, tg));
      const double rhs = convolution_coefficient(phi, mu, group.inverse(g));
      const double err = std::abs(lhs - rhs);
      result.max_error = std::max(result.max_error, err);
      if (err > tol) result.agree = false;
      ++result.comparisons;
    }
  }
  return result;
}

SandwichResult sandwich_check(const DynSystem& sys, const Observable& f, const Point& x,
                              const TauProfile& profile, std::uint64_t seed,
                              const std::vector<double>& a, std::uint64_t nmax) {
  if (sys.group().kind() != GroupKind::kLattice || sys.group().rank() != 1) {
    throw UsageError("sandwich check runs on Z systems");
  }
  std::vector<double> sums(nmax + 1, 0.0), betas(nmax + 1, 0.0);
  for (std::uint64_t n = 1; n <= nmax; ++n) {
    const Element g = make_element(static_cast<std::int64_t>(n));
    const double value = f.eval(sys.act(g, x));
    if (value < 0.0) throw UsageError("sandwich check needs a nonnegative observable");
    const double t = profile(n);
    betas[n] = betas[n - 1] + t;
    sums[n] = sums[n - 1] + (selector_draw(seed, g, t) ? value : 0.0);
  }
  auto first_reaching = [&](double level) -> std::optional<std::uint64_t> {
    auto it = std::lower_bound(betas.begin() + 1, betas.end(), level);
    if (it == betas.end()) return std::nullopt;
    return static_cast<std::uint64_t>(it - betas.begin());
  };
  auto average = [&](std::uint64_t n) { return betas[n] > 0.0 ? sums[n] / betas[n] : 0.0; };
  SandwichResult result;
  for (std::size_t j = 0; j + 1 < a.size(); ++j) {
    const auto lower_index = first_reaching(a[j]);
    const auto next_index = first_reaching(a[j + 1]);
    if (!lower_index || !next_index || *next_index == 0) break;
    const std::uint64_t big_m = *lower_index;
    const std::uint64_t small_m = *next_index - 1;
    const double ratio = a[j + 1] / a[j];
    const double lo = average(big_m) / ratio;
    const double hi = average(small_m) * ratio;
    for (std::uint64_t n = big_m; n <= small_m; ++n) {
      const double v = average(n);
      const double slack = 1e-12 * std::max(1.0, std::abs(v));
      ++result.checked;
      if (v < lo - slack || v > hi + slack) ++result.violations;
    }
  }
  return result;
}

}  // namespace ergolab
