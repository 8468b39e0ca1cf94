#include "ergolab/groups.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "ergolab/error.hpp"
#include "ergolab/rng.hpp"
#include "ergolab/stats.hpp"

namespace ergolab {

std::size_t ElementHash::operator()(const Element& e) const noexcept {
  return static_cast<std::size_t>(key_coordinates(0, e.c));
}

GroupModel::GroupModel(GroupKind kind, int rank, std::int64_t modulus, bool symmetric,
                       std::vector<Element> base)
    : kind_(kind),
      rank_(rank),
      modulus_(modulus),
      symmetric_(symmetric),
      base_generators_(std::move(base)) {
  generators_ = base_generators_;
  if (symmetric_) {
    for (const Element& a : base_generators_) {
      const Element inv = inverse(a);
      if (std::find(generators_.begin(), generators_.end(), inv) == generators_.end()) {
        generators_.push_back(inv);
      }
    }
  }
}

GroupModel GroupModel::lattice(int dimension, bool symmetric) {
  if (dimension < 1 || dimension > static_cast<int>(kMaxCoords)) {
    throw ConfigError("Z^d requires 1 <= d <= " + std::to_string(kMaxCoords) + ", got " +
                      std::to_string(dimension));
  }
  // Semigroup balls use the nonzero 0/1 vectors, so rho is the largest
  // coordinate and |S_N| = (N+1)^d; the symmetric set is the standard basis.
  std::vector<Element> base;
  if (symmetric) {
    for (int i = 0; i < dimension; ++i) {
      Element e;
      e.c[static_cast<std::size_t>(i)] = 1;
      base.push_back(e);
    }
  } else {
    for (unsigned mask = 1; mask < (1u << dimension); ++mask) {
      Element e;
      for (int i = 0; i < dimension; ++i) e.c[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
      base.push_back(e);
    }
  }
  return GroupModel(GroupKind::kLattice, dimension, 0, symmetric, std::move(base));
}

GroupModel GroupModel::heisenberg(bool symmetric) {
  return GroupModel(GroupKind::kHeisenberg, 3, 0, symmetric,
                    {make_element(1, 0, 0), make_element(0, 1, 0)});
}

GroupModel GroupModel::cyclic(std::int64_t modulus, bool symmetric) {
  if (modulus < 2) {
    throw ConfigError("cyclic group needs modulus >= 2, got " + std::to_string(modulus));
  }
  return GroupModel(GroupKind::kCyclic, 1, modulus, symmetric, {make_element(1)});
}

int GroupModel::growth_degree() const noexcept {
  switch (kind_) {
    case GroupKind::kLattice:
      return rank_;
    case GroupKind::kHeisenberg:
      return 4;
    case GroupKind::kCyclic:
      return 0;
  }
  return 0;
}

Element GroupModel::multiply(const Element& a, const Element& b) const noexcept {
  Element r;
  switch (kind_) {
    case GroupKind::kLattice:
      for (int i = 0; i < rank_; ++i) {
        const auto k = static_cast<std::size_t>(i);
        r.c[k] = a.c[k] + b.c[k];
      }
      break;
    case GroupKind::kHeisenberg:
      r.c[0] = a.c[0] + b.c[0];
      r.c[1] = a.c[1] + b.c[1];
      r.c[2] = a.c[2] + b.c[2] + a.c[0] * b.c[1];
      break;
    case GroupKind::kCyclic:
      r.c[0] = (a.c[0] + b.c[0]) % modulus_;
      break;
  }
  return r;
}

Element GroupModel::inverse(const Element& a) const noexcept {
  Element r;
  switch (kind_) {
    case GroupKind::kLattice:
      for (int i = 0; i < rank_; ++i) {
        const auto k = static_cast<std::size_t>(i);
        r.c[k] = -a.c[k];
      }
      break;
    case GroupKind::kHeisenberg:
      r.c[0] = -a.c[0];
      r.c[1] = -a.c[1];
      r.c[2] = -a.c[2] + a.c[0] * a.c[1];
      break;
    case GroupKind::kCyclic:
      r.c[0] = (modulus_ - a.c[0]) % modulus_;
      break;
  }
  return r;
}

bool GroupModel::same_group(const GroupModel& other) const noexcept {
  return kind_ == other.kind_ && rank_ == other.rank_ && modulus_ == other.modulus_;
}

GroupModel GroupModel::with_symmetric(bool symmetric) const {
  if (kind_ == GroupKind::kLattice) return lattice(rank_, symmetric);
  return GroupModel(kind_, rank_, modulus_, symmetric, base_generators_);
}

std::string GroupModel::describe() const {
  switch (kind_) {
    case GroupKind::kLattice:
      return "zd:" + std::to_string(rank_) + (symmetric_ ? ":sym" : "");
    case GroupKind::kHeisenberg:
      return symmetric_ ? "heis3" : "heis3:semi";
    case GroupKind::kCyclic:
      return "cyclic:" + std::to_string(modulus_) + (symmetric_ ? ":sym" : "");
  }
  return {};
}

std::string GroupModel::format(const Element& e) const {
  std::string out;
  for (int i = 0; i < rank_; ++i) {
    if (i > 0) out += ';';
    out += std::to_string(e.c[static_cast<std::size_t>(i)]);
  }
  return out;
}

Element GroupModel::parse(std::string_view text) const {
  Element e;
  int index = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find_first_of(";,", pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view token = text.substr(pos, end - pos);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (index >= rank_) throw UsageError("too many coordinates in element '" + std::string(text) + "'");
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
      throw UsageError("malformed element '" + std::string(text) + "'");
    }
    e.c[static_cast<std::size_t>(index++)] = value;
    pos = end + 1;
  }
  if (index != rank_) {
    throw UsageError("element '" + std::string(text) + "' needs " + std::to_string(rank_) +
                     " coordinates");
  }
  if (kind_ == GroupKind::kCyclic) e.c[0] = ((e.c[0] % modulus_) + modulus_) % modulus_;
  return e;
}

namespace {

std::int64_t parse_int(std::string_view s, std::string_view spec) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("malformed group descriptor '" + std::string(spec) + "'");
  }
  return v;
}

}  // namespace

GroupModel make_group(std::string_view spec, std::optional<bool> symmetric) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = spec.find(':', pos);
    parts.push_back(spec.substr(pos, end == std::string_view::npos ? end : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  std::optional<bool> suffix;
  if (parts.size() >= 2 && (parts.back() == "sym" || parts.back() == "semi")) {
    suffix = parts.back() == "sym";
    parts.pop_back();
  }
  const bool explicit_flag = symmetric.has_value();
  auto flag = [&](bool fallback) {
    if (explicit_flag) return *symmetric;
    return suffix.value_or(fallback);
  };
  if (parts[0] == "zd" && parts.size() == 2) {
    return GroupModel::lattice(static_cast<int>(parse_int(parts[1], spec)), flag(false));
  }
  if (parts[0] == "heis3" && parts.size() == 1) {
    return GroupModel::heisenberg(flag(true));
  }
  if (parts[0] == "cyclic" && parts.size() == 2) {
    return GroupModel::cyclic(parse_int(parts[1], spec), flag(false));
  }
  throw ConfigError("unknown group descriptor '" + std::string(spec) +
                    "' (expected zd:<d>, heis3 or cyclic:<q>)");
}

// ---------------------------------------------------------------- Ball

Ball::Ball(GroupModel group, std::uint32_t radius, std::vector<Element> elements,
           std::vector<std::uint32_t> lengths)
    : group_(std::move(group)),
      radius_(radius),
      elements_(std::move(elements)),
      lengths_(std::move(lengths)) {
  if (elements_.size() != lengths_.size()) {
    throw UsageError("ball elements and lengths differ in size");
  }
  if (elements_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ResourceError("ball too large to index");
  }
  level_counts_.assign(static_cast<std::size_t>(radius_) + 1, 0);
  for (std::size_t i = 0; i < lengths_.size(); ++i) {
    if (lengths_[i] > radius_) throw UsageError("element length exceeds ball radius");
    ++level_counts_[lengths_[i]];
    if (i > 0 && lengths_[i] < lengths_[i - 1]) level_ordered_ = false;
  }
  cumulative_.resize(level_counts_.size());
  std::partial_sum(level_counts_.begin(), level_counts_.end(), cumulative_.begin());
  sorted_.resize(elements_.size());
  std::iota(sorted_.begin(), sorted_.end(), 0U);
  std::sort(sorted_.begin(), sorted_.end(),
            [this](std::uint32_t a, std::uint32_t b) { return elements_[a] < elements_[b]; });
  for (std::size_t i = 1; i < sorted_.size(); ++i) {
    if (elements_[sorted_[i]] == elements_[sorted_[i - 1]]) {
      throw UsageError("duplicate element " + group_.format(elements_[sorted_[i]]) + " in ball");
    }
  }
}

std::optional<std::size_t> Ball::index_of(const Element& g) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), g,
                             [this](std::uint32_t pos, const Element& key) {
                               return elements_[pos] < key;
                             });
  if (it == sorted_.end() || elements_[*it] != g) return std::nullopt;
  return *it;
}

bool Ball::contains(const Element& g) const { return index_of(g).has_value(); }

std::optional<std::uint32_t> Ball::length_of(const Element& g) const {
  if (auto i = index_of(g)) return lengths_[*i];
  return std::nullopt;
}

std::uint64_t Ball::size_at(std::uint32_t m) const {
  return cumulative_[std::min(m, radius_)];
}

// ---------------------------------------------------------------- enumeration

namespace {

std::uint64_t saturating(double v) {
  if (v >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::llround(v));
}

double binomial(double n, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

struct BfsResult {
  std::vector<Element> elements;
  std::vector<std::uint32_t> lengths;
  std::uint32_t complete_radius = 0;
  bool hit_cap = false;
  std::uint64_t projected = 0;
};

// Enumerates level by level. With allow_partial the search stops at the
// last level that fits in `cap`; otherwise exceeding the cap throws.
BfsResult bfs_levels(const GroupModel& group, std::uint32_t radius, std::size_t cap,
                     bool allow_partial) {
  BfsResult out;
  std::unordered_set<Element, ElementHash> seen;
  const auto projected = projected_ball_size(group, radius);
  if (projected && *projected <= cap) seen.reserve(static_cast<std::size_t>(*projected));
  std::vector<Element> frontier{group.identity()};
  seen.insert(group.identity());
  out.elements.push_back(group.identity());
  out.lengths.push_back(0);
  std::vector<Element> next;
  for (std::uint32_t level = 1; level <= radius && !frontier.empty(); ++level) {
    next.clear();
    for (const Element& g : frontier) {
      for (const Element& a : group.generators()) {
        Element h = group.multiply(g, a);
        if (seen.insert(h).second) next.push_back(h);
      }
    }
    if (out.elements.size() + next.size() > cap) {
      const double total = static_cast<double>(out.elements.size() + next.size());
      const int deg = std::max(group.growth_degree(), 1);
      out.projected = saturating(total * std::pow(static_cast<double>(radius) / level, deg));
      out.hit_cap = true;
      if (!allow_partial) return out;
      out.complete_radius = level - 1;
      return out;
    }
    for (const Element& h : next) {
      out.elements.push_back(h);
      out.lengths.push_back(level);
    }
    std::swap(frontier, next);
  }
  out.complete_radius = radius;
  return out;
}

std::string cap_message(const GroupModel& group, std::uint32_t radius, std::uint64_t projected,
                        std::size_t cap) {
  std::ostringstream os;
  os << "ball S_" << radius << " of " << group.describe() << " projected at " << projected
     << " elements, above the cap of " << cap;
  return os.str();
}

}  // namespace

std::optional<std::uint64_t> projected_ball_size(const GroupModel& group, std::uint32_t radius) {
  const double n = radius;
  switch (group.kind()) {
    case GroupKind::kLattice: {
      const int d = group.rank();
      if (!group.symmetric()) return saturating(std::pow(n + 1.0, d));
      double total = 0.0;
      for (int k = 0; k <= d; ++k) total += std::ldexp(binomial(d, k) * binomial(n, k), k);
      return saturating(total);
    }
    case GroupKind::kCyclic: {
      const double q = static_cast<double>(group.modulus());
      return saturating(std::min(q, group.symmetric() ? 2.0 * n + 1.0 : n + 1.0));
    }
    case GroupKind::kHeisenberg:
      return std::nullopt;
  }
  return std::nullopt;
}

Ball word_ball(const GroupModel& group, std::uint32_t radius, std::size_t cap) {
  if (auto projected = projected_ball_size(group, radius); projected && *projected > cap) {
    throw ResourceError(cap_message(group, radius, *projected, cap));
  }
  BfsResult r = bfs_levels(group, radius, cap, false);
  if (r.hit_cap) throw ResourceError(cap_message(group, radius, r.projected, cap));
  return Ball(group, radius, std::move(r.elements), std::move(r.lengths));
}

std::vector<std::uint64_t> sphere_sizes(const GroupModel& group, std::uint32_t radius,
                                        std::size_t cap) {
  std::vector<std::uint64_t> out(static_cast<std::size_t>(radius) + 1, 0);
  if (group.kind() == GroupKind::kLattice && !group.symmetric()) {
    const int d = group.rank();
    for (std::uint32_t n = 0; n <= radius; ++n) {
      std::uint64_t hi = 1, lo = 1;
      for (int i = 0; i < d; ++i) {
        hi *= static_cast<std::uint64_t>(n) + 1;
        lo *= n;
      }
      out[n] = n == 0 ? 1 : hi - lo;
    }
    return out;
  }
  if (group.kind() == GroupKind::kCyclic) {
    std::uint64_t prev = 0;
    for (std::uint32_t n = 0; n <= radius; ++n) {
      const std::uint64_t total = *projected_ball_size(group, n);
      out[n] = total - prev;
      prev = total;
    }
    return out;
  }
  Ball ball = word_ball(group, radius, cap);
  return ball.level_counts();
}

std::uint32_t word_length(const GroupModel& group, const Element& g, std::size_t cap) {
  switch (group.kind()) {
    case GroupKind::kLattice: {
      std::int64_t total = 0, biggest = 0;
      for (int i = 0; i < group.rank(); ++i) {
        const std::int64_t v = g.c[static_cast<std::size_t>(i)];
        if (!group.symmetric() && v < 0) {
          throw OutOfRangeError(group.format(g) + " is outside the semigroup of " +
                                group.describe());
        }
        total += v < 0 ? -v : v;
        biggest = std::max(biggest, v);
      }
      return static_cast<std::uint32_t>(group.symmetric() ? total : biggest);
    }
    case GroupKind::kCyclic: {
      const std::int64_t v = g.c[0];
      if (!group.symmetric()) return static_cast<std::uint32_t>(v);
      return static_cast<std::uint32_t>(std::min(v, group.modulus() - v));
    }
    case GroupKind::kHeisenberg: {
      if (!group.symmetric() && (g.c[0] < 0 || g.c[1] < 0 || g.c[2] < 0 ||
                                 g.c[2] > g.c[0] * g.c[1])) {
        throw OutOfRangeError(group.format(g) + " is outside the semigroup of " +
                              group.describe());
      }
      if (g == group.identity()) return 0;
      std::unordered_set<Element, ElementHash> seen{group.identity()};
      std::vector<Element> frontier{group.identity()}, next;
      for (std::uint32_t level = 1; !frontier.empty(); ++level) {
        next.clear();
        for (const Element& x : frontier) {
          for (const Element& a : group.generators()) {
            Element h = group.multiply(x, a);
            if (h == g) return level;
            if (seen.insert(h).second) next.push_back(h);
          }
        }
        if (seen.size() > cap) break;
        std::swap(frontier, next);
      }
      throw OutOfRangeError(group.format(g) + " not reached within the cap of " +
                            std::to_string(cap) + " elements");
    }
  }
  return 0;
}

GrowthFit growth_exponent_estimate(const GroupModel& group, std::uint32_t nmax, std::size_t cap) {
  if (nmax < 8) throw UsageError("growth fit needs Nmax >= 8");
  std::vector<std::uint64_t> cumulative;
  GrowthFit fit;
  const bool closed_form = group.kind() != GroupKind::kHeisenberg;
  if (closed_form) {
    const auto spheres = sphere_sizes(group, nmax, cap);
    cumulative.resize(spheres.size());
    std::partial_sum(spheres.begin(), spheres.end(), cumulative.begin());
    fit.radius_reached = nmax;
  } else {
    BfsResult r = bfs_levels(group, nmax, cap, true);
    fit.partial = r.hit_cap;
    fit.radius_reached = r.complete_radius;
    cumulative.assign(static_cast<std::size_t>(r.complete_radius) + 1, 0);
    for (std::uint32_t len : r.lengths) {
      if (len <= r.complete_radius) ++cumulative[len];
    }
    std::partial_sum(cumulative.begin(), cumulative.end(), cumulative.begin());
  }
  const std::uint32_t top = fit.radius_reached;
  if (top < 2) throw ResourceError("ball cap too small to fit a growth exponent");
  std::vector<double> xs, ys;
  for (std::uint32_t n = std::max<std::uint32_t>(top / 2, 1); n <= top; ++n) {
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(static_cast<double>(cumulative[n])));
  }
  const auto line = stats::least_squares(xs, ys);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  return fit;
}

double ball_translate_defect(const GroupModel& group, const Element& g, std::uint32_t radius,
                             std::size_t cap) {
  const Ball ball = word_ball(group, radius, cap);
  std::size_t overlap = 0;
  for (const Element& h : ball.elements()) {
    if (ball.contains(group.multiply(g, h))) ++overlap;
  }
  return 2.0 * static_cast<double>(ball.size() - overlap) / static_cast<double>(ball.size());
}

}  // namespace ergolab
