#include "ergolab/selectors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "ergolab/error.hpp"
#include "ergolab/rng.hpp"

namespace ergolab {

namespace {

double parse_real(std::string_view s, std::string_view context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("malformed number '" + std::string(s) + "' in '" + std::string(context) + "'");
  }
  return v;
}

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

constexpr double kTwo62 = 4611686018427387904.0;

}  // namespace

// ---------------------------------------------------------------- profiles

TauProfile TauProfile::power_law(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("power-law exponent must be >= 0, got " + shortest(alpha));
  }
  return TauProfile(TauKind::kPowerLaw, alpha, {});
}

TauProfile TauProfile::constant(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("constant profile needs tau in [0, 1], got " + shortest(tau));
  }
  return TauProfile(TauKind::kConstant, tau, {});
}

TauProfile TauProfile::table(std::vector<double> values) {
  if (values.empty()) throw ConfigError("table profile needs at least one value");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0 && values[i] <= 1.0)) {
      throw ConfigError("table profile values must lie in [0, 1]");
    }
    if (i > 0 && values[i] > values[i - 1]) {
      throw ConfigError("table profile must be nonincreasing");
    }
  }
  return TauProfile(TauKind::kTable, 0.0, std::move(values));
}

TauProfile TauProfile::inverse_log() { return TauProfile(TauKind::kInverseLog, 0.0, {}); }

double TauProfile::operator()(std::uint64_t n) const {
  if (n == 0) return 0.0;
  switch (kind_) {
    case TauKind::kPowerLaw:
      return std::pow(static_cast<double>(n), -param_);
    case TauKind::kConstant:
      return param_;
    case TauKind::kTable:
      return table_[std::min<std::uint64_t>(n, table_.size()) - 1];
    case TauKind::kInverseLog:
      return std::min(1.0, 1.0 / std::log(static_cast<double>(n) + 2.0));
  }
  return 0.0;
}

std::string TauProfile::describe() const {
  switch (kind_) {
    case TauKind::kPowerLaw:
      return "power:" + shortest(param_);
    case TauKind::kConstant:
      return "const:" + shortest(param_);
    case TauKind::kTable: {
      std::string out = "table:";
      for (std::size_t i = 0; i < table_.size(); ++i) {
        if (i > 0) out += ',';
        out += shortest(table_[i]);
      }
      return out;
    }
    case TauKind::kInverseLog:
      return "invlog";
  }
  return {};
}

TauProfile parse_profile(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (head == "power") return TauProfile::power_law(parse_real(rest, text));
  if (head == "const") return TauProfile::constant(parse_real(rest, text));
  if (head == "invlog" && colon == std::string_view::npos) return TauProfile::inverse_log();
  if (head == "table") {
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      std::size_t end = rest.find(',', pos);
      if (end == std::string_view::npos) end = rest.size();
      values.push_back(parse_real(rest.substr(pos, end - pos), text));
      pos = end + 1;
    }
    return TauProfile::table(std::move(values));
  }
  throw ConfigError("unknown profile '" + std::string(text) +
                    "' (expected power:<a>, const:<t>, table:<t1,t2,...> or invlog)");
}

// ---------------------------------------------------------------- beta

double beta_from_levels(std::span<const std::uint64_t> level_counts, const TauProfile& profile) {
  double acc = 0.0;
  for (std::size_t n = 1; n < level_counts.size(); ++n) {
    acc += static_cast<double>(level_counts[n]) * profile(n);
  }
  return acc;
}

double beta(const Ball& ball, const TauProfile& profile) {
  return beta_from_levels(ball.level_counts(), profile);
}

double beta_interval(std::uint64_t n, const TauProfile& profile) {
  double acc = 0.0;
  for (std::uint64_t j = 1; j <= n; ++j) acc += profile(j);
  return acc;
}

double tau_square_sum(std::span<const std::uint64_t> level_counts, const TauProfile& profile) {
  double acc = 0.0;
  for (std::size_t n = 1; n < level_counts.size(); ++n) {
    const double t = profile(n);
    acc += static_cast<double>(level_counts[n]) * t * t;
  }
  return acc;
}

// ---------------------------------------------------------------- fields

bool selector_draw(std::uint64_t seed, const Element& g, double tau) {
  if (tau <= 0.0) return false;
  if (tau >= 1.0) return true;
  return to_unit(key_coordinates(seed, g.c)) < tau;
}

SelectorField::SelectorField(std::shared_ptr<const Ball> ball, TauProfile profile,
                             std::uint64_t seed, std::vector<std::uint8_t> values)
    : ball_(std::move(ball)),
      profile_(std::move(profile)),
      seed_(seed),
      values_(std::move(values)),
      beta_(0.0) {
  if (!ball_) throw UsageError("selector field needs a ball");
  if (values_.size() != ball_->size()) throw UsageError("selector values do not match the ball");
  for (std::uint8_t v : values_) {
    if (v > 1) throw UsageError("selector values must be 0 or 1");
  }
  beta_ = ergolab::beta(*ball_, profile_);
}

std::uint64_t SelectorField::selected_count() const noexcept {
  return static_cast<std::uint64_t>(std::count(values_.begin(), values_.end(), 1));
}

SelectorField sample_field(std::shared_ptr<const Ball> ball, const TauProfile& profile,
                           std::uint64_t seed) {
  if (!ball) throw UsageError("selector field needs a ball");
  std::vector<std::uint8_t> values(ball->size());
  const auto elements = ball->elements();
  const auto lengths = ball->lengths();
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = selector_draw(seed, elements[i], profile(lengths[i])) ? 1 : 0;
  }
  return SelectorField(std::move(ball), profile, seed, std::move(values));
}

// ---------------------------------------------------------------- sequences

IntSequence::IntSequence(std::vector<std::int64_t> values) : values_(std::move(values)) {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < 0) throw UsageError("sequence values must be nonnegative");
    if (i > 0 && values_[i] <= values_[i - 1]) {
      throw UsageError("sequence must be strictly increasing");
    }
  }
}

IntSequence extract_sequence(const SelectorField& field) {
  const GroupModel& group = field.ball().group();
  if (group.kind() != GroupKind::kLattice || group.rank() != 1) {
    throw UsageError("sequence extraction needs the group Z, got " + group.describe());
  }
  std::vector<std::int64_t> out;
  const auto elements = field.ball().elements();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (field.values()[i]) out.push_back(elements[i].c[0]);
  }
  std::sort(out.begin(), out.end());
  return IntSequence(std::move(out));
}

IntSequence sample_sequence(const TauProfile& profile, std::uint64_t limit, std::uint64_t seed) {
  std::vector<std::int64_t> out;
  for (std::uint64_t n = 1; n <= limit; ++n) {
    const auto k = static_cast<std::int64_t>(n);
    if (selector_draw(seed, make_element(k), profile(n))) out.push_back(k);
  }
  return IntSequence(std::move(out));
}

double banach_density_windowed(const IntSequence& seq, std::uint64_t m, std::uint64_t nmax) {
  if (m < 1) throw UsageError("window length must be >= 1");
  const auto v = seq.values();
  if (v.empty()) return 0.0;
  // A window holding any points can slide right to its first point, unless
  // that point lies beyond nmax, in which case the window at nmax covers it.
  const auto limit = static_cast<std::int64_t>(nmax);
  const auto width = static_cast<std::int64_t>(m);
  std::size_t best = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < v.size() && v[lo] <= limit; ++lo) {
    hi = std::max(hi, lo);
    while (hi < v.size() && v[hi] < v[lo] + width) ++hi;
    best = std::max(best, hi - lo);
  }
  const auto first = std::lower_bound(v.begin(), v.end(), limit);
  const auto last = std::lower_bound(v.begin(), v.end(), limit + width);
  best = std::max(best, static_cast<std::size_t>(last - first));
  return static_cast<double>(best) / static_cast<double>(m);
}

// ---------------------------------------------------------------- blocks

BlockSequence block_sequence(const GrowthTarget& f, unsigned jmax, BlockOptions options) {
  BlockSequence out;
  std::vector<std::int64_t> values;
  auto target = [&f](std::uint64_t k) {
    const double t = std::ceil(f(k));
    if (!(t < kTwo62)) throw ResourceError("growth target exceeds 64-bit index range");
    return static_cast<std::int64_t>(t);
  };
  std::int64_t prev_v = 1;
  std::int64_t prev_w = 1;
  for (unsigned j = 1; j <= jmax; ++j) {
    const std::uint64_t emitted = values.size();
    std::uint64_t length = static_cast<std::uint64_t>(prev_v);
    if (emitted >= options.max_elements) {
      out.truncated = true;
      break;
    }
    if (length > options.max_elements - emitted) {
      length = options.max_elements - emitted;
      out.truncated = true;
    }
    std::int64_t v = j == 1 ? 2 : prev_w + 1;
    for (std::uint64_t i = 1; i <= length; ++i) {
      v = std::max(v, target(emitted + i) - static_cast<std::int64_t>(i) + 1);
    }
    if (static_cast<double>(v) + static_cast<double>(length) >= kTwo62) {
      throw ResourceError("block sequence overflows 64-bit indices");
    }
    const std::int64_t w = v + static_cast<std::int64_t>(length);
    out.blocks.push_back(Block{v, w});
    for (std::int64_t n = v; n < w; ++n) values.push_back(n);
    prev_v = v;
    prev_w = w;
    if (out.truncated) break;
  }
  out.sequence = IntSequence(std::move(values));
  return out;
}

GrowthTarget parse_growth(std::string_view expr) {
  std::string s;
  for (char c : expr) {
    if (c != ' ') s += c;
  }
  if (s == "k") return [](std::uint64_t k) { return static_cast<double>(k); };
  if (s.size() > 2 && s.compare(s.size() - 2, 2, "^k") == 0) {
    const double b = parse_real(std::string_view(s).substr(0, s.size() - 2), expr);
    if (!(b > 0.0)) throw ConfigError("exponential base must be positive");
    return [b](std::uint64_t k) { return std::pow(b, static_cast<double>(k)); };
  }
  double c = 1.0;
  std::string_view rest = s;
  if (const auto star = rest.find('*'); star != std::string_view::npos) {
    c = parse_real(rest.substr(0, star), expr);
    rest = rest.substr(star + 1);
  }
  if (rest == "k") return [c](std::uint64_t k) { return c * static_cast<double>(k); };
  if (rest.size() > 2 && rest.substr(0, 2) == "k^") {
    const double p = parse_real(rest.substr(2), expr);
    return [c, p](std::uint64_t k) { return c * std::pow(static_cast<double>(k), p); };
  }
  throw ConfigError("unknown growth expression '" + std::string(expr) +
                    "' (expected k, k^p, c*k^p or b^k)");
}

IntSequence random_subsequence(const IntSequence& base, const TauProfile& profile,
                               std::uint64_t seed) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const std::uint64_t k = i + 1;
    if (selector_draw(seed, make_element(static_cast<std::int64_t>(k)), profile(k))) {
      out.push_back(base[i]);
    }
  }
  return IntSequence(std::move(out));
}

IntSequence random_subsequence(const IntSequence& base, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("random subsequence needs 0 < alpha < 1");
  return random_subsequence(base, TauProfile::power_law(alpha), seed);
}

BlockProbability block_probability_bounds(const TauProfile& profile, unsigned r, unsigned m,
                                          std::uint64_t n) {
  if (m < 1 || m > r) throw UsageError("block probability needs 1 <= m <= r");
  if (n < 1) throw UsageError("block probability needs n >= 1");
  std::vector<double> dist(r + 1, 0.0);
  dist[0] = 1.0;
  for (unsigned i = 0; i < r; ++i) {
    const double p = profile(static_cast<std::uint64_t>(r) * n + i);
    for (unsigned k = i + 1; k > 0; --k) dist[k] = dist[k] * (1.0 - p) + dist[k - 1] * p;
    dist[0] *= 1.0 - p;
  }
  BlockProbability out;
  for (unsigned k = m; k <= r; ++k) out.exact += dist[k];
  const double tau_hi = profile(static_cast<std::uint64_t>(r) * n);
  const double tau_lo = profile(static_cast<std::uint64_t>(r) * (n + 1));
  out.lower = std::ldexp(std::pow(tau_lo, m), -static_cast<int>(r));
  out.upper = std::min(1.0, std::ldexp(std::pow(tau_hi, m), static_cast<int>(r)));
  return out;
}

}  // namespace ergolab
