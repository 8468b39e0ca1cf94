#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/groups.hpp"

namespace ergolab {

enum class TauKind { kPowerLaw, kConstant, kTable, kInverseLog };

// Mean profile n -> tau_n with tau_0 = 0. Power law: n^-alpha. Constant:
// tau for every n >= 1. Table: tau_1..tau_L, then tau_L. Inverse log:
// 1 / log(n + 2).
class TauProfile {
 public:
  static TauProfile power_law(double alpha);
  static TauProfile constant(double tau);
  // Values must lie in [0, 1] and be nonincreasing.
  static TauProfile table(std::vector<double> values);
  static TauProfile inverse_log();

  TauKind kind() const noexcept { return kind_; }
  double alpha() const noexcept { return param_; }
  double operator()(std::uint64_t n) const;

  // "power:0.4", "const:0.5", "table:0.9,0.5,0.1", "invlog".
  std::string describe() const;

 private:
  TauProfile(TauKind kind, double param, std::vector<double> table)
      : kind_(kind), param_(param), table_(std::move(table)) {}

  TauKind kind_;
  double param_;
  std::vector<double> table_;
};

// Inverse of TauProfile::describe. Throws ConfigError.
TauProfile parse_profile(std::string_view text);

// beta(N) = sum over S_N of tau_{rho(g)}.
double beta(const Ball& ball, const TauProfile& profile);
// Same sum from |{rho = n}| counts.
double beta_from_levels(std::span<const std::uint64_t> level_counts, const TauProfile& profile);
// sum_{n=1}^{N} tau_n, the Z case.
double beta_interval(std::uint64_t n, const TauProfile& profile);
// sum_{g in S_N} tau_{rho(g)}^2 from level counts.
double tau_square_sum(std::span<const std::uint64_t> level_counts, const TauProfile& profile);

// The selector at g: a pure function of (seed, g), so draws do not depend on
// the order in which elements are visited.
bool selector_draw(std::uint64_t seed, const Element& g, double tau);

// Realization of the selector variables over a ball.
class SelectorField {
 public:
  SelectorField(std::shared_ptr<const Ball> ball, TauProfile profile, std::uint64_t seed,
                std::vector<std::uint8_t> values);

  const Ball& ball() const noexcept { return *ball_; }
  std::shared_ptr<const Ball> ball_ptr() const noexcept { return ball_; }
  const TauProfile& profile() const noexcept { return profile_; }
  std::uint64_t seed() const noexcept { return seed_; }
  // values()[i] is xi at ball().elements()[i].
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  double beta() const noexcept { return beta_; }
  double tau_at(std::size_t i) const { return profile_(ball_->lengths()[i]); }
  std::uint64_t selected_count() const noexcept;

 private:
  std::shared_ptr<const Ball> ball_;
  TauProfile profile_;
  std::uint64_t seed_;
  std::vector<std::uint8_t> values_;
  double beta_;
};

SelectorField sample_field(std::shared_ptr<const Ball> ball, const TauProfile& profile,
                           std::uint64_t seed);

// Strictly increasing list of nonnegative integers.
class IntSequence {
 public:
  IntSequence() = default;
  // Throws UsageError unless strictly increasing and nonnegative.
  explicit IntSequence(std::vector<std::int64_t> values);

  std::span<const std::int64_t> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  std::int64_t operator[](std::size_t k) const { return values_[k]; }

 private:
  std::vector<std::int64_t> values_;
};

// Sorted support of a field over Z. Throws UsageError for other groups.
IntSequence extract_sequence(const SelectorField& field);

// {n in [1, limit] : xi_n = 1} drawn with the same keys as sample_field over
// the Z ball of radius `limit`, without materializing the ball.
IntSequence sample_sequence(const TauProfile& profile, std::uint64_t limit, std::uint64_t seed);

// max over N <= nmax of |{n_k in [N, N + m)}| / m. Requires m >= 1.
double banach_density_windowed(const IntSequence& seq, std::uint64_t m, std::uint64_t nmax);

struct Block {
  std::int64_t v = 0;
  std::int64_t w = 0;  // exclusive
};

struct BlockSequence {
  std::vector<Block> blocks;
  IntSequence sequence;
  bool truncated = false;  // last block cut at max_elements
};

struct BlockOptions {
  std::uint64_t max_elements = 10'000'000;
};

using GrowthTarget = std::function<double(std::uint64_t)>;

// Blocks [v_j, w_j), j = 1..jmax, with v_0 = 1, v_1 = max(2, ceil F(1)),
// w_j - v_j = v_{j-1}, and v_j the least integer above w_{j-1} for which
// every element of block j, the k-th of the sequence, satisfies n_k >= F(k).
// Stops early, flagging truncation, once max_elements would be passed.
// Throws ResourceError on 64-bit overflow.
BlockSequence block_sequence(const GrowthTarget& f, unsigned jmax, BlockOptions options = {});

// "k", "k^p", "c*k^p", "b^k". Throws ConfigError.
GrowthTarget parse_growth(std::string_view expr);

// Keeps base[k-1] iff an independent Bernoulli(tau_k) draw keyed by (seed, k)
// succeeds, k = 1, 2, ...
IntSequence random_subsequence(const IntSequence& base, const TauProfile& profile,
                               std::uint64_t seed);
IntSequence random_subsequence(const IntSequence& base, double alpha, std::uint64_t seed);

struct BlockProbability {
  double lower = 0.0;
  double upper = 0.0;
  double exact = 0.0;
};

// P(sum_{j=rn}^{r(n+1)-1} xi_j >= m) by Poisson-binomial recursion, with the
// bounds 2^-r tau_{r(n+1)}^m and min(1, 2^r tau_{rn}^m). Requires
// 1 <= m <= r and n >= 1.
BlockProbability block_probability_bounds(const TauProfile& profile, unsigned r, unsigned m,
                                          std::uint64_t n);

}  // namespace ergolab
