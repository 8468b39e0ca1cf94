#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergolab/dynamics.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/selectors.hpp"

namespace ergolab {

// One element of the ground pool. `key` is what the selector draw is keyed
// on: g itself for word-ball families, Element{k} for the k-th term of an
// integer sequence, so draws match random_subsequence.
struct FamilyMember {
  Element g;
  Element key;
  double tau = 0.0;
};

// Sets S_N and cells E_i over a shared pool, stored as pool positions, with
// index sets I_N naming the cells meant to partition S_N. Sets and cells
// carry the labels N and i used in the decay hypotheses.
class SetFamily {
 public:
  SetFamily(GroupModel group, std::vector<FamilyMember> pool,
            std::vector<std::vector<std::size_t>> sets, std::vector<std::uint64_t> set_labels,
            std::vector<std::vector<std::size_t>> cells, std::vector<std::uint64_t> cell_labels,
            std::vector<std::vector<std::size_t>> index_sets);

  // S_N = word ball of radius N, N = 0..nmax, cells the spheres with
  // labels radius + 1, tau_g = tau_{rho(g)}.
  static SetFamily from_word_balls(const GroupModel& group, const TauProfile& profile,
                                   std::uint32_t nmax, std::size_t cap = kDefaultBallCap);
  // Over Z: S_N = {n_k : k < 2^N} for N = 1..nmax, cells
  // E_i = {n_k : 2^(i-1) <= k < 2^i}, tau_k from the profile. Requires
  // 2^nmax - 1 <= base.size().
  static SetFamily from_sequence_dyadic(const IntSequence& base, const TauProfile& profile,
                                        unsigned nmax);

  const GroupModel& group() const noexcept { return group_; }
  const std::vector<FamilyMember>& pool() const noexcept { return pool_; }
  std::size_t set_count() const noexcept { return sets_.size(); }
  std::size_t cell_count() const noexcept { return cells_.size(); }
  const std::vector<std::size_t>& set(std::size_t n) const { return sets_.at(n); }
  const std::vector<std::size_t>& cell(std::size_t i) const { return cells_.at(i); }
  const std::vector<std::size_t>& index_set(std::size_t n) const { return index_sets_.at(n); }
  std::uint64_t set_label(std::size_t n) const { return set_labels_.at(n); }
  std::uint64_t cell_label(std::size_t i) const { return cell_labels_.at(i); }

  std::vector<Element> set_elements(std::size_t n) const;
  std::vector<Element> cell_elements(std::size_t i) const;

  double beta(std::size_t n) const;
  double beta_prime(std::size_t i) const;
  double tau_square_sum(std::size_t n) const;

  // Empty when every I_N partitions S_N and every cell is nonempty,
  // otherwise a description of the first failure.
  std::optional<std::string> partition_error() const;

 private:
  GroupModel group_;
  std::vector<FamilyMember> pool_;
  std::vector<std::vector<std::size_t>> sets_;
  std::vector<std::uint64_t> set_labels_;
  std::vector<std::vector<std::size_t>> cells_;
  std::vector<std::uint64_t> cell_labels_;
  std::vector<std::vector<std::size_t>> index_sets_;
};

// beta(N)^-1 sum over S_N of xi_g f(T_g x). Throws UndefinedError when
// beta(N) = 0.
double family_average(const DynSystem& sys, const Observable& f, const Point& x,
                      const SetFamily& family, std::size_t n, std::uint64_t seed);

inline constexpr std::size_t kProductSetCap = 1'000'000;

struct ProductSize {
  double value = 0.0;
  bool exact = true;  // false: ball or box upper bound
};

// |(E^-1 E)^M|. Exact by interval arithmetic on Z and by iterated product
// sets elsewhere; past `cap` intermediate terms it falls back to the
// containing box (Z^d), the whole group (Z_q) or a word ball (H3).
ProductSize product_set_size(const GroupModel& group, const std::vector<Element>& cell,
                             unsigned m, std::size_t cap = kProductSetCap);

struct Thm51Row {
  std::uint64_t label = 0;
  std::size_t cell_size = 0;
  double beta_prime = 0.0;
  ProductSize product;
  double normalized = 0.0;  // beta'(i)^-2M |(E^-1 E)^M|
  double target = 0.0;      // i^(-2M-1-eps)
  double ratio = 0.0;
};

struct Thm51Report {
  unsigned m = 0;
  double eps = 0.0;
  std::vector<Thm51Row> rows;
  double fitted_decay = 0.0;  // minus the log-log slope of normalized against i
  bool bounded = false;       // later-half ratios never exceed the earlier-half maximum
  bool all_exact = true;
};

// Cells with label <= imax and beta'(i) > 0. Throws UsageError when the
// family fails the partition check or m == 0.
Thm51Report thm51_hypothesis_check(const SetFamily& family, unsigned m, double eps,
                                   std::uint64_t imax, std::size_t cap = kProductSetCap);

struct Interval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;  // inclusive
};

// Cover cells E_{i,N} (at most K per set) as integer intervals, with R_N.
struct IntervalCover {
  std::vector<std::vector<Interval>> cells;
  std::vector<double> radius;
};

// The four-cell cover of S_N by earlier blocks: [0, v_{j-2}), block j-2,
// block j-1 and [v_j, max S_N], where block j holds max S_N, with R_N = |S_N|.
IntervalCover block_cover(const std::vector<Block>& blocks, const SetFamily& family);

struct Thm53Row {
  std::uint64_t label = 0;
  double beta = 0.0;
  double tau_square_sum = 0.0;
  double radius = 0.0;
  double decay_value = 0.0;  // beta^-2 (sum tau^2)^(1/2) R^d
  double max_diameter = 0.0;
  double prefix_ratio = 0.0;  // sum_{N' <= N} beta(N') / beta(N)
  bool covered = true;
  std::optional<std::int64_t> witness;
};

struct Thm53Report {
  unsigned k = 0;
  double eps = 0.0;
  int degree = 0;
  std::vector<Thm53Row> rows;
  bool covered = true;
  bool diameters_ok = true;
  bool cells_within_k = true;
  double fitted_eps = 0.0;     // minus the slope of log2 decay_value on N, upper half
  bool decay_bounded = false;  // decay_value 2^(eps N), later half vs earlier half
  double prefix_constant = 0.0;
  bool prefix_bounded = false;  // last prefix ratio within 1.5x of the midpoint one
  bool all() const noexcept {
    return covered && diameters_ok && cells_within_k && fitted_eps > 0.0 && decay_bounded &&
           prefix_bounded;
  }
};

// Sets with label <= nmax. Requires a Z family and one cover entry per set.
Thm53Report thm53_hypothesis_check(const SetFamily& family, const IntervalCover& cover,
                                   unsigned k, double eps, int degree, std::uint64_t nmax);

struct PipelineOptions {
  std::string growth = "k^2";
  double alpha = 0.4;
  std::vector<std::uint64_t> seeds;
  unsigned jmax = 8;
  std::uint64_t max_elements = std::uint64_t{1} << 20;
  std::uint64_t window = 1000;
  std::uint64_t density_limit = 1'000'000;
  double density_threshold = 0.05;
  std::size_t density_quorum = 18;  // seeds out of 20, scaled to the seed count
  unsigned m = 2;
  double eps51 = 0.1;
  double eps53 = 0.05;
  unsigned first_checkpoint = 10;  // averages at K = 2^first .. 2^log2(max_elements)
  double final_tolerance = 0.02;
  unsigned workers = 0;
};

struct PipelineSeedRow {
  std::uint64_t seed = 0;
  std::size_t subsequence_size = 0;
  bool growth_ok = true;
  double density = 0.0;
  bool density_ok = false;
  std::vector<double> deviations;  // |A_K f(x)| at each checkpoint
  bool pass = false;
};

struct PipelineReport {
  bool refused = false;
  std::string refusal;
  std::vector<Block> blocks;
  std::size_t base_size = 0;
  bool truncated = false;
  bool base_growth_ok = true;
  Thm51Report thm51;
  Thm53Report thm53;
  std::vector<std::uint64_t> checkpoints;
  std::vector<PipelineSeedRow> seeds;
  std::vector<double> medians;
  std::size_t density_passes = 0;
  bool density_ok = false;
  bool hypotheses_ok = false;
  bool convergence_ok = false;  // reported, not gated: the trend is noise-limited
  bool pass = false;             // growth, density and hypothesis checks
};

// Block sequence -> random subsequence -> windowed density -> hypothesis
// checks -> averages of cos(2 pi x) under the golden rotation, with the
// deviation averaged over the rotation's sample points.
// Refuses, without throwing, when alpha >= 1/2.
PipelineReport pipeline_theorem_faster(const PipelineOptions& options);

}  // namespace ergolab
