#pragma once

#include <cstdint>
#include <vector>

#include "ergolab/group_algebra.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/selectors.hpp"

namespace ergolab {

// Independent centered variables X_g = xi_g - tau_g on a finite set E, with
// xi_g Bernoulli(tau_g). Means are stored per element.
class CenteredField {
 public:
  CenteredField(GroupModel group, std::vector<Element> support, std::vector<double> tau);

  // tau_g = tau for every g in E.
  static CenteredField with_constant(GroupModel group, std::vector<Element> support, double tau);
  // tau_g = profile(rho(g)).
  static CenteredField with_profile(GroupModel group, std::vector<Element> support,
                                    const TauProfile& profile);

  const GroupModel& group() const noexcept { return group_; }
  const std::vector<Element>& support() const noexcept { return support_; }
  const std::vector<double>& tau() const noexcept { return tau_; }
  std::size_t size() const noexcept { return support_.size(); }

  double variance_sum() const;         // sum of tau (1 - tau)
  double variance_square_sum() const;  // sum of (tau (1 - tau))^2

  // xi_g for trial `seed`, keyed by (seed, g).
  std::vector<std::uint8_t> sample(std::uint64_t seed) const;
  // X = sum of (xi_g - tau_g) delta_g.
  AlgebraElement realize(const std::vector<std::uint8_t>& xi) const;

 private:
  GroupModel group_;
  std::vector<Element> support_;
  std::vector<double> tau_;
};

// Number of set partitions of {1..n} whose blocks all have at least two
// elements. C_M in the moment bound is partition_count(4M).
std::uint64_t partition_count(unsigned n);

inline constexpr std::size_t kExactEnumerationCap = 12;

// E ||(X~ * X)^M||_2^2 summed over all 2^|E| outcomes. |E| <= 12.
double moment_exact_small(const CenteredField& field, unsigned m);

struct MomentEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  double rhs = 0.0;  // (sum Var)^(2M)
  double ratio = 0.0;
  double variance_sum = 0.0;
  std::uint64_t partition_bound = 0;  // C_M
  bool bound_applies = false;         // sum Var >= 1
  std::size_t trials = 0;
};

// Monte-Carlo mean of ||(X~ * X)^M||_2^2. Trials < 100 is a UsageError.
MomentEstimate moment_bound_mc(const CenteredField& field, unsigned m, std::size_t trials,
                               std::uint64_t seed, unsigned workers = 1);

struct ColoringPartition {
  Element h;
  std::vector<std::vector<Element>> classes;  // nonempty, at most three
};

// Colors the indices g of the products Y_g = X_g X_{hg}, g in E with hg in E,
// so that products in one class involve disjoint variables. Components of
// g -> hg are paths or cycles: paths and even cycles take two colors, odd
// cycles three. Throws UsageError when h = e.
ColoringPartition shift_graph_coloring(const GroupModel& group, const std::vector<Element>& e,
                                       const Element& h);

// Classes disjoint, covering E intersect h^-1 E, at most three, and the
// variable pairs {g, hg} within each class pairwise disjoint.
bool coloring_is_valid(const GroupModel& group, const std::vector<Element>& e,
                       const ColoringPartition& partition);

struct ChernoffReport {
  double empirical = 0.0;  // frequency of ||X * X~||_inf(G minus e) >= theta S
  double bound = 0.0;      // 6 |E|^2 max(exp(-theta^2/36), exp(-theta/6))
  // 6 |E|^2 max(exp(-theta^2/36), exp(-theta S/6)), the per-class form before
  // S = (sum Var^2)^(1/2) is replaced by 1.
  double in_proof_bound = 0.0;
  double standard_error = 0.0;
  double threshold = 0.0;  // theta S
  bool vacuous = false;    // bound >= 1
  bool bound_applies = false;  // sum Var^2 >= 1
  bool pass = false;
  std::size_t trials = 0;
};

ChernoffReport chernoff_tail_check(const CenteredField& field, double theta, std::size_t trials,
                                   std::uint64_t seed, unsigned workers = 1);

// nu_j = beta(2^j)^-1 sum over S_{2^j} of eta_g delta_g for one realization.
AlgebraElement nu_measure(const SelectorField& field);

struct NuBoundRow {
  unsigned j = 0;
  double beta = 0.0;
  double tau_square_sum = 0.0;
  double identity = 0.0;          // (nu * nu~)(e)
  double identity_formula = 0.0;  // beta^-2 sum eta^2
  double off_identity_sup = 0.0;
  double identity_ratio = 0.0;  // identity / (3 / beta)
  double off_ratio = 0.0;       // sup / (beta^-2 (sum tau^2)^(1/2) 2^(kappa j))
};

std::vector<NuBoundRow> nu_conv_bound_check(const GroupModel& group, const TauProfile& profile,
                                            unsigned jmin, unsigned jmax, double kappa,
                                            std::uint64_t seed);

struct NearOptimality {
  double estimate = 0.0;  // Monte-Carlo E |(nu * nu~)(h)|^2
  double standard_error = 0.0;
  // beta^-4 sum over g, hg in S of Var(g) Var(hg); equal to the expectation
  // when h has infinite order.
  double exact = 0.0;
  double scale = 0.0;  // 2^((-3d + 2 alpha) j)
  double ratio = 0.0;  // estimate / scale
};

NearOptimality near_optimality_estimate(const GroupModel& group, double alpha, unsigned j,
                                        const Element& h, std::size_t trials, std::uint64_t seed,
                                        unsigned workers = 1);

struct TailRow {
  unsigned j = 0;
  double lhs = 0.0;       // ||(nu~ * nu)^M||_1
  double lambda = 0.0;    // j^(-M (1 + eps))
  double one_norm_power = 0.0;  // ||nu~ * nu||_1^M
  bool exceeds = false;
};

struct TailReport {
  std::vector<TailRow> rows;
  bool precondition = false;  // d (2M - 1) > 2 M alpha
  std::size_t exceedances_beyond = 0;  // rows with j > j0 that exceed
};

TailReport borel_cantelli_tail_report(const GroupModel& group, double alpha, unsigned m,
                                      double eps, unsigned jmin, unsigned jmax, unsigned j0,
                                      std::uint64_t seed);

}  // namespace ergolab
