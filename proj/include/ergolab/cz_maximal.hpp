#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "ergolab/group_algebra.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/selectors.hpp"

namespace ergolab {

// {k 2^s, ..., (k + 1) 2^s - 1}^d in Z^d.
struct DyadicCube {
  unsigned level = 0;
  int dimension = 1;
  std::array<std::int64_t, kMaxCoords> index{};

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;

  std::int64_t side() const noexcept { return std::int64_t{1} << level; }
  std::uint64_t volume() const noexcept;
  bool contains(const Element& g) const noexcept;
  bool contains(const DyadicCube& inner) const noexcept;
  // Chebyshev distance from g to the cube.
  std::int64_t distance(const Element& g) const noexcept;
};

DyadicCube cube_of(const Element& g, unsigned level, int dimension);

// Distinct level-s cubes meeting the region, sorted.
std::vector<DyadicCube> dyadic_cover(unsigned level, std::span<const Element> region,
                                     int dimension);

struct BadPiece {
  DyadicCube cube;
  AlgebraElement piece;  // (phi - average) on the cube
  double average = 0.0;
};

struct CZDecomposition {
  double lambda = 0.0;
  // Cubes are selected where the average of |phi| exceeds lambda / 2^(d+1).
  double stopping_height = 0.0;
  // Sum of |Q| <= (constant / lambda) ||phi||_1, with constant 2^(d+1).
  double constant = 0.0;
  AlgebraElement good;
  std::vector<BadPiece> bad;
};

inline constexpr std::uint64_t kDefaultCubeVolumeCap = 10'000'000;

// Stopping-time decomposition phi = good + sum of bad pieces over maximal
// dyadic cubes. Selected cubes on which |phi| <= lambda everywhere are
// returned to the good part, so ||good||_inf <= lambda. Requires phi over
// Z^d and lambda > 0.
CZDecomposition cz_decompose(const AlgebraElement& phi, double lambda,
                             std::uint64_t volume_cap = kDefaultCubeVolumeCap);

struct CZCheck {
  bool recombines = false;
  bool good_bounded = false;    // ||good||_inf <= 2^d lambda
  bool pieces_bounded = false;  // ||b_Q||_1 <= lambda |Q|
  bool disjoint = false;
  bool measure_bounded = false;  // sum |Q| <= (C / lambda) ||phi||_1
  double good_sup = 0.0;
  double cube_measure = 0.0;

  bool all() const noexcept {
    return recombines && good_bounded && pieces_bounded && disjoint && measure_bounded;
  }
};

// `constant` is the frozen C of the measure bound.
CZCheck check_invariants(const CZDecomposition& decomposition, const AlgebraElement& phi,
                         double constant, double tol = 1e-12);

struct BadSplit {
  unsigned j = 0;
  double threshold = 0.0;  // lambda r_j
  std::vector<DyadicCube> cubes;
  std::vector<AlgebraElement> small;  // b^(j): where |b| > lambda r_j
  std::vector<AlgebraElement> large;  // B^(j): the rest
};

BadSplit split_bad(const CZDecomposition& decomposition, unsigned j, double r_j, double lambda);

// Sum over cubes of level s of B^(j).
AlgebraElement level_sum(const BadSplit& split, unsigned level);

// mu = beta^-1 sum of xi_g delta_g over the field's ball. Throws
// UndefinedError when beta = 0.
AlgebraElement random_measure(const SelectorField& field);
// E mu = beta^-1 sum of tau_{rho(g)} delta_g over the ball.
AlgebraElement expected_measure(const Ball& ball, const TauProfile& profile);

// Test functions on Z supported in [0, span): spikes, signed sparse sums
// and interval indicators in rotation, member c keyed by (seed, c).
std::vector<AlgebraElement> weak_corpus(std::size_t size, std::int64_t span, std::uint64_t seed);

struct WeakConstantReport {
  double constant = 0.0;            // max over corpus and grid
  std::vector<double> per_function;  // max over the grid, per corpus member
};

// lambda |{g : sup_j |phi * mu_j (g)| > lambda}| / ||phi||_1 with lambda
// running over `fractions` of sup_g sup_j |phi * mu_j (g)|.
WeakConstantReport maximal_weak11_empirical(const std::vector<AlgebraElement>& measures,
                                            const std::vector<AlgebraElement>& corpus,
                                            const std::vector<double>& fractions,
                                            unsigned workers = 1);

struct WeakStabilityOptions {
  double alpha = 0.4;
  unsigned jmax = 12;
  std::size_t corpus_size = 30;
  std::size_t grid = 12;  // lambda = 0.95 * 2^-i * sup, i < grid
  std::uint64_t corpus_seed = 7;
  std::vector<std::uint64_t> seeds;
  std::vector<unsigned> deterministic_jmax{8, 10, 12};
  double spread_limit = 2.0;
  unsigned workers = 0;
};

struct WeakStabilityReport {
  std::vector<double> seed_constants;  // mu_j^(omega), j = 1..jmax, per seed
  double spread = 0.0;                 // max / min over seeds
  std::vector<double> deterministic_constants;  // E mu_j, per entry of deterministic_jmax
  double deterministic_spread = 0.0;
  bool stable = false;
  bool deterministic_stable = false;
};

// Weak (1,1) constants over Z balls S_{2^j} with tau_n = n^-alpha, on a
// corpus spread over [0, 2^jmax).
WeakStabilityReport weak11_stability(const WeakStabilityOptions& options);

struct DoublingReport {
  double c0 = 0.0;  // max_k sum_{j<=k} r_j / r_k
  std::vector<double> ratios;
  bool bounded = false;
};

// Prefix-sum domination. The ratio sequence counts as bounded when its last
// value is at most 1.5 times its value halfway through.
DoublingReport r_j_doubling_check(const std::vector<double>& r);

// s(j) = min{s : 2^s >= R}.
unsigned stopping_level(double radius);

// Every point of supp(piece * nu) lies within Chebyshev distance 2^s of the
// cube.
bool e4_containment(const DyadicCube& cube, const AlgebraElement& piece, const AlgebraElement& nu);

struct Lemma42Terms {
  double lhs = 0.0;    // ||B_s * nu||_2^2
  double term1 = 0.0;  // r_j^-1 ||B_s||_2^2
  double term2 = 0.0;  // lambda 2^(-eps j) ||B_s||_1
  double required_constant = 0.0;  // lhs / (term1 + term2)
};

Lemma42Terms lemma42_terms(const AlgebraElement& b_s, const AlgebraElement& nu, double r_j,
                           double lambda, double eps, unsigned j);

}  // namespace ergolab
