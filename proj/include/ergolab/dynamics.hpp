#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ergolab/group_algebra.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/selectors.hpp"

namespace ergolab {

enum class SpaceKind { kCircle, kTorus, kCycle };

// A point of [0,1), [0,1)^d (d <= 3) or Z_q. Cycle points store the residue
// as an exact integer value in x[0].
struct Point {
  std::array<double, 3> x{};
};

// Measure-preserving action of a GroupModel on a probability space.
//   rotation:golden | rotation:<p>/<q> | rotation:<theta>   Z on the circle
//   torus:<d>      Z^d on T^d, coordinate i rotated by n_i theta_i with
//                  theta = (sqrt2 - 1, sqrt3 - 1, sqrt5 - 2)
//   cycle:<q>      Z on Z_q by x -> x + 1
//   heis           H3(Z) on T^3: a (x,y,z) = (x + t1, y, z + y),
//                  b (x,y,z) = (x, y + t2, z)
class DynSystem {
 public:
  static DynSystem rotation(double theta);
  static DynSystem rational_rotation(std::int64_t p, std::int64_t q);
  static DynSystem torus(int dimension, std::vector<double> theta = {});
  static DynSystem cycle(std::int64_t q);
  static DynSystem heisenberg(double theta1, double theta2);

  const GroupModel& group() const noexcept { return group_; }
  SpaceKind space() const noexcept { return space_; }
  int dimension() const noexcept { return dimension_; }
  std::int64_t modulus() const noexcept { return modulus_; }
  const std::vector<double>& theta() const noexcept { return theta_; }
  // Rational rotations are not ergodic; their orbit has `period` points.
  std::optional<std::int64_t> period() const noexcept { return period_; }
  const std::string& name() const noexcept { return name_; }

  // T_g x, with T_g T_h = T_{gh}.
  Point act(const Element& g, const Point& p) const;

  // Pushes three independent uniforms to the reference measure.
  Point from_uniform(const std::array<double, 3>& u) const;
  // 32 low-discrepancy points followed by the origin.
  std::vector<Point> sample_points(std::size_t count = 32) const;

 private:
  DynSystem(std::string name, GroupModel group, SpaceKind space, int dimension);

  std::string name_;
  GroupModel group_;
  SpaceKind space_;
  int dimension_;
  std::int64_t modulus_ = 0;
  std::int64_t numerator_ = 0;
  std::vector<double> theta_;
  std::optional<std::int64_t> period_;
};

// Throws ConfigError on unknown descriptors.
DynSystem make_system(std::string_view spec);

struct Observable {
  std::string name;
  std::function<double(const Point&)> eval;
  double integral = 0.0;  // against the reference measure
};

// cos1 = cos(2 pi x0), cosk:<k> = cos(2 pi k x0), const:<c>, identity = x0,
// indicator0 = 1{x0 = 0} (cycles only). Throws ConfigError.
Observable make_observable(const DynSystem& sys, std::string_view spec);

// Limit of the averages at x: the orbit mean for rational rotations, the
// integral otherwise.
double reference_value(const DynSystem& sys, const Observable& f, const Point& x);

// |S_N|^-1 sum over S_N of f(T_g x).
double ergodic_average(const DynSystem& sys, const Observable& f, const Point& x,
                       const Ball& ball);
double ergodic_average(const DynSystem& sys, const Observable& f, const Point& x,
                       std::uint32_t radius, std::size_t cap = kDefaultBallCap);

// beta(N)^-1 sum over S_N of tau_{rho(g)} f(T_g x). Throws UndefinedError
// when beta(N) = 0.
double expected_average(const DynSystem& sys, const Observable& f, const Point& x,
                        const SelectorField& field);

// beta(N)^-1 sum over S_N of xi_g f(T_g x). Throws UndefinedError when
// beta(N) = 0.
double random_average(const DynSystem& sys, const Observable& f, const Point& x,
                      const SelectorField& field);

struct DiagnosticOptions {
  std::vector<std::uint32_t> radii;  // increasing
  std::vector<Point> points;         // empty: sys.sample_points()
  std::vector<std::uint64_t> seeds;
  unsigned workers = 1;
  std::size_t cap = kDefaultBallCap;
};

struct SeedTrace {
  std::uint64_t seed = 0;
  // values[p][n]: A_N^(omega) f at points[p], N = radii[n].
  std::vector<std::vector<double>> values;
  // Mean over points of |A_N^(omega) f - reference|, per N.
  std::vector<double> deviations;
  // max over points of the spread of A_N over the last three radii.
  double tail_oscillation = 0.0;
};

struct AverageReport {
  std::vector<std::uint32_t> radii;
  std::vector<double> references;  // per point
  std::vector<SeedTrace> per_seed;
  std::vector<double> medians;  // median over seeds of deviations, per N
};

// Random averages along `radii` for every seed, accumulated in one pass over
// the ball of the largest radius.
AverageReport convergence_diagnostic(const DynSystem& sys, const Observable& f,
                                     const TauProfile& profile, const DiagnosticOptions& options);

// True when a strictly decreasing run covers the last `count` medians.
bool strictly_decreasing_tail(const std::vector<double>& values, std::size_t count);

struct TransferenceResult {
  bool agree = true;
  double max_error = 0.0;
  std::size_t comparisons = 0;
};

// For every g in the symmetric ball S_K and every measure mu, compares
// sum_h mu(h) f(T_h T_g x) with (phi * mu)(g^-1), where phi(u) = f(T_{u^-1} x)
// for u^-1 in supp(mu) S_K and 0 elsewhere.
TransferenceResult transference_identity_check(const DynSystem& sys, const Observable& f,
                                               const Point& x, std::uint32_t k,
                                               const std::vector<AlgebraElement>& measures,
                                               double tol = 1e-9);

struct SandwichResult {
  std::size_t checked = 0;
  std::size_t violations = 0;
};

// For f >= 0 on a Z system: with M_j = min{n : beta(n) >= a_j} and
// m_j = M_j - 1, checks (a_j / a_{j+1}) A_{M_j} f <= A_N f <=
// (a_{j+1} / a_j) A_{m_{j+1}} f for every M_j <= N <= m_{j+1} <= nmax.
SandwichResult sandwich_check(const DynSystem& sys, const Observable& f, const Point& x,
                              const TauProfile& profile, std::uint64_t seed,
                              const std::vector<double>& a, std::uint64_t nmax);

}  // namespace ergolab
