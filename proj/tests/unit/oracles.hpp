#pragma once

// Reference implementations kept deliberately naive and separate from the
// library code they check.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "ergolab/group_algebra.hpp"
#include "ergolab/groups.hpp"

namespace oracle {

using Coeffs = std::map<std::array<std::int64_t, 4>, double>;

// Upper unitriangular 3x3 integer matrices [[1,x,z],[0,1,y],[0,0,1]].
struct Mat3 {
  std::int64_t m[3][3];
};

inline Mat3 heis_matrix(std::int64_t x, std::int64_t y, std::int64_t z) {
  return Mat3{{{1, x, z}, {0, 1, y}, {0, 0, 1}}};
}

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r.m[i][j] += a.m[i][k] * b.m[k][j];
  return r;
}

inline std::array<std::int64_t, 4> key(const ergolab::Element& e) { return e.c; }

inline Coeffs to_map(const ergolab::AlgebraElement& f) {
  Coeffs out;
  for (const auto& t : f.terms()) out[key(t.g)] += t.coeff;
  return out;
}

inline Coeffs convolve(const ergolab::GroupModel& g, const Coeffs& a, const Coeffs& b) {
  Coeffs out;
  for (const auto& [u, x] : a) {
    for (const auto& [v, y] : b) {
      ergolab::Element eu{u}, ev{v};
      out[g.multiply(eu, ev).c] += x * y;
    }
  }
  return out;
}

inline Coeffs involution(const ergolab::GroupModel& g, const Coeffs& a) {
  Coeffs out;
  for (const auto& [u, x] : a) out[g.inverse(ergolab::Element{u}).c] += x;
  return out;
}

inline double l2_squared(const Coeffs& a) {
  double s = 0.0;
  for (const auto& [u, x] : a) s += x * x;
  return s;
}

inline bool same(const Coeffs& a, const Coeffs& b, double tol) {
  std::set<std::array<std::int64_t, 4>> keys;
  for (const auto& [k, v] : a) keys.insert(k);
  for (const auto& [k, v] : b) keys.insert(k);
  for (const auto& k : keys) {
    const double x = a.count(k) ? a.at(k) : 0.0;
    const double y = b.count(k) ? b.at(k) : 0.0;
    if (std::abs(x - y) > tol * std::max({1.0, std::abs(x), std::abs(y)})) return false;
  }
  return true;
}

// Set partitions of {1..n} without singleton blocks, by the recursion on
// the block containing n: choose its k - 1 other members, k >= 2.
inline std::uint64_t no_singleton_partitions(unsigned n) {
  std::vector<std::uint64_t> a(n + 1, 0);
  a[0] = 1;
  for (unsigned m = 1; m <= n; ++m) {
    std::uint64_t total = 0;
    std::uint64_t binom = 1;  // C(m-1, k-1)
    for (unsigned k = 1; k <= m; ++k) {
      if (k >= 2) total += binom * a[m - k];
      binom = binom * (m - k) / k;
    }
    a[m] = total;
  }
  return a[n];
}

}  // namespace oracle
