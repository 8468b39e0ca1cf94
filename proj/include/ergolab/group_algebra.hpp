#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ergolab/groups.hpp"

namespace ergolab {

struct Term {
  Element g;
  double coeff = 0.0;
};

inline constexpr std::size_t kDefaultSupportCap = 1'000'000;

// Finitely supported real function on a group. Terms are kept sorted by
// element and exact zeros are never stored.
class AlgebraElement {
 public:
  explicit AlgebraElement(GroupModel group);

  static AlgebraElement delta(GroupModel group, const Element& g, double coeff = 1.0);
  // Duplicate elements are summed; zero sums are dropped.
  static AlgebraElement from_terms(GroupModel group, std::vector<Term> terms);

  const GroupModel& group() const noexcept { return group_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t support_size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }

  double coefficient(const Element& g) const;
  AlgebraElement scaled(double factor) const;

  // "element,coefficient" lines with a header row.
  std::string to_csv() const;

 private:
  GroupModel group_;
  std::vector<Term> terms_;
};

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b);
AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b);

// (f*g)(h) = sum over uv = h of f(u) g(v). Throws UsageError on mismatched
// groups and ResourceError when the product support would exceed `cap`.
AlgebraElement convolve(const AlgebraElement& f, const AlgebraElement& g,
                        std::size_t cap = kDefaultSupportCap);

// f~(g) = f(g^-1).
AlgebraElement involution(const AlgebraElement& f);

// (f~ * f)^M, M >= 1.
AlgebraElement conv_power_selfadjoint(const AlgebraElement& f, unsigned m,
                                      std::size_t cap = kDefaultSupportCap);

enum class Norm { kOne, kTwo, kInf };

double lp_norm(const AlgebraElement& f, Norm p);

// ||(f~ * f)^M||_1^(1/2M), an upper bound for the norm of psi -> psi * f on l2.
double op_norm_upper_bound(const AlgebraElement& f, unsigned m,
                           std::size_t cap = kDefaultSupportCap);

double inner_product(const AlgebraElement& f, const AlgebraElement& g);

// The single coefficient (f*g)(h) without forming the product.
double convolution_coefficient(const AlgebraElement& f, const AlgebraElement& g,
                               const Element& h);

// Coefficientwise |a - b| <= tol * max(1, |a|, |b|) on the union of supports.
bool approx_equal(const AlgebraElement& a, const AlgebraElement& b, double tol = 1e-12);

}  // namespace ergolab
