#include "ergolab/group_algebra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "ergolab/error.hpp"

namespace ergolab {

namespace {

bool by_element(const Term& a, const Term& b) { return a.g < b.g; }

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void require_same(const AlgebraElement& f, const AlgebraElement& g, const char* what) {
  if (!f.group().same_group(g.group())) {
    throw UsageError(std::string(what) + " of elements over different groups (" +
                     f.group().describe() + " vs " + g.group().describe() + ")");
  }
}

[[noreturn]] void support_overflow(std::size_t cap) {
  throw ResourceError("convolution support exceeds the cap of " + std::to_string(cap) +
                      " nonzeros");
}

// Bounding-box accumulation for Z^d and Z_q. Visits pairs in the same order
// as the hashed path, so every coefficient is summed identically.
bool convolve_dense(const AlgebraElement& f, const AlgebraElement& g, std::size_t cap,
                    std::vector<Term>& out) {
  const GroupModel& group = f.group();
  const std::size_t pairs = f.support_size() * g.support_size();
  const double budget = std::min(8.0 * static_cast<double>(pairs) + 4096.0, 67108864.0);
  const int rank = group.rank();
  std::array<std::int64_t, kMaxCoords> lo{}, extent{};
  if (group.kind() == GroupKind::kCyclic) {
    if (static_cast<double>(group.modulus()) > budget) return false;
    lo[0] = 0;
    extent[0] = group.modulus();
  } else if (group.kind() == GroupKind::kLattice) {
    double volume = 1.0;
    for (int k = 0; k < rank; ++k) {
      const auto c = static_cast<std::size_t>(k);
      auto [fmin, fmax] = std::minmax_element(
          f.terms().begin(), f.terms().end(),
          [c](const Term& a, const Term& b) { return a.g.c[c] < b.g.c[c]; });
      auto [gmin, gmax] = std::minmax_element(
          g.terms().begin(), g.terms().end(),
          [c](const Term& a, const Term& b) { return a.g.c[c] < b.g.c[c]; });
      lo[c] = fmin->g.c[c] + gmin->g.c[c];
      extent[c] = fmax->g.c[c] + gmax->g.c[c] - lo[c] + 1;
      volume *= static_cast<double>(extent[c]);
    }
    if (volume > budget) return false;
  } else {
    return false;
  }
  std::size_t volume = 1;
  for (int k = 0; k < rank; ++k) volume *= static_cast<std::size_t>(extent[static_cast<std::size_t>(k)]);
  std::vector<double> acc(volume, 0.0);
  std::vector<std::uint8_t> touched(volume, 0);
  std::size_t distinct = 0;
  auto index_of = [&](const Element& e) {
    std::size_t idx = 0;
    for (int k = 0; k < rank; ++k) {
      const auto c = static_cast<std::size_t>(k);
      idx = idx * static_cast<std::size_t>(extent[c]) + static_cast<std::size_t>(e.c[c] - lo[c]);
    }
    return idx;
  };
  for (const Term& a : f.terms()) {
    for (const Term& b : g.terms()) {
      const std::size_t idx = index_of(group.multiply(a.g, b.g));
      if (!touched[idx]) {
        touched[idx] = 1;
        if (++distinct > cap) support_overflow(cap);
      }
      acc[idx] += a.coeff * b.coeff;
    }
  }
  out.reserve(distinct);
  for (std::size_t idx = 0; idx < volume; ++idx) {
    if (!touched[idx] || acc[idx] == 0.0) continue;
    Element e;
    std::size_t rest = idx;
    for (int k = rank - 1; k >= 0; --k) {
      const auto c = static_cast<std::size_t>(k);
      const auto span = static_cast<std::size_t>(extent[c]);
      e.c[c] = lo[c] + static_cast<std::int64_t>(rest % span);
      rest /= span;
    }
    out.push_back(Term{e, acc[idx]});
  }
  return true;
}

}  // namespace

AlgebraElement::AlgebraElement(GroupModel group) : group_(std::move(group)) {}

AlgebraElement AlgebraElement::delta(GroupModel group, const Element& g, double coeff) {
  AlgebraElement out(std::move(group));
  if (coeff != 0.0) out.terms_.push_back(Term{g, coeff});
  return out;
}

AlgebraElement AlgebraElement::from_terms(GroupModel group, std::vector<Term> terms) {
  AlgebraElement out(std::move(group));
  std::stable_sort(terms.begin(), terms.end(), by_element);
  for (const Term& t : terms) {
    if (!out.terms_.empty() && out.terms_.back().g == t.g) {
      out.terms_.back().coeff += t.coeff;
    } else {
      out.terms_.push_back(t);
    }
  }
  std::erase_if(out.terms_, [](const Term& t) { return t.coeff == 0.0; });
  return out;
}

double AlgebraElement::coefficient(const Element& g) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), Term{g, 0.0}, by_element);
  if (it == terms_.end() || it->g != g) return 0.0;
  return it->coeff;
}

AlgebraElement AlgebraElement::scaled(double factor) const {
  AlgebraElement out(group_);
  if (factor == 0.0) return out;
  out.terms_ = terms_;
  for (Term& t : out.terms_) t.coeff *= factor;
  std::erase_if(out.terms_, [](const Term& t) { return t.coeff == 0.0; });
  return out;
}

std::string AlgebraElement::to_csv() const {
  std::string out = "element,coefficient\n";
  for (const Term& t : terms_) {
    out += group_.format(t.g);
    out += ',';
    out += shortest(t.coeff);
    out += '\n';
  }
  return out;
}

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  require_same(a, b, "sum");
  std::vector<Term> terms(a.terms().begin(), a.terms().end());
  terms.insert(terms.end(), b.terms().begin(), b.terms().end());
  return AlgebraElement::from_terms(a.group(), std::move(terms));
}

AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  return a + b.scaled(-1.0);
}

AlgebraElement convolve(const AlgebraElement& f, const AlgebraElement& g, std::size_t cap) {
  require_same(f, g, "convolution");
  const GroupModel& group = f.group();
  if (f.empty() || g.empty()) return AlgebraElement(group);
  std::vector<Term> terms;
  if (!convolve_dense(f, g, cap, terms)) {
    std::unordered_map<Element, double, ElementHash> acc;
    acc.reserve(std::min(f.support_size() * g.support_size(), cap) + 1);
    for (const Term& a : f.terms()) {
      for (const Term& b : g.terms()) acc[group.multiply(a.g, b.g)] += a.coeff * b.coeff;
      if (acc.size() > cap) support_overflow(cap);
    }
    terms.reserve(acc.size());
    for (const auto& [e, v] : acc) {
      if (v != 0.0) terms.push_back(Term{e, v});
    }
    std::sort(terms.begin(), terms.end(), by_element);
  }
  return AlgebraElement::from_terms(group, std::move(terms));
}

AlgebraElement involution(const AlgebraElement& f) {
  std::vector<Term> terms;
  terms.reserve(f.support_size());
  for (const Term& t : f.terms()) terms.push_back(Term{f.group().inverse(t.g), t.coeff});
  return AlgebraElement::from_terms(f.group(), std::move(terms));
}

AlgebraElement conv_power_selfadjoint(const AlgebraElement& f, unsigned m, std::size_t cap) {
  if (m < 1) throw UsageError("convolution power needs M >= 1");
  const AlgebraElement base = convolve(involution(f), f, cap);
  AlgebraElement out = base;
  for (unsigned i = 1; i < m; ++i) out = convolve(out, base, cap);
  return out;
}

double lp_norm(const AlgebraElement& f, Norm p) {
  double acc = 0.0;
  for (const Term& t : f.terms()) {
    const double a = std::abs(t.coeff);
    switch (p) {
      case Norm::kOne:
        acc += a;
        break;
      case Norm::kTwo:
        acc += a * a;
        break;
      case Norm::kInf:
        acc = std::max(acc, a);
        break;
    }
  }
  return p == Norm::kTwo ? std::sqrt(acc) : acc;
}

double op_norm_upper_bound(const AlgebraElement& f, unsigned m, std::size_t cap) {
  const double one = lp_norm(conv_power_selfadjoint(f, m, cap), Norm::kOne);
  return std::pow(one, 1.0 / (2.0 * m));
}

double inner_product(const AlgebraElement& f, const AlgebraElement& g) {
  require_same(f, g, "inner product");
  double acc = 0.0;
  auto a = f.terms().begin(), b = g.terms().begin();
  while (a != f.terms().end() && b != g.terms().end()) {
    if (a->g < b->g) {
      ++a;
    } else if (b->g < a->g) {
      ++b;
    } else {
      acc += a->coeff * b->coeff;
      ++a;
      ++b;
    }
  }
  return acc;
}

double convolution_coefficient(const AlgebraElement& f, const AlgebraElement& g,
                               const Element& h) {
  require_same(f, g, "convolution");
  const GroupModel& group = f.group();
  double acc = 0.0;
  for (const Term& a : f.terms()) {
    acc += a.coeff * g.coefficient(group.multiply(group.inverse(a.g), h));
  }
  return acc;
}

bool approx_equal(const AlgebraElement& a, const AlgebraElement& b, double tol) {
  if (!a.group().same_group(b.group())) return false;
  auto close = [tol](double x, double y) {
    return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)});
  };
  auto x = a.terms().begin(), y = b.terms().begin();
  while (x != a.terms().end() || y != b.terms().end()) {
    if (y == b.terms().end() || (x != a.terms().end() && x->g < y->g)) {
      if (!close(x->coeff, 0.0)) return false;
      ++x;
    } else if (x == a.terms().end() || y->g < x->g) {
      if (!close(0.0, y->coeff)) return false;
      ++y;
    } else {
      if (!close(x->coeff, y->coeff)) return false;
      ++x;
      ++y;
    }
  }
  return true;
}

}  // namespace ergolab
