#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ergolab {

inline constexpr std::size_t kMaxCoords = 4;

// Canonical form of a group element. Z^d uses the first d coordinates,
// H3(Z) stores the normal-form triple (x, y, z) and Z_q a residue in [0, q).
// Unused coordinates stay zero so equality and hashing are well defined.
struct Element {
  std::array<std::int64_t, kMaxCoords> c{};

  friend bool operator==(const Element&, const Element&) = default;
  friend auto operator<=>(const Element&, const Element&) = default;

  std::span<const std::int64_t> coords() const noexcept { return c; }
};

inline Element make_element(std::int64_t a, std::int64_t b = 0, std::int64_t c = 0,
                            std::int64_t d = 0) {
  return Element{{a, b, c, d}};
}

struct ElementHash {
  std::size_t operator()(const Element& e) const noexcept;
};

enum class GroupKind { kLattice, kHeisenberg, kCyclic };

// A finitely generated group together with the generating set used for
// word-metric balls. With `symmetric` false the balls are the paper-style
// semigroup balls over the base generators; with it true the inverses are
// included as well.
class GroupModel {
 public:
  static GroupModel lattice(int dimension, bool symmetric = false);
  static GroupModel heisenberg(bool symmetric = true);
  static GroupModel cyclic(std::int64_t modulus, bool symmetric = false);

  GroupKind kind() const noexcept { return kind_; }
  bool symmetric() const noexcept { return symmetric_; }
  // Number of meaningful coordinates in an Element.
  int rank() const noexcept { return rank_; }
  // Polynomial growth degree: d for Z^d, 4 for H3, 0 for Z_q.
  int growth_degree() const noexcept;
  std::int64_t modulus() const noexcept { return modulus_; }

  const std::vector<Element>& base_generators() const noexcept { return base_generators_; }
  // Generators used for enumeration: base set, plus inverses when symmetric.
  const std::vector<Element>& generators() const noexcept { return generators_; }

  Element identity() const noexcept { return Element{}; }
  Element multiply(const Element& a, const Element& b) const noexcept;
  Element inverse(const Element& a) const noexcept;
  bool is_identity(const Element& a) const noexcept { return a == Element{}; }

  // Same underlying group; the generating-set flag does not matter.
  bool same_group(const GroupModel& other) const noexcept;
  GroupModel with_symmetric(bool symmetric) const;

  // "zd:2", "heis3", "cyclic:5" with a ":sym" / ":semi" suffix where the
  // enumeration flag differs from the kind's default.
  std::string describe() const;
  // Semicolon-joined coordinates, e.g. "1;2".
  std::string format(const Element& e) const;
  Element parse(std::string_view text) const;

 private:
  GroupModel(GroupKind kind, int rank, std::int64_t modulus, bool symmetric,
             std::vector<Element> base);

  GroupKind kind_;
  int rank_;
  std::int64_t modulus_;
  bool symmetric_;
  std::vector<Element> base_generators_;
  std::vector<Element> generators_;
};

// Parses "zd:<d>", "heis3" and "cyclic:<q>", optionally suffixed by ":sym" or
// ":semi". H3 defaults to the symmetric generating set, the others to the
// semigroup one. `symmetric` overrides the descriptor when set.
// Throws ConfigError on unknown descriptors.
GroupModel make_group(std::string_view spec, std::optional<bool> symmetric = std::nullopt);

inline constexpr std::size_t kDefaultBallCap = 10'000'000;

// Word-metric ball S_N. Elements are kept in the order they were supplied
// (breadth-first order for balls built by word_ball) together with their
// word lengths. Immutable after construction.
class Ball {
 public:
  Ball(GroupModel group, std::uint32_t radius, std::vector<Element> elements,
       std::vector<std::uint32_t> lengths);

  const GroupModel& group() const noexcept { return group_; }
  std::uint32_t radius() const noexcept { return radius_; }
  std::size_t size() const noexcept { return elements_.size(); }
  std::span<const Element> elements() const noexcept { return elements_; }
  std::span<const std::uint32_t> lengths() const noexcept { return lengths_; }

  bool contains(const Element& g) const;
  std::optional<std::size_t> index_of(const Element& g) const;
  std::optional<std::uint32_t> length_of(const Element& g) const;

  // Number of elements at each word length 0..radius.
  const std::vector<std::uint64_t>& level_counts() const noexcept { return level_counts_; }
  // |S_M| for M <= radius.
  std::uint64_t size_at(std::uint32_t m) const;
  // True when lengths are nondecreasing, so S_M is a prefix of elements().
  bool level_ordered() const noexcept { return level_ordered_; }

 private:
  GroupModel group_;
  std::uint32_t radius_;
  std::vector<Element> elements_;
  std::vector<std::uint32_t> lengths_;
  std::vector<std::uint32_t> sorted_;  // positions ordered by element
  std::vector<std::uint64_t> level_counts_;
  std::vector<std::uint64_t> cumulative_;
  bool level_ordered_ = true;
};

// Predicted |S_N| when a closed form is known (Z^d, Z_q).
std::optional<std::uint64_t> projected_ball_size(const GroupModel& group, std::uint32_t radius);

// Breadth-first enumeration from e by right multiplication with the
// generators. Throws ResourceError, quoting the projected size, when |S_N|
// would exceed `cap`.
Ball word_ball(const GroupModel& group, std::uint32_t radius,
               std::size_t cap = kDefaultBallCap);

// |{g : rho(g) = n}| for n = 0..radius, by closed form for semigroup Z^d and
// Z_q and by enumeration otherwise.
std::vector<std::uint64_t> sphere_sizes(const GroupModel& group, std::uint32_t radius,
                                        std::size_t cap = kDefaultBallCap);

// rho(g). Closed forms for Z^d and Z_q, breadth-first search for H3.
// Throws OutOfRangeError when g is outside the semigroup or not found
// before the search exceeds `cap` elements.
std::uint32_t word_length(const GroupModel& group, const Element& g,
                          std::size_t cap = kDefaultBallCap);

struct GrowthFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::uint32_t radius_reached = 0;
  bool partial = false;  // ball cap hit before Nmax
};

// Least-squares slope of log|S_N| against log N over N in [Nmax/2, Nmax].
// Requires Nmax >= 8.
GrowthFit growth_exponent_estimate(const GroupModel& group, std::uint32_t nmax,
                                   std::size_t cap = kDefaultBallCap);

// |S_N symmetric-difference g S_N| / |S_N|.
double ball_translate_defect(const GroupModel& group, const Element& g, std::uint32_t radius,
                             std::size_t cap = kDefaultBallCap);

}  // namespace ergolab
