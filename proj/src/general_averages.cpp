#include "ergolab/general_averages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "ergolab/error.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/stats.hpp"

namespace ergolab {

SetFamily::SetFamily(GroupModel group, std::vector<FamilyMember> pool,
                     std::vector<std::vector<std::size_t>> sets,
                     std::vector<std::uint64_t> set_labels,
                     std::vector<std::vector<std::size_t>> cells,
                     std::vector<std::uint64_t> cell_labels,
                     std::vector<std::vector<std::size_t>> index_sets)
    : group_(std::move(group)),
      pool_(std::move(pool)),
      sets_(std::move(sets)),
      set_labels_(std::move(set_labels)),
      cells_(std::move(cells)),
      cell_labels_(std::move(cell_labels)),
      index_sets_(std::move(index_sets)) {
  if (set_labels_.size() != sets_.size()) throw UsageError("one label per set required");
  if (cell_labels_.size() != cells_.size()) throw UsageError("one label per cell required");
  if (!index_sets_.empty() && index_sets_.size() != sets_.size()) {
    throw UsageError("index sets must be given for every set or for none");
  }
  for (const FamilyMember& m : pool_) {
    if (!(m.tau >= 0.0 && m.tau <= 1.0)) throw UsageError("tau_g must lie in [0, 1]");
  }
  auto in_pool = [this](const std::vector<std::size_t>& v) {
    return std::all_of(v.begin(), v.end(), [this](std::size_t p) { return p < pool_.size(); });
  };
  for (const auto& s : sets_) {
    if (!in_pool(s)) throw UsageError("set refers outside the pool");
  }
  for (const auto& c : cells_) {
    if (!in_pool(c)) throw UsageError("cell refers outside the pool");
  }
  for (const auto& ix : index_sets_) {
    for (std::size_t i : ix) {
      if (i >= cells_.size()) throw UsageError("index set refers to a missing cell");
    }
  }
}

SetFamily SetFamily::from_word_balls(const GroupModel& group, const TauProfile& profile,
                                     std::uint32_t nmax, std::size_t cap) {
  const Ball ball = word_ball(group, nmax, cap);
  std::vector<FamilyMember> pool;
  std::vector<std::vector<std::size_t>> cells(nmax + 1);
  for (std::size_t p = 0; p < ball.size(); ++p) {
    const Element g = ball.elements()[p];
    const std::uint32_t len = ball.lengths()[p];
    pool.push_back(FamilyMember{g, g, profile(len)});
    cells[len].push_back(p);
  }
  std::vector<std::vector<std::size_t>> sets(nmax + 1);
  std::vector<std::vector<std::size_t>> index_sets(nmax + 1);
  std::vector<std::uint64_t> set_labels(nmax + 1);
  std::vector<std::uint64_t> cell_labels(nmax + 1);
  for (std::uint32_t n = 0; n <= nmax; ++n) {
    set_labels[n] = n;
    cell_labels[n] = n + 1;
    for (std::uint32_t r = 0; r <= n; ++r) {
      index_sets[n].push_back(r);
      sets[n].insert(sets[n].end(), cells[r].begin(), cells[r].end());
    }
  }
  return SetFamily(group, std::move(pool), std::move(sets), std::move(set_labels),
                   std::move(cells), std::move(cell_labels), std::move(index_sets));
}

SetFamily SetFamily::from_sequence_dyadic(const IntSequence& base, const TauProfile& profile,
                                          unsigned nmax) {
  if (nmax == 0 || nmax > 40) throw UsageError("dyadic family needs 1 <= nmax <= 40");
  const std::uint64_t needed = (std::uint64_t{1} << nmax) - 1;
  if (base.size() < needed) {
    throw UsageError("dyadic family needs " + std::to_string(needed) + " sequence terms, got " +
                     std::to_string(base.size()));
  }
  std::vector<FamilyMember> pool;
  pool.reserve(needed);
  for (std::uint64_t k = 1; k <= needed; ++k) {
    pool.push_back(FamilyMember{make_element(base[k - 1]),
                                make_element(static_cast<std::int64_t>(k)), profile(k)});
  }
  std::vector<std::vector<std::size_t>> cells(nmax), sets(nmax), index_sets(nmax);
  std::vector<std::uint64_t> labels(nmax);
  for (unsigned i = 1; i <= nmax; ++i) {
    labels[i - 1] = i;
    for (std::uint64_t k = std::uint64_t{1} << (i - 1); k < (std::uint64_t{1} << i); ++k) {
      cells[i - 1].push_back(k - 1);
    }
  }
  for (unsigned n = 1; n <= nmax; ++n) {
    for (unsigned i = 1; i <= n; ++i) {
      index_sets[n - 1].push_back(i - 1);
      sets[n - 1].insert(sets[n - 1].end(), cells[i - 1].begin(), cells[i - 1].end());
    }
  }
  return SetFamily(GroupModel::lattice(1), std::move(pool), std::move(sets), labels,
                   std::move(cells), labels, std::move(index_sets));
}

std::vector<Element> SetFamily::set_elements(std::size_t n) const {
  std::vector<Element> out;
  for (std::size_t p : set(n)) out.push_back(pool_[p].g);
  return out;
}

std::vector<Element> SetFamily::cell_elements(std::size_t i) const {
  std::vector<Element> out;
  for (std::size_t p : cell(i)) out.push_back(pool_[p].g);
  return out;
}

double SetFamily::beta(std::size_t n) const {
  double s = 0.0;
  for (std::size_t p : set(n)) s += pool_[p].tau;
  return s;
}

double SetFamily::beta_prime(std::size_t i) const {
  double s = 0.0;
  for (std::size_t p : cell(i)) s += pool_[p].tau;
  return s;
}

double SetFamily::tau_square_sum(std::size_t n) const {
  double s = 0.0;
  for (std::size_t p : set(n)) s += pool_[p].tau * pool_[p].tau;
  return s;
}

std::optional<std::string> SetFamily::partition_error() const {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i].empty()) return "cell " + std::to_string(cell_labels_[i]) + " is empty";
  }
  std::vector<std::uint8_t> mark(pool_.size(), 0);
  for (std::size_t n = 0; n < index_sets_.size(); ++n) {
    const std::string name = "set " + std::to_string(set_labels_[n]);
    std::fill(mark.begin(), mark.end(), 0);
    for (std::size_t p : sets_[n]) {
      if (mark[p]) return name + " lists an element twice";
      mark[p] = 1;
    }
    std::size_t covered = 0;
    for (std::size_t i : index_sets_[n]) {
      for (std::size_t p : cells_[i]) {
        if (mark[p] == 0) return name + " does not contain cell " + std::to_string(cell_labels_[i]);
        if (mark[p] == 2) return name + " has overlapping cells";
        mark[p] = 2;
        ++covered;
      }
    }
    if (covered != sets_[n].size()) return name + " is not covered by its cells";
  }
  return std::nullopt;
}

double family_average(const DynSystem& sys, const Observable& f, const Point& x,
                      const SetFamily& family, std::size_t n, std::uint64_t seed) {
  if (!sys.group().same_group(family.group())) {
    throw UsageError("system acts by " + sys.group().describe() + ", family lives on " +
                     family.group().describe());
  }
  const double b = family.beta(n);
  if (b == 0.0) throw UndefinedError("family average with beta(N) = 0");
  double acc = 0.0;
  for (std::size_t p : family.set(n)) {
    const FamilyMember& m = family.pool()[p];
    if (selector_draw(seed, m.key, m.tau)) acc += f.eval(sys.act(m.g, x));
  }
  return acc / b;
}

namespace {

std::vector<Interval> runs_of(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<Interval> out;
  for (std::int64_t x : v) {
    if (!out.empty() && out.back().hi + 1 == x) {
      out.back().hi = x;
    } else {
      out.push_back(Interval{x, x});
    }
  }
  return out;
}

std::vector<Interval> merge(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const Interval& iv : v) {
    if (!out.empty() && iv.lo <= out.back().hi + 1) {
      out.back().hi = std::max(out.back().hi, iv.hi);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

std::optional<double> interval_product(const std::vector<Element>& cell, unsigned m,
                                       std::size_t cap) {
  std::vector<std::int64_t> v;
  for (const Element& g : cell) v.push_back(g.c[0]);
  const std::vector<Interval> runs = runs_of(std::move(v));
  if (runs.size() * runs.size() > cap) return std::nullopt;
  std::vector<Interval> diff;
  for (const Interval& a : runs) {
    for (const Interval& b : runs) diff.push_back(Interval{b.lo - a.hi, b.hi - a.lo});
  }
  diff = merge(std::move(diff));
  std::vector<Interval> acc = diff;
  for (unsigned step = 1; step < m; ++step) {
    if (acc.size() * diff.size() > cap) return std::nullopt;
    std::vector<Interval> next;
    for (const Interval& a : acc) {
      for (const Interval& b : diff) next.push_back(Interval{a.lo + b.lo, a.hi + b.hi});
    }
    acc = merge(std::move(next));
  }
  double count = 0.0;
  for (const Interval& iv : acc) count += static_cast<double>(iv.hi - iv.lo + 1);
  return count;
}

std::optional<double> hashed_product(const GroupModel& group, const std::vector<Element>& cell,
                                     unsigned m, std::size_t cap) {
  std::vector<Element> unique(cell);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() * unique.size() > cap) return std::nullopt;
  std::unordered_set<Element, ElementHash> diff_set;
  for (const Element& a : unique) {
    const Element ai = group.inverse(a);
    for (const Element& b : unique) diff_set.insert(group.multiply(ai, b));
  }
  const std::vector<Element> diff(diff_set.begin(), diff_set.end());
  std::unordered_set<Element, ElementHash> acc = diff_set;
  for (unsigned step = 1; step < m; ++step) {
    if (acc.size() * diff.size() > 16 * cap) return std::nullopt;
    std::unordered_set<Element, ElementHash> next;
    for (const Element& a : acc) {
      for (const Element& b : diff) {
        next.insert(group.multiply(a, b));
        if (next.size() > cap) return std::nullopt;
      }
    }
    acc = std::move(next);
  }
  return static_cast<double>(acc.size());
}

double product_bound(const GroupModel& group, const std::vector<Element>& cell, unsigned m) {
  const double mm = static_cast<double>(m);
  if (group.kind() == GroupKind::kLattice || group.kind() == GroupKind::kCyclic) {
    double bound = 1.0;
    for (int i = 0; i < group.rank(); ++i) {
      const auto k = static_cast<std::size_t>(i);
      std::int64_t lo = cell.front().c[k], hi = lo;
      for (const Element& g : cell) {
        lo = std::min(lo, g.c[k]);
        hi = std::max(hi, g.c[k]);
      }
      bound *= 2.0 * mm * static_cast<double>(hi - lo) + 1.0;
    }
    if (group.kind() == GroupKind::kCyclic) {
      bound = std::min(bound, static_cast<double>(group.modulus()));
    }
    return bound;
  }
  const GroupModel sym = group.with_symmetric(true);
  std::uint32_t r = 0;
  for (const Element& g : cell) r = std::max(r, word_length(sym, g));
  try {
    return static_cast<double>(word_ball(sym, 2 * m * r).size());
  } catch (const ResourceError&) {
    return std::numeric_limits<double>::infinity();
  }
}

// True when no value in the later half of v exceeds the earlier-half maximum.
bool later_half_bounded(const std::vector<double>& v) {
  if (v.size() < 2) return true;
  const std::size_t half = v.size() / 2;
  const double early = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(half));
  const double late = *std::max_element(v.begin() + static_cast<std::ptrdiff_t>(half), v.end());
  return late <= early * (1.0 + 1e-12);
}

}  // namespace

ProductSize product_set_size(const GroupModel& group, const std::vector<Element>& cell,
                             unsigned m, std::size_t cap) {
  if (m == 0) throw UsageError("product set needs M >= 1");
  if (cell.empty()) throw UsageError("product set of an empty cell");
  std::optional<double> exact;
  if (group.kind() == GroupKind::kLattice && group.rank() == 1) {
    exact = interval_product(cell, m, cap);
  } else {
    exact = hashed_product(group, cell, m, cap);
  }
  if (exact) return ProductSize{*exact, true};
  return ProductSize{product_bound(group, cell, m), false};
}

Thm51Report thm51_hypothesis_check(const SetFamily& family, unsigned m, double eps,
                                   std::uint64_t imax, std::size_t cap) {
  if (m == 0) throw UsageError("hypothesis check needs M >= 1");
  if (auto err = family.partition_error()) throw UsageError("family is not partitioned: " + *err);
  Thm51Report report;
  report.m = m;
  report.eps = eps;
  const double power = 2.0 * m + 1.0 + eps;
  std::vector<double> labels, normalized, ratios;
  for (std::size_t i = 0; i < family.cell_count(); ++i) {
    const std::uint64_t label = family.cell_label(i);
    if (label > imax || label == 0) continue;
    Thm51Row row;
    row.label = label;
    row.cell_size = family.cell(i).size();
    row.beta_prime = family.beta_prime(i);
    if (!(row.beta_prime > 0.0)) continue;
    row.product = product_set_size(family.group(), family.cell_elements(i), m, cap);
    row.normalized =
        std::exp(std::log(row.product.value) - 2.0 * m * std::log(row.beta_prime));
    row.target = std::pow(static_cast<double>(label), -power);
    row.ratio = row.normalized / row.target;
    report.all_exact = report.all_exact && row.product.exact;
    labels.push_back(static_cast<double>(label));
    normalized.push_back(row.normalized);
    ratios.push_back(row.ratio);
    report.rows.push_back(row);
  }
  if (labels.size() >= 2) report.fitted_decay = -stats::log_log_slope(labels, normalized);
  report.bounded = later_half_bounded(ratios);
  return report;
}

IntervalCover block_cover(const std::vector<Block>& blocks, const SetFamily& family) {
  if (family.group().kind() != GroupKind::kLattice || family.group().rank() != 1) {
    throw UsageError("block cover needs a family on Z");
  }
  IntervalCover cover;
  for (std::size_t n = 0; n < family.set_count(); ++n) {
    const auto& set = family.set(n);
    if (set.empty()) throw UsageError("block cover of an empty set");
    std::int64_t top = std::numeric_limits<std::int64_t>::min();
    for (std::size_t p : set) top = std::max(top, family.pool()[p].g.c[0]);
    const auto it = std::find_if(blocks.begin(), blocks.end(),
                                 [top](const Block& b) { return b.v <= top && top < b.w; });
    if (it == blocks.end()) throw UsageError("set maximum lies outside every block");
    const std::size_t b = static_cast<std::size_t>(it - blocks.begin());
    std::vector<Interval> cells;
    if (b >= 2) {
      cells.push_back(Interval{0, blocks[b - 2].v - 1});
      cells.push_back(Interval{blocks[b - 2].v, blocks[b - 2].w - 1});
    }
    if (b >= 1) cells.push_back(Interval{blocks[b - 1].v, blocks[b - 1].w - 1});
    cells.push_back(Interval{blocks[b].v, top});
    cover.cells.push_back(std::move(cells));
    cover.radius.push_back(static_cast<double>(set.size()));
  }
  return cover;
}

Thm53Report thm53_hypothesis_check(const SetFamily& family, const IntervalCover& cover,
                                   unsigned k, double eps, int degree, std::uint64_t nmax) {
  if (family.group().kind() != GroupKind::kLattice || family.group().rank() != 1) {
    throw UsageError("interval covers need a family on Z");
  }
  if (cover.cells.size() != family.set_count() || cover.radius.size() != family.set_count()) {
    throw UsageError("cover needs one entry per set");
  }
  if (k == 0) throw UsageError("cover needs K >= 1");
  Thm53Report report;
  report.k = k;
  report.eps = eps;
  report.degree = degree;
  std::vector<std::uint8_t> seen_mark(family.pool().size(), 0);
  std::vector<std::int64_t> seen;
  double prefix = 0.0;
  for (std::size_t n = 0; n < family.set_count(); ++n) {
    for (std::size_t p : family.set(n)) {
      if (!seen_mark[p]) {
        seen_mark[p] = 1;
        seen.push_back(family.pool()[p].g.c[0]);
      }
    }
    const double b = family.beta(n);
    prefix += b;
    const std::uint64_t label = family.set_label(n);
    if (label > nmax || !(b > 0.0)) continue;
    Thm53Row row;
    row.label = label;
    row.beta = b;
    row.tau_square_sum = family.tau_square_sum(n);
    row.radius = cover.radius[n];
    row.decay_value =
        std::sqrt(row.tau_square_sum) * std::pow(row.radius, degree) / (b * b);
    row.prefix_ratio = prefix / b;
    const auto& cells = cover.cells[n];
    for (const Interval& iv : cells) {
      row.max_diameter = std::max(row.max_diameter, static_cast<double>(iv.hi - iv.lo));
    }
    for (std::int64_t x : seen) {
      const bool in = std::any_of(cells.begin(), cells.end(),
                                  [x](const Interval& iv) { return iv.lo <= x && x <= iv.hi; });
      if (!in) {
        row.covered = false;
        row.witness = x;
        break;
      }
    }
    report.covered = report.covered && row.covered;
    report.diameters_ok = report.diameters_ok && row.max_diameter <= row.radius;
    report.cells_within_k = report.cells_within_k && cells.size() <= k;
    report.prefix_constant = std::max(report.prefix_constant, row.prefix_ratio);
    report.rows.push_back(row);
  }
  const auto& rows = report.rows;
  std::vector<double> xs, ys, scaled;
  for (std::size_t i = rows.size() / 2; i < rows.size(); ++i) {
    if (rows[i].decay_value > 0.0) {
      xs.push_back(static_cast<double>(rows[i].label));
      ys.push_back(std::log2(rows[i].decay_value));
    }
  }
  if (xs.size() >= 2) report.fitted_eps = -stats::least_squares(xs, ys).slope;
  for (const Thm53Row& r : rows) {
    scaled.push_back(r.decay_value * std::exp2(eps * static_cast<double>(r.label)));
  }
  report.decay_bounded = later_half_bounded(scaled);
  report.prefix_bounded =
      rows.empty() || rows.back().prefix_ratio <= 1.5 * rows[(rows.size() - 1) / 2].prefix_ratio;
  return report;
}

PipelineReport pipeline_theorem_faster(const PipelineOptions& options) {
  PipelineReport report;
  if (!(options.alpha < 0.5)) {
    report.refused = true;
    report.refusal = "alpha must be below 1/2 for the L1 hypotheses, got " +
                     std::to_string(options.alpha);
    return report;
  }
  if (options.seeds.empty()) throw UsageError("pipeline needs at least one seed");
  const GrowthTarget growth = parse_growth(options.growth);
  const TauProfile profile = TauProfile::power_law(options.alpha);
  const BlockSequence bs =
      block_sequence(growth, options.jmax, BlockOptions{options.max_elements});
  const IntSequence& base = bs.sequence;
  report.blocks = bs.blocks;
  report.base_size = base.size();
  report.truncated = bs.truncated;
  for (std::size_t k = 1; k <= base.size(); ++k) {
    if (static_cast<double>(base[k - 1]) < growth(k)) report.base_growth_ok = false;
  }

  unsigned nmax = 0;
  while (nmax < 40 && (std::uint64_t{1} << (nmax + 1)) - 1 <= base.size()) ++nmax;
  if (nmax == 0) throw UsageError("block sequence is empty");
  const SetFamily family = SetFamily::from_sequence_dyadic(base, profile, nmax);
  report.thm51 = thm51_hypothesis_check(family, options.m, options.eps51, nmax);
  report.thm53 = thm53_hypothesis_check(family, block_cover(bs.blocks, family), 4,
                                        options.eps53, 1, nmax);
  report.hypotheses_ok =
      report.thm51.bounded && report.thm51.fitted_decay > 0.0 && report.thm53.all();

  unsigned top = 0;
  while ((std::uint64_t{1} << (top + 1)) <= base.size()) ++top;
  for (unsigned c = options.first_checkpoint; c <= top; ++c) {
    report.checkpoints.push_back(std::uint64_t{1} << c);
  }
  const DynSystem sys = make_system("rotation:golden");
  const Observable f = make_observable(sys, "cos1");
  const std::vector<Point> points = sys.sample_points();
  std::vector<double> references;
  for (const Point& p : points) references.push_back(reference_value(sys, f, p));
  const std::uint64_t horizon = report.checkpoints.empty() ? 0 : report.checkpoints.back();

  report.seeds.resize(options.seeds.size());
  parallel_for(options.seeds.size(), options.workers, [&](std::size_t s) {
    PipelineSeedRow& row = report.seeds[s];
    row.seed = options.seeds[s];
    const IntSequence sub = random_subsequence(base, profile, row.seed);
    row.subsequence_size = sub.size();
    for (std::size_t j = 1; j <= sub.size(); ++j) {
      if (static_cast<double>(sub[j - 1]) < growth(j)) row.growth_ok = false;
    }
    row.density = banach_density_windowed(sub, options.window, options.density_limit);
    row.density_ok = row.density <= options.density_threshold;
    std::vector<double> sums(points.size(), 0.0);
    double b = 0.0;
    std::size_t next = 0;
    for (std::uint64_t k = 1; k <= horizon; ++k) {
      const double tau = profile(k);
      b += tau;
      if (selector_draw(row.seed, make_element(static_cast<std::int64_t>(k)), tau)) {
        const Element g = make_element(base[k - 1]);
        for (std::size_t p = 0; p < points.size(); ++p) sums[p] += f.eval(sys.act(g, points[p]));
      }
      if (k == report.checkpoints[next]) {
        double dev = 0.0;
        for (std::size_t p = 0; p < points.size(); ++p) dev += std::abs(sums[p] / b - references[p]);
        row.deviations.push_back(dev / static_cast<double>(points.size()));
        ++next;
      }
    }
    row.pass = row.growth_ok && row.density_ok;
  });

  for (std::size_t c = 0; c < report.checkpoints.size(); ++c) {
    std::vector<double> column;
    for (const PipelineSeedRow& row : report.seeds) column.push_back(row.deviations[c]);
    report.medians.push_back(stats::median(column));
  }
  for (const PipelineSeedRow& row : report.seeds) {
    if (row.density_ok) ++report.density_passes;
  }
  const std::size_t needed = static_cast<std::size_t>(
      std::ceil(static_cast<double>(options.density_quorum) *
                static_cast<double>(options.seeds.size()) / 20.0));
  report.density_ok = report.density_passes >= std::min(needed, options.seeds.size());
  report.convergence_ok = strictly_decreasing_tail(report.medians, 4) &&
                          report.medians.back() <= options.final_tolerance;
  const bool growth_ok =
      report.base_growth_ok && std::all_of(report.seeds.begin(), report.seeds.end(),
                                           [](const PipelineSeedRow& r) { return r.growth_ok; });
  report.pass = growth_ok && report.density_ok && report.hypotheses_ok;
  return report;
}

}  // namespace ergolab
