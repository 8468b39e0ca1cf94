#include "ergolab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "ergolab/concentration.hpp"
#include "ergolab/cz_maximal.hpp"
#include "ergolab/dynamics.hpp"
#include "ergolab/error.hpp"
#include "ergolab/general_averages.hpp"
#include "ergolab/group_algebra.hpp"
#include "ergolab/groups.hpp"
#include "ergolab/parallel.hpp"
#include "ergolab/selectors.hpp"
#include "ergolab/selftest.hpp"
#include "ergolab/stats.hpp"

namespace ergolab::cli {

std::uint64_t parse_count(std::string_view text) {
  const std::string s(text);
  auto bad = [&s]() { return ConfigError("not a count: '" + s + "'"); };
  if (const auto caret = s.find('^'); caret != std::string::npos) {
    const std::uint64_t base = parse_count(s.substr(0, caret));
    const std::uint64_t exp = parse_count(s.substr(caret + 1));
    const double v = std::pow(static_cast<double>(base), static_cast<double>(exp));
    if (!(v < 0x1p63)) throw bad();
    std::uint64_t r = 1;
    for (std::uint64_t i = 0; i < exp; ++i) r *= base;
    return r;
  }
  std::uint64_t direct = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), direct);
  if (ec == std::errc() && end == s.data() + s.size() && !s.empty()) return direct;
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw bad();
  }
  if (used != s.size() || !(v >= 0.0) || !(v < 0x1p63) || v != std::floor(v)) throw bad();
  return static_cast<std::uint64_t>(v);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  if (quoted) throw ConfigError("unterminated quote in CSV record");
  return fields;
}

Json make_report(std::string_view command, Json payload) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  Json report;
  report["header"] = {{"schema_version", kSchemaVersion},
                      {"command", std::string(command)},
                      {"timestamp", stamp}};
  report["payload"] = std::move(payload);
  return report;
}

namespace {

struct Outcome {
  Json payload;
  std::vector<std::string> failures;
  bool refused = false;
};

struct Common {
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  unsigned workers = 0;
  std::string out;
};

std::vector<std::uint64_t> seed_list(const Common& c) {
  std::vector<std::uint64_t> v(c.seeds);
  for (std::size_t i = 0; i < c.seeds; ++i) v[i] = c.seed + i;
  return v;
}

void add_seeds(CLI::App* sub, Common& c, std::size_t default_count) {
  c.seeds = default_count;
  sub->add_option("--seed", c.seed, "Base seed (env ERGOLAB_SEED)")
      ->envname("ERGOLAB_SEED")
      ->capture_default_str();
  sub->add_option("--seeds", c.seeds, "Number of consecutive seeds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_workers(CLI::App* sub, Common& c) {
  sub->add_option("--workers", c.workers, "Worker threads, 0 for all cores")->capture_default_str();
}

struct ProfileArg {
  double alpha = 0.4;
  std::string profile;
  TauProfile resolve() const {
    return profile.empty() ? TauProfile::power_law(alpha) : parse_profile(profile);
  }
};

void add_profile(CLI::App* sub, ProfileArg& p) {
  auto* a = sub->add_option("--alpha", p.alpha, "Power-law exponent, tau_n = n^-alpha")
                ->capture_default_str();
  auto* q = sub->add_option("--profile", p.profile, "Profile: power:a, const:t, table:a,b, invlog");
  a->excludes(q);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw ResourceError("failed writing '" + path + "'");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(f, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

IntSequence read_sequence_csv(const std::string& path) {
  std::vector<std::int64_t> values;
  std::size_t row = 0;
  for (const std::string& line : read_lines(path)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = csv_split(line);
    std::int64_t v = 0;
    const std::string& t = fields.front();
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) {
      throw ConfigError(path + ":" + std::to_string(row) + ": expected an integer");
    }
    values.push_back(v);
  }
  return IntSequence(std::move(values));
}

std::string sequence_csv(const IntSequence& seq) {
  std::string text;
  for (std::int64_t v : seq.values()) text += std::to_string(v) + "\n";
  return text;
}

Json algebra_json(const AlgebraElement& f) {
  Json arr = Json::array();
  for (const Term& t : f.terms()) {
    arr.push_back({{"element", f.group().format(t.g)}, {"coefficient", t.coeff}});
  }
  return arr;
}

std::size_t quorum_count(double quorum, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(quorum * static_cast<double>(n) - 1e-9));
}

// First n non-identity elements of the group in breadth-first order.
std::vector<Element> support_of_size(const GroupModel& group, std::size_t n) {
  for (std::uint32_t r = 1;; ++r) {
    const Ball b = word_ball(group, r, 1'000'000);
    if (b.size() > n || (group.kind() == GroupKind::kCyclic && b.size() >= static_cast<std::size_t>(group.modulus()))) {
      std::vector<Element> e(b.elements().begin() + 1, b.elements().end());
      if (e.size() < n) throw UsageError("group has fewer than " + std::to_string(n) + " elements");
      e.resize(n);
      return e;
    }
  }
}

struct Registry {
  std::map<const CLI::App*, std::function<Outcome()>> handlers;
  std::map<const CLI::App*, Common*> commons;
  std::vector<std::unique_ptr<Common>> storage;

  Common& common_for(CLI::App* sub) {
    storage.push_back(std::make_unique<Common>());
    commons[sub] = storage.back().get();
    return *storage.back();
  }
};

void add_ball(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("ball", "Enumerate a word-metric ball");
  Common& c = reg.common_for(sub);
  struct Args {
    std::string group, radius, cap = "1e7", json;
    bool symmetric = false, semigroup = false;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--group", a->group, "zd:<d>, heis3 or cyclic:<q>")->required();
  sub->add_option("--radius", a->radius, "Radius N")->required();
  auto* s = sub->add_flag("--symmetric", a->symmetric, "Include inverse generators");
  auto* g = sub->add_flag("--semigroup", a->semigroup, "Base generators only");
  s->excludes(g);
  sub->add_option("--cap", a->cap, "Largest ball to enumerate")->capture_default_str();
  sub->add_option("--out", c.out, "CSV of element,rho");
  sub->add_option("--json", a->json, "Summary JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    std::optional<bool> sym;
    if (a->symmetric) sym = true;
    if (a->semigroup) sym = false;
    const GroupModel group = make_group(a->group, sym);
    const auto radius = static_cast<std::uint32_t>(parse_count(a->radius));
    const Ball ball = word_ball(group, radius, parse_count(a->cap));
    if (!c.out.empty()) {
      std::string text = "element,rho\n";
      for (std::size_t i = 0; i < ball.size(); ++i) {
        text += csv_field(group.format(ball.elements()[i])) + "," +
                std::to_string(ball.lengths()[i]) + "\n";
      }
      write_text(c.out, text);
    }
    Outcome o;
    const auto projected = projected_ball_size(group, radius);
    o.payload = {{"group", group.describe()},
                 {"radius", radius},
                 {"size", ball.size()},
                 {"projected", projected ? Json(*projected) : Json(nullptr)},
                 {"sphere_sizes", ball.level_counts()}};
    if (projected && *projected != ball.size()) {
      o.failures.push_back("ball size " + std::to_string(ball.size()) +
                           " differs from the closed form " + std::to_string(*projected));
    }
    c.out = a->json;
    return o;
  };
}

void add_sequence(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("sequence", "Sample the random sparse sequence on Z");
  Common& c = reg.common_for(sub);
  struct Args {
    ProfileArg profile;
    std::string limit = "1e6", window = "1000", json;
  };
  auto a = std::make_shared<Args>();
  add_profile(sub, a->profile);
  sub->add_option("--limit", a->limit, "Largest candidate N")->capture_default_str();
  sub->add_option("--window", a->window, "Density window m")->capture_default_str();
  sub->add_option("--seed", c.seed, "Seed (env ERGOLAB_SEED)")
      ->envname("ERGOLAB_SEED")
      ->capture_default_str();
  sub->add_option("--out", c.out, "CSV, one integer per line");
  sub->add_option("--json", a->json, "Summary JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const TauProfile profile = a->profile.resolve();
    const std::uint64_t limit = parse_count(a->limit);
    const std::uint64_t window = std::min(parse_count(a->window), std::max<std::uint64_t>(limit, 1));
    const IntSequence seq = sample_sequence(profile, limit, c.seed);
    if (!c.out.empty()) write_text(c.out, sequence_csv(seq));
    Outcome o;
    o.payload = {{"profile", profile.describe()},
                 {"limit", limit},
                 {"seeds", {c.seed}},
                 {"count", seq.size()},
                 {"beta", beta_interval(limit, profile)},
                 {"window", window},
                 {"density", banach_density_windowed(seq, window, limit)}};
    c.out = a->json;
    return o;
  };
}

void add_density(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("density", "Windowed Banach density");
  Common& c = reg.common_for(sub);
  struct Args {
    ProfileArg profile;
    std::string in, limit = "1e6", window = "1000";
    std::optional<double> threshold;
    double quorum = 0.9;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--in", a->in, "Sequence CSV; sampled from the profile when absent");
  add_profile(sub, a->profile);
  add_seeds(sub, c, 1);
  add_workers(sub, c);
  sub->add_option("--limit", a->limit, "Largest window start Nmax")->capture_default_str();
  sub->add_option("--window", a->window, "Window length m")->capture_default_str();
  sub->add_option("--threshold", a->threshold, "Gate: density at most this");
  sub->add_option("--quorum", a->quorum, "Fraction of seeds that must meet the threshold")
      ->capture_default_str();
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const std::uint64_t limit = parse_count(a->limit);
    const std::uint64_t window = parse_count(a->window);
    std::vector<double> densities;
    Json seeds = Json::array();
    Json source;
    if (!a->in.empty()) {
      densities.push_back(banach_density_windowed(read_sequence_csv(a->in), window, limit));
      source = {{"file", a->in}};
    } else {
      const TauProfile profile = a->profile.resolve();
      const auto list = seed_list(c);
      densities.assign(list.size(), 0.0);
      parallel_for(list.size(), c.workers, [&](std::size_t i) {
        densities[i] = banach_density_windowed(sample_sequence(profile, limit, list[i]), window, limit);
      });
      seeds = list;
      source = {{"profile", profile.describe()}};
    }
    Outcome o;
    o.payload = {{"source", source},    {"window", window},
                 {"limit", limit},      {"seeds", seeds},
                 {"densities", densities}, {"median", stats::median(densities)}};
    if (a->threshold) {
      const auto passes = static_cast<std::size_t>(
          std::count_if(densities.begin(), densities.end(),
                        [&](double d) { return d <= *a->threshold; }));
      const std::size_t needed = quorum_count(a->quorum, densities.size());
      o.payload["threshold"] = *a->threshold;
      o.payload["passes"] = passes;
      o.payload["required"] = needed;
      if (passes < needed) {
        o.failures.push_back(std::to_string(passes) + " of " + std::to_string(densities.size()) +
                             " densities within the threshold, " + std::to_string(needed) +
                             " required");
      }
    }
    return o;
  };
}

void add_blocks(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("blocks", "Build a block sequence above a growth target");
  Common& c = reg.common_for(sub);
  struct Args {
    std::string growth = "k^2", max_elements = "1e7", csv;
    unsigned jmax = 5;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--growth", a->growth, "k, k^p, c*k^p or b^k")->capture_default_str();
  sub->add_option("--jmax", a->jmax, "Number of blocks")->capture_default_str();
  sub->add_option("--max-elements", a->max_elements, "Truncate after this many terms")
      ->capture_default_str();
  sub->add_option("--csv", a->csv, "Sequence CSV path");
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a]() {
    const GrowthTarget f = parse_growth(a->growth);
    const BlockSequence bs = block_sequence(f, a->jmax, BlockOptions{parse_count(a->max_elements)});
    if (!a->csv.empty()) write_text(a->csv, sequence_csv(bs.sequence));
    Outcome o;
    bool growth_ok = true;
    for (std::size_t k = 1; k <= bs.sequence.size(); ++k) {
      if (static_cast<double>(bs.sequence[k - 1]) < f(k)) growth_ok = false;
    }
    bool structure_ok = true;
    std::int64_t prev_v = 1, prev_w = 0;
    Json blocks = Json::array();
    for (std::size_t j = 0; j < bs.blocks.size(); ++j) {
      const Block& b = bs.blocks[j];
      blocks.push_back({{"v", b.v}, {"w", b.w}});
      const bool last_cut = bs.truncated && j + 1 == bs.blocks.size();
      if (!(b.v > prev_w && b.v < b.w) || (!last_cut && b.w - b.v < prev_v)) structure_ok = false;
      prev_v = b.v;
      prev_w = b.w;
    }
    o.payload = {{"growth", a->growth}, {"jmax", a->jmax},         {"blocks", blocks},
                 {"size", bs.sequence.size()}, {"truncated", bs.truncated},
                 {"growth_ok", growth_ok}, {"structure_ok", structure_ok}};
    if (!growth_ok) o.failures.push_back("some n_k falls below F(k)");
    if (!structure_ok) o.failures.push_back("block ordering or length rule violated");
    return o;
  };
}

void add_average(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("average", "Random ergodic averages along dyadic N");
  Common& c = reg.common_for(sub);
  struct Args {
    ProfileArg profile;
    std::string system = "rotation:golden", observable = "cos1", nmin = "2^10", nmax = "2^20";
    double tolerance = 0.02;
    std::size_t trend = 4;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--system", a->system, "rotation:<golden|sqrt2|p/q|theta>, torus:d, cycle:q, heis")
      ->capture_default_str();
  sub->add_option("--observable", a->observable, "cos1, cosk:k, const:c, identity, indicator0")
      ->capture_default_str();
  add_profile(sub, a->profile);
  add_seeds(sub, c, 20);
  add_workers(sub, c);
  sub->add_option("--nmin", a->nmin, "Smallest radius")->capture_default_str();
  sub->add_option("--nmax", a->nmax, "Largest radius")->capture_default_str();
  sub->add_option("--tolerance", a->tolerance, "Gate: final median at most this")
      ->capture_default_str();
  sub->add_option("--trend", a->trend, "Gate: strictly decreasing over this many last N")
      ->capture_default_str();
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const DynSystem sys = make_system(a->system);
    const Observable f = make_observable(sys, a->observable);
    const TauProfile profile = a->profile.resolve();
    DiagnosticOptions opt;
    for (std::uint64_t n = parse_count(a->nmin); n <= parse_count(a->nmax); n *= 2) {
      opt.radii.push_back(static_cast<std::uint32_t>(n));
      if (n == 0) break;
    }
    opt.seeds = seed_list(c);
    opt.workers = c.workers;
    const AverageReport r = convergence_diagnostic(sys, f, profile, opt);
    Json per_seed = Json::array();
    for (const SeedTrace& t : r.per_seed) {
      per_seed.push_back({{"seed", t.seed},
                          {"deviations", t.deviations},
                          {"tail_oscillation", t.tail_oscillation}});
    }
    const bool decreasing = strictly_decreasing_tail(r.medians, a->trend);
    const double final_median = r.medians.empty() ? 0.0 : r.medians.back();
    Outcome o;
    o.payload = {{"system", sys.name()},
                 {"observable", f.name},
                 {"profile", profile.describe()},
                 {"Ns", r.radii},
                 {"seeds", opt.seeds},
                 {"references", r.references},
                 {"per_seed", per_seed},
                 {"medians", r.medians},
                 {"decreasing_tail", decreasing},
                 {"final_median", final_median}};
    if (!decreasing) {
      o.failures.push_back("medians not strictly decreasing over the last " +
                           std::to_string(a->trend) + " N");
    }
    if (!(final_median <= a->tolerance)) o.failures.push_back("final median above tolerance");
    return o;
  };
}

struct FieldArgs {
  ProfileArg profile;
  std::string group = "zd:1";
  std::size_t size = 8;
  std::optional<double> tau;
};

void add_field_args(CLI::App* sub, FieldArgs& f, std::size_t default_size) {
  f.size = default_size;
  sub->add_option("--group", f.group, "Group descriptor")->capture_default_str();
  sub->add_option("--size", f.size, "|E|: first elements in breadth-first order")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* t = sub->add_option("--tau", f.tau, "Constant mean for every element of E");
  add_profile(sub, f.profile);
  t->excludes("--profile");
}

CenteredField make_field(const FieldArgs& f) {
  const GroupModel group = make_group(f.group);
  auto support = support_of_size(group, f.size);
  if (f.tau) return CenteredField::with_constant(group, std::move(support), *f.tau);
  return CenteredField::with_profile(group, std::move(support), f.profile.resolve());
}

Json field_json(const CenteredField& field) {
  Json support = Json::array();
  for (const Element& g : field.support()) support.push_back(field.group().format(g));
  return {{"group", field.group().describe()}, {"support", support}, {"tau", field.tau()}};
}

void add_moments(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("moments", "Moment bound for centered selector sums");
  Common& c = reg.common_for(sub);
  struct Args {
    FieldArgs field;
    unsigned m = 1;
    std::string trials = "20000";
  };
  auto a = std::make_shared<Args>();
  add_field_args(sub, a->field, 8);
  sub->add_option("--m", a->m, "Moment order M")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--trials", a->trials, "Monte-Carlo trials")->capture_default_str();
  add_seeds(sub, c, 1);
  add_workers(sub, c);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const CenteredField field = make_field(a->field);
    Outcome o;
    Json per_seed = Json::array();
    std::optional<double> exact;
    if (field.size() <= kExactEnumerationCap) exact = moment_exact_small(field, a->m);
    for (std::uint64_t seed : seed_list(c)) {
      const MomentEstimate e = moment_bound_mc(field, a->m, parse_count(a->trials), seed, c.workers);
      Json row = {{"seed", seed},
                  {"estimate", e.estimate},
                  {"standard_error", e.standard_error},
                  {"trials", e.trials}};
      if (exact) {
        const bool agree = std::abs(e.estimate - *exact) <= 4.0 * e.standard_error + 1e-12;
        row["within_4se"] = agree;
        if (!agree) o.failures.push_back("seed " + std::to_string(seed) + ": estimate off the exact value");
      }
      per_seed.push_back(row);
    }
    const double var = field.variance_sum();
    const double rhs = std::pow(var, 2.0 * a->m);
    const auto cm = partition_count(4 * a->m);
    o.payload = {{"params", field_json(field)},
                 {"m", a->m},
                 {"seeds", seed_list(c)},
                 {"variance_sum", var},
                 {"rhs", rhs},
                 {"partition_bound", cm},
                 {"bound_applies", var >= 1.0},
                 {"exact", exact ? Json(*exact) : Json(nullptr)},
                 {"per_trial", per_seed}};
    if (exact && var >= 1.0) {
      const bool ok = *exact <= static_cast<double>(cm) * rhs * (1.0 + 1e-12);
      o.payload["bound_ok"] = ok;
      if (!ok) o.failures.push_back("exact moment exceeds C_M (sum Var)^(2M)");
    }
    return o;
  };
}

void add_chernoff(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("chernoff", "Tail of the shifted-product sums");
  Common& c = reg.common_for(sub);
  struct Args {
    FieldArgs field;
    double theta = 3.0;
    std::string trials = "20000";
  };
  auto a = std::make_shared<Args>();
  add_field_args(sub, a->field, 12);
  sub->add_option("--theta", a->theta, "Threshold multiplier")->capture_default_str();
  sub->add_option("--trials", a->trials, "Monte-Carlo trials")->capture_default_str();
  add_seeds(sub, c, 1);
  add_workers(sub, c);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const CenteredField field = make_field(a->field);
    Outcome o;
    Json rows = Json::array();
    Json vacuous = Json::array();
    for (std::uint64_t seed : seed_list(c)) {
      const ChernoffReport r = chernoff_tail_check(field, a->theta, parse_count(a->trials), seed, c.workers);
      rows.push_back({{"seed", seed},
                      {"empirical", r.empirical},
                      {"standard_error", r.standard_error},
                      {"bound", r.bound},
                      {"in_proof_bound", r.in_proof_bound},
                      {"threshold", r.threshold},
                      {"bound_applies", r.bound_applies},
                      {"pass", r.pass}});
      vacuous.push_back(r.vacuous);
      if (!r.pass) o.failures.push_back("seed " + std::to_string(seed) + ": tail above the bound");
    }
    o.payload = {{"params", field_json(field)}, {"theta", a->theta}, {"seeds", seed_list(c)},
                 {"per_trial", rows},           {"vacuous_flags", vacuous},
                 {"pass", o.failures.empty()}};
    return o;
  };
}

void add_nubound(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("nubound", "Coefficients of nu_j * nu_j~ against their bounds");
  Common& c = reg.common_for(sub);
  struct Args {
    ProfileArg profile;
    std::string group = "zd:1";
    unsigned jmin = 4, jmax = 12, gate_from = 8;
    double kappa = 0.1, quorum = 0.9;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--group", a->group, "Group descriptor")->capture_default_str();
  add_profile(sub, a->profile);
  sub->add_option("--jmin", a->jmin, "Smallest j")->capture_default_str();
  sub->add_option("--jmax", a->jmax, "Largest j")->capture_default_str();
  sub->add_option("--kappa", a->kappa, "Slack exponent kappa")->capture_default_str();
  sub->add_option("--gate-from", a->gate_from, "Gate j >= this")->capture_default_str();
  sub->add_option("--quorum", a->quorum, "Fraction of seeds with both ratios <= 1")
      ->capture_default_str();
  add_seeds(sub, c, 20);
  add_workers(sub, c);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const GroupModel group = make_group(a->group);
    const TauProfile profile = a->profile.resolve();
    const auto seeds = seed_list(c);
    std::vector<std::vector<NuBoundRow>> rows(seeds.size());
    parallel_for(seeds.size(), c.workers, [&](std::size_t s) {
      rows[s] = nu_conv_bound_check(group, profile, a->jmin, a->jmax, a->kappa, seeds[s]);
    });
    Outcome o;
    Json per_j = Json::array();
    const std::size_t needed = quorum_count(a->quorum, seeds.size());
    for (std::size_t k = 0; k + a->jmin <= a->jmax; ++k) {
      const unsigned j = a->jmin + static_cast<unsigned>(k);
      Json entries = Json::array();
      std::size_t good = 0;
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const NuBoundRow& r = rows[s][k];
        entries.push_back({{"seed", seeds[s]},
                           {"beta", r.beta},
                           {"tau_square_sum", r.tau_square_sum},
                           {"identity", r.identity},
                           {"identity_formula", r.identity_formula},
                           {"off_identity_sup", r.off_identity_sup},
                           {"identity_ratio", r.identity_ratio},
                           {"off_ratio", r.off_ratio}});
        if (r.identity_ratio <= 1.0 && r.off_ratio <= 1.0) ++good;
      }
      const bool gated = j >= a->gate_from;
      per_j.push_back({{"j", j}, {"seeds_within", good}, {"gated", gated}, {"per_seed", entries}});
      if (gated && good < needed) {
        o.failures.push_back("j = " + std::to_string(j) + ": " + std::to_string(good) + " of " +
                             std::to_string(seeds.size()) + " seeds within both bounds");
      }
    }
    o.payload = {{"params",
                  {{"group", group.describe()},
                   {"profile", profile.describe()},
                   {"kappa", a->kappa},
                   {"required", needed}}},
                 {"seeds", seeds},
                 {"per_j", per_j},
                 {"pass", o.failures.empty()}};
    return o;
  };
}

void add_tails(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("tails", "Borel-Cantelli tail schedule");
  Common& c = reg.common_for(sub);
  struct Args {
    std::string group = "zd:1";
    double alpha = 0.4, eps = 0.1, quorum = 0.9;
    unsigned m = 1, jmin = 2, jmax = 10, j0 = 4;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--group", a->group, "Group descriptor")->capture_default_str();
  sub->add_option("--alpha", a->alpha, "Power-law exponent")->capture_default_str();
  sub->add_option("--m", a->m, "Moment order M")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--eps", a->eps, "lambda_j = j^-M(1+eps)")->capture_default_str();
  sub->add_option("--jmin", a->jmin, "Smallest j")->capture_default_str();
  sub->add_option("--jmax", a->jmax, "Largest j")->capture_default_str();
  sub->add_option("--j0", a->j0, "Exceedances counted beyond this j")->capture_default_str();
  sub->add_option("--quorum", a->quorum, "Fraction of seeds with no late exceedance")
      ->capture_default_str();
  add_seeds(sub, c, 20);
  add_workers(sub, c);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    const GroupModel group = make_group(a->group);
    const auto seeds = seed_list(c);
    std::vector<TailReport> reports(seeds.size());
    parallel_for(seeds.size(), c.workers, [&](std::size_t s) {
      reports[s] = borel_cantelli_tail_report(group, a->alpha, a->m, a->eps, a->jmin, a->jmax,
                                              a->j0, seeds[s]);
    });
    Outcome o;
    Json per_seed = Json::array();
    std::size_t clean = 0;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      Json rows = Json::array();
      for (const TailRow& r : reports[s].rows) {
        rows.push_back({{"j", r.j},
                        {"lhs", r.lhs},
                        {"lambda", r.lambda},
                        {"one_norm_power", r.one_norm_power},
                        {"exceeds", r.exceeds}});
      }
      if (reports[s].exceedances_beyond == 0) ++clean;
      per_seed.push_back({{"seed", seeds[s]},
                          {"exceedances_beyond", reports[s].exceedances_beyond},
                          {"per_j", rows}});
    }
    const std::size_t needed = quorum_count(a->quorum, seeds.size());
    const bool precondition = reports.empty() ? false : reports.front().precondition;
    o.payload = {{"params",
                  {{"group", group.describe()},
                   {"alpha", a->alpha},
                   {"m", a->m},
                   {"eps", a->eps},
                   {"j0", a->j0},
                   {"precondition", precondition}}},
                 {"seeds", seeds},
                 {"clean_seeds", clean},
                 {"required", needed},
                 {"per_seed", per_seed}};
    if (clean < needed) {
      o.failures.push_back(std::to_string(clean) + " of " + std::to_string(seeds.size()) +
                           " seeds without exceedances beyond j0");
    }
    o.payload["pass"] = o.failures.empty();
    return o;
  };
}

AlgebraElement read_phi_csv(const std::string& path, const std::string& group_spec) {
  const auto lines = read_lines(path);
  std::vector<std::pair<std::string, double>> rows;
  std::size_t row = 0;
  for (const std::string& line : lines) {
    ++row;
    if (line.empty()) continue;
    const auto fields = csv_split(line);
    if (fields.size() != 2) throw ConfigError(path + ":" + std::to_string(row) + ": expected element,coefficient");
    if (row == 1 && fields[0] == "element") continue;
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(fields[1], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != fields[1].size()) {
      throw ConfigError(path + ":" + std::to_string(row) + ": bad coefficient");
    }
    rows.emplace_back(fields[0], v);
  }
  std::string spec = group_spec;
  if (spec.empty()) {
    const std::size_t dims =
        rows.empty() ? 1 : static_cast<std::size_t>(std::count(rows[0].first.begin(), rows[0].first.end(), ';')) + 1;
    spec = "zd:" + std::to_string(dims) + ":sym";
  }
  const GroupModel group = make_group(spec);
  std::vector<Term> terms;
  for (const auto& [e, v] : rows) terms.push_back(Term{group.parse(e), v});
  return AlgebraElement::from_terms(group, std::move(terms));
}

void add_cz(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("cz", "Calderon-Zygmund decomposition on Z^d");
  Common& c = reg.common_for(sub);
  struct Args {
    std::string phi, group;
    double lambda = 1.0;
    double tol = 1e-9;
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--phi", a->phi, "CSV element,coefficient")->required();
  sub->add_option("--group", a->group, "zd:<d>; inferred from the coordinates when absent");
  sub->add_option("--lambda", a->lambda, "Height lambda")->required();
  sub->add_option("--tol", a->tol, "Relative tolerance of the checks")->capture_default_str();
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a]() {
    const AlgebraElement phi = read_phi_csv(a->phi, a->group);
    const CZDecomposition d = cz_decompose(phi, a->lambda);
    const CZCheck check = check_invariants(d, phi, d.constant, a->tol);
    Json bad = Json::array();
    for (const BadPiece& b : d.bad) {
      Element corner;
      for (int i = 0; i < b.cube.dimension; ++i) {
        corner.c[static_cast<std::size_t>(i)] = b.cube.index[static_cast<std::size_t>(i)];
      }
      bad.push_back({{"level", b.cube.level},
                     {"index", phi.group().format(corner)},
                     {"volume", b.cube.volume()},
                     {"average", b.average},
                     {"l1", lp_norm(b.piece, Norm::kOne)}});
    }
    Outcome o;
    o.payload = {{"group", phi.group().describe()},
                 {"lambda", d.lambda},
                 {"stopping_height", d.stopping_height},
                 {"constant", d.constant},
                 {"good", algebra_json(d.good)},
                 {"bad", bad},
                 {"checks",
                  {{"recombines", check.recombines},
                   {"good_bounded", check.good_bounded},
                   {"pieces_bounded", check.pieces_bounded},
                   {"disjoint", check.disjoint},
                   {"measure_bounded", check.measure_bounded},
                   {"good_sup", check.good_sup},
                   {"cube_measure", check.cube_measure}}}};
    if (!check.all()) o.failures.push_back("decomposition invariants violated");
    return o;
  };
}

void add_maximal(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("maximal", "Empirical weak (1,1) constants");
  Common& c = reg.common_for(sub);
  auto a = std::make_shared<WeakStabilityOptions>();
  sub->add_option("--alpha", a->alpha, "Power-law exponent")->capture_default_str();
  sub->add_option("--jmax", a->jmax, "Measures mu_1..mu_jmax")->capture_default_str();
  sub->add_option("--corpus-size", a->corpus_size, "Test functions")->capture_default_str();
  sub->add_option("--corpus-seed", a->corpus_seed, "Corpus seed")->capture_default_str();
  sub->add_option("--grid", a->grid, "Lambda grid points")->capture_default_str();
  sub->add_option("--spread", a->spread_limit, "Gate: max/min constant ratio")
      ->capture_default_str();
  add_seeds(sub, c, 20);
  add_workers(sub, c);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    WeakStabilityOptions opt = *a;
    opt.seeds = seed_list(c);
    opt.workers = c.workers;
    const WeakStabilityReport r = weak11_stability(opt);
    Outcome o;
    o.payload = {{"params",
                  {{"alpha", opt.alpha},
                   {"jmax", opt.jmax},
                   {"corpus_size", opt.corpus_size},
                   {"corpus_seed", opt.corpus_seed},
                   {"grid", opt.grid},
                   {"deterministic_jmax", opt.deterministic_jmax}}},
                 {"seeds", opt.seeds},
                 {"seed_constants", r.seed_constants},
                 {"spread", r.spread},
                 {"deterministic_constants", r.deterministic_constants},
                 {"deterministic_spread", r.deterministic_spread},
                 {"stable", r.stable},
                 {"deterministic_stable", r.deterministic_stable}};
    if (!r.stable) o.failures.push_back("random-measure constants spread beyond the limit");
    if (!r.deterministic_stable) o.failures.push_back("expected-measure constants unstable");
    return o;
  };
}

Json thm51_json(const Thm51Report& r) {
  Json rows = Json::array();
  for (const Thm51Row& w : r.rows) {
    rows.push_back({{"i", w.label},
                    {"cell_size", w.cell_size},
                    {"beta_prime", w.beta_prime},
                    {"product_size", w.product.value},
                    {"exact", w.product.exact},
                    {"normalized", w.normalized},
                    {"ratio", w.ratio}});
  }
  return {{"m", r.m},
          {"eps", r.eps},
          {"fitted_decay", r.fitted_decay},
          {"bounded", r.bounded},
          {"all_exact", r.all_exact},
          {"rows", rows}};
}

Json thm53_json(const Thm53Report& r) {
  Json rows = Json::array();
  for (const Thm53Row& w : r.rows) {
    rows.push_back({{"N", w.label},
                    {"beta", w.beta},
                    {"tau_square_sum", w.tau_square_sum},
                    {"radius", w.radius},
                    {"decay_value", w.decay_value},
                    {"max_diameter", w.max_diameter},
                    {"prefix_ratio", w.prefix_ratio},
                    {"covered", w.covered},
                    {"witness", w.witness ? Json(*w.witness) : Json(nullptr)}});
  }
  return {{"k", r.k},
          {"eps", r.eps},
          {"degree", r.degree},
          {"covered", r.covered},
          {"diameters_ok", r.diameters_ok},
          {"cells_within_k", r.cells_within_k},
          {"fitted_eps", r.fitted_eps},
          {"decay_bounded", r.decay_bounded},
          {"prefix_constant", r.prefix_constant},
          {"prefix_bounded", r.prefix_bounded},
          {"rows", rows}};
}

void add_faster(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("faster", "Sparse L1-good sequence above a growth target");
  Common& c = reg.common_for(sub);
  struct Args {
    PipelineOptions opt;
    std::string max_elements = "2^20", window = "1000", limit = "1e6";
  };
  auto a = std::make_shared<Args>();
  sub->add_option("--growth", a->opt.growth, "k, k^p, c*k^p or b^k")->capture_default_str();
  sub->add_option("--alpha", a->opt.alpha, "Power-law exponent, below 1/2")->capture_default_str();
  sub->add_option("--jmax", a->opt.jmax, "Number of blocks")->capture_default_str();
  sub->add_option("--max-elements", a->max_elements, "Base sequence length")->capture_default_str();
  sub->add_option("--window", a->window, "Density window")->capture_default_str();
  sub->add_option("--limit", a->limit, "Largest density window start")->capture_default_str();
  sub->add_option("--m", a->opt.m, "Moment order M for the L2 hypothesis")->capture_default_str();
  add_seeds(sub, c, 20);
  add_workers(sub, c);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = [a, &c]() {
    PipelineOptions opt = a->opt;
    opt.max_elements = parse_count(a->max_elements);
    opt.window = parse_count(a->window);
    opt.density_limit = parse_count(a->limit);
    opt.seeds = seed_list(c);
    opt.workers = c.workers;
    const PipelineReport r = pipeline_theorem_faster(opt);
    Outcome o;
    if (r.refused) {
      o.refused = true;
      o.payload = {{"growth", opt.growth},
                   {"alpha", opt.alpha},
                   {"seeds", opt.seeds},
                   {"refused", true},
                   {"precondition", r.refusal}};
      o.failures.push_back(r.refusal);
      return o;
    }
    Json blocks = Json::array();
    for (const Block& b : r.blocks) blocks.push_back({{"v", b.v}, {"w", b.w}});
    Json per_seed = Json::array();
    for (const PipelineSeedRow& row : r.seeds) {
      per_seed.push_back({{"seed", row.seed},
                          {"subsequence_size", row.subsequence_size},
                          {"growth_ok", row.growth_ok},
                          {"density", row.density},
                          {"density_ok", row.density_ok},
                          {"deviations", row.deviations},
                          {"pass", row.pass}});
    }
    o.payload = {{"growth", opt.growth},
                 {"alpha", opt.alpha},
                 {"seeds", opt.seeds},
                 {"refused", false},
                 {"blocks", blocks},
                 {"base_size", r.base_size},
                 {"truncated", r.truncated},
                 {"base_growth_ok", r.base_growth_ok},
                 {"thm51", thm51_json(r.thm51)},
                 {"thm53", thm53_json(r.thm53)},
                 {"checkpoints", r.checkpoints},
                 {"medians", r.medians},
                 {"convergence_ok", r.convergence_ok},
                 {"density_passes", r.density_passes},
                 {"density_ok", r.density_ok},
                 {"hypotheses_ok", r.hypotheses_ok},
                 {"per_seed", per_seed},
                 {"pass", r.pass}};
    if (!r.pass) o.failures.push_back("pipeline verdict failed");
    return o;
  };
}

void add_selftest(CLI::App& app, Registry& reg) {
  auto* sub = app.add_subcommand("selftest", "Run the closed-form example suite");
  Common& c = reg.common_for(sub);
  sub->add_option("--out", c.out, "Report JSON path (default stdout)");
  reg.handlers[sub] = []() {
    Outcome o;
    Json checks = Json::array();
    std::size_t passed = 0;
    for (const SelfCheck& check : selftest_checks()) {
      bool ok = false;
      std::string error;
      try {
        ok = check.run();
      } catch (const std::exception& e) {
        error = e.what();
      }
      Json entry = {{"name", check.name}, {"pass", ok}};
      if (!error.empty()) entry["error"] = error;
      checks.push_back(entry);
      if (ok) {
        ++passed;
      } else {
        o.failures.push_back(check.name);
      }
    }
    o.payload = {{"checks", checks}, {"passed", passed}, {"failed", o.failures.size()}};
    return o;
  };
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random sparse ergodic averages on groups of polynomial growth", "ergolab"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file mirroring the flags; flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  Registry reg;
  add_ball(app, reg);
  add_sequence(app, reg);
  add_density(app, reg);
  add_blocks(app, reg);
  add_average(app, reg);
  add_moments(app, reg);
  add_chernoff(app, reg);
  add_nubound(app, reg);
  add_tails(app, reg);
  add_cz(app, reg);
  add_maximal(app, reg);
  add_faster(app, reg);
  add_selftest(app, reg);
  for (CLI::App* sub : app.get_subcommands({})) {
    sub->allow_config_extras(CLI::config_extras_mode::error);
    sub->configurable();
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Common& common = *reg.commons.at(chosen);
  try {
    Outcome o = reg.handlers.at(chosen)();
    const std::string text = make_report(chosen->get_name(), std::move(o.payload)).dump(2) + "\n";
    if (common.out.empty()) {
      out << text;
    } else {
      write_text(common.out, text);
    }
    for (const std::string& f : o.failures) err << (o.refused ? "refused: " : "assertion failed: ") << f << "\n";
    if (o.refused) return kExitUsage;
    return o.failures.empty() ? kExitPass : kExitFail;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace ergolab::cli
