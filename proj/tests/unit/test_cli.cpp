#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ergolab/cli.hpp"
#include "ergolab/error.hpp"
#include "ergolab/rng.hpp"

using namespace ergolab;
using ergolab::cli::Json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("ergolab_test_" + name);
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST_CASE("count parsing") {
  CHECK(cli::parse_count("1000") == 1000);
  CHECK(cli::parse_count("1e6") == 1000000);
  CHECK(cli::parse_count("2^20") == 1048576);
  CHECK_THROWS_AS(cli::parse_count("1.5"), ConfigError);
  CHECK_THROWS_AS(cli::parse_count("-3"), ConfigError);
  CHECK_THROWS_AS(cli::parse_count("ten"), ConfigError);
}

TEST_CASE("csv quoting round trips") {
  CounterStream s(1);
  const std::string alphabet = "ab,\"\n 1;";
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> fields(1 + s.below(4));
    for (auto& f : fields)
      for (std::uint64_t k = s.below(6); k > 0; --k) f += alphabet[s.below(alphabet.size())];
    std::string line;
    bool has_newline = false;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      has_newline |= fields[i].find('\n') != std::string::npos;
      line += (i ? "," : "") + cli::csv_field(fields[i]);
    }
    if (!has_newline) CHECK(cli::csv_split(line) == fields);
  }
  CHECK(cli::csv_field("1;2") == "1;2");
  CHECK(cli::csv_field("a,b") == "\"a,b\"");
  CHECK_THROWS_AS(cli::csv_split("\"open"), ConfigError);
}

TEST_CASE("reports carry a versioned header") {
  const Json r = cli::make_report("ball", Json{{"size", 3}});
  CHECK(r["header"]["schema_version"] == cli::kSchemaVersion);
  CHECK(r["header"]["command"] == "ball");
  CHECK(r["payload"]["size"] == 3);
}

TEST_CASE("selftest passes through the cli") {
  const Result r = run({"selftest"});
  CHECK(r.code == cli::kExitPass);
  const Json j = Json::parse(r.out);
  CHECK(j["payload"]["failed"] == 0);
}

TEST_CASE("usage errors exit with one and print usage") {
  Result r = run({"ball", "--radius", "3"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("Usage") != std::string::npos);
  r = run({"ball", "--group", "zd:1", "--radius", "3", "--frobnicate"});
  CHECK(r.code == cli::kExitUsage);
  r = run({"ball", "--group", "nope", "--radius", "3"});
  CHECK(r.code == cli::kExitUsage);
  r = run({});
  CHECK(r.code == cli::kExitUsage);
  CHECK(run({"--help"}).code == cli::kExitPass);
}

TEST_CASE("gate failures exit with two") {
  const Result r = run({"density", "--limit", "1000", "--window", "10", "--threshold", "0.01", "--seeds", "3"});
  CHECK(r.code == cli::kExitFail);
  CHECK(r.err.find("assertion failed") != std::string::npos);
}

TEST_CASE("refusal exits with one") {
  const Result r = run({"faster", "--alpha", "0.7", "--seeds", "1"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(Json::parse(r.out)["payload"]["refused"] == true);
}

TEST_CASE("config sections supply defaults and flags win") {
  const auto ini = temp_file("seq.ini", "[sequence]\nlimit=300\nseed=5\n");
  Json j = Json::parse(run({"--config", ini.string(), "sequence"}).out);
  CHECK(j["payload"]["limit"] == 300);
  CHECK(j["payload"]["seeds"][0] == 5);
  j = Json::parse(run({"--config", ini.string(), "sequence", "--seed", "8"}).out);
  CHECK(j["payload"]["seeds"][0] == 8);
  const auto bad = temp_file("bad.ini", "[sequence]\nlimt=300\n");
  CHECK(run({"--config", bad.string(), "sequence"}).code == cli::kExitUsage);
}

TEST_CASE("the seed falls back to the environment") {
  setenv("ERGOLAB_SEED", "23", 1);
  const Json j = Json::parse(run({"sequence", "--limit", "100"}).out);
  unsetenv("ERGOLAB_SEED");
  CHECK(j["payload"]["seeds"][0] == 23);
}

TEST_CASE("reruns give identical payloads") {
  const std::vector<std::vector<std::string>> commands{
      {"ball", "--group", "heis3", "--radius", "4"},
      {"sequence", "--limit", "5000", "--seed", "3"},
      {"density", "--limit", "1e4", "--seeds", "3"},
      {"blocks", "--jmax", "4"},
      {"average", "--nmax", "2^12", "--seeds", "3", "--workers", "2"},
      {"moments", "--size", "6", "--m", "2", "--trials", "500"},
      {"chernoff", "--size", "8", "--trials", "500"},
      {"nubound", "--jmax", "9", "--seeds", "2"},
      {"tails", "--jmax", "6", "--seeds", "2"},
      {"maximal", "--jmax", "6", "--seeds", "2", "--corpus-size", "6"},
      {"faster", "--max-elements", "2^12", "--limit", "1e4", "--seeds", "2"},
      {"selftest"}};
  for (const auto& c : commands) {
    auto w = c;
    const Result a = run(c), b = run(w);
    INFO(c.front());
    CHECK(a.code == b.code);
    CHECK(Json::parse(a.out)["payload"].dump() == Json::parse(b.out)["payload"].dump());
  }
}

TEST_CASE("cz through the cli") {
  const auto phi = temp_file("phi.csv", "element,coefficient\n0;0,9\n1;0,-2\n5;7,4\n");
  const Result r = run({"cz", "--phi", phi.string(), "--lambda", "1"});
  CHECK(r.code == cli::kExitPass);
  const Json j = Json::parse(r.out);
  CHECK(j["payload"]["group"] == "zd:2:sym");
  CHECK(j["payload"]["checks"]["recombines"] == true);
}

TEST_CASE("ball csv output") {
  const auto path = std::filesystem::temp_directory_path() / "ergolab_test_ball.csv";
  CHECK(run({"ball", "--group", "zd:2", "--radius", "2", "--out", path.string()}).code == cli::kExitPass);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "element,rho");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 9);
}
