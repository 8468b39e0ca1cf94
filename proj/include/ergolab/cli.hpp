#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace ergolab::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

// Runs one subcommand. `args` excludes the program name. Returns 0 when every
// gated assertion holds, 2 when one fails and 1 on usage, configuration or
// resource errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// {header: {schema_version, command, timestamp}, payload}. The timestamp is
// the only field that differs between reruns.
Json make_report(std::string_view command, Json payload);

// "1000", "1e6" and "2^20". Throws ConfigError on anything else.
std::uint64_t parse_count(std::string_view text);

// RFC 4180 field quoting.
std::string csv_field(std::string_view text);
// Splits one CSV record, honouring quoted fields.
std::vector<std::string> csv_split(std::string_view line);

}  // namespace ergolab::cli
