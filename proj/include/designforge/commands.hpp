#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace designforge {

// Flat key=value run configuration. Values are kept as written so a config
// survives serialize/parse unchanged.
struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  bool operator==(const RunConfig&) const = default;
};

// One "key = value" per line; blank lines and lines starting with '#' are
// skipped; the key "subcommand" selects the command. Throws UsageError naming
// the offending line or key.
RunConfig parse_config(std::string_view text);
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

struct KeySpec {
  std::string name;
  std::string help;
  std::string default_value;  // empty: no default
  bool required = false;
};

struct CommandSpec {
  std::string name;
  std::string summary;
  std::vector<KeySpec> keys;  // includes the shared keys seed, out_dir, formats
  std::string seed_rule;      // when the seed is mandatory, in words
  std::string outputs;        // file list and CSV columns
};

const std::vector<CommandSpec>& command_specs();
const CommandSpec& command_spec(const std::string& name);

// Unknown subcommand or key, missing required key, missing seed: UsageError.
void validate_config(const RunConfig& cfg);

struct OutputFile {
  std::string name;  // {subcommand}-{seed}.{ext}
  std::string content;
};

struct CommandOutput {
  int exit_code = 0;  // 0 ok, 2 certification or assertion failure
  std::string summary;
  std::vector<OutputFile> files;  // includes the resolved config as .cfg
};

// Runs the subcommand in memory. Bad input throws (UsageError / InputError);
// NumericalError propagates.
CommandOutput run_command(const RunConfig& cfg);

// Writes every file into cfg's out_dir (created if missing), each through a
// temporary file and rename. Returns the written paths.
std::vector<std::string> emit(const CommandOutput& out, const RunConfig& cfg);

}  // namespace designforge
