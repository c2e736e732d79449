#include "run_config.hpp"

#include <json.hpp>

namespace dfgcli {

namespace {

std::string take(char* s) {
  std::string out(s);
  dfg_string_free(s);
  return out;
}

}  // namespace

void check(dfg_status s) {
  if (s != DFG_OK) throw Error(s, dfg_last_error());
}

Config Config::create(const std::string& subcommand) {
  dfg_config* c = nullptr;
  check(dfg_config_create(subcommand.c_str(), &c));
  return Config(c);
}

Config Config::parse(const std::string& text) {
  dfg_config* c = nullptr;
  check(dfg_config_parse(text.c_str(), &c));
  return Config(c);
}

Config Config::load(const std::string& path) {
  dfg_config* c = nullptr;
  check(dfg_config_load(path.c_str(), &c));
  return Config(c);
}

std::string Config::subcommand() const { return dfg_config_subcommand(h_.get()); }

void Config::set_subcommand(const std::string& name) { check(dfg_config_set_subcommand(h_.get(), name.c_str())); }

void Config::set(const std::string& key, const std::string& value) {
  check(dfg_config_set(h_.get(), key.c_str(), value.c_str()));
}

std::optional<std::string> Config::get(const std::string& key) const {
  char* v = nullptr;
  const dfg_status s = dfg_config_get(h_.get(), key.c_str(), &v);
  if (s == DFG_ERR_NOT_FOUND) return std::nullopt;
  check(s);
  return take(v);
}

std::string Config::serialize() const {
  char* s = nullptr;
  check(dfg_config_serialize(h_.get(), &s));
  return take(s);
}

void Config::validate() const { check(dfg_config_validate(h_.get())); }

std::vector<CommandInfo> commands() {
  std::vector<CommandInfo> out;
  for (size_t i = 0; i < dfg_command_count(); ++i) {
    char* s = nullptr;
    check(dfg_command_describe(dfg_command_name(i), &s));
    const auto j = nlohmann::json::parse(take(s));
    CommandInfo c{j["name"], j["summary"], j["seed_rule"], j["outputs"], {}};
    for (const auto& k : j["keys"]) c.keys.push_back({k["name"], k["help"], k["default"], k["required"]});
    out.push_back(std::move(c));
  }
  return out;
}

int Result::exit_code() const { return dfg_result_exit_code(h_.get()); }
std::string Result::summary() const { return dfg_result_summary(h_.get()); }

std::vector<File> Result::files() const {
  std::vector<File> out;
  for (size_t i = 0; i < dfg_result_file_count(h_.get()); ++i) {
    size_t n = 0;
    const char* c = dfg_result_file_content(h_.get(), i, &n);
    out.push_back({dfg_result_file_name(h_.get(), i), std::string(c, n)});
  }
  return out;
}

void Result::emit(const Config& cfg) const { check(dfg_result_emit(h_.get(), cfg.raw())); }

Result run(const Config& cfg) {
  dfg_result* r = nullptr;
  check(dfg_run(cfg.raw(), &r));
  return Result(r);
}

}  // namespace dfgcli
