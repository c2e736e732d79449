#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "designforge/designforge.h"

namespace dfgcli {

class Error : public std::runtime_error {
 public:
  Error(dfg_status status, const std::string& msg) : std::runtime_error(msg), status_(status) {}
  dfg_status status() const { return status_; }

 private:
  dfg_status status_;
};

// Throws Error carrying dfg_last_error() unless s is DFG_OK.
void check(dfg_status s);

class Config {
 public:
  static Config create(const std::string& subcommand = "");
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  std::string subcommand() const;
  void set_subcommand(const std::string& name);
  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  std::string serialize() const;
  void validate() const;
  const dfg_config* raw() const { return h_.get(); }

 private:
  struct Del {
    void operator()(dfg_config* c) const { dfg_config_destroy(c); }
  };
  explicit Config(dfg_config* c) : h_(c) {}
  std::unique_ptr<dfg_config, Del> h_;
};

struct KeyInfo {
  std::string name;
  std::string help;
  std::string default_value;
  bool required = false;
};

struct CommandInfo {
  std::string name;
  std::string summary;
  std::string seed_rule;
  std::string outputs;
  std::vector<KeyInfo> keys;
};

std::vector<CommandInfo> commands();

struct File {
  std::string name;
  std::string content;
};

class Result {
 public:
  int exit_code() const;
  std::string summary() const;
  std::vector<File> files() const;
  void emit(const Config& cfg) const;

 private:
  friend Result run(const Config& cfg);
  struct Del {
    void operator()(dfg_result* r) const { dfg_result_destroy(r); }
  };
  explicit Result(dfg_result* r) : h_(r) {}
  std::unique_ptr<dfg_result, Del> h_;
};

Result run(const Config& cfg);

}  // namespace dfgcli
