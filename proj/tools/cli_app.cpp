#include "cli_app.hpp"

#include <CLI11.hpp>
#include <map>
#include <ostream>

#include "run_config.hpp"

namespace dfgcli {

namespace {

struct SubState {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

std::string footer(const CommandInfo& c) {
  std::string s = "Outputs: " + c.outputs + "\nSeed required: " + c.seed_rule +
                  "\nKeys may also come from --config FILE (key = value lines); flags win.";
  return s;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Node sets, designs and sampling experiments on tori and the 2-sphere", "designforge"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.footer("Exit codes: 0 success, 1 usage error, 2 certification or assertion failure.\n"
             "DESIGNFORGE_THREADS caps the worker threads.");

  std::vector<CommandInfo> infos;
  try {
    infos = commands();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  std::vector<SubState> subs(infos.size());
  for (std::size_t i = 0; i < infos.size(); ++i) {
    const auto& c = infos[i];
    auto& st = subs[i];
    st.app = app.add_subcommand(c.name, c.summary);
    st.app->footer(footer(c));
    st.app->add_option("--config", st.config_path, "key = value config file")->check(CLI::ExistingFile);
    for (const auto& k : c.keys) {
      std::string help = k.help;
      if (k.required) help += " (required)";
      if (!k.default_value.empty()) help += " [default: " + k.default_value + "]";
      st.options[k.name] = st.app->add_option("--" + k.name, st.values[k.name], help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  for (std::size_t i = 0; i < infos.size(); ++i) {
    auto& st = subs[i];
    if (!st.app->parsed()) continue;
    const std::string& name = infos[i].name;
    try {
      Config cfg = st.config_path.empty() ? Config::create(name) : Config::load(st.config_path);
      if (cfg.subcommand().empty()) cfg.set_subcommand(name);
      if (cfg.subcommand() != name)
        throw Error(DFG_ERR_USAGE, "config is for '" + cfg.subcommand() + "', not '" + name + "'");
      for (const auto& [key, opt] : st.options)
        if (opt->count() > 0) cfg.set(key, st.values[key]);
      cfg.validate();
      const Result r = run(cfg);
      r.emit(cfg);
      out << r.summary() << "\n";
      return r.exit_code();
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      if (e.status() == DFG_ERR_USAGE || e.status() == DFG_ERR_INPUT) {
        err << st.app->help();
        return 1;
      }
      return e.status() == DFG_ERR_NUMERICAL ? 2 : 1;
    }
  }
  return 1;
}

}  // namespace dfgcli
