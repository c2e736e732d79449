#include "designforge/designforge.h"

#include <cstring>
#include <new>
#include <string>

#include "designforge/commands.hpp"
#include "designforge/designs.hpp"
#include "designforge/errors.hpp"
#include "designforge/io.hpp"
#include "designforge/partition.hpp"

struct dfg_manifold {
  designforge::Manifold m;
};
struct dfg_nodes {
  designforge::NodeSet nodes;
};
struct dfg_config {
  designforge::RunConfig cfg;
};
struct dfg_result {
  designforge::CommandOutput out;
};

namespace {

thread_local std::string g_error;

dfg_status fail(dfg_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <class F>
dfg_status guard(F&& f) {
  try {
    g_error.clear();
    return f();
  } catch (const designforge::UsageError& e) {
    return fail(DFG_ERR_USAGE, e.what());
  } catch (const designforge::InputError& e) {
    return fail(DFG_ERR_INPUT, e.what());
  } catch (const designforge::NumericalError& e) {
    return fail(DFG_ERR_NUMERICAL, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(DFG_ERR_INPUT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(DFG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DFG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DFG_ERR_INTERNAL, "unknown error");
  }
}

#define DFG_REQUIRE(p) \
  if (!(p)) return fail(DFG_ERR_NULL, #p " is NULL")

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* dfg_version(void) { return "0.1.0"; }
const char* dfg_last_error(void) { return g_error.c_str(); }
void dfg_string_free(char* s) { delete[] s; }

dfg_status dfg_manifold_create(const char* tag, dfg_manifold** out) {
  DFG_REQUIRE(tag);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = new dfg_manifold{designforge::Manifold::from_tag(tag)};
    return DFG_OK;
  });
}

void dfg_manifold_destroy(dfg_manifold* m) { delete m; }
int dfg_manifold_dim(const dfg_manifold* m) { return m ? m->m.dim() : 0; }

dfg_status dfg_nodes_create(const dfg_manifold* m, const double* coords, size_t count, dfg_nodes** out) {
  DFG_REQUIRE(m);
  DFG_REQUIRE(out);
  if (count > 0) DFG_REQUIRE(coords);
  return guard([&] {
    const int d = m->m.dim();
    std::vector<designforge::Point> pts(count, designforge::Point(d));
    for (size_t j = 0; j < count; ++j)
      for (int i = 0; i < d; ++i) pts[j][i] = coords[j * static_cast<size_t>(d) + static_cast<size_t>(i)];
    *out = new dfg_nodes{designforge::make_node_set(m->m, std::move(pts))};
    return DFG_OK;
  });
}

dfg_status dfg_nodes_from_json(const char* text, dfg_nodes** out) {
  DFG_REQUIRE(text);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = new dfg_nodes{designforge::nodes_from_json(nlohmann::json::parse(text))};
    return DFG_OK;
  });
}

dfg_status dfg_nodes_to_json(const dfg_nodes* nodes, char** out) {
  DFG_REQUIRE(nodes);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = copy_string(designforge::nodes_to_json(nodes->nodes).dump());
    return DFG_OK;
  });
}

void dfg_nodes_destroy(dfg_nodes* nodes) { delete nodes; }
size_t dfg_nodes_size(const dfg_nodes* nodes) { return nodes ? nodes->nodes.size() : 0; }
int dfg_nodes_dim(const dfg_nodes* nodes) { return nodes ? nodes->nodes.manifold.dim() : 0; }

dfg_status dfg_nodes_point(const dfg_nodes* nodes, size_t i, double* coords) {
  DFG_REQUIRE(nodes);
  DFG_REQUIRE(coords);
  if (i >= nodes->nodes.size()) return fail(DFG_ERR_NOT_FOUND, "node index out of range");
  const auto& p = nodes->nodes.points[i];
  for (int k = 0; k < p.size(); ++k) coords[k] = p[k];
  g_error.clear();
  return DFG_OK;
}

dfg_status dfg_partition_nodes(const dfg_manifold* m, int N, const char* rule, uint64_t seed, dfg_nodes** out) {
  DFG_REQUIRE(m);
  DFG_REQUIRE(rule);
  DFG_REQUIRE(out);
  return guard([&] {
    const auto p = designforge::equal_area_partition(m->m, N);
    *out = new dfg_nodes{designforge::pick_nodes(p, designforge::node_rule_from_string(rule), seed)};
    return DFG_OK;
  });
}

dfg_status dfg_design_defect(const dfg_nodes* nodes, double L, double* defect, double* gram_defect) {
  DFG_REQUIRE(nodes);
  DFG_REQUIRE(defect);
  return guard([&] {
    const auto r = designforge::design_defect(nodes->nodes, L);
    *defect = r.defect;
    if (gram_defect) *gram_defect = r.gram_defect;
    return DFG_OK;
  });
}

dfg_status dfg_construct_design(const dfg_manifold* m, double L, int N, const char* init, uint64_t seed, double tol,
                                int budget, dfg_nodes** out, double* defect, int* success) {
  DFG_REQUIRE(m);
  DFG_REQUIRE(init);
  DFG_REQUIRE(out);
  return guard([&] {
    designforge::DesignOptions o;
    o.init = designforge::design_init_from_string(init);
    if (o.init == designforge::DesignInit::Given) throw designforge::InputError("init 'given' is not available here");
    o.seed = seed;
    o.tol = tol;
    o.budget = budget;
    const auto r = designforge::construct_design(m->m, L, N, o);
    *out = new dfg_nodes{r.report.nodes};
    if (defect) *defect = r.report.defect;
    if (success) *success = r.success ? 1 : 0;
    return DFG_OK;
  });
}

dfg_status dfg_worst_case_error(const dfg_nodes* nodes, double alpha, double lambda_max, double* wce,
                                double* wce_upper) {
  DFG_REQUIRE(nodes);
  DFG_REQUIRE(wce);
  return guard([&] {
    const auto r = designforge::worst_case_error(nodes->nodes, alpha, lambda_max);
    *wce = r.wce;
    if (wce_upper) *wce_upper = r.wce_upper;
    return DFG_OK;
  });
}

size_t dfg_command_count(void) { return designforge::command_specs().size(); }

const char* dfg_command_name(size_t i) {
  const auto& s = designforge::command_specs();
  return i < s.size() ? s[i].name.c_str() : nullptr;
}

dfg_status dfg_command_describe(const char* name, char** json_out) {
  DFG_REQUIRE(name);
  DFG_REQUIRE(json_out);
  return guard([&] {
    const auto& s = designforge::command_spec(name);
    nlohmann::json j{{"name", s.name}, {"summary", s.summary}, {"seed_rule", s.seed_rule}, {"outputs", s.outputs}};
    j["keys"] = nlohmann::json::array();
    for (const auto& k : s.keys)
      j["keys"].push_back({{"name", k.name}, {"help", k.help}, {"default", k.default_value}, {"required", k.required}});
    *json_out = copy_string(j.dump());
    return DFG_OK;
  });
}

dfg_status dfg_config_create(const char* subcommand, dfg_config** out) {
  DFG_REQUIRE(out);
  return guard([&] {
    auto* c = new dfg_config{};
    if (subcommand) c->cfg.subcommand = subcommand;
    *out = c;
    return DFG_OK;
  });
}

dfg_status dfg_config_parse(const char* text, dfg_config** out) {
  DFG_REQUIRE(text);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = new dfg_config{designforge::parse_config(text)};
    return DFG_OK;
  });
}

dfg_status dfg_config_load(const char* path, dfg_config** out) {
  DFG_REQUIRE(path);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = new dfg_config{designforge::load_config(path)};
    return DFG_OK;
  });
}

void dfg_config_destroy(dfg_config* cfg) { delete cfg; }

dfg_status dfg_config_set_subcommand(dfg_config* cfg, const char* name) {
  DFG_REQUIRE(cfg);
  DFG_REQUIRE(name);
  return guard([&] {
    cfg->cfg.subcommand = name;
    return DFG_OK;
  });
}

const char* dfg_config_subcommand(const dfg_config* cfg) { return cfg ? cfg->cfg.subcommand.c_str() : ""; }

dfg_status dfg_config_set(dfg_config* cfg, const char* key, const char* value) {
  DFG_REQUIRE(cfg);
  DFG_REQUIRE(key);
  DFG_REQUIRE(value);
  return guard([&] {
    const std::string k = key, v = value;
    if (k.empty() || k == "subcommand" || k.find_first_of(" \t\n=") != std::string::npos)
      throw designforge::UsageError("invalid config key '" + k + "'");
    if (v.find('\n') != std::string::npos) throw designforge::UsageError("config key '" + k + "': value spans lines");
    cfg->cfg.values[k] = v;
    return DFG_OK;
  });
}

dfg_status dfg_config_get(const dfg_config* cfg, const char* key, char** value_out) {
  DFG_REQUIRE(cfg);
  DFG_REQUIRE(key);
  DFG_REQUIRE(value_out);
  const auto it = cfg->cfg.values.find(key);
  if (it == cfg->cfg.values.end()) return fail(DFG_ERR_NOT_FOUND, std::string("config key '") + key + "' not set");
  return guard([&] {
    *value_out = copy_string(it->second);
    return DFG_OK;
  });
}

dfg_status dfg_config_serialize(const dfg_config* cfg, char** out) {
  DFG_REQUIRE(cfg);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = copy_string(designforge::serialize_config(cfg->cfg));
    return DFG_OK;
  });
}

dfg_status dfg_config_validate(const dfg_config* cfg) {
  DFG_REQUIRE(cfg);
  return guard([&] {
    designforge::validate_config(cfg->cfg);
    return DFG_OK;
  });
}

dfg_status dfg_run(const dfg_config* cfg, dfg_result** out) {
  DFG_REQUIRE(cfg);
  DFG_REQUIRE(out);
  return guard([&] {
    *out = new dfg_result{designforge::run_command(cfg->cfg)};
    return DFG_OK;
  });
}

void dfg_result_destroy(dfg_result* r) { delete r; }
int dfg_result_exit_code(const dfg_result* r) { return r ? r->out.exit_code : 1; }
const char* dfg_result_summary(const dfg_result* r) { return r ? r->out.summary.c_str() : ""; }
size_t dfg_result_file_count(const dfg_result* r) { return r ? r->out.files.size() : 0; }

const char* dfg_result_file_name(const dfg_result* r, size_t i) {
  return r && i < r->out.files.size() ? r->out.files[i].name.c_str() : nullptr;
}

const char* dfg_result_file_content(const dfg_result* r, size_t i, size_t* length) {
  if (!r || i >= r->out.files.size()) return nullptr;
  if (length) *length = r->out.files[i].content.size();
  return r->out.files[i].content.c_str();
}

dfg_status dfg_result_emit(const dfg_result* r, const dfg_config* cfg) {
  DFG_REQUIRE(r);
  DFG_REQUIRE(cfg);
  return guard([&] {
    designforge::emit(r->out, cfg->cfg);
    return DFG_OK;
  });
}

}  // extern "C"
