#include "designforge/commands.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "designforge/cutoff.hpp"
#include "designforge/designs.hpp"
#include "designforge/errors.hpp"
#include "designforge/flow.hpp"
#include "designforge/heat.hpp"
#include "designforge/io.hpp"
#include "designforge/kernels.hpp"
#include "designforge/mz.hpp"
#include "designforge/partition.hpp"
#include "designforge/propagation.hpp"

namespace designforge {

namespace {

using std::numbers::pi;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::vector<KeySpec> kSharedKeys = {
    {"seed", "unsigned 64-bit RNG seed; also names the output files", "", false},
    {"out_dir", "directory for output files", ".", false},
    {"formats", "comma list of csv, json", "csv,json", false},
};

std::vector<KeySpec> with_shared(std::vector<KeySpec> keys) {
  keys.insert(keys.end(), kSharedKeys.begin(), kSharedKeys.end());
  return keys;
}

std::vector<CommandSpec> build_specs() {
  std::vector<CommandSpec> s;
  s.push_back({"design",
               "construct a node set with small design defect by minimizing defect^2",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"L", "bandwidth", "", true},
                            {"N", "number of nodes", "", true},
                            {"init", "centers, random or given", "centers", false},
                            {"nodes", "node file (.json or .csv) for init=given", "", false},
                            {"tol", "success threshold on the defect", "1e-10", false},
                            {"budget", "iteration budget", "1000", false},
                            {"method", "gd or lm", "gd", false},
                            {"stall_window", "iterations without 0.1% progress before stopping", "200", false},
                            {"flow_polish", "rounds of flow polish after the optimizer", "0", false}}),
               "when init=random",
               "design-<seed>.json (report, nodes, residuals); design-<seed>.csv: iter,defect,step; "
               "design-<seed>.nodes.csv: one point per row"});
  s.push_back({"certify",
               "defect and Weyl residuals of a given node set",
               with_shared({{"nodes", "node file (.json or .csv)", "", true},
                            {"manifold", "manifold for .csv node files", "", false},
                            {"L", "bandwidth", "", true},
                            {"tol", "certification threshold", "1e-10", false}}),
               "never",
               "certify-<seed>.json (report); certify-<seed>.csv: label,residual"});
  s.push_back({"partition",
               "equal-area partition, sampled certification and node pick",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"N", "number of regions", "", true},
                            {"samples", "samples per region", "64", false},
                            {"rule", "center, random or inner_center", "center", false}}),
               "always",
               "partition-<seed>.json (regions, certification, nodes); partition-<seed>.csv: "
               "region,measure,inner_radius,outer_radius,max_sampled_distance,ok"});
  s.push_back({"mz-survey",
               "normalized sampling constants over an (L, N) grid",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"L", "comma list of bandwidths", "", true},
                            {"N", "comma list of node counts", "", true},
                            {"trials", "random polynomials per cell and rule", "100", false},
                            {"rules", "comma list of center, random, corner, extremal", "center,random,corner,extremal",
                             false},
                            {"ascent_steps", "refinement steps on the worst trial", "50", false},
                            {"max_spread", "assertion: max/min of C_hat and C3_hat over cells", "2", false}}),
               "always",
               "mz-survey-<seed>.json (cells, spreads); mz-survey-<seed>.csv: L,N,rule,trial,ratio_value,ratio_grad"});
  s.push_back({"kernel-decay",
               "off-diagonal decay of localized kernels (mode=decay) or the gradient-kernel bound (mode=gradient)",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"L", "comma list of bandwidths", "", true},
                            {"mode", "decay or gradient", "decay", false},
                            {"cutoff", "plateau, annulus, mollifier or poly_bump", "poly_bump", false},
                            {"S", "cutoff smoothness", "6", false},
                            {"count", "distances per L (mode=decay)", "60", false},
                            {"left", "comma list of frame fields at x", "", false},
                            {"right", "comma list of frame fields at y", "", false},
                            {"x", "base point, comma list of coordinates", "", false},
                            {"min_exponent", "assertion: fitted exponent at least this (0 = off)", "0", false},
                            {"scaled", "comma list of L|x-y| values (mode=gradient)", "0,0.5,1,2,4,8,12,20,30,45", false},
                            {"dyadic_S", "exponent in the dyadic sum (mode=gradient)", "3", false}}),
               "never",
               "kernel-decay-<seed>.json (per-L fits); kernel-decay-<seed>.csv: L,dist,value,bound,ratio "
               "(mode=decay) or L,dist,actual,model,ratio (mode=gradient)"});
  s.push_back({"propagation",
               "finite propagation of band-limited multipliers on a torus and the heat bound",
               with_shared({{"manifold", "torus1, torus2 or torus3", "", true},
                            {"r", "Ghat is supported in [-2r, 2r]", "0.5", false},
                            {"shape", "poly_bump or fejer", "poly_bump", false},
                            {"q", "power of the poly_bump transform", "8", false},
                            {"count", "distances in [0, pi] along the first axis", "64", false},
                            {"x", "base point", "", false},
                            {"tol", "assertion: |sum| beyond 2r at most this", "1e-10", false},
                            {"min_inside", "assertion: max |sum| below 2r above this", "1e-3", false},
                            {"t_count", "heat-bound times in [1e-2, 1]", "15", false}}),
               "never",
               "propagation-<seed>.json (extremes, heat bound); propagation-<seed>.csv: dist,value,poisson"});
  s.push_back({"heat-fit",
               "Gaussian-rate and power-law fits of heat-kernel derivatives",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"mode", "greiner, parabolic or power_law", "greiner", false},
                            {"left", "derivatives at x", "0", false},
                            {"right", "derivatives at y", "0", false},
                            {"t_min", "smallest time", "1e-2", false},
                            {"t_max", "largest time", "1", false},
                            {"t_count", "log-spaced times", "12", false},
                            {"pairs", "points y at distance pi i/(pairs-1) from x (mode=greiner)", "9", false},
                            {"s_grid", "comma list of |x-y|/sqrt(t) (mode=parabolic)",
                             "0.25,0.5,0.75,1,1.25,1.5,1.75,2,2.25,2.5,2.75,3", false},
                            {"x", "base point", "", false}}),
               "never",
               "heat-fit-<seed>.json (fit); heat-fit-<seed>.csv: t,dist,value (greiner, parabolic) or "
               "t,envelope (power_law)"});
  s.push_back({"flow-check",
               "boundary positivity of the node flow from partition centers",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"L", "bandwidth", "", true},
                            {"N", "number of nodes", "", true},
                            {"trials", "random polynomials", "50", false},
                            {"eps", "smoothing parameter", "0.1", false},
                            {"C_hat", "gate N >= C_hat L^d (0 = default: 4 torus, 8 sphere)", "0", false}}),
               "always",
               "flow-check-<seed>.json (report); flow-check-<seed>.csv: trial,functional_plus,functional_minus,ascent_ok"});
  s.push_back({"scaling",
               "smallest N reaching the tolerance for each L, and the fitted exponent",
               with_shared({{"manifold", "torus1, torus2, torus3 or sphere2", "", true},
                            {"L", "ascending comma list of bandwidths", "", true},
                            {"tol", "success threshold on the defect", "1e-6", false},
                            {"restarts", "random restarts per N after partition centers", "3", false},
                            {"budget", "iteration budget per attempt", "2000", false},
                            {"N_max", "largest N tried", "4096", false}}),
               "always",
               "scaling-<seed>.json (rows, slope); scaling-<seed>.csv: L,N_star,attempts,defect"});
  s.push_back({"wce",
               "worst-case integration error in the Sobolev space of order alpha",
               with_shared({{"nodes", "node file (.json or .csv)", "", true},
                            {"manifold", "manifold for .csv node files", "", false},
                            {"alpha", "smoothness, > d/2", "", true},
                            {"lambda_max", "explicit band; the rest is the tail", "", true}}),
               "never",
               "wce-<seed>.json (report); wce-<seed>.csv: alpha,lambda_max,band_sq,tail_expected,tail_bound,wce,wce_upper"});
  return s;
}

bool seed_required(const RunConfig& cfg) {
  const auto& rule = command_spec(cfg.subcommand).seed_rule;
  if (rule == "always") return true;
  if (rule == "when init=random") {
    const auto it = cfg.values.find("init");
    return it != cfg.values.end() && it->second == "random";
  }
  return false;
}

// Typed access with defaults from the command table.
class Params {
 public:
  explicit Params(const RunConfig& cfg) : cfg_(cfg), spec_(command_spec(cfg.subcommand)) {}

  std::string str(const std::string& key) const {
    const auto it = cfg_.values.find(key);
    if (it != cfg_.values.end()) return it->second;
    for (const auto& k : spec_.keys)
      if (k.name == key) return k.default_value;
    throw UsageError("internal: key '" + key + "' not declared for " + spec_.name);
  }

  double num(const std::string& key) const { return parse_double(key, str(key)); }

  long long integer(const std::string& key) const { return parse_int(key, str(key)); }

  int count(const std::string& key) const {
    const long long v = integer(key);
    if (v < 0 || v > 1000000000) throw UsageError("key '" + key + "': out of range");
    return static_cast<int>(v);
  }

  std::uint64_t seed() const {
    const std::string s = str("seed");
    if (s.empty()) return 0;
    if (s.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError("key 'seed': expected an unsigned integer, got '" + s + "'");
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
    if (errno == ERANGE) throw UsageError("key 'seed': out of range");
    return v;
  }

  std::string seed_name() const {
    const std::string s = str("seed");
    return s.empty() ? "0" : s;
  }

  std::vector<double> nums(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : split_list(str(key))) out.push_back(parse_double(key, item));
    return out;
  }

  std::vector<int> ints(const std::string& key) const {
    std::vector<int> out;
    for (const auto& item : split_list(str(key))) {
      const long long v = parse_int(key, item);
      if (v < -1000000000 || v > 1000000000) throw UsageError("key '" + key + "': out of range");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }

  Manifold manifold() const {
    try {
      return Manifold::from_tag(str("manifold"));
    } catch (const InputError& e) {
      throw UsageError(std::string("key 'manifold': ") + e.what());
    }
  }

  Point point(const std::string& key, const Manifold& m) const {
    const auto v = nums(key);
    Point x(m.dim());
    if (v.empty()) {
      x.setConstant(0.3);
    } else {
      if (static_cast<int>(v.size()) != m.dim())
        throw UsageError("key '" + key + "': expected " + std::to_string(m.dim()) + " coordinates");
      for (int i = 0; i < m.dim(); ++i) x[i] = v[static_cast<std::size_t>(i)];
    }
    m.validate(x);
    return x;
  }

  NodeSet nodes(const std::string& key) const {
    const std::string path = str(key);
    if (path.empty()) throw UsageError("key '" + key + "' is required here");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("key '" + key + "': cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    const std::optional<Manifold> fallback =
        cfg_.has("manifold") ? std::optional<Manifold>(manifold()) : std::nullopt;
    if (path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(os.str());
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("key '" + key + "': " + e.what());
      }
      NodeSet n = nodes_from_json(j, fallback);
      if (fallback && !(n.manifold == *fallback))
        throw UsageError("key 'manifold' disagrees with the node file");
      return n;
    }
    if (!fallback) throw UsageError("key 'manifold' is required for CSV node files");
    return nodes_from_csv(*fallback, os.str());
  }

  std::vector<std::string> formats() const {
    auto f = split_list(str("formats"));
    for (const auto& s : f)
      if (s != "csv" && s != "json") throw UsageError("key 'formats': unknown format '" + s + "'");
    return f;
  }

 private:
  static double parse_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
      throw UsageError("key '" + key + "': expected a number, got '" + s + "'");
    return v;
  }

  static long long parse_int(const std::string& key, const std::string& s) {
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
      throw UsageError("key '" + key + "': expected an integer, got '" + s + "'");
    return v;
  }

  const RunConfig& cfg_;
  const CommandSpec& spec_;
};

std::string fmt(double v) { return format_double(v); }

std::vector<double> logspace(double a, double b, int n) {
  if (!(a > 0) || !(b >= a) || n < 1) throw UsageError("time grid needs 0 < t_min <= t_max and t_count >= 1");
  std::vector<double> t;
  for (int i = 0; i < n; ++i) t.push_back(n == 1 ? a : a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
  return t;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

struct Result {
  int exit_code = 0;
  std::string summary;
  nlohmann::json json;
  std::vector<std::pair<std::string, std::string>> csv;  // extension, content
};

Result run_design(const Params& p) {
  const Manifold m = p.manifold();
  DesignOptions o;
  o.init = design_init_from_string(p.str("init"));
  o.seed = p.seed();
  o.tol = p.num("tol");
  o.budget = p.count("budget");
  o.method = design_method_from_string(p.str("method"));
  o.stall_window = p.count("stall_window");
  o.flow_polish = p.count("flow_polish");
  if (o.init == DesignInit::Given) o.given = p.nodes("nodes");
  const int N = static_cast<int>(p.integer("N"));
  const auto r = construct_design(m, p.num("L"), N, o);
  Result out;
  out.json = construction_to_json(r);
  out.json["init"] = to_string(o.init);
  out.json["method"] = to_string(o.method);
  out.csv = {{"csv", trace_csv(r.trace)}, {"nodes.csv", nodes_to_csv(r.report.nodes)}};
  out.exit_code = r.success ? 0 : 2;
  out.summary = "design " + m.tag() + " L=" + fmt(r.report.L) + " N=" + std::to_string(N) +
                " defect=" + fmt(r.report.defect) + " iterations=" + std::to_string(r.iterations) +
                (r.success ? " success" : " FAILED");
  for (const auto& w : r.warnings) out.summary += " warning: " + w;
  return out;
}

Result run_certify(const Params& p) {
  const NodeSet nodes = p.nodes("nodes");
  const auto r = design_defect(nodes, p.num("L"), p.num("tol"));
  Result out;
  out.json = design_report_to_json(r);
  std::ostringstream os;
  os << "label,residual\n";
  for (std::size_t k = 0; k < r.labels.size(); ++k) os << r.labels[k] << ',' << fmt(r.residuals[k]) << '\n';
  out.csv = {{"csv", os.str()}};
  out.exit_code = r.certified ? 0 : 2;
  out.summary = "certify " + nodes.manifold.tag() + " L=" + fmt(r.L) + " N=" + std::to_string(nodes.size()) +
                " defect=" + fmt(r.defect) + (r.certified ? " certified" : " NOT certified");
  return out;
}

Result run_partition(const Params& p) {
  const Manifold m = p.manifold();
  const int N = static_cast<int>(p.integer("N"));
  const Partition part = equal_area_partition(m, N);
  const auto cert = certify(part, p.count("samples"), p.seed());
  const NodeSet nodes = pick_nodes(part, node_rule_from_string(p.str("rule")), p.seed());
  Result out;
  out.json["partition"] = partition_to_json(part);
  out.json["certification"] = {{"c1_hat", cert.c1_hat},
                               {"c2_hat", cert.c2_hat},
                               {"measure_error", cert.measure_error},
                               {"violations", cert.violations.size()},
                               {"passed", cert.passed}};
  out.json["nodes"] = nodes_to_json(nodes)["points"];
  out.csv = {{"csv", certification_csv(cert)}};
  out.exit_code = cert.passed ? 0 : 2;
  out.summary = "partition " + m.tag() + " N=" + std::to_string(N) + " c1=" + fmt(cert.c1_hat) +
                " c2=" + fmt(cert.c2_hat) + (cert.passed ? " certified" : " NOT certified");
  return out;
}

Result run_mz(const Params& p) {
  const Manifold m = p.manifold();
  std::vector<MzRule> rules;
  for (const auto& r : split_list(p.str("rules"))) rules.push_back(mz_rule_from_string(r));
  const auto r = mz_survey(m, p.nums("L"), p.ints("N"), p.count("trials"), p.seed(), rules, p.count("ascent_steps"));
  const double max_spread = p.num("max_spread");
  Result out;
  nlohmann::json& j = out.json;
  j["manifold"] = r.manifold;
  j["trials"] = r.trials;
  j["C_hat"] = r.C_hat;
  j["C3_hat"] = r.C3_hat;
  j["C_spread"] = r.C_spread;
  j["C3_spread"] = r.C3_spread;
  j["center_below_corner"] = r.center_below_corner;
  j["max_spread"] = max_spread;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : r.cells) j["cells"].push_back({{"L", c.L}, {"N", c.N}, {"C_hat", c.C_hat}, {"C3_hat", c.C3_hat}});
  out.csv = {{"csv", mz_csv(r)}};
  const bool ok = r.C_spread <= max_spread && r.C3_spread <= max_spread;
  out.exit_code = ok ? 0 : 2;
  out.summary = "mz-survey " + m.tag() + " cells=" + std::to_string(r.cells.size()) + " C_spread=" + fmt(r.C_spread) +
                " C3_spread=" + fmt(r.C3_spread) + (ok ? " ok" : " SPREAD EXCEEDED");
  return out;
}

Result run_kernel(const Params& p) {
  const Manifold m = p.manifold();
  const Point x = p.point("x", m);
  const auto Ls = p.nums("L");
  if (Ls.empty()) throw UsageError("key 'L': empty list");
  const std::string mode = p.str("mode");
  Result out;
  std::ostringstream os;
  if (mode == "decay") {
    KernelSpec spec;
    spec.manifold = m;
    spec.cutoff = CutoffFunction::make(cutoff_kind_from_string(p.str("cutoff")), p.count("S"));
    spec.left_fields = p.ints("left");
    spec.right_fields = p.ints("right");
    const double min_exp = p.num("min_exponent");
    bool ok = true;
    double worst = std::numeric_limits<double>::infinity();
    os << "L,dist,value,bound,ratio\n";
    out.json["fits"] = nlohmann::json::array();
    for (double L : Ls) {
      spec.L = L;
      const auto rep = decay_profile(spec, x, decay_distance_grid(m, L, p.count("count")));
      for (const auto& r : rep.rows)
        os << fmt(r.L) << ',' << fmt(r.dist) << ',' << fmt(r.value) << ',' << fmt(r.bound) << ',' << fmt(r.ratio) << '\n';
      out.json["fits"].push_back({{"L", L},
                                  {"exponent", rep.exponent},
                                  {"C9_hat", rep.C9_hat},
                                  {"S", rep.S},
                                  {"K", rep.K},
                                  {"degenerate", rep.degenerate},
                                  {"points_fitted", rep.points_fitted},
                                  {"diagonal", localized_kernel(spec, x, x)}});
      worst = std::min(worst, rep.exponent);
      if (min_exp > 0 && (rep.degenerate || rep.exponent < min_exp)) ok = false;
    }
    out.json["min_exponent"] = min_exp;
    out.exit_code = ok ? 0 : 2;
    out.summary = "kernel-decay " + m.tag() + " mode=decay min fitted exponent=" + fmt(worst) + (ok ? " ok" : " BELOW THRESHOLD");
  } else if (mode == "gradient") {
    const auto rep = gradient_kernel_bound(m, Ls, x, p.nums("scaled"), p.count("dyadic_S"));
    os << "L,dist,actual,model,ratio\n";
    for (const auto& r : rep.rows)
      os << fmt(r.L) << ',' << fmt(r.dist) << ',' << fmt(r.actual) << ',' << fmt(r.model) << ',' << fmt(r.ratio) << '\n';
    out.json = {{"kappa_hat", rep.kappa_hat},     {"kappa_per_L", rep.kappa_per_L}, {"kappa_spread", rep.kappa_spread},
                {"dominated", rep.dominated},     {"diagonal_ok", rep.diagonal_ok}, {"dyadic_ok", rep.dyadic_ok}};
    out.json["dyadic"] = nlohmann::json::array();
    for (const auto& d : rep.dyadic)
      out.json["dyadic"].push_back({{"L", d.L}, {"dist", d.dist}, {"lhs", d.lhs}, {"rhs", d.rhs}, {"holds", d.holds}});
    const bool ok = rep.dominated && rep.dyadic_ok && rep.diagonal_ok;
    out.exit_code = ok ? 0 : 2;
    out.summary = "kernel-decay " + m.tag() + " mode=gradient kappa_hat=" + fmt(rep.kappa_hat) +
                  " dyadic_points=" + std::to_string(rep.dyadic.size()) + (ok ? " ok" : " BOUND VIOLATED");
  } else {
    throw UsageError("key 'mode': expected decay or gradient, got '" + mode + "'");
  }
  out.json["mode"] = mode;
  out.csv = {{"csv", os.str()}};
  return out;
}

Result run_propagation(const Params& p) {
  const Manifold m = p.manifold();
  if (m.kind() != ManifoldKind::Torus) throw UsageError("key 'manifold': propagation runs on tori");
  const double r = p.num("r");
  const std::string shape = p.str("shape");
  BandLimitedMultiplier G = BandLimitedMultiplier::zero();
  if (shape == "poly_bump")
    G = BandLimitedMultiplier::poly_bump(r, p.count("q"));
  else if (shape == "fejer")
    G = BandLimitedMultiplier::fejer(r);
  else
    throw UsageError("key 'shape': expected poly_bump or fejer, got '" + shape + "'");
  const Point x = p.point("x", m);
  const int count = p.count("count");
  if (count < 1) throw UsageError("key 'count': must be >= 1");
  const double support = G.half_width();
  double outside = 0, inside = 0;
  std::ostringstream os;
  os << "dist,value,poisson\n";
  for (int i = 0; i <= count; ++i) {
    const double u = pi * i / count;
    Vec e = Vec::Zero(m.dim());
    e[0] = 1;
    const Point y = m.exp_map(x, e, u);
    const auto v = propagation_check(m, G, x, y);
    os << fmt(u) << ',' << fmt(v.value) << ',' << (v.has_poisson ? fmt(v.poisson) : std::string()) << '\n';
    if (u > support)
      outside = std::max(outside, std::abs(v.value));
    else
      inside = std::max(inside, std::abs(v.value));
  }
  const auto heat = propagation_heat_bound(r, logspace(1e-2, 1.0, p.count("t_count")), p.count("q"));
  const double tol = p.num("tol"), min_inside = p.num("min_inside");
  Result out;
  out.json = {{"shape", shape},           {"r", r},         {"support", support},
              {"max_outside", outside},   {"max_inside", inside}, {"tol", tol},
              {"min_inside", min_inside}};
  out.json["heat_bound"] = {{"coefficient_l1", heat.coefficient_l1},
                            {"max_w_on_vanishing", heat.max_w_on_vanishing},
                            {"all_hold", heat.all_hold}};
  out.csv = {{"csv", os.str()}};
  const bool ok = outside <= tol && inside > min_inside && heat.all_hold;
  out.exit_code = ok ? 0 : 2;
  out.summary = "propagation " + m.tag() + " max_outside=" + fmt(outside) + " max_inside=" + fmt(inside) +
                " heat_bound=" + (heat.all_hold ? "holds" : "FAILS") + (ok ? " ok" : " FAILED");
  return out;
}

Result run_heat(const Params& p) {
  const Manifold m = p.manifold();
  const Point x = p.point("x", m);
  const int l = p.count("left"), r = p.count("right");
  const auto ts = logspace(p.num("t_min"), p.num("t_max"), p.count("t_count"));
  const std::string mode = p.str("mode");
  const std::vector<int> lf(static_cast<std::size_t>(l), 0), rf(static_cast<std::size_t>(r), 0);
  Vec e = Vec::Zero(m.dim());
  e[0] = 1;
  Result out;
  std::ostringstream os;
  auto fit_json = [](const GreinerFit& f) {
    return nlohmann::json{{"c7_hat", f.c7_hat},
                          {"c8_hat", f.c8_hat},
                          {"t_exponent", f.t_exponent},
                          {"nominal_exponent", f.nominal_exponent},
                          {"residual_rms", f.residual_rms},
                          {"bound_holds", f.bound_holds},
                          {"points_used", f.points_used},
                          {"points_dropped", f.points_dropped}};
  };
  if (mode == "greiner" || mode == "parabolic") {
    GreinerFit f;
    os << "t,dist,value\n";
    if (mode == "greiner") {
      const int n = p.count("pairs");
      if (n < 2) throw UsageError("key 'pairs': must be >= 2");
      std::vector<PointPair> pairs;
      for (int i = 0; i < n; ++i) pairs.push_back({x, m.canonical(m.exp_map(x, e, pi * i / (n - 1)))});
      f = greiner_fit(m, l, r, ts, pairs);
      for (double t : ts)
        for (const auto& pr : pairs)
          os << fmt(t) << ',' << fmt(m.distance(pr.x, pr.y)) << ',' << fmt(heat_sum(m, t, pr.x, pr.y, lf, rf).value) << '\n';
    } else {
      const auto s_grid = p.nums("s_grid");
      f = greiner_fit_parabolic(m, l, r, ts, x, s_grid);
      for (double t : ts)
        for (double s : s_grid) {
          const Point y = m.canonical(m.exp_map(x, e, s * std::sqrt(t)));
          os << fmt(t) << ',' << fmt(s * std::sqrt(t)) << ',' << fmt(heat_sum(m, t, x, y, lf, rf).value) << '\n';
        }
    }
    out.json = fit_json(f);
    out.exit_code = f.bound_holds ? 0 : 2;
    out.summary = "heat-fit " + m.tag() + " mode=" + mode + " c8_hat=" + fmt(f.c8_hat) + " t_exponent=" +
                  fmt(f.t_exponent) + (f.bound_holds ? " bound holds" : " BOUND FAILS");
  } else if (mode == "power_law") {
    const auto f = diagonal_power_law(m, l, r, ts, x);
    os << "t,envelope\n";
    for (const auto& [t, v] : f.samples) os << fmt(t) << ',' << fmt(v) << '\n';
    out.json = {{"exponent", f.exponent}, {"nominal", f.nominal}, {"prefactor", f.prefactor}};
    out.summary = "heat-fit " + m.tag() + " mode=power_law exponent=" + fmt(f.exponent) + " nominal=" + fmt(f.nominal);
  } else {
    throw UsageError("key 'mode': expected greiner, parabolic or power_law, got '" + mode + "'");
  }
  out.json["mode"] = mode;
  out.json["left"] = l;
  out.json["right"] = r;
  out.csv = {{"csv", os.str()}};
  return out;
}

Result run_flow(const Params& p) {
  const Manifold m = p.manifold();
  const auto r = boundary_positivity_check(m, p.num("L"), static_cast<int>(p.integer("N")), p.count("trials"),
                                           p.seed(), p.num("eps"), p.num("C_hat"));
  Result out;
  out.json = positivity_to_json(r);
  out.csv = {{"csv", positivity_csv(r)}};
  // Below the gate a negative functional is the expected regime, not a failure.
  const bool ok = r.ascent_ok && (r.positive || !r.gate_ok);
  out.exit_code = ok ? 0 : 2;
  out.summary = "flow-check " + m.tag() + " L=" + fmt(r.L) + " N=" + std::to_string(r.N) + " T=" + fmt(r.T) +
                " min_functional=" + fmt(r.min_functional) + (r.gate_ok ? "" : " below gate") +
                (r.ascent_ok ? "" : " ASCENT VIOLATED") + (ok ? " ok" : " FAILED");
  return out;
}

Result run_scaling(const Params& p) {
  const Manifold m = p.manifold();
  const auto r = scaling_experiment(m, p.nums("L"), p.num("tol"), p.seed(), p.count("restarts"), p.count("budget"),
                                    p.count("N_max"));
  Result out;
  out.json = scaling_to_json(r);
  out.csv = {{"csv", scaling_csv(r)}};
  bool found = true;
  for (const auto& row : r.rows) found = found && row.N_star > 0;
  out.exit_code = found ? 0 : 2;
  out.summary = "scaling " + m.tag() + " rows=" + std::to_string(r.rows.size()) + " slope=" + fmt(r.slope) +
                (found ? "" : " some L reached N_max");
  return out;
}

Result run_wce(const Params& p) {
  const NodeSet nodes = p.nodes("nodes");
  const auto r = worst_case_error(nodes, p.num("alpha"), p.num("lambda_max"));
  Result out;
  out.json = wce_to_json(r);
  out.json["manifold"] = nodes.manifold.tag();
  out.json["N"] = nodes.size();
  out.csv = {{"csv", "alpha,lambda_max,band_sq,tail_expected,tail_bound,wce,wce_upper\n" + fmt(r.alpha) + ',' +
                         fmt(r.lambda_max) + ',' + fmt(r.band_sq) + ',' + fmt(r.tail_expected) + ',' +
                         fmt(r.tail_bound) + ',' + fmt(r.wce) + ',' + fmt(r.wce_upper) + '\n'}};
  out.summary = "wce " + nodes.manifold.tag() + " N=" + std::to_string(nodes.size()) + " alpha=" + fmt(r.alpha) +
                " wce=" + fmt(r.wce) + " wce_upper=" + fmt(r.wce_upper);
  return out;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(no) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw UsageError("config line " + std::to_string(no) + ": empty key");
    if (key.find_first_of(" \t") != std::string::npos) throw UsageError("config key '" + key + "' contains blanks");
    if (key == "subcommand") {
      if (!cfg.subcommand.empty()) throw UsageError("config key 'subcommand' given twice");
      cfg.subcommand = value;
      continue;
    }
    if (!cfg.values.emplace(key, value).second) throw UsageError("config key '" + key + "' given twice");
  }
  return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
  std::string s;
  if (!cfg.subcommand.empty()) s += "subcommand = " + cfg.subcommand + "\n";
  for (const auto& [k, v] : cfg.values) {
    if (v.find('\n') != std::string::npos) throw UsageError("config key '" + k + "': value spans lines");
    s += k + " = " + v + "\n";
  }
  return s;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str());
}

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = build_specs();
  return specs;
}

const CommandSpec& command_spec(const std::string& name) {
  for (const auto& s : command_specs())
    if (s.name == name) return s;
  throw UsageError("unknown subcommand '" + name + "'");
}

void validate_config(const RunConfig& cfg) {
  if (cfg.subcommand.empty()) throw UsageError("no subcommand given");
  const auto& spec = command_spec(cfg.subcommand);
  for (const auto& [k, v] : cfg.values) {
    const bool known = std::any_of(spec.keys.begin(), spec.keys.end(), [&](const KeySpec& s) { return s.name == k; });
    if (!known) throw UsageError("unknown key '" + k + "' for " + spec.name);
  }
  for (const auto& k : spec.keys)
    if (k.required && !cfg.has(k.name)) throw UsageError("missing required key '" + k.name + "' for " + spec.name);
  if (seed_required(cfg) && !cfg.has("seed")) throw UsageError("key 'seed' is required for " + spec.name);
}

CommandOutput run_command(const RunConfig& cfg) {
  validate_config(cfg);
  const Params p(cfg);
  const auto formats = p.formats();
  const std::string& name = cfg.subcommand;
  Result r;
  if (name == "design")
    r = run_design(p);
  else if (name == "certify")
    r = run_certify(p);
  else if (name == "partition")
    r = run_partition(p);
  else if (name == "mz-survey")
    r = run_mz(p);
  else if (name == "kernel-decay")
    r = run_kernel(p);
  else if (name == "propagation")
    r = run_propagation(p);
  else if (name == "heat-fit")
    r = run_heat(p);
  else if (name == "flow-check")
    r = run_flow(p);
  else if (name == "scaling")
    r = run_scaling(p);
  else
    r = run_wce(p);

  CommandOutput out;
  out.exit_code = r.exit_code;
  out.summary = r.summary;
  const std::string stem = name + "-" + p.seed_name();
  auto wants = [&](const std::string& f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  if (wants("json")) out.files.push_back({stem + ".json", dump(r.json)});
  if (wants("csv"))
    for (const auto& [ext, content] : r.csv) out.files.push_back({stem + "." + ext, content});
  out.files.push_back({stem + ".cfg", serialize_config(cfg)});
  return out;
}

std::vector<std::string> emit(const CommandOutput& out, const RunConfig& cfg) {
  namespace fs = std::filesystem;
  const auto it = cfg.values.find("out_dir");
  const fs::path dir = it == cfg.values.end() ? fs::path(".") : fs::path(it->second);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("key 'out_dir': cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::string> written;
  for (const auto& f : out.files) {
    const fs::path target = dir / f.name;
    const fs::path tmp = dir / ("." + f.name + ".tmp" + std::to_string(::getpid()));
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      os << f.content;
      os.close();
      if (!os) throw UsageError("cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) {
      fs::remove(tmp);
      throw UsageError("cannot rename onto '" + target.string() + "': " + ec.message());
    }
    written.push_back(target.string());
  }
  return written;
}

}  // namespace designforge
