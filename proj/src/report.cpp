#include <sstream>

#include "designforge/designs.hpp"
#include "designforge/flow.hpp"
#include "designforge/io.hpp"

namespace designforge {

nlohmann::json design_report_to_json(const DesignReport& r) {
  nlohmann::json j;
  j["manifold"] = r.nodes.manifold.tag();
  j["L"] = r.L;
  j["N"] = r.nodes.size();
  j["defect"] = r.defect;
  j["gram_defect"] = r.gram_defect;
  j["tolerance"] = r.tolerance;
  j["certified"] = r.certified;
  j["nodes"] = nodes_to_json(r.nodes)["points"];
  auto& res = j["residuals"] = nlohmann::json::array();
  for (std::size_t k = 0; k < r.labels.size(); ++k) res.push_back({{"label", r.labels[k]}, {"value", r.residuals[k]}});
  return j;
}

nlohmann::json construction_to_json(const ConstructionResult& r) {
  nlohmann::json j = design_report_to_json(r.report);
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["success"] = r.success;
  j["budget_exhausted"] = r.budget_exhausted;
  j["stalled"] = r.stalled;
  j["warnings"] = r.warnings;
  return j;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "iter,defect,step\n";
  for (const auto& t : trace) os << t.iter << ',' << format_double(t.defect) << ',' << format_double(t.step) << '\n';
  return os.str();
}

nlohmann::json scaling_to_json(const ScalingReport& r) {
  nlohmann::json j;
  j["manifold"] = r.manifold;
  j["tol"] = r.tol;
  j["restarts"] = r.restarts;
  j["slope"] = r.slope;
  j["intercept"] = r.intercept;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"L", row.L}, {"N_star", row.N_star}, {"attempts", row.attempts}, {"defect", row.defect}});
  return j;
}

std::string scaling_csv(const ScalingReport& r) {
  std::ostringstream os;
  os << "L,N_star,attempts,defect\n";
  for (const auto& row : r.rows)
    os << format_double(row.L) << ',' << row.N_star << ',' << row.attempts << ',' << format_double(row.defect) << '\n';
  return os.str();
}

nlohmann::json wce_to_json(const WceReport& r) {
  return {{"alpha", r.alpha},         {"lambda_max", r.lambda_max}, {"band_sq", r.band_sq},
          {"tail_expected", r.tail_expected}, {"tail_bound", r.tail_bound}, {"wce", r.wce},
          {"wce_upper", r.wce_upper}};
}

nlohmann::json flow_to_json(const FlowTrace& t) {
  nlohmann::json j;
  j["manifold"] = t.initial.manifold.tag();
  j["eps"] = t.eps;
  j["T"] = t.T;
  j["step"] = t.step;
  j["steps"] = t.steps;
  j["halvings"] = t.halvings;
  j["min_increment"] = t.min_increment;
  j["max_displacement_ratio"] = t.max_displacement_ratio;
  j["ascent_ok"] = t.ascent_ok;
  j["initial"] = nodes_to_json(t.initial)["points"];
  j["final"] = nodes_to_json(t.final)["points"];
  return j;
}

nlohmann::json positivity_to_json(const PositivityReport& r) {
  nlohmann::json j;
  j["manifold"] = r.manifold;
  j["L"] = r.L;
  j["N"] = r.N;
  j["eps"] = r.eps;
  j["c2"] = r.c2;
  j["T"] = r.T;
  j["C_hat"] = r.C_hat;
  j["gate_ok"] = r.gate_ok;
  j["min_functional"] = r.min_functional;
  j["ascent_ok"] = r.ascent_ok;
  j["positive"] = r.positive;
  auto& trials = j["trials"] = nlohmann::json::array();
  for (const auto& t : r.trials)
    trials.push_back({{"trial", t.trial},
                      {"functional_plus", t.functional_plus},
                      {"functional_minus", t.functional_minus},
                      {"ascent_ok", t.ascent_ok}});
  return j;
}

std::string positivity_csv(const PositivityReport& r) {
  std::ostringstream os;
  os << "trial,functional_plus,functional_minus,ascent_ok\n";
  for (const auto& t : r.trials)
    os << t.trial << ',' << format_double(t.functional_plus) << ',' << format_double(t.functional_minus) << ','
       << (t.ascent_ok ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace designforge
