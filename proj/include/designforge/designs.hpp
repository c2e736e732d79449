#pragma once

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "designforge/node_set.hpp"
#include "designforge/spectral.hpp"

namespace designforge {

// Defect of a node set at bandwidth L: the L2 norm of (1/N) sum_j G_{x_j},
// G_x the representer of point evaluation on Pi_L^0 (sharp band).
struct DesignReport {
  NodeSet nodes;
  double L = 0.0;
  double defect = 0.0;       // from the Weyl residuals
  double gram_defect = 0.0;  // sqrt of (1/N^2) sum_ij K_L(x_i, x_j), K_L the zonal projection kernel
  double tolerance = 1e-10;
  bool certified = false;    // defect <= tolerance
  std::vector<std::string> labels;  // one per eigenpair with 0 < lambda <= L
  std::vector<double> residuals;    // (1/N) sum_j phi_k(x_j)
};

DesignReport design_defect(const NodeSet& nodes, double L, double tolerance = 1e-10);

// sum_{0 < lambda_k <= L} phi_k(x) phi_k(y) from the addition formulas:
// sum 2 cos(n.(x-y)) on the torus, sum (2l+1) P_l(cos angle) on the sphere.
double projection_kernel(const Manifold& m, double L, const Point& x, const Point& y);

// dim Pi_L^0.
std::size_t band_dimension(const Manifold& m, double L);

enum class DesignInit { PartitionCenters, Random, Given };
enum class DesignMethod { GradientDescent, LevenbergMarquardt };
DesignInit design_init_from_string(const std::string& name);
DesignMethod design_method_from_string(const std::string& name);
std::string to_string(DesignInit init);
std::string to_string(DesignMethod method);

struct DesignOptions {
  DesignInit init = DesignInit::Random;
  std::uint64_t seed = 0;
  std::optional<NodeSet> given;  // required for DesignInit::Given
  double tol = 1e-10;
  int budget = 1000;  // iterations
  DesignMethod method = DesignMethod::GradientDescent;
  // Stop early when the defect has not dropped by 0.1% over this many iterations.
  int stall_window = 200;
  // Rounds of flow polish after the optimizer: nodes flow up -(residual
  // polynomial) for a short time; a round is kept only if the defect drops.
  int flow_polish = 0;
};

struct TraceRow {
  int iter = 0;
  double defect = 0.0;
  double step = 0.0;
};

struct ConstructionResult {
  DesignReport report;  // best iterate
  std::vector<TraceRow> trace;
  int iterations = 0;
  int evaluations = 0;
  bool success = false;
  bool budget_exhausted = false;
  bool stalled = false;
  std::vector<std::string> warnings;
};

// Minimizes defect^2 over node positions. The trace is nonincreasing.
ConstructionResult construct_design(const Manifold& m, double L, int N, const DesignOptions& options);

struct ScalingRow {
  double L = 0.0;
  int N_star = 0;      // smallest N that succeeded; 0 if none up to N_max
  int attempts = 0;    // construct_design runs spent on this L
  double defect = 0.0; // defect reached at N_star
};

struct ScalingReport {
  std::string manifold;
  double tol = 0.0;
  int restarts = 0;
  std::vector<ScalingRow> rows;
  double slope = 0.0;  // least squares of log N_star on log L
  double intercept = 0.0;
};

// For each L, doubling then bisection over N. A given N counts as achievable
// when partition centers or one of `restarts` random starts reach tol.
ScalingReport scaling_experiment(const Manifold& m, const std::vector<double>& L_grid, double tol,
                                 std::uint64_t seed, int restarts = 3, int budget = 2000, int N_max = 4096);

// Worst-case integration error over the unit ball of the Sobolev space with
// ||f||^2 = sum (1 + lambda_k^2)^alpha |c_k|^2.
struct WceReport {
  double alpha = 0.0;
  double lambda_max = 0.0;
  double band_sq = 0.0;        // sum_{0 < lambda <= lambda_max} (1 + lambda^2)^-alpha r_k^2
  double tail_expected = 0.0;  // the tail for i.i.d. uniform nodes: (1/N) sum_{lambda > lambda_max} (1 + lambda^2)^-alpha
  double tail_bound = 0.0;     // rigorous: every tail residual at its maximum
  double wce = 0.0;            // sqrt(band_sq + tail_expected)
  double wce_upper = 0.0;      // sqrt(band_sq + tail_bound)
};

// alpha <= d/2 throws InputError.
WceReport worst_case_error(const NodeSet& nodes, double alpha, double lambda_max);

nlohmann::json design_report_to_json(const DesignReport& r);
nlohmann::json construction_to_json(const ConstructionResult& r);
std::string trace_csv(const std::vector<TraceRow>& trace);
nlohmann::json scaling_to_json(const ScalingReport& r);
std::string scaling_csv(const ScalingReport& r);
nlohmann::json wce_to_json(const WceReport& r);

}  // namespace designforge
