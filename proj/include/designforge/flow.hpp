#pragma once

#include <cstdint>
#include <json.hpp>
#include <string>
#include <vector>

#include "designforge/node_set.hpp"
#include "designforge/spectral.hpp"

namespace designforge {

// Nodes moved along U(P)(y) = grad P(y) / v_eps(|grad P(y)|) for time T.
struct FlowTrace {
  NodeSet initial;
  NodeSet final;
  double eps = 0.0;
  double T = 0.0;
  double step = 0.0;  // base step; halved locally when P would decrease
  int steps = 0;
  int halvings = 0;   // total over all nodes
  std::vector<double> sample_times;
  std::vector<std::vector<Point>> samples;  // samples[s][j] = y_j(sample_times[s])
  double min_increment = 0.0;  // smallest P(y_{n+1}) - P(y_n) over accepted steps
  double max_displacement_ratio = 0.0;  // max_j d(x_j, y_j(T)) / T, at most 1
  bool ascent_ok = true;
};

// Classical 4-stage scheme with exp-map retraction, h = T / ceil(T / min(T/32, 0.1 N^{-1/d})).
// A step that lowers P by more than 1e-12 is retried at half size; after 40
// halvings NumericalError is thrown.
FlowTrace flow_nodes(const DiffusionPolynomial& P, const NodeSet& start, double eps, double T);

struct PositivityTrial {
  int trial = 0;
  double functional_plus = 0.0;   // (1/N) sum P(x_j(P))
  double functional_minus = 0.0;  // same with -P
  bool ascent_ok = true;
};

struct PositivityReport {
  std::string manifold;
  double L = 0.0;
  int N = 0;
  double eps = 0.0;
  double c2 = 0.0;
  double T = 0.0;      // 12 c2 N^{-1/d}
  double C_hat = 0.0;  // gate N >= C_hat L^d
  bool gate_ok = false;
  std::vector<PositivityTrial> trials;
  double min_functional = 0.0;
  bool ascent_ok = true;
  bool positive = false;  // min_functional > 0
};

// Default gate constant: 4 on tori, 8 on the sphere.
double default_positivity_gate(const Manifold& m);

// Random P in Pi_L^0 scaled to int |grad P| = 1, flowed from partition centers
// for T = 12 c2 N^{-1/d}, both P and -P. Below the gate the run still happens
// and gate_ok is false.
PositivityReport boundary_positivity_check(const Manifold& m, double L, int N, int trials, std::uint64_t seed,
                                           double eps = 0.1, double C_hat = 0.0);

nlohmann::json flow_to_json(const FlowTrace& t);
nlohmann::json positivity_to_json(const PositivityReport& r);
std::string positivity_csv(const PositivityReport& r);

}  // namespace designforge
