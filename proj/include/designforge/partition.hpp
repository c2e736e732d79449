#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <vector>

#include "designforge/node_set.hpp"

namespace designforge {

// One cell. Torus cells are coordinate bricks [lo, hi]; sphere cells are
// [theta lo, theta hi] x [phi lo, phi lo + width] with phi taken mod 2 pi.
struct Region {
  Point center;
  double measure = 0.0;
  double outer_radius = 0.0;  // cell inside the closed ball of this radius about center
  Point inner_center;
  double inner_radius = 0.0;  // ball of this radius about inner_center inside the cell
  std::array<double, 3> lo{0, 0, 0};
  std::array<double, 3> hi{0, 0, 0};
  int collar = -1;  // sphere: collar index, 0 and last being the caps
};

struct Collar {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  int cells = 0;
  double phi_offset = 0.0;
  std::size_t first_region = 0;
};

class Partition {
 public:
  Partition(Manifold m, std::vector<Region> regions, std::vector<Collar> collars);

  const Manifold& manifold() const { return m_; }
  std::size_t size() const { return regions_.size(); }
  const std::vector<Region>& regions() const { return regions_; }
  // Write access, used to build negative controls.
  std::vector<Region>& mutable_regions() { return regions_; }
  const std::vector<Collar>& collars() const { return collars_; }

  // min inner radius * N^{1/d} and max outer radius * N^{1/d}.
  double c1() const;
  double c2() const;

  // Closed-cell membership, with 1e-12 slack on the cell bounds.
  bool contains(std::size_t j, const Point& x) const;
  Point sample(std::size_t j, Rng& rng) const;

 private:
  Manifold m_;
  std::vector<Region> regions_;
  std::vector<Collar> collars_;
};

// Torus: recursive slabs with widths proportional to their cell counts.
// Sphere: two polar caps and collars, cells apportioned by largest remainder.
Partition equal_area_partition(const Manifold& m, int N);

// Lowest index whose closed cell contains x.
std::size_t locate(const Partition& p, const Point& x);

struct CertificationRow {
  std::size_t region = 0;
  double measure = 0.0;
  double inner_radius = 0.0;
  double outer_radius = 0.0;
  double max_sampled_distance = 0.0;
  bool ok = true;
};

struct Violation {
  std::size_t region = 0;
  std::string kind;  // "outer" or "inner"
  Point witness;
  double distance = 0.0;
  double radius = 0.0;
};

struct CertificationReport {
  double c1_hat = 0.0;
  double c2_hat = 0.0;
  double measure_error = 0.0;  // max |measure - 1/N|
  std::vector<CertificationRow> rows;
  std::vector<Violation> violations;
  bool passed = false;
};

// Samples each cell uniformly and along its boundary and checks the points lie
// in the outer ball; samples each inner ball and checks it lies in the cell.
CertificationReport certify(const Partition& p, int samples_per_region, std::uint64_t seed);

enum class NodeRule { Center, Random, InnerCenter };
NodeRule node_rule_from_string(const std::string& name);

NodeSet pick_nodes(const Partition& p, NodeRule rule, std::uint64_t seed = 0);

// Outer constant after adding extras[j] to cell j: max_j max(outer_j, d(center_j, extras[j])) * N^{1/d}.
double augmented_outer_constant(const Partition& p, const std::vector<Point>& extras);

nlohmann::json partition_to_json(const Partition& p);
std::string certification_csv(const CertificationReport& r);

}  // namespace designforge
