#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "designforge/manifold.hpp"

namespace designforge {

struct NodeSet {
  Manifold manifold = Manifold::torus(1);
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
};

// Throws InputError on an empty set or invalid coordinates; returns canonical coordinates.
NodeSet make_node_set(const Manifold& m, std::vector<Point> points);

// One point per row, comma separated; sphere rows hold (theta, phi) or (x, y, z).
NodeSet nodes_from_csv(const Manifold& m, std::string_view text);
std::string nodes_to_csv(const NodeSet& nodes);

}  // namespace designforge
