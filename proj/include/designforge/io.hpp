#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "designforge/node_set.hpp"
#include "designforge/spectral.hpp"

namespace designforge {

// 17 significant digits, so values round-trip exactly.
std::string format_double(double v);

nlohmann::json point_to_json(const Point& p);
Point point_from_json(const nlohmann::json& j);

// {"manifold": tag, "points": [[...], ...]}. A bare array is accepted when
// `fallback` names the manifold.
nlohmann::json nodes_to_json(const NodeSet& nodes);
NodeSet nodes_from_json(const nlohmann::json& j, const std::optional<Manifold>& fallback = std::nullopt);

// {"manifold", "L", "labels", "coefficients"}.
nlohmann::json polynomial_to_json(const DiffusionPolynomial& p);
DiffusionPolynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace designforge
