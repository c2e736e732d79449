#include <cstdio>
#include <sstream>

#include "designforge/errors.hpp"
#include "designforge/io.hpp"

namespace designforge {

NodeSet make_node_set(const Manifold& m, std::vector<Point> points) {
  if (points.empty()) throw InputError("node set must contain at least one point");
  for (auto& p : points) {
    m.validate(p);
    p = m.canonical(p);
  }
  return NodeSet{m, std::move(points)};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json point_to_json(const Point& p) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < p.size(); ++i) a.push_back(p[i]);
  return a;
}

Point point_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || j.size() > 3) throw InputError("point must be an array of 1 to 3 numbers");
  Point p(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InputError("point coordinates must be numbers");
    p[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return p;
}

nlohmann::json nodes_to_json(const NodeSet& nodes) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : nodes.points) pts.push_back(point_to_json(p));
  return {{"manifold", nodes.manifold.tag()}, {"points", pts}};
}

NodeSet nodes_from_json(const nlohmann::json& j, const std::optional<Manifold>& fallback) {
  const nlohmann::json* pts = nullptr;
  std::optional<Manifold> m = fallback;
  if (j.is_object()) {
    if (j.contains("manifold")) {
      if (!j["manifold"].is_string()) throw InputError("'manifold' must be a string");
      m = Manifold::from_tag(j["manifold"].get<std::string>());
    }
    if (!j.contains("points")) throw InputError("node document lacks 'points'");
    pts = &j["points"];
  } else {
    pts = &j;
  }
  if (!m) throw InputError("node document does not name a manifold");
  if (!pts->is_array()) throw InputError("'points' must be an array");
  std::vector<Point> out;
  for (const auto& row : *pts) out.push_back(point_from_json(row));
  return make_node_set(*m, std::move(out));
}

NodeSet nodes_from_csv(const Manifold& m, std::string_view text) {
  std::vector<Point> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::vector<double> vals;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InputError("malformed CSV number '" + cell + "'");
      }
    }
    if (vals.empty() || vals.size() > 3) throw InputError("CSV row must hold 1 to 3 coordinates");
    Point p(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) p[static_cast<Eigen::Index>(i)] = vals[i];
    out.push_back(p);
  }
  return make_node_set(m, std::move(out));
}

std::string nodes_to_csv(const NodeSet& nodes) {
  std::string s;
  for (const auto& p : nodes.points) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i) s += ',';
      s += format_double(p[i]);
    }
    s += '\n';
  }
  return s;
}

nlohmann::json polynomial_to_json(const DiffusionPolynomial& p) {
  nlohmann::json labels = nlohmann::json::array();
  const auto& m = p.manifold();
  for (const auto& pair : p.basis().pairs()) {
    nlohmann::json l = nlohmann::json::array();
    const int n = m.kind() == ManifoldKind::Sphere2 ? 2 : m.dim();
    for (int i = 0; i < n; ++i) l.push_back(pair.label.freq[i]);
    l.push_back(std::string(1, pair.label.tag));
    labels.push_back(l);
  }
  std::vector<double> c(p.coefficients().data(), p.coefficients().data() + p.coefficients().size());
  return {{"manifold", m.tag()}, {"L", p.bandwidth()}, {"labels", labels}, {"coefficients", c}};
}

DiffusionPolynomial polynomial_from_json(const nlohmann::json& j) {
  try {
    const auto m = Manifold::from_tag(j.at("manifold").get<std::string>());
    const double L = j.at("L").get<double>();
    auto basis = make_basis(m, L);
    const auto& labels = j.at("labels");
    const auto& coeffs = j.at("coefficients");
    if (labels.size() != coeffs.size()) throw InputError("labels and coefficients differ in length");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis->size()));
    const int n = m.kind() == ManifoldKind::Sphere2 ? 2 : m.dim();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto& l = labels[i];
      if (!l.is_array() || l.size() != static_cast<std::size_t>(n + 1)) throw InputError("malformed label");
      EigenLabel lab;
      for (int a = 0; a < n; ++a) lab.freq[a] = l[a].get<int>();
      const auto tag = l[n].get<std::string>();
      if (tag != "c" && tag != "s") throw InputError("label tag must be 'c' or 's'");
      lab.tag = tag[0];
      c[static_cast<Eigen::Index>(basis->index_of(lab))] = coeffs[i].get<double>();
    }
    return DiffusionPolynomial(basis, c);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed polynomial document: ") + e.what());
  }
}

}  // namespace designforge
