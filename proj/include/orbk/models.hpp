#pragma once

// Catalog of orbifold models: footballs CP^1 / mu_n, weighted projective
// lines P(d0, d1) and local cones C^n / G.
//
// Every catalog chart is rotationally symmetric. A chart is described by
// its uniformizing coordinate w and the chart radial quantity
// r = |w|^(2 / radial_exponent); the fiber metric of the ample generator in
// the chart frame is a(w) = 1 / (1 + r) and the Kahler potential is
// log(1 + r). For the football, r = |Z1|^2 / |Z0|^2 on U0.

#include "orbk/error.hpp"
#include "orbk/groups.hpp"
#include "orbk/numeric.hpp"
#include "orbk/rational.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orbk {

enum class ModelKind { football, weighted_projective_line, local_cone };

struct Chart {
  std::string id;
  std::string coordinates;
  int dim = 1;
  int uniformizing_order = 1;
  int radial_exponent = 1;
  /// Homogeneous coordinate whose power is the chart exponent of a section;
  /// -1 for charts without global sections.
  int coordinate_index = -1;
  /// Points with r below this value are closer to the chart origin than to
  /// any other singular point.
  double isolation_radius = std::numeric_limits<double>::infinity();

  double radial(std::span<const cplx> w) const {
    double rho = 0.0;
    for (const auto& c : w) rho += std::norm(c);
    return radial_exponent == 1 ? rho : std::pow(rho, 1.0 / radial_exponent);
  }
  double radial(cplx w) const { return radial(std::span<const cplx>(&w, 1)); }

  double metric_potential(std::span<const cplx> w) const { return 1.0 / (1.0 + radial(w)); }
  double metric_potential(cplx w) const { return metric_potential(std::span<const cplx>(&w, 1)); }

  double kahler_potential(std::span<const cplx> w) const { return std::log1p(radial(w)); }
  double kahler_potential(cplx w) const { return kahler_potential(std::span<const cplx>(&w, 1)); }

  /// Density of dV = omega^n / n! against Lebesgue measure on the
  /// uniformizing chart.
  double volume_density(std::span<const cplx> w) const {
    double rho = 0.0;
    for (const auto& c : w) rho += std::norm(c);
    if (dim > 1) return std::pow(std::numbers::inv_pi, dim) / std::pow(1.0 + rho, dim + 1);
    const double p = 1.0 / radial_exponent;
    const double rp = std::pow(rho, p);
    return std::numbers::inv_pi * p * p * std::pow(rho, p - 1.0) / ((1.0 + rp) * (1.0 + rp));
  }
  double volume_density(cplx w) const { return volume_density(std::span<const cplx>(&w, 1)); }

  /// Curves: the quotient volume measure in the variable r after angular
  /// integration, so int_0^inf radial_measure(r) dr is the total volume.
  double radial_measure(double r) const {
    return 1.0 / (static_cast<double>(uniformizing_order) * radial_exponent * (1.0 + r) * (1.0 + r));
  }

  /// Power of r carried by |w^e|^2.
  int radial_degree(int chart_exponent) const { return chart_exponent * radial_exponent; }

  /// log of a(w)^m |w^e|^2 as a function of r.
  double log_monomial_norm(int chart_exponent, int m, double r) const {
    const int q = radial_degree(chart_exponent);
    if (r == 0.0) {
      return q == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    return q * std::log(r) - m * std::log1p(r);
  }
};

struct SingularPoint {
  std::string label;
  std::string chart_id;
  std::vector<cplx> coordinates;
  GroupAction action;
  /// Per group element: rotation number of its action on the fiber of the
  /// ample generator, normalized so the fixed-point contribution of the m-th
  /// power is e^{2 pi i m fiber} / det(I - g|T).
  std::vector<Phase> fiber_weights;

  Phase fiber_rotation(int element, int power) const {
    return fiber_weights.at(static_cast<std::size_t>(element)).scaled(power);
  }
};

struct OrbifoldModel {
  ModelKind kind = ModelKind::football;
  std::string name;
  std::vector<int> parameters;
  int dim = 1;
  int bundle_step = 1;
  std::vector<Chart> charts;
  std::vector<SingularPoint> singular_points;
  /// Sections of the m-th power of the generator are the monomials in the
  /// homogeneous coordinates of degree m fixed by this action.
  std::optional<GroupAction> homogeneous_action;
  DegreeRule degree_rule;
  Rational orbifold_degree{0};
  Rational orbifold_euler{0};

  bool is_curve() const { return kind != ModelKind::local_cone; }
  bool has_sections() const { return homogeneous_action.has_value(); }

  const Chart& chart(std::string_view id) const {
    for (const auto& c : charts) {
      if (c.id == id) return c;
    }
    throw InvalidArgument("unknown chart '" + std::string(id) + "'");
  }

  const SingularPoint* singular_point_in(std::string_view chart_id) const {
    for (const auto& p : singular_points) {
      if (p.chart_id == chart_id) return &p;
    }
    return nullptr;
  }

  int football_order() const {
    if (kind != ModelKind::football) throw Unsupported("model is not a football");
    return parameters.at(0);
  }
};

using ModelPtr = std::shared_ptr<const OrbifoldModel>;

struct ModelSpec {
  ModelKind kind = ModelKind::football;
  int n = 1;
  int d0 = 1;
  int d1 = 1;
  std::optional<GroupAction> group;

  static ModelSpec football(int n) { return {ModelKind::football, n, 1, 1, {}}; }
  static ModelSpec weighted_line(int d0, int d1) {
    return {ModelKind::weighted_projective_line, 1, d0, d1, {}};
  }
  static ModelSpec cone(GroupAction g) { return {ModelKind::local_cone, 1, 1, 1, std::move(g)}; }
};

namespace detail {

/// Builds the per-element fiber phases of a cyclic point from integer
/// generator weights by enumerating the augmented action on T + fiber.
inline std::vector<Phase> fiber_phases(const GroupAction& action, int fiber_weight) {
  std::vector<CyclicGenerator> gens = action.generators();
  for (auto& g : gens) g.weights.push_back(fiber_weight);
  const GroupAction augmented = GroupAction::product(action.dim() + 1, gens);
  std::vector<Phase> out(static_cast<std::size_t>(action.order()));
  std::vector<bool> seen(out.size(), false);
  for (const auto& e : augmented.elements()) {
    GroupAction::Element base(e.begin(), e.end() - 1);
    const auto i = static_cast<std::size_t>(action.index_of(base));
    if (seen[i] && out[i] != e.back()) throw InvalidArgument("fiber character is not well defined");
    out[i] = e.back();
    seen[i] = true;
  }
  return out;
}

inline SingularPoint cyclic_point(std::string label, std::string chart_id, int order,
                                  int tangent_weight, int fiber_weight) {
  SingularPoint p;
  p.label = std::move(label);
  p.chart_id = std::move(chart_id);
  p.coordinates = {cplx{0.0, 0.0}};
  p.action = GroupAction::cyclic(order, {tangent_weight});
  p.fiber_weights = fiber_phases(p.action, fiber_weight);
  return p;
}

inline Chart curve_chart(std::string id, std::string coords, int order, int radial_exponent,
                         int coordinate_index, double isolation_radius) {
  Chart c;
  c.id = std::move(id);
  c.coordinates = std::move(coords);
  c.dim = 1;
  c.uniformizing_order = order;
  c.radial_exponent = radial_exponent;
  c.coordinate_index = coordinate_index;
  c.isolation_radius = isolation_radius;
  return c;
}

}  // namespace detail

inline ModelPtr build_model(const ModelSpec& spec) {
  auto model = std::make_shared<OrbifoldModel>();
  model->kind = spec.kind;
  switch (spec.kind) {
    case ModelKind::football: {
      const int n = spec.n;
      if (n <= 0) throw InvalidArgument("football order n must be positive");
      model->name = "Football(" + std::to_string(n) + ")";
      model->parameters = {n};
      model->dim = 1;
      model->bundle_step = n;
      model->charts = {detail::curve_chart("U0", "z = Z1/Z0", n, 1, 1, 1.0),
                       detail::curve_chart("U1", "w = Z0/Z1", n, 1, 0, 1.0)};
      if (n > 1) {
        // On U0 the generator multiplies Z0 by e^{-2 pi i / n}, so the frame
        // Z0^m carries a fiber phase; on U1 the frame Z1^m is fixed.
        model->singular_points.push_back(detail::cyclic_point("[1,0]", "U0", n, 1, -1));
        model->singular_points.push_back(detail::cyclic_point("[0,1]", "U1", n, 1, 0));
      }
      model->homogeneous_action = GroupAction::cyclic(n, {1, 0});
      model->degree_rule = DegreeRule::plain();
      model->orbifold_degree = Rational(1, n);
      model->orbifold_euler = Rational(2, n);
      break;
    }
    case ModelKind::weighted_projective_line: {
      const int d0 = spec.d0;
      const int d1 = spec.d1;
      if (d0 <= 0 || d1 <= 0) throw InvalidArgument("weights must be positive");
      if (std::gcd(d0, d1) != 1) throw InvalidArgument("non-isolated or non-reduced weights");
      model->name = "WeightedProjLine(" + std::to_string(d0) + "," + std::to_string(d1) + ")";
      model->parameters = {d0, d1};
      model->dim = 1;
      model->bundle_step = 1;
      model->charts = {detail::curve_chart("U0", "u = Z1 (Z0 = 1)", d0, d1, 1, 1.0),
                       detail::curve_chart("U1", "w = Z0 (Z1 = 1)", d1, d0, 0, 1.0)};
      if (d0 > 1) {
        model->singular_points.push_back(detail::cyclic_point("[1,0]", "U0", d0, d1 % d0, -1));
      }
      if (d1 > 1) {
        model->singular_points.push_back(detail::cyclic_point("[0,1]", "U1", d1, d0 % d1, -1));
      }
      model->homogeneous_action = GroupAction::trivial(2);
      model->degree_rule = DegreeRule::weighted({d0, d1});
      model->orbifold_degree = Rational(1, d0 * d1);
      model->orbifold_euler = Rational(1, d0) + Rational(1, d1);
      break;
    }
    case ModelKind::local_cone: {
      if (!spec.group) throw InvalidArgument("local cone requires a group");
      const GroupAction& g = *spec.group;
      if (!g.is_isolated()) throw InvalidArgument("non-isolated fixed point");
      model->name = "LocalCone(|G|=" + std::to_string(g.order()) + ",dim=" + std::to_string(g.dim()) + ")";
      model->parameters = {g.order(), g.dim()};
      model->dim = g.dim();
      model->bundle_step = 1;
      Chart c;
      c.id = "cone";
      c.coordinates = "z in C^" + std::to_string(g.dim());
      c.dim = g.dim();
      c.uniformizing_order = g.order();
      model->charts = {c};
      if (!g.is_trivial()) {
        SingularPoint p;
        p.label = "0";
        p.chart_id = "cone";
        p.coordinates.assign(static_cast<std::size_t>(g.dim()), cplx{0.0, 0.0});
        p.action = g;
        p.fiber_weights.assign(static_cast<std::size_t>(g.order()), Phase{});
        model->singular_points.push_back(std::move(p));
      }
      break;
    }
  }
  return model;
}

/// Distance proxy from chart point w to the chart's singular point: the
/// spherical distance atan(sqrt(r)). +inf when the chart has no singular
/// point.
inline double geodesic_distance_proxy(const OrbifoldModel& model, std::string_view chart_id,
                                      std::span<const cplx> w) {
  const Chart& c = model.chart(chart_id);
  if (model.singular_point_in(chart_id) == nullptr) return std::numeric_limits<double>::infinity();
  return std::atan(std::sqrt(c.radial(w)));
}

inline double geodesic_distance_proxy(const OrbifoldModel& model, std::string_view chart_id, cplx w) {
  return geodesic_distance_proxy(model, chart_id, std::span<const cplx>(&w, 1));
}

}  // namespace orbk
