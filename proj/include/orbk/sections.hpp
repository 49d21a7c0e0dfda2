#pragma once

// Holomorphic sections of powers of the ample generator as invariant
// monomial spaces, their Gram matrices under
//   <s1, s2> = int_M (s1, s2) h^m dV
// and the orthonormalizing change of basis.
//
// All catalog models are torus invariant, so the Gram matrix in the monomial
// basis is diagonal. It is assembled in full from quadrature, checked to be
// Hermitian and diagonal, and only then replaced by its exact diagonal.

#include "orbk/error.hpp"
#include "orbk/groups.hpp"
#include "orbk/models.hpp"
#include "orbk/quadrature.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace orbk {

/// Torus-invariant potential phi(r) on the reference chart, with the radial
/// Laplacian (r phi'(r))' that enters i/2pi ddbar phi.
struct RadialPotential {
  std::string description = "zero";
  std::function<double(double)> value = [](double) { return 0.0; };
  std::function<double(double)> radial_laplacian = [](double) { return 0.0; };
  std::vector<double> breakpoints;

  static RadialPotential zero() { return {}; }

  static RadialPotential constant(double c) {
    RadialPotential p;
    p.description = "constant(" + std::to_string(c) + ")";
    p.value = [c](double) { return c; };
    return p;
  }

  /// amplitude * (1 - x^2)^3 with x = log(r / center) / half_width, zero for
  /// |x| >= 1. C^2 across the support edges.
  static RadialPotential log_bump(double amplitude, double center, double half_width) {
    if (!(center > 0.0) || !(half_width > 0.0)) throw InvalidArgument("log_bump needs center, width > 0");
    RadialPotential p;
    p.description = "log_bump(amplitude=" + std::to_string(amplitude) + ",center=" +
                    std::to_string(center) + ",half_width=" + std::to_string(half_width) + ")";
    p.value = [=](double r) {
      if (!(r > 0.0)) return 0.0;
      const double x = std::log(r / center) / half_width;
      if (std::abs(x) >= 1.0) return 0.0;
      const double t = 1.0 - x * x;
      return amplitude * t * t * t;
    };
    p.radial_laplacian = [=](double r) {
      if (!(r > 0.0)) return 0.0;
      const double x = std::log(r / center) / half_width;
      if (std::abs(x) >= 1.0) return 0.0;
      const double t = 1.0 - x * x;
      const double d2 = amplitude / (half_width * half_width) * (-6.0 * t * t + 24.0 * x * x * t);
      return d2 / r;
    };
    p.breakpoints = {center * std::exp(-half_width), center, center * std::exp(half_width)};
    return p;
  }
};

/// Base model with potential phi: h~ = h e^{-phi}, omega~ = omega + i/2pi ddbar phi.
struct PerturbedMetric {
  ModelPtr model;
  RadialPotential phi;
  double positivity_margin = 1.0;

  /// Ratio omega~ / omega on the curve chart, 1 + (1 + r)^2 (r phi')'.
  double volume_ratio(double r) const { return 1.0 + (1.0 + r) * (1.0 + r) * phi.radial_laplacian(r); }

  static PerturbedMetric make(ModelPtr model, RadialPotential phi) {
    if (!model || !model->is_curve()) throw Unsupported("perturbations are defined on catalog curves");
    PerturbedMetric pm{std::move(model), std::move(phi), 0.0};
    double margin = std::numeric_limits<double>::infinity();
    constexpr int samples = 2000;
    for (int i = 0; i <= samples; ++i) {
      const double r = std::pow(10.0, -6.0 + 12.0 * i / samples);
      margin = std::min(margin, pm.volume_ratio(r));
    }
    for (double r : pm.phi.breakpoints) margin = std::min(margin, pm.volume_ratio(r));
    pm.positivity_margin = margin;
    return pm;
  }
};

struct SectionSpace {
  ModelPtr model;
  int power = 0;    // m, the power of the ample generator
  int steps = 0;    // N = m / bundle_step
  std::vector<MonomialExponent> basis;
  Eigen::MatrixXcd gram;
  Eigen::MatrixXcd transform;
  std::vector<double> log_norms;  // log gram(a, a)
  std::optional<std::string> perturbation;

  int dim() const { return static_cast<int>(basis.size()); }

  int chart_exponent(int a, const Chart& chart) const {
    if (chart.coordinate_index < 0) throw Unsupported("chart carries no section coordinates");
    return basis[static_cast<std::size_t>(a)].powers[static_cast<std::size_t>(chart.coordinate_index)];
  }
};

inline constexpr double kGramConditionLimit = 1e12;

namespace detail {

inline SectionSpace assemble_space(ModelPtr model, int m, const PerturbedMetric* perturbed,
                                   QuadratureRule rule) {
  if (!model) throw InvalidArgument("null model");
  if (!model->has_sections()) throw Unsupported("model has no global section spaces");
  if (m < 0) throw InvalidArgument("power must be non-negative");
  if (m % model->bundle_step != 0) {
    throw InvalidArgument("power m=" + std::to_string(m) + " is not a multiple of bundle_step=" +
                          std::to_string(model->bundle_step));
  }
  if (perturbed && !(perturbed->positivity_margin > 0.0)) {
    throw InvalidArgument("perturbed Kahler form is not positive");
  }

  SectionSpace space;
  space.model = model;
  space.power = m;
  space.steps = m / model->bundle_step;
  space.basis = invariant_monomials(*model->homogeneous_action, m, model->degree_rule);
  if (perturbed) space.perturbation = perturbed->phi.description;
  const int d = space.dim();
  if (d == 0) throw InvalidArgument("no sections in degree " + std::to_string(m));

  const Chart& chart = model->charts.front();
  std::vector<int> exps(static_cast<std::size_t>(d));
  int max_exp = 0;
  for (int a = 0; a < d; ++a) {
    exps[static_cast<std::size_t>(a)] = space.chart_exponent(a, chart);
    max_exp = std::max(max_exp, exps[static_cast<std::size_t>(a)]);
  }
  const int rule_nodes = rule.radial_nodes;
  rule = QuadratureRule::for_degree(max_exp);
  rule.radial_nodes = rule_nodes;

  std::vector<double> breakpoints;
  if (perturbed) breakpoints = perturbed->phi.breakpoints;

  // Radial parts depend only on e_a + e_b and angular parts on e_a - e_b.
  std::map<int, double> radial_part;
  std::map<int, cplx> angular_part;
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const int sum = exps[static_cast<std::size_t>(a)] + exps[static_cast<std::size_t>(b)];
      const int diff = exps[static_cast<std::size_t>(a)] - exps[static_cast<std::size_t>(b)];
      if (!radial_part.contains(sum)) {
        const double half_degree = 0.5 * chart.radial_degree(sum);
        auto integrand = [&](double r) {
          if (r == 0.0) return half_degree == 0.0 ? chart.radial_measure(0.0) : 0.0;
          double log_w = half_degree * std::log(r) - m * std::log1p(r);
          double measure = chart.radial_measure(r);
          if (perturbed) {
            log_w -= m * perturbed->phi.value(r);
            measure *= perturbed->volume_ratio(r);
          }
          return std::exp(log_w) * measure;
        };
        if (chart.radial_degree(sum) % 2 == 0) {
          radial_part[sum] = integrate_radial(integrand, rule, breakpoints);
        } else {
          // Half-integer power of r: integrate in u = sqrt(r) to remove the
          // endpoint singularity.
          std::vector<double> root_breaks;
          for (double b : breakpoints) root_breaks.push_back(std::sqrt(b));
          radial_part[sum] = integrate_radial([&](double u) { return 2.0 * u * integrand(u * u); }, rule, root_breaks);
        }
      }
      if (!angular_part.contains(diff)) {
        angular_part[diff] = integrate_angular([diff](Phase t) { return t.scaled(diff).unit_root(); }, rule);
      }
    }
  }

  Eigen::MatrixXcd gram(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const int sum = exps[static_cast<std::size_t>(a)] + exps[static_cast<std::size_t>(b)];
      const int diff = exps[static_cast<std::size_t>(a)] - exps[static_cast<std::size_t>(b)];
      gram(a, b) = radial_part[sum] * angular_part[diff];
    }
  }

  Eigen::VectorXd diag(d);
  for (int a = 0; a < d; ++a) {
    diag(a) = gram(a, a).real();
    if (!(diag(a) > 0.0)) throw NumericalError("non-positive Gram diagonal");
  }
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) {
      const double scale = std::sqrt(diag(a) * diag(b));
      if (std::abs(gram(a, b) - std::conj(gram(b, a))) > 1e-12 * scale) {
        throw NumericalError("Gram matrix is not Hermitian");
      }
      if (a != b && std::abs(gram(a, b)) > 1e-12 * scale) {
        throw NumericalError("Gram matrix is not diagonal in the monomial basis");
      }
    }
  }

  // Conditioning after Jacobi scaling: the quantity that governs the
  // orthonormalization below.
  const Eigen::VectorXd inv_sqrt = diag.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXcd scaled = inv_sqrt.asDiagonal() * gram * inv_sqrt.asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(scaled, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kGramConditionLimit) throw NumericalError("ill-conditioned basis");

  const Eigen::MatrixXcd transform = inv_sqrt.cast<cplx>().asDiagonal();
  const Eigen::MatrixXcd check = transform.adjoint() * gram * transform;
  if ((check - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-9) {
    throw NumericalError("orthonormalization failed");
  }

  space.gram = diag.cast<cplx>().asDiagonal();
  space.transform = transform;
  space.log_norms.resize(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) space.log_norms[static_cast<std::size_t>(a)] = std::log(diag(a));
  return space;
}

}  // namespace detail

/// H^0(M, L^m) with the Gram matrix of h^m dV and its orthonormalizing
/// transform. m must be a multiple of the model's bundle_step.
inline SectionSpace build_section_space(ModelPtr model, int m, QuadratureRule rule = {}) {
  return detail::assemble_space(std::move(model), m, nullptr, rule);
}

/// Same monomial basis, Gram matrix under h^m e^{-m phi} dV~.
inline SectionSpace build_perturbed_space(const PerturbedMetric& metric, int m, QuadratureRule rule = {}) {
  return detail::assemble_space(metric.model, m, &metric, rule);
}

inline nlohmann::json to_json(const SectionSpace& space) {
  nlohmann::json basis = nlohmann::json::array();
  nlohmann::json diag = nlohmann::json::array();
  for (int a = 0; a < space.dim(); ++a) {
    basis.push_back(space.basis[static_cast<std::size_t>(a)].powers);
    diag.push_back(space.gram(a, a).real());
  }
  nlohmann::json out{{"model", space.model->name},
                     {"m", space.power},
                     {"N", space.steps},
                     {"dim", space.dim()},
                     {"basis", basis},
                     {"gram_diagonal", diag}};
  if (space.perturbation) out["perturbation"] = *space.perturbation;
  return out;
}

}  // namespace orbk
