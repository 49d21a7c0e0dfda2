#pragma once

// Singular delta coefficients b = (1/|G|) sum_{g != 1} 1 / det(I - g|T) and
// the Riemann-Roch-Kawasaki Euler characteristic of catalog curves.
//
// Cyclic curve points carry an exact rational route besides the complex
// sum: with zeta = e^{2 pi i/d},
//   sum_{j=1}^{d-1} zeta^{jk} / (1 - zeta^j) = kbar - (d + 1)/2,
// where kbar is k mod d taken in [1, d]. Both routes are evaluated and must
// agree.

#include "orbk/error.hpp"
#include "orbk/groups.hpp"
#include "orbk/models.hpp"
#include "orbk/numeric.hpp"
#include "orbk/rational.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace orbk {

struct BCoefficient {
  double value = 0.0;
  double imaginary = 0.0;
  std::optional<Rational> exact;
};

namespace detail {

inline cplx det_one_minus(const GroupAction& action, int g) {
  cplx det{1.0, 0.0};
  for (int j = 0; j < action.dim(); ++j) det *= 1.0 - action.eigenvalue(g, j);
  return det;
}

inline std::int64_t mod_inverse(std::int64_t a, std::int64_t d) {
  a %= d;
  if (a < 0) a += d;
  for (std::int64_t x = 1; x < d; ++x) {
    if ((a * x) % d == 1) return x;
  }
  throw InvalidArgument("tangent weight is not a unit modulo the group order");
}

/// sum_{j=1}^{d-1} zeta^{jk} / (1 - zeta^j), exactly.
inline Rational cyclotomic_sum(std::int64_t k, std::int64_t d) {
  std::int64_t kbar = k % d;
  if (kbar <= 0) kbar += d;
  return Rational(kbar) - Rational(d + 1, 2);
}

/// For a cyclic action of order d on C with generator rotation t/d, returns
/// (1/d) sum_{j=1}^{d-1} zeta^{j f} / (1 - zeta^{j t}) exactly.
inline std::optional<Rational> exact_cyclic_curve_correction(const GroupAction& action, std::int64_t fiber) {
  if (action.dim() != 1 || action.generators().size() != 1) return std::nullopt;
  const auto& gen = action.generators().front();
  const std::int64_t d = action.order();
  if (d == 1) return Rational(0);
  // Generator as a rotation number with denominator d.
  const Phase rot(gen.weights.front(), gen.order);
  if (rot.den() != d) return std::nullopt;
  const std::int64_t t_inv = mod_inverse(rot.num(), d);
  return cyclotomic_sum(fiber * t_inv, d) / Rational(d);
}

}  // namespace detail

inline BCoefficient b_coefficient(const GroupAction& action) {
  CompensatedComplexSum full;
  CompensatedSum paired;
  for (int g = 1; g < action.order(); ++g) {
    if (action.has_fixed_vector(g)) throw InvalidArgument("non-isolated fixed point");
    const cplx term = 1.0 / detail::det_one_minus(action, g);
    full += term;
    // g and g^{-1} contribute conjugate terms; the pair sums to 2 Re.
    const int inv = action.inverse(g);
    if (inv == g) {
      paired += term.real();
    } else if (g < inv) {
      paired += 2.0 * term.real();
    }
  }
  const double order = action.order();
  BCoefficient out;
  out.value = paired.value() / order;
  out.imaginary = full.value().imag() / order;
  if (std::abs(out.imaginary) >= 1e-12) throw NumericalError("b coefficient has imaginary part");
  if (std::abs(full.value().real() / order - out.value) > 1e-12) {
    throw NumericalError("paired and unpaired b sums disagree");
  }
  out.exact = detail::exact_cyclic_curve_correction(action, 0);
  if (out.exact && std::abs(to_double(*out.exact) - out.value) > 1e-12) {
    throw NumericalError("b coefficient disagrees with its exact value");
  }
  return out;
}

inline BCoefficient b_coefficient(const SingularPoint& p) { return b_coefficient(p.action); }

/// det(I - g|T) det(I - g^{-1}|T) for every g != 1; each must be real positive.
inline std::vector<double> det_positivity_check(const SingularPoint& p) {
  std::vector<double> out;
  const GroupAction& action = p.action;
  for (int g = 1; g < action.order(); ++g) {
    const cplx prod = detail::det_one_minus(action, g) * detail::det_one_minus(action, action.inverse(g));
    if (std::abs(prod.imag()) >= 1e-12 || !(prod.real() > 0.0)) {
      throw NumericalError("paired determinant is not real positive");
    }
    out.push_back(prod.real());
  }
  return out;
}

struct IndexCorrection {
  std::string point;
  Rational exact{0};
  double numeric = 0.0;
};

struct IndexReport {
  std::string model;
  int m = 0;
  Rational smooth_part{0};
  std::vector<IndexCorrection> corrections;
  Rational total{0};
  std::int64_t dimension_oracle = 0;

  bool matches() const { return total == Rational(dimension_oracle); }
};

/// chi(X, L^m) = deg_orb(L^m) + chi_orb(X)/2
///             + sum_i (1/|G_i|) sum_{g != 1} tr(g|E_i) / det(I - g|T_i),
/// with the monomial count of H^0 as the oracle.
inline IndexReport rrk_euler_characteristic(const OrbifoldModel& model, int m) {
  if (!model.is_curve() || !model.has_sections()) {
    throw Unsupported("RRK is implemented for catalog curves only");
  }
  if (m < 0) throw InvalidArgument("power must be non-negative");
  IndexReport report;
  report.model = model.name;
  report.m = m;
  report.smooth_part = model.orbifold_degree * m + model.orbifold_euler / 2;
  report.total = report.smooth_part;
  for (const auto& p : model.singular_points) {
    IndexCorrection c;
    c.point = p.label;
    CompensatedComplexSum acc;
    for (int g = 1; g < p.action.order(); ++g) {
      if (p.action.has_fixed_vector(g)) throw InvalidArgument("non-isolated fixed point");
      acc += p.fiber_rotation(g, m).unit_root() / detail::det_one_minus(p.action, g);
    }
    const cplx numeric = acc.value() / static_cast<double>(p.action.order());
    if (std::abs(numeric.imag()) > 1e-10) throw NumericalError("RRK correction has imaginary part");
    c.numeric = numeric.real();
    // The fiber phase of the generator is f/d; the exact route needs f.
    const Phase gen_fiber = p.fiber_rotation(1, m);
    const std::int64_t d = p.action.order();
    const std::int64_t f = gen_fiber.num() * (d / gen_fiber.den());
    const auto exact = detail::exact_cyclic_curve_correction(p.action, f);
    if (!exact) throw Unsupported("exact correction requires a cyclic curve point");
    if (std::abs(to_double(*exact) - c.numeric) > 1e-10) {
      throw NumericalError("RRK correction disagrees with its exact value at " + p.label);
    }
    c.exact = *exact;
    report.total += c.exact;
    report.corrections.push_back(std::move(c));
  }
  report.dimension_oracle =
      static_cast<std::int64_t>(invariant_monomials(*model.homogeneous_action, m, model.degree_rule).size());
  return report;
}

}  // namespace orbk
