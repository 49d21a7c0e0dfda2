#pragma once

// Radial integration on chart domains. Integrals over [0, inf) go through
// s = r / (1 + r), which maps the rational Bergman-type integrands onto
// polynomial-like functions on [0, 1). Gauss-Legendre panels are doubled
// until two successive totals agree.

#include "orbk/error.hpp"
#include "orbk/numeric.hpp"
#include "orbk/rational.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

namespace orbk {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // positive, sum to 2

  static GaussLegendre make(int n) {
    if (n < 1) throw InvalidArgument("Gauss-Legendre order must be positive");
    GaussLegendre gl;
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    auto push = [&](double x) {
      const double dp = boost::math::legendre_p_prime(n, x);
      gl.nodes.push_back(x);
      gl.weights.push_back(2.0 / ((1.0 - x * x) * dp * dp));
    };
    for (auto it = zeros.rbegin(); it != zeros.rend(); ++it) {
      if (*it != 0.0) push(-*it);
    }
    for (double z : zeros) push(z);
    return gl;
  }

  /// Rules are immutable once built; share them across calls and threads.
  static const GaussLegendre& cached(int n) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussLegendre>> rules;
    std::lock_guard lock(mutex);
    auto& slot = rules[n];
    if (!slot) slot = std::make_unique<GaussLegendre>(make(n));
    return *slot;
  }
};

struct QuadratureRule {
  int radial_nodes = 200;
  int angular_nodes = 1;
  double tolerance = 1e-11;
  int max_doublings = 5;

  /// Angular count 2 * max_degree + 1 integrates every phase e^{ik theta}
  /// with |k| <= 2 * max_degree exactly.
  static QuadratureRule for_degree(int max_degree) {
    QuadratureRule rule;
    rule.angular_nodes = 2 * std::max(max_degree, 0) + 1;
    return rule;
  }
};

namespace detail {

template <typename F>
double panel_sum(const F& g, std::span<const double> edges, const GaussLegendre& gl) {
  CompensatedSum acc;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p];
    const double b = edges[p + 1];
    if (!(b > a)) continue;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double v = g(mid + half * gl.nodes[i]);
      if (!std::isfinite(v)) throw NumericalError("non-finite integrand sample");
      acc += gl.weights[i] * half * v;
    }
  }
  return acc.value();
}

template <typename F>
double adaptive_panels(const F& g, std::vector<double> edges, const QuadratureRule& rule) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  int nodes = rule.radial_nodes;
  double previous = panel_sum(g, edges, GaussLegendre::cached(nodes));
  for (int k = 0; k < rule.max_doublings; ++k) {
    nodes *= 2;
    const double current = panel_sum(g, edges, GaussLegendre::cached(nodes));
    const double scale = std::max(std::abs(current), std::numeric_limits<double>::min());
    if (std::abs(current - previous) <= rule.tolerance * scale) return current;
    previous = current;
  }
  throw NumericalError("radial quadrature did not converge");
}

}  // namespace detail

/// Integral of f over [a, b] on Gauss-Legendre panels split at breakpoints.
template <typename F>
double integrate_interval(const F& f, double a, double b, const QuadratureRule& rule = {},
                          std::span<const double> breakpoints = {}) {
  std::vector<double> edges{a, b};
  for (double x : breakpoints) {
    if (x > a && x < b) edges.push_back(x);
  }
  return detail::adaptive_panels(f, std::move(edges), rule);
}

/// Integral of f over [0, inf) via s = r / (1 + r). Breakpoints are given in
/// r and become panel edges; place them at kinks of f or to grade panels
/// towards sharp peaks.
template <typename F>
double integrate_radial(const F& f, const QuadratureRule& rule = {},
                        std::span<const double> breakpoints = {}) {
  std::vector<double> edges{0.0, 1.0};
  for (double r : breakpoints) {
    if (r > 0.0 && std::isfinite(r)) edges.push_back(r / (1.0 + r));
  }
  auto g = [&f](double s) {
    const double one_minus = 1.0 - s;
    const double r = s / one_minus;
    return f(r) / (one_minus * one_minus);
  };
  return detail::adaptive_panels(g, std::move(edges), rule);
}

/// Average of f over the circle, (1/2pi) int_0^{2pi} f, by the equispaced
/// rule with rule.angular_nodes points.
template <typename F>
cplx integrate_angular(const F& f, const QuadratureRule& rule) {
  const int count = std::max(rule.angular_nodes, 1);
  CompensatedComplexSum acc;
  for (int k = 0; k < count; ++k) {
    acc += cplx(f(Phase(k, count)));
  }
  return acc.value() / static_cast<double>(count);
}

/// int_0^inf r^a / (1 + r)^(a + b + 2) dr = a! b! / (a + b + 1)!.
inline Rational beta_integral(unsigned a, unsigned b) {
  return Rational(factorial(a) * factorial(b)) / Rational(factorial(a + b + 1));
}

/// L2 norm squared of the football monomial Z0^(nk) Z1^(nN - nk) over the
/// quotient: (nk)! (nN - nk)! / (n (nN + 1)!).
inline Rational monomial_norm_closed_form(int n_order, int power_n, int k) {
  if (n_order <= 0 || power_n < 0 || k < 0 || k > power_n) {
    throw InvalidArgument("monomial_norm_closed_form requires n >= 1 and 0 <= k <= N");
  }
  const auto m = static_cast<unsigned>(n_order * power_n);
  const auto a = static_cast<unsigned>(n_order * k);
  return Rational(factorial(a) * factorial(m - a)) / Rational(BigInt(n_order) * factorial(m + 1));
}

}  // namespace orbk
