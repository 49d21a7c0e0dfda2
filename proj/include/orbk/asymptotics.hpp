#pragma once

// Coefficient extraction from density data: polynomial expansion fits,
// exponential decay rates of the singular part, distributional pairing
// limits at singular points, potential recovery, lower-bound scans and the
// character-sum identity behind the lower bound.

#include "orbk/bergman.hpp"
#include "orbk/error.hpp"
#include "orbk/groups.hpp"
#include "orbk/index.hpp"
#include "orbk/models.hpp"
#include "orbk/numeric.hpp"
#include "orbk/parallel.hpp"
#include "orbk/quadrature.hpp"
#include "orbk/sections.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace orbk {

struct SeriesPoint {
  int m = 0;
  double rho = 0.0;
  std::optional<double> offdiag;
};

/// Density values over a range of powers at one chart point.
struct DensitySeries {
  std::string model;
  ChartPoint point;
  double r = 0.0;
  double r_proxy = 0.0;
  int dim = 1;
  int bundle_step = 1;
  std::vector<SeriesPoint> values;
};

/// Gram-path density at p for every m (parallel over m, assembled by index).
inline DensitySeries density_series(const ModelPtr& model, const ChartPoint& p, const std::vector<int>& ms) {
  const Chart& chart = model->chart(p.chart);
  DensitySeries out{model->name, p, chart.radial(p.z), geodesic_distance_proxy(*model, p.chart, p.z),
                    model->dim, model->bundle_step, {}};
  out.values = parallel_map(ms.size(), [&](std::size_t i) {
    const SectionSpace space = build_section_space(model, ms[i]);
    SeriesPoint sp{ms[i], density(space, p), std::nullopt};
    if (model->kind == ModelKind::football) sp.offdiag = split_density(space, p).offdiag;
    return sp;
  });
  return out;
}

inline constexpr double kNoiseFloor = 1e-14;

struct DecayFit {
  enum class Status { fitted, noise_floor };
  Status status = Status::noise_floor;
  std::string message;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double delta_r = 0.0;   // slope magnitude / r
  double delta_r2 = 0.0;  // slope magnitude / r^2
  std::vector<int> ms;

  bool fitted() const { return status == Status::fitted; }
};

namespace detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit regress(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = my - f.slope * mx;
  f.r_squared = syy.value() > 0.0 ? (sxy.value() * sxy.value()) / (sxx.value() * syy.value()) : 1.0;
  return f;
}

}  // namespace detail

/// Linear regression of log|rho_m - (m + 1)| against m at a fixed point.
/// Fewer than five residuals above the noise floor gives the noise_floor
/// outcome instead of a rate.
inline DecayFit fit_decay_rate(const DensitySeries& series) {
  std::vector<double> xs, ys;
  DecayFit fit;
  for (const auto& v : series.values) {
    if (!v.offdiag) throw Unsupported("decay fits need the split density (football models)");
    if (std::abs(*v.offdiag) > kNoiseFloor) {
      xs.push_back(v.m);
      ys.push_back(std::log(std::abs(*v.offdiag)));
      fit.ms.push_back(v.m);
    }
  }
  if (xs.size() < 5) {
    fit.status = DecayFit::Status::noise_floor;
    fit.message = "residuals below noise floor: increase r or lower m";
    return fit;
  }
  const auto line = detail::regress(xs, ys);
  if (!(line.slope < 0.0)) throw NumericalError("singular residual does not decay");
  fit.status = DecayFit::Status::fitted;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  fit.delta_r = -line.slope / series.r;
  fit.delta_r2 = -line.slope / (series.r * series.r);
  return fit;
}

struct ExpansionFit {
  ChartPoint point;
  double r = 0.0;
  int dim = 1;
  int terms = 0;
  std::vector<int> ms;
  std::vector<double> coefficients;  // a_0 .. a_{R-1}
  std::vector<double> residuals;     // per used m
  double condition = 0.0;
  std::optional<DecayFit> tail;
};

/// Least-squares fit of rho(m) against m^n, m^{n-1}, ..., m^{n-R+1} over
/// powers where the exponential singular tail sits below tail_tolerance.
inline ExpansionFit fit_expansion(const DensitySeries& series, int terms, double tail_tolerance = 1e-12) {
  if (terms < 1) throw InvalidArgument("need at least one term");
  if (terms > series.dim + 1) throw InvalidArgument("fits stop at R <= n + 1");
  if (!(series.r > 0.0)) throw InvalidArgument("expansion fits need a point away from singularities");
  if (static_cast<int>(series.values.size()) < terms + 3) {
    throw InvalidArgument("m-range needs at least R + 3 values");
  }
  ExpansionFit fit;
  fit.point = series.point;
  fit.r = series.r;
  fit.dim = series.dim;
  fit.terms = terms;

  double m_min = -std::numeric_limits<double>::infinity();
  const bool has_split = std::all_of(series.values.begin(), series.values.end(),
                                     [](const SeriesPoint& v) { return v.offdiag.has_value(); });
  if (has_split) {
    fit.tail = fit_decay_rate(series);
    if (fit.tail->fitted()) m_min = (std::log(tail_tolerance) - fit.tail->intercept) / fit.tail->slope;
  }
  std::vector<const SeriesPoint*> used;
  for (const auto& v : series.values) {
    if (v.m >= m_min) used.push_back(&v);
  }
  if (static_cast<int>(used.size()) < terms + 3) {
    throw InvalidArgument("too few powers beyond the singular tail; extend the m-range");
  }

  const auto rows = static_cast<Eigen::Index>(used.size());
  Eigen::MatrixXd a(rows, terms);
  Eigen::VectorXd b(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double m = used[static_cast<std::size_t>(i)]->m;
    for (int j = 0; j < terms; ++j) a(i, j) = std::pow(m, series.dim - j);
    b(i) = used[static_cast<std::size_t>(i)]->rho;
  }
  Eigen::VectorXd scale(terms);
  for (int j = 0; j < terms; ++j) {
    scale(j) = a.col(j).cwiseAbs().maxCoeff();
    a.col(j) /= scale(j);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  fit.condition = sv(0) / sv(sv.size() - 1);
  if (!(fit.condition <= 1e10)) throw NumericalError("ill-conditioned Vandermonde: reduce R or extend m-range");
  const Eigen::VectorXd x = svd.solve(b);
  for (int j = 0; j < terms; ++j) fit.coefficients.push_back(x(j) / scale(j));
  const Eigen::VectorXd res = b - a * x;
  for (Eigen::Index i = 0; i < rows; ++i) {
    fit.ms.push_back(used[static_cast<std::size_t>(i)]->m);
    fit.residuals.push_back(res(i));
  }
  return fit;
}

/// Slope of log|residual| against log m; the residual after R terms should
/// decay like m^{n-R}.
inline double residual_decay_slope(const ExpansionFit& fit) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < fit.ms.size(); ++i) {
    if (std::abs(fit.residuals[i]) > 0.0) {
      xs.push_back(std::log(static_cast<double>(fit.ms[i])));
      ys.push_back(std::log(std::abs(fit.residuals[i])));
    }
  }
  if (xs.size() < 3) throw NumericalError("residuals vanish; no decay slope");
  return detail::regress(xs, ys).slope;
}

/// amplitude * (1 - (r / support)^2)^3 for r < support, in the chart radial
/// variable of a singular chart.
struct TestFunction {
  std::string chart = "U0";
  double amplitude = 1.0;
  double support = 0.5;

  double operator()(double r) const {
    if (r >= support) return 0.0;
    const double t = 1.0 - (r / support) * (r / support);
    return amplitude * t * t * t;
  }
  double at_center() const { return amplitude; }
};

struct PairingResult {
  TestFunction phi;
  std::string point;
  std::vector<int> ms;
  std::vector<double> values;  // int (rho_m - (m + 1)) phi dV
  double limit = 0.0;          // Richardson in 1/m from the last two powers
  double expected = 0.0;       // b(z0) phi(z0)
  double relative_error() const {
    return expected != 0.0 ? std::abs(limit - expected) / std::abs(expected) : std::abs(limit);
  }
};

inline PairingResult pair_with_test_function(const ModelPtr& model, const std::vector<int>& ms,
                                             const TestFunction& phi) {
  if (model->kind != ModelKind::football) throw Unsupported("pairing needs the football split");
  if (ms.size() < 2) throw InvalidArgument("pairing needs at least two powers");
  const Chart& chart = model->chart(phi.chart);
  const SingularPoint* point = model->singular_point_in(phi.chart);
  if (!(phi.support > 0.0)) throw InvalidArgument("test function support must be positive");
  if (phi.support >= chart.isolation_radius) throw InvalidArgument("support touches chart boundary");
  const int n = model->football_order();

  // Panels graded geometrically towards r = 0, where the integrand
  // concentrates at scale 1/m.
  std::vector<double> breaks;
  for (int k = 1; k <= 40; ++k) breaks.push_back(phi.support * std::ldexp(1.0, -k));
  breaks.push_back(phi.support);
  QuadratureRule rule;
  rule.radial_nodes = 64;

  PairingResult out;
  out.phi = phi;
  out.point = point ? point->label : "smooth";
  out.ms = ms;
  out.values = parallel_map(ms.size(), [&](std::size_t i) {
    const int m = ms[i];
    detail::check_football_power(n, m);
    auto integrand = [&](double r) {
      if (r >= phi.support) return 0.0;
      return football_split(n, m, r).offdiag * phi(r) * chart.radial_measure(r);
    };
    return integrate_radial(integrand, rule, breaks);
  });
  const double m1 = ms[ms.size() - 2];
  const double m2 = ms.back();
  out.limit = (m2 * out.values.back() - m1 * out.values[ms.size() - 2]) / (m2 - m1);
  out.expected = point ? b_coefficient(*point).value * phi.at_center() : 0.0;
  return out;
}

struct RecoveryPoint {
  int m = 0;
  double sup_error = 0.0;
  double worst_r = 0.0;
};

struct RecoveryCurve {
  std::string potential;
  double positivity_margin = 0.0;
  std::vector<RecoveryPoint> points;
};

/// 200-point radial grid on U0: the singular point plus log-spaced r.
inline std::vector<ChartPoint> default_radial_grid(int count = 200, double lo = 1e-3, double hi = 1e3) {
  std::vector<ChartPoint> grid{{"U0", {0.0, 0.0}}};
  for (int i = 0; i + 1 < count; ++i) {
    const double t = count > 2 ? static_cast<double>(i) / (count - 2) : 0.0;
    const double r = lo * std::pow(hi / lo, t);
    grid.push_back({"U0", {std::sqrt(r), 0.0}});
  }
  return grid;
}

/// sup over the grid of |(1/m) log rho~_m - (1/m) log(m + 1) - phi| where
/// rho~_m is the density of an h~-orthonormal basis measured in h^m.
inline RecoveryCurve recover_potential(const ModelPtr& model, const RadialPotential& phi, const std::vector<int>& ms,
                                       const std::vector<ChartPoint>& grid) {
  const PerturbedMetric metric = PerturbedMetric::make(model, phi);
  if (!(metric.positivity_margin > 0.0)) throw InvalidArgument("perturbed Kahler form is not positive");
  RecoveryCurve out{phi.description, metric.positivity_margin, {}};
  out.points = parallel_map(ms.size(), [&](std::size_t i) {
    const int m = ms[i];
    if (m <= 0) throw InvalidArgument("recovery needs m > 0");
    const SectionSpace space = build_perturbed_space(metric, m);
    RecoveryPoint rp{m, 0.0, 0.0};
    for (const auto& p : grid) {
      const double r = model->chart(p.chart).radial(p.z);
      const double rho = density(space, p);
      const double err = std::abs(std::log(rho) / m - std::log(m + 1.0) / m - phi.value(r));
      if (err > rp.sup_error) {
        rp.sup_error = err;
        rp.worst_r = r;
      }
    }
    return rp;
  });
  return out;
}

struct LowerBoundRow {
  int m = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double argmin_r = 0.0;
};

struct LowerBoundScan {
  std::vector<LowerBoundRow> rows;
  double infimum = 0.0;
  double supremum = 0.0;
};

/// min and max over the grid of rho_m / (m + 1)^n for each m.
inline LowerBoundScan lower_bound_scan(const ModelPtr& model, const std::vector<int>& ms,
                                       const std::vector<ChartPoint>& grid) {
  LowerBoundScan out;
  out.rows = parallel_map(ms.size(), [&](std::size_t i) {
    const int m = ms[i];
    const SectionSpace space = build_section_space(model, m);
    LowerBoundRow row{m, std::numeric_limits<double>::infinity(), 0.0, 0.0};
    const double scale = std::pow(m + 1.0, model->dim);
    for (const auto& p : grid) {
      const double ratio = density(space, p) / scale;
      if (ratio < row.min_ratio) {
        row.min_ratio = ratio;
        row.argmin_r = model->chart(p.chart).radial(p.z);
      }
      row.max_ratio = std::max(row.max_ratio, ratio);
    }
    return row;
  });
  out.infimum = std::numeric_limits<double>::infinity();
  for (const auto& row : out.rows) {
    out.infimum = std::min(out.infimum, row.min_ratio);
    out.supremum = std::max(out.supremum, row.max_ratio);
  }
  return out;
}

struct CharacterSumBound {
  double orbit_sum = 0.0;
  double orbit_imaginary = 0.0;
  double invariant_sum = 0.0;
  std::size_t invariant_terms = 0;
  double relative_difference = 0.0;
};

/// orbit side:     sum_g ((1 + <gz, z>) / (1 + |z|^2))^m
/// invariant side: |G| sum_{alpha invariant} multinomial |z^alpha|^2 / (1 + |z|^2)^m
/// These agree by character orthogonality.
inline CharacterSumBound character_sum_bound(const GroupAction& action, const std::vector<cplx>& z, int m) {
  if (action.order() > 24 || m > 200 || action.dim() > 3 || m < 0) {
    throw InvalidArgument("character_sum_bound limits: |G| <= 24, 0 <= m <= 200, dim <= 3");
  }
  if (static_cast<int>(z.size()) != action.dim()) throw InvalidArgument("point dimension mismatch");
  std::vector<double> mod2(z.size());
  double norm2 = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    mod2[j] = std::norm(z[j]);
    norm2 += mod2[j];
  }

  CompensatedComplexSum orbit;
  for (int g = 0; g < action.order(); ++g) {
    cplx inner{1.0, 0.0};
    for (int j = 0; j < action.dim(); ++j) inner += action.eigenvalue(g, j) * mod2[static_cast<std::size_t>(j)];
    orbit += ipow(inner / (1.0 + norm2), static_cast<unsigned>(m));
  }

  CharacterSumBound out;
  const cplx o = orbit.value();
  out.orbit_sum = o.real();
  out.orbit_imaginary = o.imag();

  const double log_denominator = m * std::log1p(norm2);
  const double log_mfact = std::lgamma(m + 1.0);
  CompensatedSum inv;
  std::vector<int> alpha(static_cast<std::size_t>(action.dim()), 0);
  // Enumerate alpha with |alpha| <= m; alpha_0 = m - |alpha| is implicit.
  auto visit = [&](auto&& self, std::size_t j, int remaining) -> void {
    if (j == alpha.size()) {
      MonomialExponent e{alpha};
      if (!action.is_invariant(e)) return;
      double log_term = log_mfact - std::lgamma(remaining + 1.0) - log_denominator;
      for (std::size_t k = 0; k < alpha.size(); ++k) {
        if (alpha[k] == 0) continue;
        if (mod2[k] == 0.0) return;
        log_term += alpha[k] * std::log(mod2[k]) - std::lgamma(alpha[k] + 1.0);
      }
      inv += std::exp(log_term);
      ++out.invariant_terms;
      return;
    }
    for (int a = 0; a <= remaining; ++a) {
      alpha[j] = a;
      self(self, j + 1, remaining - a);
    }
    alpha[j] = 0;
  };
  visit(visit, 0, m);
  out.invariant_sum = action.order() * inv.value();
  out.relative_difference = std::abs(out.orbit_sum - out.invariant_sum) / std::abs(out.invariant_sum);
  if (!(out.invariant_sum > 0.0) || !(out.orbit_sum > 0.0)) {
    throw NumericalError("character sums must be positive");
  }
  if (out.relative_difference > 1e-10 || std::abs(out.orbit_imaginary) > 1e-10 * out.invariant_sum) {
    throw NumericalError("orbit sum and invariant sum disagree");
  }
  return out;
}

}  // namespace orbk
