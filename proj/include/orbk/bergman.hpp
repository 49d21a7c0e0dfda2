#pragma once

// Bergman density rho_m(z) = sum_i |S_i(z)|^2_{h^m} over an orthonormal basis,
// the closed-form football density and its split into the k = 0 term and
// the exponentially small k != 0 terms, and the induced metric deviation
// (1/m) ddbar log rho_m.

#include "orbk/error.hpp"
#include "orbk/models.hpp"
#include "orbk/numeric.hpp"
#include "orbk/sections.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace orbk {

struct ChartPoint {
  std::string chart = "U0";
  cplx z{0.0, 0.0};
};

struct DensitySplit {
  double diag = 0.0;     // k = 0 term, m + 1
  double offdiag = 0.0;  // k != 0 terms
  double total() const { return diag + offdiag; }
};

/// rho_m at a chart point from the diagonal orthonormal basis.
inline double density(const SectionSpace& space, const ChartPoint& p) {
  const Chart& chart = space.model->chart(p.chart);
  const double r = chart.radial(p.z);
  if (!std::isfinite(r)) throw InvalidArgument("point outside chart domain");
  CompensatedSum acc;
  for (int a = 0; a < space.dim(); ++a) {
    const double log_term = chart.log_monomial_norm(space.chart_exponent(a, chart), space.power, r) -
                            space.log_norms[static_cast<std::size_t>(a)];
    acc += std::exp(log_term);
  }
  return acc.value();
}

/// rho_m for an arbitrary basis f_i = sum_a transform(a, i) z^{e_a}. The
/// value does not depend on which orthonormal basis is used.
inline double density_with_transform(const SectionSpace& space, const Eigen::MatrixXcd& transform,
                                     const ChartPoint& p) {
  const Chart& chart = space.model->chart(p.chart);
  const double r = chart.radial(p.z);
  const double angle = std::arg(p.z);
  std::vector<cplx> monomials(static_cast<std::size_t>(space.dim()));
  for (int a = 0; a < space.dim(); ++a) {
    const int e = space.chart_exponent(a, chart);
    monomials[static_cast<std::size_t>(a)] =
        std::exp(0.5 * chart.log_monomial_norm(e, space.power, r)) * std::polar(1.0, e * angle);
  }
  CompensatedSum acc;
  for (int i = 0; i < transform.cols(); ++i) {
    cplx f{0.0, 0.0};
    for (int a = 0; a < space.dim(); ++a) f += transform(a, i) * monomials[static_cast<std::size_t>(a)];
    acc += std::norm(f);
  }
  return acc.value();
}

namespace detail {

inline std::vector<cplx> football_ratios(int n, double r) {
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    out.push_back((1.0 + r * Phase(k, n).unit_root()) / (1.0 + r));
  }
  return out;
}

inline void check_football_power(int n, int m) {
  if (n <= 0) throw InvalidArgument("football order must be positive");
  if (m < 0 || m % n != 0) throw InvalidArgument("football power m must be a non-negative multiple of n");
}

}  // namespace detail

/// (m + 1) sum_{k<n} ((1 + r e^{2 pi i k/n}) / (1 + r))^m with r = |Z1|^2/|Z0|^2.
inline double football_density_closed_form(int n, int m, double r) {
  detail::check_football_power(n, m);
  if (!(r >= 0.0)) throw InvalidArgument("r must be non-negative");
  if (std::isinf(r)) return n * (m + 1.0);
  CompensatedComplexSum acc;
  for (const cplx& c : detail::football_ratios(n, r)) acc += ipow(c, static_cast<unsigned>(m));
  const cplx total = (m + 1.0) * acc.value();
  if (std::abs(total.imag()) > 1e-10) throw NumericalError("closed-form density has imaginary part");
  return total.real();
}

/// k = 0 term against the k != 0 terms of the closed form, football only.
inline DensitySplit football_split(int n, int m, double r) {
  detail::check_football_power(n, m);
  CompensatedComplexSum acc;
  const auto ratios = detail::football_ratios(n, r);
  for (std::size_t k = 1; k < ratios.size(); ++k) acc += ipow(ratios[k], static_cast<unsigned>(m));
  const cplx off = (m + 1.0) * acc.value();
  if (std::abs(off.imag()) > 1e-10) throw NumericalError("off-diagonal part has imaginary part");
  return {m + 1.0, off.real()};
}

inline DensitySplit split_density(const SectionSpace& space, const ChartPoint& p) {
  if (space.model->kind != ModelKind::football) throw Unsupported("split_density is defined on footballs");
  const Chart& chart = space.model->chart(p.chart);
  return football_split(space.model->football_order(), space.power, chart.radial(p.z));
}

struct DensityRecord {
  ChartPoint point;
  double r = 0.0;
  double r_proxy = 0.0;
  double rho = 0.0;
  std::optional<DensitySplit> split;
};

struct DensitySample {
  std::string model;
  int m = 0;
  int steps = 0;
  std::vector<DensityRecord> records;
};

inline DensitySample sample_density(const SectionSpace& space, const std::vector<ChartPoint>& points) {
  DensitySample out{space.model->name, space.power, space.steps, {}};
  out.records.reserve(points.size());
  for (const auto& p : points) {
    const Chart& chart = space.model->chart(p.chart);
    DensityRecord rec{p, chart.radial(p.z), geodesic_distance_proxy(*space.model, p.chart, p.z),
                      density(space, p), std::nullopt};
    if (rec.rho < 0.0) throw NumericalError("negative density");
    if (space.model->kind == ModelKind::football) rec.split = split_density(space, p);
    out.records.push_back(rec);
  }
  return out;
}

struct PullbackPoint {
  ChartPoint point;
  double r = 0.0;
  double r_proxy = 0.0;
  double deviation = 0.0;
};

struct PullbackDeviation {
  int m = 0;
  double step = 1e-3;
  std::vector<PullbackPoint> points;
  double max_deviation = 0.0;
};

/// Pointwise omega-norm of (1/m) ddbar log rho_m, i.e. of
/// (1/m) Phi_m^* omega_FS - omega, on a chart grid. Central five-point
/// Laplacians at h and h/2 are combined by Richardson extrapolation.
/// Footballs difference log1p(offdiag / (m + 1)) so the constant log(m + 1)
/// does not swamp the signal.
inline PullbackDeviation metric_pullback_deviation(const SectionSpace& space,
                                                   const std::vector<ChartPoint>& grid,
                                                   double step = 1e-3) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  const bool football = space.model->kind == ModelKind::football;
  const double log_smooth = std::log(space.power + 1.0);
  auto log_density = [&](const std::string& chart_id, cplx z) {
    const ChartPoint p{chart_id, z};
    if (football) {
      const DensitySplit s = split_density(space, p);
      if (s.total() < 1e-300) throw NumericalError("density below 1e-300; cannot take log");
      return std::log1p(s.offdiag / s.diag) + (std::log(s.diag) - log_smooth);
    }
    const double rho = density(space, p);
    if (rho < 1e-300) throw NumericalError("density below 1e-300; cannot take log");
    return std::log(rho) - log_smooth;
  };
  auto laplacian = [&](const std::string& chart_id, cplx z, double h) {
    const double c = log_density(chart_id, z);
    const double sum = log_density(chart_id, z + h) + log_density(chart_id, z - h) +
                       log_density(chart_id, z + cplx(0.0, h)) + log_density(chart_id, z - cplx(0.0, h));
    return (sum - 4.0 * c) / (h * h);
  };

  PullbackDeviation out;
  out.m = space.power;
  out.step = step;
  for (const auto& p : grid) {
    const Chart& chart = space.model->chart(p.chart);
    const double coarse = laplacian(p.chart, p.z, step);
    const double fine = laplacian(p.chart, p.z, 0.5 * step);
    const double lap = (4.0 * fine - coarse) / 3.0;
    const double ddbar = 0.25 * lap;
    const double metric = std::numbers::pi * chart.volume_density(p.z);
    const double dev = space.power > 0 ? std::abs(ddbar) / (space.power * metric) : 0.0;
    out.points.push_back({p, chart.radial(p.z), geodesic_distance_proxy(*space.model, p.chart, p.z), dev});
    out.max_deviation = std::max(out.max_deviation, dev);
  }
  return out;
}

}  // namespace orbk
