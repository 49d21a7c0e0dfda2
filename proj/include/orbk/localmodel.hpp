#pragma once

// Discrete check of the Bargmann-type model operator
//   (R f)(x, y) = sum_{eta > 0} fhat(eta) e^{i y eta} e^{-x^2 eta / 2} (eta / pi)^{1/4}
// on [-X, X] x (R / 2 pi Z), with D0 = (1/i)(d_x + x |D_y|), and of the
// critical point of the phase Psi(t, theta) = (t / i)(e^{i theta} - 1) - theta.
//
// Only positive y-frequencies belong to the model; the zero mode and negative
// modes are annihilated by R and reported separately.

#include "orbk/error.hpp"
#include "orbk/numeric.hpp"

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace orbk {

struct ModelGrid {
  double X = 6.0;
  int nx = 512;
  int Q = 256;

  static ModelGrid make(double X = 6.0, int nx = 512, int Q = 256) {
    if (!(X >= 6.0)) throw InvalidArgument("X must be at least 6");
    if (nx < 5) throw InvalidArgument("nx must be at least 5");
    if (Q < 4 || (Q & (Q - 1)) != 0) throw InvalidArgument("Q must be a power of two");
    return {X, nx, Q};
  }

  double hx() const { return 2.0 * X / (nx - 1); }
  double x(int i) const { return -X + i * hx(); }
  double y(int j) const { return 2.0 * std::numbers::pi * j / Q; }
  double hy() const { return 2.0 * std::numbers::pi / Q; }
  /// Signed frequency of FFT bin k; the Nyquist bin counts as negative.
  int eta(int k) const { return k < Q / 2 ? k : k - Q; }
};

/// Values on the (x, y) grid, row-major in x: values[i * Q + j].
struct GridField {
  ModelGrid grid;
  std::vector<cplx> values;

  cplx& at(int i, int j) { return values[static_cast<std::size_t>(i) * grid.Q + j]; }
  const cplx& at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.Q + j]; }
};

namespace detail {

inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

/// In-place batched DFT along contiguous rows of length n.
/// sign = FFTW_FORWARD computes sum_j v_j e^{-2 pi i jk/n}, unnormalized.
inline void batched_dft(std::vector<cplx>& data, int n, int rows, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_plan_mutex());
    plan = fftw_plan_many_dft(1, &n, rows, buf, nullptr, 1, n, buf, nullptr, 1, n, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw NumericalError("FFTW planning failed");
  fftw_execute(plan);
  std::lock_guard lock(fftw_plan_mutex());
  fftw_destroy_plan(plan);
}

inline double model_weight(int eta, double x) {
  return std::exp(-0.5 * x * x * eta) * std::pow(eta / std::numbers::pi, 0.25);
}

}  // namespace detail

/// Fourier coefficients fhat(eta) with f(y) = sum_eta fhat(eta) e^{i eta y}.
inline std::vector<cplx> y_coefficients(const ModelGrid& grid, const std::vector<cplx>& f) {
  if (static_cast<int>(f.size()) != grid.Q) throw InvalidArgument("function length must equal Q");
  std::vector<cplx> c = f;
  detail::batched_dft(c, grid.Q, 1, FFTW_FORWARD);
  for (auto& v : c) v /= static_cast<double>(grid.Q);
  return c;
}

/// Largest coefficient with |eta| >= 3Q/8 relative to the largest overall.
inline double top_quarter_fraction(const ModelGrid& grid, const std::vector<cplx>& coeff) {
  double top = 0.0, all = 0.0;
  for (int k = 0; k < grid.Q; ++k) {
    const double a = std::abs(coeff[static_cast<std::size_t>(k)]);
    all = std::max(all, a);
    if (8 * std::abs(grid.eta(k)) >= 3 * grid.Q) top = std::max(top, a);
  }
  return all > 0.0 ? top / all : 0.0;
}

struct RResult {
  GridField field;
  bool band_limited = true;
  std::vector<int> out_of_cone;  // nonzero modes with eta <= 0
};

inline RResult apply_R(const ModelGrid& grid, const std::vector<cplx>& f) {
  const auto coeff = y_coefficients(grid, f);
  RResult out;
  out.band_limited = top_quarter_fraction(grid, coeff) < 1e-10;
  double scale = 0.0;
  for (const auto& c : coeff) scale = std::max(scale, std::abs(c));
  for (int k = 0; k < grid.Q; ++k) {
    if (grid.eta(k) <= 0 && std::abs(coeff[static_cast<std::size_t>(k)]) > 1e-14 * scale) {
      out.out_of_cone.push_back(grid.eta(k));
    }
  }
  out.field.grid = grid;
  out.field.values.assign(static_cast<std::size_t>(grid.nx) * grid.Q, cplx{});
  for (int i = 0; i < grid.nx; ++i) {
    const double x = grid.x(i);
    for (int k = 1; k < grid.Q / 2; ++k) out.field.at(i, k) = coeff[static_cast<std::size_t>(k)] * detail::model_weight(k, x);
  }
  detail::batched_dft(out.field.values, grid.Q, grid.nx, FFTW_BACKWARD);
  return out;
}

/// Modal picture of a grid field: ghat(x_i, eta) for every x row.
inline std::vector<cplx> field_coefficients(const GridField& g) {
  std::vector<cplx> c = g.values;
  detail::batched_dft(c, g.grid.Q, g.grid.nx, FFTW_FORWARD);
  for (auto& v : c) v /= static_cast<double>(g.grid.Q);
  return c;
}

/// L2 norm of a y-function, int_0^{2pi} |f|^2 dy by the rectangle rule.
inline double y_norm(const ModelGrid& grid, const std::vector<cplx>& f) {
  CompensatedSum acc;
  for (const auto& v : f) acc += std::norm(v);
  return std::sqrt(acc.value() * grid.hy());
}

/// L2 norm over the full grid with weight h_x * 2pi / Q.
inline double field_norm(const GridField& g) {
  CompensatedSum acc;
  for (const auto& v : g.values) acc += std::norm(v);
  return std::sqrt(acc.value() * g.grid.hx() * g.grid.hy());
}

/// D0 applied to a field; d_x by the fourth-order central stencil on interior
/// rows (two boundary rows on each side are left zero), |D_y| spectrally.
inline GridField apply_D0(const GridField& g) {
  const ModelGrid& grid = g.grid;
  const auto coeff = field_coefficients(g);
  std::vector<cplx> d(coeff.size(), cplx{});
  const double h = grid.hx();
  auto c = [&](int i, int k) { return coeff[static_cast<std::size_t>(i) * grid.Q + k]; };
  for (int i = 2; i + 2 < grid.nx; ++i) {
    const double x = grid.x(i);
    for (int k = 0; k < grid.Q; ++k) {
      const cplx dx = (-c(i + 2, k) + 8.0 * c(i + 1, k) - 8.0 * c(i - 1, k) + c(i - 2, k)) / (12.0 * h);
      const cplx v = dx + x * std::abs(grid.eta(k)) * c(i, k);
      d[static_cast<std::size_t>(i) * grid.Q + k] = v / cplx(0.0, 1.0);
    }
  }
  detail::batched_dft(d, grid.Q, grid.nx, FFTW_BACKWARD);
  return {grid, std::move(d)};
}

/// R* g (y) = sum_{eta > 0} e^{i eta y} (eta/pi)^{1/4} int e^{-x^2 eta/2} ghat(x, eta) dx,
/// trapezoid rule in x.
inline std::vector<cplx> apply_R_adjoint(const GridField& g) {
  const ModelGrid& grid = g.grid;
  const auto coeff = field_coefficients(g);
  std::vector<cplx> out(static_cast<std::size_t>(grid.Q), cplx{});
  const double h = grid.hx();
  for (int k = 1; k < grid.Q / 2; ++k) {
    CompensatedComplexSum acc;
    for (int i = 0; i < grid.nx; ++i) {
      const double w = (i == 0 || i + 1 == grid.nx) ? 0.5 * h : h;
      acc += w * detail::model_weight(k, grid.x(i)) * coeff[static_cast<std::size_t>(i) * grid.Q + k];
    }
    out[static_cast<std::size_t>(k)] = acc.value();
  }
  detail::batched_dft(out, grid.Q, 1, FFTW_BACKWARD);
  return out;
}

/// Positive-frequency part f_+ of a y-function.
inline std::vector<cplx> positive_part(const ModelGrid& grid, const std::vector<cplx>& f) {
  auto coeff = y_coefficients(grid, f);
  for (int k = 0; k < grid.Q; ++k) {
    if (grid.eta(k) <= 0) coeff[static_cast<std::size_t>(k)] = 0.0;
  }
  detail::batched_dft(coeff, grid.Q, 1, FFTW_BACKWARD);
  return coeff;
}

struct TestCase {
  std::string label;
  std::vector<cplx> values;
};

struct IdentityResidual {
  std::string label;
  double d0_residual = 0.0;       // |D0 R f| / |f_+|
  double adjoint_residual = 0.0;  // |R* R f - f_+| / |f_+|
  double norm_defect = 0.0;       // | |R f| - |f_+| | / |f_+|
  bool band_limited = true;
  std::vector<int> out_of_cone;
};

struct IdentityReport {
  ModelGrid grid;
  std::vector<IdentityResidual> rows;
  double max_d0 = 0.0;
  double max_adjoint = 0.0;
};

/// y-function with prescribed Fourier coefficients {eta, c}.
inline std::vector<cplx> from_modes(const ModelGrid& grid, const std::vector<std::pair<int, cplx>>& modes) {
  std::vector<cplx> f(static_cast<std::size_t>(grid.Q), cplx{});
  for (int j = 0; j < grid.Q; ++j) {
    for (const auto& [eta, c] : modes) f[static_cast<std::size_t>(j)] += c * std::polar(1.0, eta * grid.y(j));
  }
  return f;
}

/// Ten band-limited positive-frequency functions dominated by modes 1 and 2.
inline std::vector<TestCase> default_suite(const ModelGrid& grid, unsigned seed = 7) {
  std::vector<TestCase> suite;
  suite.push_back({"mode1", from_modes(grid, {{1, 1.0}})});
  suite.push_back({"mode2", from_modes(grid, {{2, 1.0}})});
  suite.push_back({"modes1+2", from_modes(grid, {{1, 1.0}, {2, cplx(0.0, 0.5)}})});
  std::vector<std::pair<int, cplx>> packet;
  for (int eta = 1; eta <= 6; ++eta) packet.push_back({eta, std::exp(-2.0 * (eta - 1.3) * (eta - 1.3))});
  suite.push_back({"gaussian_packet", from_modes(grid, packet)});
  std::vector<std::pair<int, cplx>> shifted = packet;
  for (auto& [eta, c] : shifted) c *= std::polar(1.0, -eta * 0.9);
  suite.push_back({"shifted_packet", from_modes(grid, shifted)});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const std::array<double, 4> weights{1.0, 0.7, 0.05, 0.01};
  for (int s = 0; s < 5; ++s) {
    std::vector<std::pair<int, cplx>> modes;
    for (int eta = 1; eta <= 4; ++eta) {
      modes.push_back({eta, weights[static_cast<std::size_t>(eta - 1)] * cplx(normal(rng), normal(rng))});
    }
    suite.push_back({"random" + std::to_string(s), from_modes(grid, modes)});
  }
  return suite;
}

inline IdentityResidual check_identity(const ModelGrid& grid, const TestCase& test) {
  IdentityResidual row;
  row.label = test.label;
  const auto plus = positive_part(grid, test.values);
  const double fnorm = y_norm(grid, plus);
  const RResult rf = apply_R(grid, test.values);
  row.band_limited = rf.band_limited;
  row.out_of_cone = rf.out_of_cone;
  if (fnorm == 0.0) return row;
  row.d0_residual = field_norm(apply_D0(rf.field)) / fnorm;
  const auto back = apply_R_adjoint(rf.field);
  std::vector<cplx> diff(back.size());
  for (std::size_t j = 0; j < back.size(); ++j) diff[j] = back[j] - plus[j];
  row.adjoint_residual = y_norm(grid, diff) / fnorm;
  row.norm_defect = std::abs(field_norm(rf.field) - fnorm) / fnorm;
  return row;
}

inline IdentityReport check_identities(const ModelGrid& grid, const std::vector<TestCase>& suite) {
  IdentityReport report{grid, {}, 0.0, 0.0};
  for (const auto& t : suite) {
    report.rows.push_back(check_identity(grid, t));
    report.max_d0 = std::max(report.max_d0, report.rows.back().d0_residual);
    report.max_adjoint = std::max(report.max_adjoint, report.rows.back().adjoint_residual);
  }
  return report;
}

struct ConvergenceCheck {
  int mode = 2;
  double coarse = 0.0;  // D0 R residual at h
  double fine = 0.0;    // at h / 2
  double ratio() const { return coarse / fine; }
};

/// D0 R residual of a single mode at h and h/2 (nx -> 2 nx - 1).
inline ConvergenceCheck d0_convergence(const ModelGrid& grid, int mode = 2) {
  const ModelGrid fine_grid = ModelGrid::make(grid.X, 2 * grid.nx - 1, grid.Q);
  ConvergenceCheck c;
  c.mode = mode;
  c.coarse = check_identity(grid, {"mode", from_modes(grid, {{mode, 1.0}})}).d0_residual;
  c.fine = check_identity(fine_grid, {"mode", from_modes(fine_grid, {{mode, 1.0}})}).d0_residual;
  return c;
}

/// Psi(t, theta) = (t / i)(e^{i theta} - 1) - theta.
inline cplx phase_function(double t, double theta) {
  return t / cplx(0.0, 1.0) * (std::polar(1.0, theta) - 1.0) - theta;
}

struct PhaseCriticalData {
  std::array<double, 2> point{1.0, 0.0};
  std::array<cplx, 2> gradient{};             // closed form
  std::array<cplx, 2> gradient_fd{};          // finite differences
  std::array<std::array<cplx, 2>, 2> hessian{};     // closed form
  std::array<std::array<cplx, 2>, 2> hessian_fd{};  // finite differences
  cplx determinant{};
  bool nondegenerate = false;
  double min_imaginary = 0.0;  // min Im Psi over a sample of t > 0
};

inline std::array<cplx, 2> phase_gradient(double t, double theta) {
  const cplx e = std::polar(1.0, theta);
  return {(e - 1.0) / cplx(0.0, 1.0), t * e - 1.0};
}

namespace detail {

template <typename F>
cplx richardson(const F& estimate, double h) {
  return (4.0 * estimate(0.5 * h) - estimate(h)) / 3.0;
}

}  // namespace detail

inline PhaseCriticalData phase_critical_data(double t0 = 1.0, double theta0 = 0.0) {
  PhaseCriticalData out;
  out.point = {t0, theta0};
  out.gradient = phase_gradient(t0, theta0);
  const cplx e = std::polar(1.0, theta0);
  out.hessian = {{{0.0, e}, {e, cplx(0.0, 1.0) * t0 * e}}};

  auto psi = [](double t, double th) { return phase_function(t, th); };
  const double hg = 1e-3;
  out.gradient_fd[0] =
      detail::richardson([&](double h) { return (psi(t0 + h, theta0) - psi(t0 - h, theta0)) / (2.0 * h); }, hg);
  out.gradient_fd[1] =
      detail::richardson([&](double h) { return (psi(t0, theta0 + h) - psi(t0, theta0 - h)) / (2.0 * h); }, hg);
  const double hh = 1e-2;
  const cplx c = psi(t0, theta0);
  out.hessian_fd[0][0] = detail::richardson(
      [&](double h) { return (psi(t0 + h, theta0) - 2.0 * c + psi(t0 - h, theta0)) / (h * h); }, hh);
  out.hessian_fd[1][1] = detail::richardson(
      [&](double h) { return (psi(t0, theta0 + h) - 2.0 * c + psi(t0, theta0 - h)) / (h * h); }, hh);
  out.hessian_fd[0][1] = detail::richardson(
      [&](double h) {
        return (psi(t0 + h, theta0 + h) - psi(t0 + h, theta0 - h) - psi(t0 - h, theta0 + h) +
                psi(t0 - h, theta0 - h)) /
               (4.0 * h * h);
      },
      hh);
  out.hessian_fd[1][0] = out.hessian_fd[0][1];
  out.determinant = out.hessian[0][0] * out.hessian[1][1] - out.hessian[0][1] * out.hessian[1][0];
  out.nondegenerate = std::abs(out.determinant) > 1e-12;
  out.min_imaginary = std::numeric_limits<double>::infinity();
  for (int a = 1; a <= 20; ++a) {
    for (int b = -20; b <= 20; ++b) {
      out.min_imaginary = std::min(out.min_imaginary, psi(0.1 * a, 0.15 * b).imag());
    }
  }
  return out;
}

}  // namespace orbk
