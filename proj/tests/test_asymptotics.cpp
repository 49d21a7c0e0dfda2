#include "orbk/asymptotics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace orbk;

namespace {

std::vector<int> multiples(int step, int lo, int hi) {
  std::vector<int> out;
  for (int m = lo; m <= hi; m += step) out.push_back(m);
  return out;
}

ChartPoint at_r(double r) { return {"U0", {std::sqrt(r), 0.0}}; }

DensitySeries synthetic(const std::vector<int>& ms, double (*f)(int)) {
  DensitySeries s;
  s.r = 1.0;
  s.dim = 1;
  for (int m : ms) s.values.push_back({m, f(m), std::nullopt});
  return s;
}

// Independent brute force of the invariant side.
double invariant_oracle(const std::vector<CyclicGenerator>& gens, int order, const std::vector<std::complex<double>>& z, int m) {
  const int dim = static_cast<int>(z.size());
  double norm2 = 0.0;
  for (const auto& c : z) norm2 += std::norm(c);
  double total = 0.0;
  std::vector<int> a(static_cast<std::size_t>(dim), 0);
  std::function<void(int, int)> rec = [&](int j, int left) {
    if (j == dim) {
      for (const auto& g : gens) {
        long s = 0;
        for (int k = 0; k < dim; ++k) s += static_cast<long>(a[static_cast<std::size_t>(k)]) * g.weights[static_cast<std::size_t>(k)];
        if (s % g.order != 0) return;
      }
      double lt = std::lgamma(m + 1.0) - std::lgamma(left + 1.0) - m * std::log1p(norm2);
      for (int k = 0; k < dim; ++k) {
        const int ak = a[static_cast<std::size_t>(k)];
        if (ak == 0) continue;
        lt += ak * std::log(std::norm(z[static_cast<std::size_t>(k)])) - std::lgamma(ak + 1.0);
      }
      total += std::exp(lt);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[static_cast<std::size_t>(j)] = v;
      rec(j + 1, left - v);
    }
    a[static_cast<std::size_t>(j)] = 0;
  };
  rec(0, m);
  return order * total;
}

}  // namespace

TEST(FitExpansion, SyntheticPolynomialPlusTail) {
  const auto ms = multiples(1, 10, 200);
  const auto s = synthetic(ms, [](int m) { return m + 1.0 + 1.0 / m; });
  const auto fit = fit_expansion(s, 2);
  EXPECT_NEAR(fit.coefficients[0], 1.0, 1e-3);
  EXPECT_NEAR(fit.coefficients[1], 1.0, 1e-1);
  const auto exact = fit_expansion(synthetic(ms, [](int m) { return 2.0 * m + 3.0; }), 2);
  EXPECT_NEAR(exact.coefficients[0], 2.0, 1e-12);
  EXPECT_NEAR(exact.coefficients[1], 3.0, 1e-10);
}

TEST(FitExpansion, ResidualSlope) {
  ExpansionFit fit;
  for (int m = 10; m <= 100; m += 10) {
    fit.ms.push_back(m);
    fit.residuals.push_back(3.0 / m);
  }
  EXPECT_NEAR(residual_decay_slope(fit), -1.0, 1e-12);
}

TEST(FitExpansion, Preconditions) {
  const auto s = synthetic(multiples(1, 10, 14), [](int m) { return m + 1.0; });
  EXPECT_THROW(fit_expansion(s, 3), InvalidArgument);  // R > n + 1
  EXPECT_THROW(fit_expansion(synthetic({10, 11, 12, 13}, [](int m) { return m + 1.0; }), 2), InvalidArgument);
  auto at_singular = s;
  at_singular.r = 0.0;
  EXPECT_THROW(fit_expansion(at_singular, 2), InvalidArgument);
}

TEST(FitExpansion, FootballCoefficients) {
  for (int n : {2, 3}) {
    const auto model = build_model(ModelSpec::football(n));
    const auto series = density_series(model, at_r(1.0), multiples(n, n, 200));
    const auto fit = fit_expansion(series, 2);
    EXPECT_NEAR(fit.coefficients[0], 1.0, 1e-6);
    EXPECT_NEAR(fit.coefficients[1], 1.0, 1e-3);
    // Extending the m-range leaves a0 in place.
    const auto shorter = fit_expansion(density_series(model, at_r(1.0), multiples(n, n, 150)), 2);
    EXPECT_NEAR(shorter.coefficients[0], fit.coefficients[0], 1e-6);
  }
}

TEST(DecayRate, FootballTwoAtHalf) {
  const auto model = build_model(ModelSpec::football(2));
  const auto ms = multiples(2, 2, 100);
  const auto series = density_series(model, at_r(0.5), ms);
  const auto fit = fit_decay_rate(series);
  ASSERT_TRUE(fit.fitted());
  EXPECT_GT(fit.r_squared, 0.99);
  EXPECT_GT(fit.delta_r, 0.0);
  // |offdiag| = (m + 1) 3^{-m}: regress the oracle over the points above the floor.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<int> kept;
  for (int m : ms) {
    const double y = std::log(m + 1.0) - m * std::log(3.0);
    if (std::exp(y) <= kNoiseFloor) continue;
    kept.push_back(m);
    sx += m; sy += y; sxx += double(m) * m; sxy += m * y;
  }
  EXPECT_EQ(kept, fit.ms);
  const double k = static_cast<double>(kept.size());
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  EXPECT_NEAR(fit.slope, slope, 1e-9);
  EXPECT_NEAR(fit.delta_r, -slope / 0.5, 1e-9);
}

TEST(DecayRate, NoiseFloorAtEquator) {
  const auto model = build_model(ModelSpec::football(2));
  const auto fit = fit_decay_rate(density_series(model, at_r(1.0), multiples(2, 2, 100)));
  EXPECT_EQ(fit.status, DecayFit::Status::noise_floor);
  EXPECT_NE(fit.message.find("increase r or lower m"), std::string::npos);
  const auto wpl = build_model(ModelSpec::weighted_line(1, 2));
  EXPECT_THROW(fit_decay_rate(density_series(wpl, at_r(0.5), multiples(1, 1, 10))), Unsupported);
}

TEST(Pairing, LimitIsDeltaCoefficient) {
  for (int n : {2, 3, 4}) {
    const auto model = build_model(ModelSpec::football(n));
    const int top = n * (400 / n);
    const std::vector<int> ms{n * (100 / n), n * (top / (2 * n)), top};
    const TestFunction phi{"U0", 1.0, 0.5};
    const auto res = pair_with_test_function(model, ms, phi);
    const double b = (n - 1.0) / (2.0 * n);
    EXPECT_NEAR(res.expected, b, 1e-12);
    EXPECT_LT(std::abs(res.limit - b) / b, 0.02);
    for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
      EXPECT_LT(std::abs(res.values[i + 1] - b), std::abs(res.values[i] - b) * 1.25 * ms[i] / ms[i + 1]);
    }
  }
}

TEST(Pairing, Validation) {
  const auto model = build_model(ModelSpec::football(2));
  EXPECT_THROW(pair_with_test_function(model, {20, 40}, {"U0", 1.0, 1.5}), InvalidArgument);
  EXPECT_THROW(pair_with_test_function(model, {20}, {"U0", 1.0, 0.5}), InvalidArgument);
  EXPECT_THROW(pair_with_test_function(build_model(ModelSpec::weighted_line(1, 2)), {2, 4}, {"U0", 1.0, 0.5}),
               Unsupported);
}

TEST(Recover, ZeroPotentialGivesLogNOverM) {
  // With phi = 0 the error is (1/m) max |log(rho/(m+1))|, attained at the
  // singular point where rho = n (m + 1).
  const auto model = build_model(ModelSpec::football(2));
  const auto curve = recover_potential(model, RadialPotential::zero(), {10, 20, 40}, default_radial_grid());
  for (const auto& p : curve.points) EXPECT_NEAR(p.sup_error, std::log(2.0) / p.m, 1e-9);
}

TEST(Recover, BumpTrend) {
  const auto model = build_model(ModelSpec::football(2));
  const auto curve = recover_potential(model, RadialPotential::log_bump(0.1, 1.0, 2.5),
                                       {20, 40, 60, 80, 100}, default_radial_grid());
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    EXPECT_LE(curve.points[i + 1].sup_error, curve.points[i].sup_error);
  }
  EXPECT_LT(curve.points.back().sup_error, 0.02);
}

TEST(LowerBound, FootballBand) {
  for (int n : {2, 3}) {
    const auto model = build_model(ModelSpec::football(n));
    const auto scan = lower_bound_scan(model, multiples(n, n * ((10 + n - 1) / n), 200), default_radial_grid());
    EXPECT_GE(scan.infimum, 0.5);
    EXPECT_LE(scan.supremum, n * (1.0 + 1e-9));
    // sup is attained at the singular point, rho = n (m + 1).
    EXPECT_NEAR(scan.supremum, n, 1e-9);
  }
}

TEST(CharacterSum, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const int dim = 1 + static_cast<int>(rng() % 3);
    std::vector<CyclicGenerator> gens{{2 + static_cast<int>(rng() % 5), {}}};
    for (int j = 0; j < dim; ++j) gens[0].weights.push_back(static_cast<int>(rng() % gens[0].order));
    const auto action = GroupAction::product(dim, gens);
    std::vector<cplx> z;
    for (int j = 0; j < dim; ++j) z.push_back(cplx(normal(rng), normal(rng)));
    const int m = static_cast<int>(rng() % 30);
    const auto bound = character_sum_bound(action, z, m);
    const double oracle = invariant_oracle(gens, action.order(), z, m);
    EXPECT_NEAR(bound.invariant_sum / oracle, 1.0, 1e-11);
    // Orbit side directly from the generator powers.
    double norm2 = 0.0;
    for (const auto& c : z) norm2 += std::norm(c);
    std::complex<double> orbit = 0.0;
    for (int k = 0; k < gens[0].order; ++k) {
      std::complex<double> inner = 1.0;
      for (int j = 0; j < dim; ++j)
        inner += std::polar(1.0, 2.0 * std::numbers::pi * k * gens[0].weights[static_cast<std::size_t>(j)] / gens[0].order) *
                 std::norm(z[static_cast<std::size_t>(j)]);
      orbit += std::pow(inner / (1.0 + norm2), m);
    }
    // k covers each element gen.order / |G| times.
    orbit *= static_cast<double>(action.order()) / gens[0].order;
    EXPECT_NEAR(bound.orbit_sum / orbit.real(), 1.0, 1e-11);
  }
}

TEST(CharacterSum, FootballDensityIsOrbitSum) {
  for (int n : {2, 3, 5}) {
    const auto action = GroupAction::cyclic(n, {1});
    for (int m : {n, 4 * n}) {
      for (double r : {0.2, 1.0, 3.0}) {
        const auto bound = character_sum_bound(action, {cplx(std::sqrt(r), 0.0)}, m);
        EXPECT_NEAR(bound.orbit_sum, football_density_closed_form(n, m, r) / (m + 1.0), 1e-12);
      }
    }
  }
}

TEST(CharacterSum, Limits) {
  EXPECT_THROW(character_sum_bound(GroupAction::cyclic(25, {1}), {cplx(1.0)}, 3), InvalidArgument);
  EXPECT_THROW(character_sum_bound(GroupAction::cyclic(2, {1}), {cplx(1.0)}, 201), InvalidArgument);
  EXPECT_THROW(character_sum_bound(GroupAction::cyclic(2, {1, 1}), {cplx(1.0)}, 3), InvalidArgument);
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  setenv("ORBK_THREADS", "1", 1);
  const auto one = parallel_map(50, [](std::size_t i) { return std::sin(static_cast<double>(i)); });
  setenv("ORBK_THREADS", "4", 1);
  const auto four = parallel_map(50, [](std::size_t i) { return std::sin(static_cast<double>(i)); });
  unsetenv("ORBK_THREADS");
  EXPECT_EQ(one, four);
  EXPECT_THROW(parallel_map(3, [](std::size_t i) -> int { if (i == 1) throw NumericalError("x"); return 0; }),
               NumericalError);
}
