#include "orbk/index.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

using namespace orbk;

namespace {

std::complex<double> unit(double num, double den) { return std::polar(1.0, 2.0 * std::numbers::pi * num / den); }

long count_weighted(int d0, int d1, int m) {
  long c = 0;
  for (int a = 0; a * d0 <= m; ++a)
    if ((m - a * d0) % d1 == 0) ++c;
  return c;
}

}  // namespace

TEST(BCoefficient, FootballExact) {
  for (int n = 1; n <= 12; ++n) {
    const auto b = b_coefficient(GroupAction::cyclic(n, {1}));
    ASSERT_TRUE(b.exact.has_value());
    EXPECT_EQ(*b.exact, Rational(n - 1, 2 * n));
    EXPECT_NEAR(b.value, (n - 1.0) / (2.0 * n), 1e-12);
    EXPECT_LT(std::abs(b.imaginary), 1e-12);
  }
  const auto model = build_model(ModelSpec::football(5));
  const auto b0 = b_coefficient(model->singular_points[0]);
  const auto b1 = b_coefficient(model->singular_points[1]);
  EXPECT_EQ(*b0.exact, *b1.exact);
}

TEST(BCoefficient, ClassicalRootOfUnitySum) {
  // sum_{k=1}^{n-1} 1 / (1 - zeta^k) = (n - 1) / 2, computed independently.
  for (int n = 2; n <= 50; ++n) {
    std::complex<double> s = 0.0;
    for (int k = 1; k < n; ++k) s += 1.0 / (1.0 - unit(k, n));
    EXPECT_NEAR(s.real(), (n - 1) / 2.0, 1e-12);
    EXPECT_NEAR(n * b_coefficient(GroupAction::cyclic(n, {1})).value, (n - 1) / 2.0, 1e-12);
  }
}

TEST(BCoefficient, GeneratorWeightDoesNotMatter) {
  // Every generator of a cyclic group gives the same group.
  for (int n : {5, 7, 9}) {
    for (int t = 1; t < n; ++t) {
      if (std::gcd(t, n) != 1) continue;
      const auto b = b_coefficient(GroupAction::cyclic(n, {t}));
      EXPECT_EQ(*b.exact, Rational(n - 1, 2 * n));
    }
  }
}

TEST(BCoefficient, SurfaceCones) {
  // A_{q-1} type (1, -1): sum 1/|1 - zeta^k|^2 = (q^2 - 1)/12.
  // Diagonal (1, 1): sum 1/(1 - zeta^k)^2 = -(q - 1)(q - 5)/12.
  for (int q = 2; q <= 11; ++q) {
    EXPECT_NEAR(b_coefficient(GroupAction::cyclic(q, {1, q - 1})).value, (q * q - 1.0) / (12.0 * q), 1e-12);
    EXPECT_NEAR(b_coefficient(GroupAction::cyclic(q, {1, 1})).value, -(q - 1.0) * (q - 5.0) / (12.0 * q), 1e-12);
  }
  EXPECT_THROW(b_coefficient(GroupAction::cyclic(4, {1, 2})), InvalidArgument);
}

TEST(BCoefficient, DeterminantPairsArePositive) {
  const auto model = build_model(ModelSpec::cone(GroupAction::cyclic(7, {1, 2, 4})));
  const auto dets = det_positivity_check(model->singular_points.front());
  EXPECT_EQ(dets.size(), 6u);
  for (double d : dets) EXPECT_GT(d, 0.0);
}

TEST(CyclotomicSum, MatchesComplexSum) {
  for (int d = 2; d <= 15; ++d) {
    for (int k = -d; k <= 2 * d; ++k) {
      std::complex<double> s = 0.0;
      for (int j = 1; j < d; ++j) s += unit(static_cast<double>(j) * k, d) / (1.0 - unit(j, d));
      EXPECT_NEAR(to_double(detail::cyclotomic_sum(k, d)), s.real(), 1e-10) << d << " " << k;
      EXPECT_NEAR(s.imag(), 0.0, 1e-10);
    }
  }
}

TEST(RRK, FootballsMatchSectionCount) {
  for (int n = 1; n <= 6; ++n) {
    const auto model = build_model(ModelSpec::football(n));
    for (int N = 0; N <= 30; ++N) {
      const auto rep = rrk_euler_characteristic(*model, n * N);
      EXPECT_EQ(rep.total, Rational(N + 1)) << "n=" << n << " N=" << N;
      EXPECT_EQ(rep.dimension_oracle, N + 1);
      EXPECT_TRUE(rep.matches());
    }
  }
}

TEST(RRK, WeightedLinesMatchLatticeCount) {
  for (int d0 = 1; d0 <= 7; ++d0) {
    for (int d1 = d0; d1 <= 7; ++d1) {
      if (std::gcd(d0, d1) != 1) continue;
      const auto model = build_model(ModelSpec::weighted_line(d0, d1));
      for (int m = 0; m <= 60; ++m) {
        const auto rep = rrk_euler_characteristic(*model, m);
        EXPECT_EQ(rep.total, Rational(count_weighted(d0, d1, m))) << d0 << "," << d1 << " m=" << m;
        EXPECT_TRUE(rep.matches());
      }
    }
  }
}

TEST(RRK, ExampleAndErrors) {
  const auto rep = rrk_euler_characteristic(*build_model(ModelSpec::weighted_line(1, 2)), 7);
  EXPECT_EQ(rep.total, Rational(4));
  EXPECT_EQ(rep.dimension_oracle, 4);
  EXPECT_THROW(rrk_euler_characteristic(*build_model(ModelSpec::cone(GroupAction::cyclic(3, {1, 1}))), 3),
               Unsupported);
  EXPECT_THROW(rrk_euler_characteristic(*build_model(ModelSpec::football(2)), -2), InvalidArgument);
}

TEST(RRK, CorrectionsWithoutFiberTermFail) {
  // Dropping the fiber character breaks the identity on P(1,2) at odd m,
  // which checks that the fiber convention is doing real work.
  const auto model = build_model(ModelSpec::weighted_line(1, 2));
  const auto rep = rrk_euler_characteristic(*model, 7);
  const Rational plain = rep.smooth_part + *detail::exact_cyclic_curve_correction(model->singular_points[0].action, 0);
  EXPECT_NE(plain, Rational(rep.dimension_oracle));
}
