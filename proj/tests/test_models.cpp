#include "orbk/models.hpp"
#include "orbk/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace orbk;

TEST(Football, Structure) {
  for (int n = 2; n <= 6; ++n) {
    const auto m = build_model(ModelSpec::football(n));
    EXPECT_EQ(m->bundle_step, n);
    EXPECT_EQ(m->football_order(), n);
    ASSERT_EQ(m->singular_points.size(), 2u);
    for (const auto& p : m->singular_points) {
      EXPECT_EQ(p.action.order(), n);
      EXPECT_TRUE(p.action.is_isolated());
      EXPECT_EQ(p.fiber_weights.size(), static_cast<std::size_t>(n));
    }
    // Frame Z0^m on U0 rotates by -m/n under the generator; Z1^m on U1 is fixed.
    EXPECT_EQ(m->singular_points[0].fiber_rotation(1, 1), Phase(-1, n));
    EXPECT_EQ(m->singular_points[1].fiber_rotation(1, 1), Phase(0, 1));
    EXPECT_EQ(m->orbifold_degree, Rational(1, n));
    EXPECT_EQ(m->orbifold_euler, Rational(2, n));
  }
  EXPECT_TRUE(build_model(ModelSpec::football(1))->singular_points.empty());
  EXPECT_THROW(build_model(ModelSpec::football(0)), InvalidArgument);
}

TEST(Models, ChartVolumeEqualsOrbifoldDegree) {
  // int over a chart of the quotient radial measure is the total volume of
  // omega, which is deg_orb of the ample generator.
  for (auto spec : {ModelSpec::football(1), ModelSpec::football(3), ModelSpec::weighted_line(1, 2),
                    ModelSpec::weighted_line(2, 5), ModelSpec::weighted_line(3, 7)}) {
    const auto m = build_model(spec);
    for (const auto& c : m->charts) {
      const double vol = integrate_radial([&](double r) { return c.radial_measure(r); });
      EXPECT_NEAR(vol, to_double(m->orbifold_degree), 1e-12) << m->name << " " << c.id;
    }
  }
}

TEST(Models, VolumeDensityIntegratesToUniformizedVolume) {
  // Lebesgue density on the uniformizing chart; int over C is 1 there for
  // charts whose radial variable is |w|^2.
  for (auto spec : {ModelSpec::football(2), ModelSpec::weighted_line(2, 3), ModelSpec::weighted_line(1, 3)}) {
    const auto m = build_model(spec);
    for (const auto& c : m->charts) {
      if (c.radial_exponent != 1) continue;
      // Polar coordinates: int 2 pi t density(t) dt, with rho = t^2.
      const double v = integrate_radial([&](double t) { return 2.0 * std::numbers::pi * t * c.volume_density(cplx(t, 0.0)); });
      EXPECT_NEAR(v, 1.0, 1e-9) << m->name << " " << c.id;
    }
  }
}

TEST(WeightedLine, Structure) {
  const auto m = build_model(ModelSpec::weighted_line(2, 3));
  ASSERT_EQ(m->singular_points.size(), 2u);
  EXPECT_EQ(m->singular_points[0].action.order(), 2);
  EXPECT_EQ(m->singular_points[1].action.order(), 3);
  EXPECT_EQ(m->orbifold_degree, Rational(1, 6));
  EXPECT_EQ(m->orbifold_euler, Rational(5, 6));
  EXPECT_EQ(build_model(ModelSpec::weighted_line(1, 2))->singular_points.size(), 1u);
  EXPECT_THROW(build_model(ModelSpec::weighted_line(2, 4)), InvalidArgument);
  EXPECT_THROW(build_model(ModelSpec::weighted_line(0, 1)), InvalidArgument);
}

TEST(Cone, IsolationRequired) {
  const auto m = build_model(ModelSpec::cone(GroupAction::cyclic(5, {1, 2})));
  EXPECT_EQ(m->dim, 2);
  EXPECT_FALSE(m->has_sections());
  ASSERT_EQ(m->singular_points.size(), 1u);
  try {
    build_model(ModelSpec::cone(GroupAction::cyclic(4, {1, 2})));
    FAIL() << "expected rejection";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("non-isolated"), std::string::npos);
  }
}

TEST(Models, ChartDataInvariantOnOrbits) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (auto spec : {ModelSpec::football(3), ModelSpec::football(5), ModelSpec::weighted_line(2, 5)}) {
    const auto m = build_model(spec);
    for (const auto& p : m->singular_points) {
      const Chart& c = m->chart(p.chart_id);
      for (int trial = 0; trial < 20; ++trial) {
        const cplx w(normal(rng), normal(rng));
        for (int g = 0; g < p.action.order(); ++g) {
          const cplx gw = p.action.eigenvalue(g, 0) * w;
          EXPECT_NEAR(c.metric_potential(gw), c.metric_potential(w), 1e-12);
          EXPECT_NEAR(c.kahler_potential(gw), c.kahler_potential(w), 1e-12);
          EXPECT_NEAR(c.volume_density(gw), c.volume_density(w), 1e-12);
        }
      }
    }
  }
}

TEST(Models, DistanceProxy) {
  const auto m = build_model(ModelSpec::football(2));
  EXPECT_DOUBLE_EQ(geodesic_distance_proxy(*m, "U0", {0.0, 0.0}), 0.0);
  EXPECT_NEAR(geodesic_distance_proxy(*m, "U0", {1.0, 0.0}), std::numbers::pi / 4, 1e-15);
  EXPECT_THROW(m->chart("nope"), InvalidArgument);
}
