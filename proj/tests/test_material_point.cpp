#include "gprfail/material_point.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gprfail;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

MaterialParams unbreakable() {
  MaterialParams m = builtin_material("ductile");
  m.Y0 = 1e30;
  m.Y1 = 1e30;
  m.theta0 = 0.0;
  m.tauI0 = 1e30;
  m.betaI = 0.0;
  return m;
}

}  // namespace

TEST(MaterialPoint, RhsVanishesAtRest) {
  const Vec10 d = material_point_rhs(virgin_state(), 0.0, StrainDrive::constant(0.0), builtin_material("brittle"));
  EXPECT_EQ(d.norm(), 0.0);
}

TEST(MaterialPoint, RigidSampleFollowsDrive) {
  const double r = -0.003;
  const Vec10 d = material_point_rhs(virgin_state(), 0.0, StrainDrive::constant(r), unbreakable());
  EXPECT_DOUBLE_EQ(d[1], -r);
  for (int i = 0; i < 10; ++i) {
    if (i != 1) {
      EXPECT_EQ(d[i], 0.0);
    }
  }
}

TEST(MaterialPoint, DamageRateUsesEnergyDerivative) {
  // -theta * dE/dxi with the energy differentiated numerically
  MaterialParams m = builtin_material("brittle");
  Mat3 A = Mat3::Identity();
  A(0, 0) = 1.02;
  A(0, 1) = 0.004;
  const double xi = 0.3;
  const Vec10 q = kin_pack(xi, A);
  const Vec10 d = material_point_rhs(q, 0.0, StrainDrive::constant(0.0), m);
  ThermoState s;
  s.A = A;
  s.rho = m.rho0 * A.determinant();
  const double h = 1e-6;
  s.xi = xi + h;
  const double Ep = specific_total_energy(s, Vec3::Zero(), m);
  s.xi = xi - h;
  const double Em = specific_total_energy(s, Vec3::Zero(), m);
  s.xi = xi;
  const double Y = von_mises(stress_tensor(s, m).Sigma);
  const double expected = -damage_rate_theta(xi, Y, m) * (Ep - Em) / (2.0 * h);
  EXPECT_LT(rel(d[0], expected), 1e-6);
}

TEST(MaterialPoint, BrittleDiagramShape) {
  const Diagram d = stress_strain_test(builtin_material("brittle"), -0.001, 20.0);
  const double tf = failure_time(d);
  ASSERT_TRUE(std::isfinite(tf));
  const double peak = peak_stress(d);
  // stress collapses once xi jumps
  EXPECT_LT(d.back().Y, 0.01 * peak);
  EXPECT_GT(d.back().xi, 0.99);
  // the rise before failure is essentially linear
  for (const auto& s : d) {
    if (s.t > 0.1 * tf && s.t < 0.9 * tf) {
      EXPECT_LT(rel(s.Y / std::abs(s.strain), peak / (0.001 * tf)), 0.05);
    }
  }
}

TEST(MaterialPoint, ElasticSlopeIsTwiceShearModulus) {
  // uniaxial strain: von Mises = 2 mu |eps| for small strain, over the first 20% of the branch
  const MaterialParams m = builtin_material("ductile");
  const Diagram d = stress_strain_test(m, -0.001, 20.0);
  const double peak = peak_stress(d);
  double slope = 0.0;
  for (const auto& s : d) {
    if (s.Y >= 0.2 * peak) break;
    if (s.Y > 0.0) slope = s.Y / std::abs(s.strain);
  }
  ASSERT_GT(slope, 0.0);
  EXPECT_LT(rel(slope, 2.0 * m.muI), 0.05);
}

TEST(MaterialPoint, DuctilePlateauBeforeFailure) {
  const Diagram d = stress_strain_test(builtin_material("ductile"), -0.001, 20.0);
  const double tf = failure_time(d);
  ASSERT_TRUE(std::isfinite(tf));
  const double peak = peak_stress(d);
  // ideal plastic flow: stress stays within 1% of the peak over a long stretch
  double plateauStart = -1.0;
  for (const auto& s : d)
    if (s.Y > 0.99 * peak) {
      plateauStart = s.t;
      break;
    }
  ASSERT_GT(plateauStart, 0.0);
  EXPECT_GT(0.9 * tf - plateauStart, 0.3 * tf);
  for (const auto& s : d) {
    if (s.t > plateauStart && s.t < 0.9 * tf) {
      EXPECT_GT(s.Y, 0.98 * peak);
    }
  }
}

TEST(MaterialPoint, RateSweepPeaksIncrease) {
  const auto ds = rate_sweep(builtin_material("ductile"), {-0.001, -0.002, -0.004}, 20.0);
  ASSERT_EQ(ds.size(), 3u);
  EXPECT_LT(peak_stress(ds[0]), peak_stress(ds[1]));
  EXPECT_LT(peak_stress(ds[1]), peak_stress(ds[2]));
}

TEST(MaterialPoint, DiagramsAreDeterministic) {
  const auto ds = rate_sweep(builtin_material("ductile"), {-0.002, -0.002}, 20.0);
  ASSERT_EQ(ds[0].size(), ds[1].size());
  for (std::size_t i = 0; i < ds[0].size(); ++i) {
    EXPECT_EQ(ds[0][i].t, ds[1][i].t);
    EXPECT_EQ(ds[0][i].Y, ds[1][i].Y);
    EXPECT_EQ(ds[0][i].xi, ds[1][i].xi);
  }
}

TEST(MaterialPoint, SignOfRateBarelyMattersOnElasticBranch) {
  const MaterialParams m = builtin_material("ductile");
  const MaterialPointSystem sp(m, StrainDrive::constant(0.001)), sm(m, StrainDrive::constant(-0.001));
  // first ~40% of the elastic branch; the mismatch grows like 6*strain
  const auto a = oracle_rk4_integrate(virgin_state(), 0.0, 1.5, 15000, sp, {.recordEvery = 500});
  const auto b = oracle_rk4_integrate(virgin_state(), 0.0, 1.5, 15000, sm, {.recordEvery = 500});
  for (std::size_t i = 1; i < a.size(); ++i)
    EXPECT_LT(rel(sp.von_mises_at(a[i].q), sm.von_mises_at(b[i].q)), 0.01);
}

TEST(MaterialPoint, UnbreakableLoadingIsReversible) {
  const double T = 2.0, r = -0.001;
  const MaterialPointSystem sys(unbreakable(), StrainDrive::composite({{T, StrainDrive::constant(r)},
                                                                       {T, StrainDrive::constant(-r)}}));
  ExpIntOptions opt;
  opt.stopTimes = {T};
  const auto tr = expint_integrate(virgin_state(), 0.0, 2.0 * T, sys, opt);
  double peak = 0.0;
  for (const auto& s : tr) peak = std::max(peak, sys.von_mises_at(s.q));
  EXPECT_LT(sys.von_mises_at(tr.back().q), 1e-6 * peak);
}

TEST(MaterialPoint, ExpintMatchesOracleBeforeFailure) {
  for (const char* name : {"brittle", "ductile"}) {
    const OracleComparison c = compare_with_oracle(builtin_material(name), -0.001, 20.0);
    std::printf("%s: max rel Y %.2e, t_fail %.6f vs %.6f\n", name, c.maxRelY, c.tFailExpint, c.tFailOracle);
    EXPECT_LT(c.maxRelY, 1e-3);
    EXPECT_LT(rel(c.tFailExpint, c.tFailOracle), 5e-3);
  }
}

TEST(MaterialPoint, DamageNeverDecreases) {
  for (const char* name : {"brittle", "ductile"}) {
    const Diagram d = stress_strain_test(builtin_material(name), -0.002, 20.0);
    for (std::size_t i = 1; i < d.size(); ++i) ASSERT_GE(d[i].xi - d[i - 1].xi, -1e-14);
  }
}

TEST(Fatigue, LowCycleCountDoesNotWeaken) {
  const MaterialParams m = builtin_material("fatigue");
  const FatigueResult virgin = fatigue_test(m, -0.001, 1.0, 0, -0.001);
  const FatigueResult n1000 = fatigue_test(m, -0.001, 1.0, 1000, -0.001);
  EXPECT_LT(rel(n1000.residualStrength, virgin.residualStrength), 0.01);
  EXPECT_GT(n1000.xiEndOfCycling, 0.0);
  for (std::size_t i = 1; i < n1000.history.size(); ++i)
    ASSERT_GE(n1000.history[i].xi - n1000.history[i - 1].xi, -1e-14);
}

TEST(Fatigue, ManyCyclesWeaken) {
  const MaterialParams m = builtin_material("fatigue");
  const auto w = wohler_curve(m, {1000, 10000}, -0.001, 1.0, -0.001);
  EXPECT_LT(w[1].strength, w[0].strength);
}

TEST(Fatigue, ShortDurabilityPlateau) {
  const auto w = wohler_curve(builtin_material("fatigue"), {10, 100}, -0.001, 1.0, -0.001);
  EXPECT_LT(rel(w[0].strength, w[1].strength), 0.01);
  EXPECT_LE(w[1].strength, w[0].strength);
}

TEST(Fatigue, ZeroDestructiveRateGivesNaN) {
  const FatigueResult r = fatigue_test(builtin_material("fatigue"), -0.001, 1.0, 10, 0.0);
  EXPECT_TRUE(std::isnan(r.residualStrength));
}

TEST(StrainDrive, CompositeStrainIsContinuous) {
  const StrainDrive d = StrainDrive::composite({{3.0, StrainDrive::sinusoidal(-0.001, 1.0)},
                                                {5.0, StrainDrive::constant(0.002)}});
  EXPECT_NEAR(d.strain(3.0 - 1e-12), d.strain(3.0), 1e-12);
  EXPECT_NEAR(d.strain(4.0), 0.002, 1e-15);
  EXPECT_DOUBLE_EQ(d.strain_rate(3.5), 0.002);
  EXPECT_NEAR(d.strain_rate(0.25), -0.001, 1e-15);
  EXPECT_THROW(StrainDrive::composite({{0.0, StrainDrive::constant(1.0)}}), std::invalid_argument);
}
