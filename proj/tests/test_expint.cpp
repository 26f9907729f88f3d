#include "gprfail/expint.hpp"
#include "gprfail/material_point.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace gprfail;

namespace {

// dq/dt = B + J q with constant data.
struct LinearSystem {
  Vec10 B = Vec10::Zero();
  Mat10 J = Mat10::Zero();
  JacobianSplit split = JacobianSplit::FourBlock;
  KineticPoint evaluate(const Vec10& q, double, bool) const {
    KineticPoint kp;
    kp.S = B + J * q;
    kp.J = J;
    kp.split = split;
    kp.tau1 = 1.0;
    kp.damageRate = 0.0;
    return kp;
  }
};

// dq0/dt = -q0^2, everything else at rest.
struct QuadraticSystem {
  KineticPoint evaluate(const Vec10& q, double, bool) const {
    KineticPoint kp;
    kp.S.setZero();
    kp.S[0] = -q[0] * q[0];
    kp.J.setZero();
    kp.J(0, 0) = -2.0 * q[0];
    kp.tau1 = 1e30;
    return kp;
  }
};

// Pushes xi out of [0,1] for any representable step.
struct RunawaySystem {
  KineticPoint evaluate(const Vec10&, double, bool) const {
    KineticPoint kp;
    kp.S.setZero();
    kp.S[0] = 1e30;
    kp.J.setZero();
    kp.tau1 = 1e30;
    return kp;
  }
};

Mat10 exact_propagator_augmented(const Mat10& J, const Vec10& B, const Vec10& q0, double dt, Vec10& out) {
  Eigen::Matrix<double, 11, 11> M = Eigen::Matrix<double, 11, 11>::Zero();
  M.topLeftCorner<10, 10>() = J * dt;
  M.topRightCorner<10, 1>() = B * dt;
  Eigen::Matrix<double, 11, 1> x;
  x.head<10>() = q0;
  x[10] = 1.0;
  out = (M.exp() * x).head<10>();
  return M.topLeftCorner<10, 10>();
}

LinearSystem random_stable_linear(unsigned seed, JacobianSplit split) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LinearSystem s;
  s.split = split;
  s.J(0, 0) = -0.7;
  auto fill = [&](const std::vector<int>& g) {
    for (int r : g)
      for (int c : g) s.J(r, c) = 0.3 * u(rng);
    for (int r : g) s.J(r, r) -= 1.5;
  };
  if (split == JacobianSplit::TwoBlock) {
    fill({1, 2, 3, 4, 5, 6, 7, 8, 9});
  } else {
    for (const auto& g : four_block_groups()) fill({g[0], g[1], g[2]});
  }
  Vec10 qeq = kin_pack(0.3, Mat3::Identity() + 0.05 * Mat3::Random());
  s.B = -s.J * qeq;
  return s;
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST(Expint, ScalarDecay) {
  LinearizedSource lin;
  lin.Bstar.setZero();
  lin.Jstar.setZero();
  lin.Qstar.setZero();
  const double tau = 0.37;
  lin.Jstar(0, 0) = -1.0 / tau;
  Vec10 q0 = Vec10::Zero();
  q0[0] = 0.8;
  for (double dt : {1e-6, 0.1, 1.0, 50.0}) {
    const Vec10 q = linear_cauchy_solution(lin, q0, dt);
    EXPECT_NEAR(q[0], 0.8 * std::exp(-dt / tau), 1e-15);
  }
}

TEST(Expint, ZeroJacobianUsesSeries) {
  LinearizedSource lin;
  lin.Jstar.setZero();
  lin.Qstar.setZero();
  for (int i = 0; i < 10; ++i) lin.Bstar[i] = 0.1 * (i + 1);
  Vec10 q0 = Vec10::Constant(0.5);
  const Vec10 q = linear_cauchy_solution(lin, q0, 2.0);
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(q[i], 0.5 + 2.0 * lin.Bstar[i]);
}

TEST(Expint, LinearSourceIsExactForAnyStep) {
  for (auto split : {JacobianSplit::FourBlock, JacobianSplit::TwoBlock}) {
    const LinearSystem sys = random_stable_linear(7, split);
    const Vec10 q0 = kin_pack(0.9, Mat3::Identity());
    ExpIntTolerances tol;
    tol.adaptive = false;
    const Indicator C = make_indicator(q0, sys.evaluate(q0, 0.0, false), tol);
    for (double dt : {1e-4, 0.1, 1.0, 10.0}) {
      Vec10 exact;
      exact_propagator_augmented(sys.J, sys.B, q0, dt, exact);
      const StepOutcome so = expint_step(q0, 0.0, dt, sys, tol, C);
      ASSERT_EQ(so.status, StepStatus::Accepted);
      for (int i = 0; i < 10; ++i) EXPECT_NEAR(so.Qnext[i], exact[i], 1e-10 * std::max(1.0, std::abs(exact[i])));
    }
  }
}

TEST(Expint, ThreeByThreeBlockMatchesFineRk4) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LinearizedSource lin;
  lin.Jstar.setZero();
  lin.Bstar.setZero();
  lin.Qstar.setZero();
  Eigen::Matrix3d M;
  for (int i = 0; i < 9; ++i) M(i) = u(rng);
  M -= 2.0 * Eigen::Matrix3d::Identity();
  const std::array<int, 3> g{1, 5, 9};
  for (int r = 0; r < 3; ++r) {
    lin.Bstar[g[r]] = u(rng);
    for (int c = 0; c < 3; ++c) lin.Jstar(g[r], g[c]) = M(r, c);
  }
  Vec10 q0 = Vec10::Zero();
  for (int r : g) q0[r] = u(rng);
  const double T = 1.3;
  const Vec10 q = linear_cauchy_solution(lin, q0, T);

  // independent oracle: RK4 on the 3x3 system with 1e6 steps
  Eigen::Vector3d y(q0[1], q0[5], q0[9]), b(lin.Bstar[1], lin.Bstar[5], lin.Bstar[9]);
  auto f = [&](const Eigen::Vector3d& x) { return Eigen::Vector3d(b + M * x); };
  const long n = 1000000;
  const double h = T / n;
  for (long i = 0; i < n; ++i) {
    const Eigen::Vector3d k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  for (int r = 0; r < 3; ++r) EXPECT_LT(rel(q[g[r]], y[r]), 1e-10);
}

TEST(Expint, ZeroSourceIsFixedPoint) {
  const MaterialPointSystem sys(builtin_material("brittle"), StrainDrive::constant(0.0));
  const Vec10 q0 = virgin_state();
  ExpIntTolerances tol;
  const Indicator C = make_indicator(q0, sys.evaluate(q0, 0.0, false), tol);
  const StepOutcome so = expint_step(q0, 0.0, 1.0, sys, tol, C);
  ASSERT_EQ(so.status, StepStatus::Accepted);
  EXPECT_EQ(so.iterations, 1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(so.Qnext[i], q0[i]);

  IntegrationStats st;
  const auto tr = expint_integrate(q0, 0.0, 20.0, sys, {}, &st);
  EXPECT_LE(st.accepted, 3);
  EXPECT_EQ(tr.back().t, 20.0);
  for (const auto& s : tr) EXPECT_EQ((s.q - q0).norm(), 0.0);
}

TEST(Expint, RejectsLargeStepNearBrittleFailure) {
  const MaterialPointSystem sys(builtin_material("brittle"), StrainDrive::constant(-0.001));
  // state just before failure from the fine RK4 oracle
  const auto tr = oracle_rk4_integrate(virgin_state(), 0.0, 15.0, 150000, sys, {.recordEvery = 150000});
  const Vec10 q = tr.back().q;
  ASSERT_LT(q[0], 1e-3);
  ExpIntTolerances tol;
  const Indicator C = make_indicator(q, sys.evaluate(q, 15.0, false), tol);
  const StepOutcome so = expint_step(q, 15.0, 0.5, sys, tol, C);
  EXPECT_EQ(so.status, StepStatus::Rejected);
  EXPECT_DOUBLE_EQ(so.dtNext, 0.25);
  // the oracle confirms the indicator really changes by more than deltamax
  const auto tr2 = oracle_rk4_integrate(q, 15.0, 15.5, 50000, sys, {.recordEvery = 50000});
  const Indicator Cend = make_indicator(tr2.back().q, sys.evaluate(tr2.back().q, 15.5, false), tol);
  EXPECT_GT(relative_change(Cend, C, tol.epsdelta), tol.deltamax);
}

TEST(Expint, StrictModeRejectsAtIterationCap) {
  const MaterialPointSystem sys(builtin_material("brittle"), StrainDrive::constant(-0.001));
  const auto tr = oracle_rk4_integrate(virgin_state(), 0.0, 15.0, 150000, sys, {.recordEvery = 150000});
  const Vec10 q = tr.back().q;
  ExpIntTolerances tol;
  tol.kmax = 1;
  tol.strict = true;
  tol.deltamax = 1e9;  // isolate the iteration cap
  const Indicator C = make_indicator(q, sys.evaluate(q, 15.0, false), tol);
  EXPECT_EQ(expint_step(q, 15.0, 0.1, sys, tol, C).status, StepStatus::Rejected);
  tol.strict = false;
  EXPECT_EQ(expint_step(q, 15.0, 0.1, sys, tol, C).status, StepStatus::Accepted);
}

TEST(Expint, StallIsReported) {
  EXPECT_THROW(expint_integrate(Vec10(kin_pack(0.0, Mat3::Identity())), 0.0, 1.0, RunawaySystem{}), StallError);
}

TEST(Expint, HitsFinalTimeAndStopTimesExactly) {
  const MaterialPointSystem sys(builtin_material("ductile"), StrainDrive::constant(-0.001));
  ExpIntOptions opt;
  opt.recordSteps = false;
  opt.stopTimes = {0.5, 1.25, 3.0};
  const auto tr = expint_integrate(virgin_state(), 0.0, 4.0, sys, opt);
  ASSERT_EQ(tr.size(), 5u);
  EXPECT_EQ(tr[1].t, 0.5);
  EXPECT_EQ(tr[2].t, 1.25);
  EXPECT_EQ(tr[3].t, 3.0);
  EXPECT_EQ(tr[4].t, 4.0);
}

TEST(Expint, SecondOrderWithForcedSteps) {
  // smooth elasto-plastic transition, no failure in the window
  const MaterialPointSystem sys(builtin_material("ductile"), StrainDrive::constant(-0.001));
  const double T = 6.0;
  const auto ref = oracle_rk4_integrate(virgin_state(), 0.0, T, 200000, sys, {.recordEvery = 200000});
  auto err = [&](long n) {
    ExpIntOptions opt;
    opt.tol.adaptive = false;
    opt.dt0 = T / n;
    opt.recordSteps = false;
    const auto tr = expint_integrate(virgin_state(), 0.0, T, sys, opt);
    return (tr.back().q - ref.back().q).cwiseAbs().maxCoeff();
  };
  const double e1 = err(20), e2 = err(200);
  const double slope = std::log10(e1 / e2);
  std::printf("errors %.3e %.3e slope %.3f\n", e1, e2, slope);
  EXPECT_GE(slope, 1.8);
  EXPECT_LE(slope, 2.2);
}

TEST(Expint, DeterminantPreservedUnderPureRelaxation) {
  MaterialParams m = builtin_material("ductile");
  m.betaI = 0.0;
  m.alphaI = 0.0;
  m.tauI0 = 0.01;
  m.theta0 = 0.0;
  const MaterialPointSystem sys(m, StrainDrive::constant(0.0));
  Mat3 A = Mat3::Identity();
  A(0, 1) = 0.02;
  A(1, 0) = -0.01;
  A(2, 2) = 1.01;
  A(0, 0) = 0.995;
  const double d0 = A.determinant();
  // the drift is the integrator's own error, so it must shrink with the indicator tolerance
  auto run = [&](double deltamax, double& drift) {
    ExpIntOptions opt;
    opt.tol.deltamax = deltamax;
    const auto tr = expint_integrate(kin_pack(0.0, A), 0.0, 10.0 * m.tauI0, sys, opt);
    drift = 0.0;
    for (const auto& s : tr) drift = std::max(drift, std::abs(kin_A(s.q).determinant() - d0) / d0);
    return tr;
  };
  double coarse = 0.0, fine = 0.0;
  run(1e-3, coarse);
  const auto tr = run(1e-4, fine);
  std::printf("det drift %.3e / %.3e\n", coarse, fine);
  EXPECT_LT(coarse, 1e-6);
  EXPECT_LT(fine, 0.1 * coarse);
  // and the distortion has relaxed towards a pure volume change
  EXPECT_LT(finger_deviator(kin_A(tr.back().q)).Gdev.norm(), 1e-4);
}

TEST(Expint, DamageMonotoneAndBoundedForRandomMaterials) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    MaterialParams m = builtin_material("brittle");
    m.theta0 = 1.0 + 20.0 * u(rng);
    m.a = 1.0 + 40.0 * u(rng);
    m.Y0 = 0.5e9 + 1.5e9 * u(rng);
    m.Y1 = 1e6 + 1e8 * u(rng);
    m.betaI = 3e-8 * u(rng);
    const double rate = -0.0005 - 0.004 * u(rng);
    const MaterialPointSystem sys(m, StrainDrive::constant(rate));
    const auto tr = expint_integrate(virgin_state(), 0.0, 20.0, sys);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      ASSERT_GE(tr[i].q[0], 0.0);
      ASSERT_LE(tr[i].q[0], 1.0);
      if (i) {
        ASSERT_GE(tr[i].q[0] - tr[i - 1].q[0], -1e-14) << "trial " << trial << " t=" << tr[i].t;
      }
    }
  }
}

TEST(Expint, FailureTimeMatchesOracle) {
  for (const char* name : {"brittle", "ductile"}) {
    const MaterialPointSystem sys(builtin_material(name), StrainDrive::constant(-0.001));
    const auto ref = oracle_rk4_integrate(virgin_state(), 0.0, 20.0, 1000000, sys, {.recordEvery = 10});
    const auto tr = expint_integrate(virgin_state(), 0.0, 20.0, sys);
    const double tr0 = crossing_time(ref), te = crossing_time(tr);
    std::printf("%s: oracle %.6f expint %.6f\n", name, tr0, te);
    EXPECT_LT(rel(te, tr0), 5e-3);
  }
}

TEST(Expint, TwoAndFourBlockSplitsAgree) {
  const MaterialPointSystem s4(builtin_material("ductile"), StrainDrive::constant(-0.001), {},
                               JacobianSplit::FourBlock);
  const MaterialPointSystem s2(builtin_material("ductile"), StrainDrive::constant(-0.001), {},
                               JacobianSplit::TwoBlock);
  const double t4 = crossing_time(expint_integrate(virgin_state(), 0.0, 20.0, s4));
  const double t2 = crossing_time(expint_integrate(virgin_state(), 0.0, 20.0, s2));
  EXPECT_LT(rel(t4, t2), 1e-3);
}

TEST(Rk4Oracle, QuadraticDecay) {
  Vec10 q0 = Vec10::Zero();
  q0[0] = 1.0;
  const auto tr = oracle_rk4_integrate(q0, 0.0, 3.0, 1000000, QuadraticSystem{}, {.recordEvery = 1000000});
  EXPECT_NEAR(tr.back().q[0], 1.0 / 4.0, 1e-10);
}

TEST(Rk4Oracle, RichardsonRatio) {
  Vec10 q0 = Vec10::Zero();
  q0[0] = 1.0;
  auto err = [&](long n) {
    const auto tr = oracle_rk4_integrate(q0, 0.0, 3.0, n, QuadraticSystem{}, {.recordEvery = n});
    return std::abs(tr.back().q[0] - 0.25);
  };
  EXPECT_GE(err(20) / err(40), 8.0);
  EXPECT_GE(err(40) / err(80), 8.0);
}

TEST(Rk4Oracle, LinearDecayFourthOrder) {
  LinearSystem s;
  s.J(0, 0) = -2.0;
  Vec10 q0 = Vec10::Zero();
  q0[0] = 1.0;
  auto err = [&](long n) {
    return std::abs(oracle_rk4_integrate(q0, 0.0, 1.0, n, s).back().q[0] - std::exp(-2.0));
  };
  EXPECT_NEAR(std::log2(err(16) / err(32)), 4.0, 0.2);
}

TEST(ImplicitEuler, FirstOrderOnLinearDecay) {
  LinearSystem s;
  s.J(0, 0) = -1.0 / 0.5;
  Vec10 q0 = Vec10::Zero();
  q0[0] = 1.0;
  auto err = [&](long n) {
    return std::abs(implicit_euler_integrate(q0, 0.0, 1.0, n, s).back().q[0] - std::exp(-2.0));
  };
  const double e1 = err(1000), e2 = err(2000), e3 = err(4000);
  EXPECT_NEAR(e1 / e2, 2.0, 0.05);
  EXPECT_NEAR(e2 / e3, 2.0, 0.05);
}

TEST(ImplicitEuler, MuchWorseThanExpintOnBrittleFailure) {
  const MaterialPointSystem sys(builtin_material("brittle"), StrainDrive::constant(-0.001));
  const double tref =
      crossing_time(oracle_rk4_integrate(virgin_state(), 0.0, 20.0, 1000000, sys, {.recordEvery = 10}));
  const double tie = crossing_time(implicit_euler_integrate(virgin_state(), 0.0, 20.0, 10000, sys));
  const double tex = crossing_time(expint_integrate(virgin_state(), 0.0, 20.0, sys));
  std::printf("oracle %.6f implicit Euler %.6f expint %.6f\n", tref, tie, tex);
  EXPECT_GE(std::abs(tie - tref), 10.0 * std::abs(tex - tref));
}
