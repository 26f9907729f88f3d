#pragma once

#include "gprfail/core.hpp"
#include "gprfail/eos.hpp"
#include "gprfail/materials.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace gprfail {

inline constexpr int kNumVars = 24;
using State = Eigen::Matrix<double, kNumVars, 1>;

// Slot indices of the conserved vector.
namespace ix {
inline constexpr int alpha = 0;
inline constexpr int rho = 1;
inline constexpr int m = 2;   // m1..m3
inline constexpr int A = 5;   // A11..A33 row-major
inline constexpr int J = 14;  // J1..J3
inline constexpr int xi = 17;
inline constexpr int rhoE = 18;
inline constexpr int lam = 19;
inline constexpr int mu = 20;
inline constexpr int Y0 = 21;
inline constexpr int rho0 = 22;
inline constexpr int mblend = 23;
inline constexpr int a(int i, int k) { return A + 3 * i + k; }
}  // namespace ix

inline const char* slot_name(int s) {
  static const char* names[kNumVars] = {"alpha", "rho", "m1",  "m2",   "m3",  "A11", "A12",     "A13",
                                        "A21",   "A22", "A23", "A31",  "A32", "A33", "J1",      "J2",
                                        "J3",    "xi",  "rhoE", "lam", "mu",  "Y0",  "rho0adv", "mblend"};
  return names[s];
}

// Slots that obey a conservation law (used by diagnostics).
inline constexpr std::array<int, 5> kConservedSlots{ix::rho, ix::m, ix::m + 1, ix::m + 2, ix::rhoE};

// Everything a point evaluation needs besides the state itself.
struct Physics {
  MaterialParams mat0;
  MaterialParams mat1;
  EquivalentStressSpec eq;
  double epsAlpha = 1e-3;
};

inline Mat3 get_A(const State& Q) {
  Mat3 A;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) A(i, k) = Q[ix::a(i, k)];
  return A;
}
inline void set_A(State& Q, const Mat3& A) {
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) Q[ix::a(i, k)] = A(i, k);
}
inline Vec3 get_J(const State& Q) { return Q.segment<3>(ix::J); }

// Blended table with the advected intact moduli, yield stress and reference density.
inline MaterialParams local_material(const State& Q, const Physics& ph) {
  MaterialParams m = blend(ph.mat0, ph.mat1, Q[ix::mblend]);
  m.lamI = Q[ix::lam];
  m.muI = Q[ix::mu];
  m.Y0 = Q[ix::Y0];
  m.rho0 = Q[ix::rho0];
  return m;
}

inline Vec3 velocity(const State& Q, double epsAlpha) {
  const double a = std::max(Q[ix::alpha], epsAlpha);
  return Q.segment<3>(ix::m) / (a * Q[ix::rho]);
}

struct Primitive {
  double alpha = 1.0;
  double rho = 1.0;
  Vec3 v = Vec3::Zero();
  Mat3 A = Mat3::Identity();
  Vec3 J = Vec3::Zero();
  double xi = 0.0;
  double S = 0.0;
  double lam = 1.0, mu = 1.0, Y0 = 1e22, rho0adv = 1.0, mblend = 0.0;
  bool degenerateAlpha = false;
};

inline Primitive cons_to_prim(const State& Q, const MaterialParams& mat, double epsAlpha = 1e-3) {
  Primitive P;
  P.alpha = Q[ix::alpha];
  P.rho = Q[ix::rho];
  P.degenerateAlpha = P.alpha < epsAlpha;
  P.v = velocity(Q, epsAlpha);
  P.A = get_A(Q);
  P.J = get_J(Q);
  P.xi = Q[ix::xi];
  P.lam = Q[ix::lam];
  P.mu = Q[ix::mu];
  P.Y0 = Q[ix::Y0];
  P.rho0adv = Q[ix::rho0];
  P.mblend = Q[ix::mblend];
  P.S = entropy_from_energy(P.rho, P.v, P.A, P.J, P.xi, Q[ix::rhoE], mat);
  return P;
}

inline State prim_to_cons(const Primitive& P, const MaterialParams& mat) {
  State Q;
  Q[ix::alpha] = P.alpha;
  Q[ix::rho] = P.rho;
  Q.segment<3>(ix::m) = P.alpha * P.rho * P.v;
  set_A(Q, P.A);
  Q.segment<3>(ix::J) = P.J;
  Q[ix::xi] = P.xi;
  ThermoState ts{P.rho, P.S, P.A, P.J, P.xi};
  Q[ix::rhoE] = P.rho * specific_total_energy(ts, P.v, mat);
  Q[ix::lam] = P.lam;
  Q[ix::mu] = P.mu;
  Q[ix::Y0] = P.Y0;
  Q[ix::rho0] = P.rho0adv;
  Q[ix::mblend] = P.mblend;
  return Q;
}

// Derived quantities of one state, computed once and shared by flux, source
// and signal-speed evaluation.
struct PointEval {
  MaterialParams mat;
  Moduli mod;
  double alpha, rho, xi, rhoE, S, p, T;
  Vec3 v, J;
  Mat3 A;
  Finger f;
  Mat3 sigma;  // shear + thermal
  bool degenerate;

  Mat3 Sigma() const {
    Mat3 s = sigma;
    s.diagonal().array() -= p;
    return s;
  }
};

inline PointEval eval_point(const State& Q, const Physics& ph) {
  PointEval e;
  e.mat = local_material(Q, ph);
  e.alpha = Q[ix::alpha];
  e.rho = Q[ix::rho];
  e.xi = Q[ix::xi];
  e.rhoE = Q[ix::rhoE];
  e.degenerate = e.alpha < ph.epsAlpha;
  e.v = velocity(Q, ph.epsAlpha);
  e.A = get_A(Q);
  e.J = get_J(Q);
  if (!(e.rho > 0.0)) throw NonPhysicalEnergy("non-positive density");
  e.mod = mixture_moduli(std::clamp(e.xi, 0.0, 1.0), e.mat);
  e.f = finger_deviator(e.A);
  const double rest = e.rhoE / e.rho - 0.5 * e.v.squaredNorm() - meso_energy(e.f.Gdev, e.J, e.mod.mu, e.mat) -
                      volumetric_energy(e.rho, e.mod.K, e.mat);
  const double r = e.rho / e.mat.rho0;
  const double x = rest / (e.mat.cv * e.mat.T0 * r);
  if (!(x > -1.0 + 1e-14)) throw NonPhysicalEnergy("internal energy below the cold curve");
  e.S = e.mat.cv * std::log1p(x);
  const double K = e.mod.K;
  e.p = e.rho * e.rho * (-K / (e.mat.rho0 * e.mat.rho0) * (1.0 - r) + e.mat.cv * e.mat.T0 / e.mat.rho0 * x);
  e.T = e.mat.T0 * r * (1.0 + x);
  e.sigma = -e.rho * (e.mod.mu / e.mat.rho0) * e.f.G * e.f.Gdev +
            e.rho * e.mat.ch * e.mat.ch * e.J * e.J.transpose();
  return e;
}

inline State flux_from(const PointEval& e, int k) {
  State F = State::Zero();
  const double vk = e.v[k];
  F[ix::rho] = e.rho * vk;
  for (int i = 0; i < 3; ++i)
    F[ix::m + i] = e.alpha * (e.rho * e.v[i] * vk + (i == k ? e.p : 0.0) - e.sigma(i, k));
  const Vec3 Av = e.A * e.v;
  for (int i = 0; i < 3; ++i) F[ix::a(i, k)] = Av[i];
  // T enters only through its gradient; measuring it from T0 keeps the flux
  // of a resting reference state exactly zero.
  F[ix::J + k] = e.v.dot(e.J) + (e.T - e.mat.T0);
  double work = 0.0;
  for (int i = 0; i < 3; ++i) work += e.v[i] * ((i == k ? e.p : 0.0) - e.sigma(i, k));
  F[ix::rhoE] = vk * e.rhoE + work;
  return F;
}

inline State flux(const State& Q, int k, const Physics& ph) { return flux_from(eval_point(Q, ph), k); }

// B(Q) grad Q for a state with velocity v; gradients along x and y (z derivatives vanish).
inline State ncp_from_velocity(const Vec3& v, const State& gx, const State& gy) {
  State out = State::Zero();
  const State* g[2] = {&gx, &gy};
  auto d = [&](int slot, int dir) { return dir < 2 ? (*g[dir])[slot] : 0.0; };
  const double vx = v[0], vy = v[1];
  for (int s : {ix::alpha, ix::xi, ix::lam, ix::mu, ix::Y0, ix::rho0, ix::mblend})
    out[s] = vx * gx[s] + vy * gy[s];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      double acc = 0.0;
      for (int m = 0; m < 3; ++m) acc += v[m] * (d(ix::a(i, k), m) - d(ix::a(i, m), k));
      out[ix::a(i, k)] = acc;
    }
  for (int k = 0; k < 3; ++k) {
    double acc = 0.0;
    for (int m = 0; m < 3; ++m) acc += v[m] * (d(ix::J + k, m) - d(ix::J + m, k));
    out[ix::J + k] = acc;
  }
  return out;
}

inline State noncons_product(const State& Q, const State& gx, const State& gy, const Physics& ph) {
  return ncp_from_velocity(velocity(Q, ph.epsAlpha), gx, gy);
}

// B(Q) dQ along one axis only.
inline State ncp_dir(const Vec3& v, const State& dQ, int dir) {
  static const State zero = State::Zero();
  return dir == 0 ? ncp_from_velocity(v, dQ, zero) : ncp_from_velocity(v, zero, dQ);
}

// ---- algebraic sources -------------------------------------------------------

inline Mat3 strain_relaxation_source(const Mat3& A, const Mat3& Gdev, double tau1) {
  const double d = A.determinant();
  return -(3.0 / tau1) * std::pow(d, 5.0 / 3.0) * A * Gdev;
}

// Damage source -theta*E_xi, clipped at zero so xi stays monotone even for
// tables whose damaged bulk modulus slightly exceeds the intact one.
inline double damage_source(double xi, double Y, double rho, const Mat3& Gdev, const MaterialParams& m) {
  const double th = damage_rate_theta(xi, Y, m);
  if (th == 0.0) return 0.0;
  return std::max(0.0, -th * energy_xi_derivative(rho, Gdev, xi, m));
}

inline double thermal_relaxation_rate(double rho, double T, const MaterialParams& m) { return rho * T / m.tau2; }

struct SourceParts {
  bool relaxation = true;  // A and xi
  bool thermal = true;     // J
};

inline State algebraic_source_from(const PointEval& e, const EquivalentStressSpec& eq, SourceParts parts = {}) {
  State S = State::Zero();
  if (parts.relaxation) {
    const double Y = equivalent_stress(e.Sigma(), eq);
    const double xi = std::clamp(e.xi, 0.0, 1.0);
    const double tau1 = relaxation_time(xi, Y, e.mat);
    const Mat3 SA = strain_relaxation_source(e.A, e.f.Gdev, tau1);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) S[ix::a(i, k)] = SA(i, k);
    S[ix::xi] = damage_source(xi, Y, e.rho, e.f.Gdev, e.mat);
  }
  if (parts.thermal) S.segment<3>(ix::J) = -thermal_relaxation_rate(e.rho, e.T, e.mat) * e.J;
  return S;
}

inline State algebraic_source(const State& Q, const Physics& ph) {
  return algebraic_source_from(eval_point(Q, ph), ph.eq);
}

// Estimate of the fastest characteristic speed along unit normal n. The
// factor grows with compression and distortion so the estimate stays above
// the spectrum of the quasilinear matrix; it is exactly 1 at the reference state.
inline double signal_speed_from(const PointEval& e, const Vec3& n) {
  const double lam = e.mat.lamI, mu = e.mat.muI;
  const double M = std::max(lam + 2.0 * mu, e.mod.K + 4.0 / 3.0 * e.mod.mu);
  const double strain = std::abs(e.rho / e.mat.rho0 - 1.0) + e.f.Gdev.norm();
  const double thermal = std::abs(e.p) / M;
  const double factor = 1.0 + 3.0 * strain + 3.0 * thermal;
  const double c = std::sqrt(M / e.rho) * factor;
  return std::abs(e.v.dot(n)) + std::max(c, e.mat.ch);
}

inline double max_signal_speed(const State& Q, const Vec3& n, const Physics& ph) {
  return signal_speed_from(eval_point(Q, ph), n);
}

// ---- kinetic (xi, A) subsystem ----------------------------------------------

using Vec10 = Eigen::Matrix<double, 10, 1>;
using Mat10 = Eigen::Matrix<double, 10, 10>;

// KineticState packing: (xi, A11, A12, A13, A21, ..., A33).
inline Mat3 kin_A(const Vec10& q) {
  Mat3 A;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) A(i, k) = q[1 + 3 * i + k];
  return A;
}
inline Vec10 kin_pack(double xi, const Mat3& A) {
  Vec10 q;
  q[0] = xi;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) q[1 + 3 * i + k] = A(i, k);
  return q;
}
inline Vec10 kin_from_state(const State& Q) { return kin_pack(Q[ix::xi], get_A(Q)); }
inline void kin_to_state(const Vec10& q, State& Q) {
  Q[ix::xi] = q[0];
  set_A(Q, kin_A(q));
}

enum class JacobianSplit { TwoBlock, FourBlock };

// Index groups of the four-block split within the 10-vector.
inline const std::array<std::array<int, 3>, 3>& four_block_groups() {
  static const std::array<std::array<int, 3>, 3> g{{{1, 5, 9}, {2, 3, 4}, {6, 7, 8}}};
  return g;
}

struct KineticJacobian {
  Vec10 S;  // exact nonlinear source at q
  Mat10 J;  // block diagonal according to `split`
  JacobianSplit split;
};

// Source of the (xi, A) kinetics at given density and equivalent stress.
inline Vec10 kinetic_source(const Vec10& q, double Y, double rho, double tau1, const MaterialParams& m) {
  const Mat3 A = kin_A(q);
  const Finger f = finger_deviator(A);
  Vec10 s;
  s[0] = damage_source(std::clamp(q[0], 0.0, 1.0), Y, rho, f.Gdev, m);
  const Mat3 SA = strain_relaxation_source(A, f.Gdev, tau1);
  for (int i = 0; i < 9; ++i) s[1 + i] = SA(i / 3, i % 3);
  return s;
}

// d(-(3/tau) det(A)^{5/3} A Gdev)/dA with tau frozen; row r = output slot,
// column c = input slot, both in row-major A ordering.
inline Eigen::Matrix<double, 9, 9> relaxation_jacobian(const Mat3& A, double tau1) {
  const double d = A.determinant();
  const double d53 = std::pow(d, 5.0 / 3.0);
  const Mat3 AinvT = A.inverse().transpose();
  const Finger f = finger_deviator(A);
  const Mat3 AG = A * f.Gdev;
  Eigen::Matrix<double, 9, 9> Jm;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      Mat3 E = Mat3::Zero();
      E(k, l) = 1.0;
      Mat3 dG = E.transpose() * A + A.transpose() * E;
      dG.diagonal().array() -= 2.0 * A(k, l) / 3.0;
      const Mat3 dS = (5.0 / 3.0) * d53 * AinvT(k, l) * AG + d53 * (E * f.Gdev + A * dG);
      for (int r = 0; r < 9; ++r) Jm(r, 3 * k + l) = -(3.0 / tau1) * dS(r / 3, r % 3);
    }
  return Jm;
}

// Block Jacobian of the kinetic source at q. tau1 and Y are frozen; the xi
// block is a central difference of the scalar damage source.
inline KineticJacobian source_jacobian_blocks(const Vec10& q, double Y, double rho, const MaterialParams& m,
                                              JacobianSplit split, double tau1) {
  KineticJacobian out;
  out.split = split;
  out.S = kinetic_source(q, Y, rho, tau1, m);
  out.J.setZero();
  const Mat3 A = kin_A(q);
  const Mat3 Gdev = finger_deviator(A).Gdev;
  const double xi = q[0];
  const double h = 1e-7 * (std::abs(xi) + m.xiEps) + 1e-300;
  auto sxi = [&](double x) {
    const double th = m.theta0 * (1.0 - x) * (x + m.xiEps) *
                      ((1.0 - x) * (Y > 0 ? clamped_exp(m.a * std::log(Y / m.Y0)) : 0.0) + x * (Y / m.Y1));
    return std::max(0.0, -std::max(th, 0.0) * energy_xi_derivative(rho, Gdev, std::clamp(x, 0.0, 1.0), m));
  };
  // one-sided near the ends of [0,1], where the clipped rate has a kink
  const double hi = std::min(xi + h, 1.0), lo = std::max(xi - h, 0.0);
  out.J(0, 0) = hi > lo ? (sxi(hi) - sxi(lo)) / (hi - lo) : 0.0;
  const auto JA = relaxation_jacobian(A, tau1);
  if (split == JacobianSplit::TwoBlock) {
    out.J.block<9, 9>(1, 1) = JA;
  } else {
    for (const auto& g : four_block_groups())
      for (int r : g)
        for (int c : g) out.J(r, c) = JA(r - 1, c - 1);
  }
  return out;
}

}  // namespace gprfail
