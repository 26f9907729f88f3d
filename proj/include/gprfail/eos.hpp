#pragma once

#include "gprfail/core.hpp"
#include "gprfail/materials.hpp"

#include <cmath>

namespace gprfail {

struct ThermoState {
  double rho = 1.0;
  double S = 0.0;
  Mat3 A = Mat3::Identity();
  Vec3 J = Vec3::Zero();
  double xi = 0.0;
};

struct Finger {
  Mat3 G;
  Mat3 Gdev;
};

inline Finger finger_deviator(const Mat3& A) {
  Finger f;
  f.G = A.transpose() * A;
  f.Gdev = f.G;
  f.Gdev.diagonal().array() -= f.G.trace() / 3.0;
  return f;
}

// Pieces of the energy that do not involve entropy or velocity.
inline double volumetric_energy(double rho, double K, const MaterialParams& m) {
  return K / (2.0 * m.rho0) * sqr(1.0 - rho / m.rho0);
}

inline double meso_energy(const Mat3& Gdev, const Vec3& J, double mu, const MaterialParams& m) {
  return 0.25 * (mu / m.rho0) * ddot(Gdev, Gdev) + 0.5 * m.ch * m.ch * J.squaredNorm();
}

inline double thermal_energy(double rho, double S, const MaterialParams& m) {
  return m.cv * m.T0 * (rho / m.rho0) * std::expm1(S / m.cv);
}

inline double specific_total_energy(const ThermoState& s, const Vec3& v, const MaterialParams& m) {
  const Moduli mod = mixture_moduli(s.xi, m);
  const Finger f = finger_deviator(s.A);
  return volumetric_energy(s.rho, mod.K, m) + thermal_energy(s.rho, s.S, m) +
         meso_energy(f.Gdev, s.J, mod.mu, m) + 0.5 * v.squaredNorm();
}

// Inverts the energy for S given the volumetric total energy rhoE.
inline double entropy_from_energy(double rho, const Vec3& v, const Mat3& A, const Vec3& J, double xi,
                                  double rhoE, const MaterialParams& m) {
  const Moduli mod = mixture_moduli(xi, m);
  const Finger f = finger_deviator(A);
  const double rest = rhoE / rho - 0.5 * v.squaredNorm() - meso_energy(f.Gdev, J, mod.mu, m) -
                      volumetric_energy(rho, mod.K, m);
  const double x = rest / (m.cv * m.T0 * (rho / m.rho0));
  if (!(x > -1.0 + 1e-14)) throw NonPhysicalEnergy("internal energy below the cold curve");
  return m.cv * std::log1p(x);
}

struct Thermo {
  double p;
  double T;
};

inline Thermo thermodynamic_closure(double rho, double S, double xi, const MaterialParams& m) {
  const double K = mixture_moduli(xi, m).K;
  const double r = rho / m.rho0;
  const double dE1 = -K / (m.rho0 * m.rho0) * (1.0 - r) + m.cv * m.T0 / m.rho0 * std::expm1(S / m.cv);
  return {rho * rho * dE1, m.T0 * r * std::exp(S / m.cv)};
}

struct Stress {
  Mat3 Sigma;  // total
  Mat3 sigma;  // shear + thermal part
};

// Shear and thermal stress; `mu` is the mixture shear modulus.
inline Mat3 shear_stress(double rho, const Mat3& A, const Vec3& J, double mu, const MaterialParams& m) {
  const Finger f = finger_deviator(A);
  return -rho * (mu / m.rho0) * f.G * f.Gdev + rho * m.ch * m.ch * J * J.transpose();
}

inline Stress stress_tensor(const ThermoState& s, const MaterialParams& m) {
  const Moduli mod = mixture_moduli(s.xi, m);
  Stress out;
  out.sigma = shear_stress(s.rho, s.A, s.J, mod.mu, m);
  const double p = thermodynamic_closure(s.rho, s.S, s.xi, m).p;
  out.Sigma = out.sigma;
  out.Sigma.diagonal().array() -= p;
  return out;
}

enum class EqStressKind { VonMises, LinearCombination, ErfSmoothed, DruckerPrager };

struct EquivalentStressSpec {
  EqStressKind kind = EqStressKind::VonMises;
  double A = 1.0, B = 0.0, C = 0.0;
  double s0 = 0.0;
  double epsSmooth = 1.0;
};

inline double von_mises(const Mat3& Sigma) {
  Mat3 dev = Sigma;
  dev.diagonal().array() -= Sigma.trace() / 3.0;
  return std::sqrt(1.5 * ddot(dev, dev));
}

inline double equivalent_stress(const Mat3& Sigma, const EquivalentStressSpec& spec) {
  const double Ys = von_mises(Sigma);
  const double Yp = Sigma.trace() / 3.0;
  switch (spec.kind) {
    case EqStressKind::VonMises:
      return Ys;
    case EqStressKind::LinearCombination:
      return spec.A * Ys + spec.B * std::abs(Yp);
    case EqStressKind::ErfSmoothed: {
      const double d = Ys - spec.s0;
      return spec.B * std::abs(Yp) + spec.A * 0.5 * d * (1.0 + std::erf(d / spec.epsSmooth));
    }
    case EqStressKind::DruckerPrager:
      return spec.A * std::abs(Ys) + spec.B * Yp + spec.C;
  }
  return Ys;
}

}  // namespace gprfail
