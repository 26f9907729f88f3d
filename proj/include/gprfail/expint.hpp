#pragma once

// Adaptive exponential integrator for the stiff (xi, A) kinetics, plus the
// implicit-Euler and RK4 integrators used to validate it.
//
// A kinetic system is any type providing
//   KineticPoint evaluate(const Vec10& q, double t, bool jacobian) const;
//   double equivalent_stress(const Vec10& q, double t) const;

#include "gprfail/core.hpp"
#include "gprfail/pde.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <string>
#include <tuple>
#include <cmath>
#include <limits>
#include <vector>

namespace gprfail {

struct KineticPoint {
  Vec10 S;                       // source at q
  Mat10 J;                       // block Jacobian (valid when requested)
  JacobianSplit split = JacobianSplit::FourBlock;
  double tau1 = 0.0;             // strain relaxation time
  double damageRate = 0.0;       // theta*|E_xi|
  double Y = 0.0;
};

struct LinearizedSource {
  Vec10 Bstar;
  Mat10 Jstar;
  Vec10 Qstar;
  double tstar = 0.0;
  JacobianSplit split = JacobianSplit::FourBlock;
};

struct ExpIntTolerances {
  double rmax = 1e-8;
  double epsr = 1e-14;
  double deltamax = 0.02;
  double epsdelta = 1e-14;
  int kmax = 8;
  bool strict = false;  // kmax hit counts as a failed step (use with kmax = 3)
  double lambda = 0.8;
  double epsController = 1e-14;
  double dtMax = std::numeric_limits<double>::infinity();
  // Characteristic times are capped so "infinitely slow" states compare equal.
  double timescaleCap = 1e12;
  double rateFloor = 1e-6;  // 1/s; damage rates below this do not limit the step
  double stallFraction = 1e-16;
  bool adaptive = true;  // false: every step accepted at the requested dt
};

inline constexpr int kIndicatorSize = 12;
using Indicator = Eigen::Matrix<double, kIndicatorSize, 1>;

inline Indicator make_indicator(const Vec10& q, const KineticPoint& kp, const ExpIntTolerances& tol) {
  Indicator c;
  c.head<10>() = q;
  const double capRate = 1.0 / tol.timescaleCap;
  c[10] = 1.0 / (1.0 / kp.tau1 + capRate);
  c[11] = 1.0 / (kp.damageRate + tol.rateFloor + capRate);
  return c;
}

template <class V>
inline double relative_change(const V& a, const V& b, double eps) {
  double r = 0.0;
  for (int i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]) / (std::abs(a[i]) + std::abs(b[i]) + eps));
  return r;
}

// Entries of A are measured against the size of the whole matrix: under shear an entry that starts at
// zero would otherwise show a relative change of 1 for any step, however small.
inline double indicator_change(const Indicator& a, const Indicator& b, double eps) {
  const double an = a.segment<9>(1).norm(), bn = b.segment<9>(1).norm();
  double r = 0.0;
  for (int i = 0; i < kIndicatorSize; ++i) {
    const double den = (i >= 1 && i <= 9) ? an + bn : std::abs(a[i]) + std::abs(b[i]);
    r = std::max(r, std::abs(a[i] - b[i]) / (den + eps));
  }
  return r;
}

// Exact solution of dQ/dt = B* + J*(Q - Q*) block by block over dt.
inline Vec10 linear_cauchy_solution(const LinearizedSource& lin, const Vec10& Q0, double dt) {
  Vec10 out = Q0;
  const Vec10 c = lin.Bstar + lin.Jstar * (Q0 - lin.Qstar);

  // scalar xi block
  {
    const double j = lin.Jstar(0, 0);
    const double z = j * dt;
    if (std::abs(z) < 1e-12)
      out[0] = Q0[0] + dt * c[0];
    else
      out[0] = Q0[0] + std::expm1(z) / j * c[0];
  }

  auto solve_block = [&](auto idx) {
    constexpr int n = static_cast<int>(std::tuple_size_v<decltype(idx)>);
    Eigen::Matrix<double, n, n> Jb;
    Eigen::Matrix<double, n, 1> cb;
    for (int r = 0; r < n; ++r) {
      cb[r] = c[idx[r]];
      for (int s = 0; s < n; ++s) Jb(r, s) = lin.Jstar(idx[r], idx[s]);
    }
    const double nrm = Jb.cwiseAbs().rowwise().sum().maxCoeff() * dt;
    Eigen::Matrix<double, n, 1> inc;
    if (!(nrm >= 1e-12)) {
      inc = dt * cb;
    } else {
      // exp([[J dt, c dt], [0, 0]]) carries phi1(J dt) c dt in its last column
      Eigen::Matrix<double, n + 1, n + 1> M = Eigen::Matrix<double, n + 1, n + 1>::Zero();
      M.template topLeftCorner<n, n>() = Jb * dt;
      M.template topRightCorner<n, 1>() = cb * dt;
      const Eigen::Matrix<double, n + 1, n + 1> E = M.exp();
      inc = E.template topRightCorner<n, 1>();
    }
    if (!inc.allFinite()) throw SingularBlock("non-finite block in linearized solution");
    for (int r = 0; r < n; ++r) out[idx[r]] = Q0[idx[r]] + inc[r];
  };

  if (lin.split == JacobianSplit::TwoBlock) {
    solve_block(std::array<int, 9>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  } else {
    for (const auto& g : four_block_groups()) solve_block(g);
  }
  return out;
}

inline bool kinetic_admissible(const Vec10& q) {
  if (!q.allFinite()) return false;
  if (q[0] < 0.0 || q[0] > 1.0) return false;
  return kin_A(q).determinant() > 0.0;
}

enum class StepStatus { Accepted, Rejected };

struct StepOutcome {
  StepStatus status = StepStatus::Rejected;
  Vec10 Qnext;
  double dtNext = 0.0;
  Indicator Cnext;
  int iterations = 0;
  double delta = 0.0;
};

template <class System>
StepOutcome expint_step(const Vec10& Qn, double tn, double dt, const System& sys, const ExpIntTolerances& tol,
                        const Indicator& Cn) {
  StepOutcome out;
  auto reject = [&] {
    out.status = StepStatus::Rejected;
    out.dtNext = 0.5 * dt;
    return out;
  };
  Vec10 Qend = Qn;
  Indicator Cmid;
  bool converged = false;
  try {
    for (int k = 1; k <= tol.kmax; ++k) {
      const Vec10 Qmid = 0.5 * (Qn + Qend);
      if (!Qmid.allFinite() || kin_A(Qmid).determinant() <= 0.0) return reject();
      const double tmid = tn + 0.5 * dt;
      const KineticPoint kp = sys.evaluate(Qmid, tmid, true);
      Cmid = make_indicator(Qmid, kp, tol);
      LinearizedSource lin{kp.S, kp.J, Qmid, tmid, kp.split};
      const Vec10 Qnew = linear_cauchy_solution(lin, Qn, dt);
      out.iterations = k;
      if (!kinetic_admissible(Qnew)) return reject();
      const double r = relative_change(Qnew, Qend, tol.epsr);
      Qend = Qnew;
      if (r <= tol.rmax) {
        converged = true;
        break;
      }
    }
  } catch (const NumericalError&) {
    return reject();
  }
  if (!converged && tol.strict) return reject();

  KineticPoint kend;
  try {
    kend = sys.evaluate(Qend, tn + dt, false);
  } catch (const NumericalError&) {
    return reject();
  }
  out.Cnext = make_indicator(Qend, kend, tol);
  if (!out.Cnext.allFinite()) return reject();
  const double delta = std::max(indicator_change(Cmid, Cn, tol.epsdelta), indicator_change(out.Cnext, Cn, tol.epsdelta));
  out.delta = delta;
  if (tol.adaptive && delta > tol.deltamax) return reject();
  out.status = StepStatus::Accepted;
  out.Qnext = Qend;
  out.dtNext = tol.adaptive ? dt * tol.lambda * tol.deltamax / (delta + tol.epsController) : dt;
  return out;
}

struct KineticSample {
  double t;
  Vec10 q;
};

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  double lastDt = 0.0;
};

struct ExpIntOptions {
  ExpIntTolerances tol;
  double dt0 = 0.0;                 // 0: 1e-3*(tend-t0)
  std::vector<double> stopTimes;    // hit exactly and recorded
  bool recordSteps = true;          // record every accepted step
  // Optional early exit: stop once q[0] (xi) reaches this value.
  double stopAtXi = std::numeric_limits<double>::infinity();
};

template <class System>
std::vector<KineticSample> expint_integrate(const Vec10& Q0, double t0, double tend, const System& sys,
                                            const ExpIntOptions& opt = {}, IntegrationStats* stats = nullptr,
                                            double* dtCarry = nullptr) {
  std::vector<KineticSample> traj;
  traj.push_back({t0, Q0});
  if (!(tend > t0)) return traj;
  const ExpIntTolerances& tol = opt.tol;
  double dt = opt.dt0 > 0 ? opt.dt0 : 1e-3 * (tend - t0);
  if (dtCarry && *dtCarry > 0) dt = *dtCarry;
  const double dtMin = tol.stallFraction * (tend - t0);
  std::vector<double> stops = opt.stopTimes;
  std::sort(stops.begin(), stops.end());
  std::size_t nextStop = 0;
  while (nextStop < stops.size() && stops[nextStop] <= t0) ++nextStop;

  Vec10 q = Q0;
  double t = t0;
  Indicator C = make_indicator(q, sys.evaluate(q, t, false), tol);
  IntegrationStats local;
  while (t < tend) {
    dt = std::min(dt, tol.dtMax);
    double target = tend;
    bool atStop = false;
    if (nextStop < stops.size() && stops[nextStop] < tend) target = stops[nextStop];
    double h = dt;
    bool clipped = false;
    if (t + h >= target) {
      h = target - t;
      clipped = true;
      atStop = target < tend;
    }
    if (h < dtMin)
      throw StallError("exponential integrator stalled at t=" + std::to_string(t) + " (dt=" + std::to_string(h) + ")");
    StepOutcome so = expint_step(q, t, h, sys, tol, C);
    if (so.status == StepStatus::Rejected) {
      if (!tol.adaptive) throw StallError("fixed-step exponential integrator rejected a step at t=" + std::to_string(t));
      ++local.rejected;
      dt = so.dtNext;
      continue;
    }
    ++local.accepted;
    q = so.Qnext;
    C = so.Cnext;
    // a short clipped step should not inflate the next proposal
    if (tol.adaptive) dt = clipped ? std::min(dt, so.dtNext) : so.dtNext;
    local.lastDt = h;
    t = clipped ? target : t + h;
    if (atStop) ++nextStop;
    if (opt.recordSteps || atStop || t >= tend) traj.push_back({t, q});
    if (q[0] >= opt.stopAtXi) break;
  }
  if (stats) {
    stats->accepted += local.accepted;
    stats->rejected += local.rejected;
    stats->lastDt = local.lastDt;
  }
  if (dtCarry) *dtCarry = dt;
  return traj;
}

// ---- reference integrators ---------------------------------------------------

struct FixedStepOptions {
  long recordEvery = 1;
  double stopAtXi = std::numeric_limits<double>::infinity();
};

template <class System>
Vec10 kinetic_rhs(const System& sys, const Vec10& q, double t) {
  return sys.evaluate(q, t, false).S;
}

// Classical RK4 with fixed steps.
template <class System>
std::vector<KineticSample> oracle_rk4_integrate(const Vec10& Q0, double t0, double tend, long nsteps,
                                                const System& sys, const FixedStepOptions& opt = {}) {
  std::vector<KineticSample> traj;
  traj.push_back({t0, Q0});
  const double h = (tend - t0) / static_cast<double>(nsteps);
  Vec10 q = Q0;
  for (long n = 0; n < nsteps; ++n) {
    const double t = t0 + n * h;
    const Vec10 k1 = kinetic_rhs(sys, q, t);
    const Vec10 k2 = kinetic_rhs(sys, q + 0.5 * h * k1, t + 0.5 * h);
    const Vec10 k3 = kinetic_rhs(sys, q + 0.5 * h * k2, t + 0.5 * h);
    const Vec10 k4 = kinetic_rhs(sys, q + h * k3, t + h);
    q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double tn = n + 1 == nsteps ? tend : t0 + (n + 1) * h;
    if ((n + 1) % opt.recordEvery == 0 || n + 1 == nsteps || q[0] >= opt.stopAtXi) traj.push_back({tn, q});
    if (!q.allFinite() || q[0] >= opt.stopAtXi) break;
  }
  return traj;
}

// RK4 with step-doubling error control; used where fixed steps cannot follow
// the fast transient at failure.
template <class System>
std::vector<KineticSample> oracle_rk4_adaptive(const Vec10& Q0, double t0, double tend, const System& sys, double rtol,
                                               double stopAtXi = std::numeric_limits<double>::infinity(),
                                               double dtMax = std::numeric_limits<double>::infinity()) {
  auto step = [&](const Vec10& q, double t, double h) {
    const Vec10 k1 = kinetic_rhs(sys, q, t);
    const Vec10 k2 = kinetic_rhs(sys, q + 0.5 * h * k1, t + 0.5 * h);
    const Vec10 k3 = kinetic_rhs(sys, q + 0.5 * h * k2, t + 0.5 * h);
    const Vec10 k4 = kinetic_rhs(sys, q + h * k3, t + h);
    return Vec10(q + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  std::vector<KineticSample> traj;
  traj.push_back({t0, Q0});
  Vec10 q = Q0;
  double t = t0;
  double h = std::min(1e-6 * (tend - t0), dtMax);
  while (t < tend) {
    h = std::min({h, tend - t, dtMax});
    if (h < 1e-18 * (tend - t0)) throw StallError("adaptive RK4 stalled at t=" + std::to_string(t));
    const Vec10 big = step(q, t, h);
    const Vec10 half = step(step(q, t, 0.5 * h), t + 0.5 * h, 0.5 * h);
    double err = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double sc = i == 0 ? std::abs(half[i]) + 1e-12 : std::abs(half[i]) + 1e-6;
      err = std::max(err, std::abs(half[i] - big[i]) / 15.0 / sc);
    }
    if (!half.allFinite()) err = 1e300;
    if (err <= rtol) {
      q = half + (half - big) / 15.0;
      t = (tend - t <= h) ? tend : t + h;
      traj.push_back({t, q});
      if (q[0] >= stopAtXi) break;
    }
    const double fac = err > 0 ? 0.9 * std::pow(rtol / err, 0.2) : 4.0;
    h *= std::clamp(fac, 0.1, 4.0);
  }
  return traj;
}

struct ImplicitEulerOptions {
  double tol = 1e-12;
  int maxIter = 50;
  long recordEvery = 1;
  double stopAtXi = std::numeric_limits<double>::infinity();
};

namespace detail {

// Damped Newton on F(x)=0 with a forward-difference Jacobian.
template <int N, class F>
bool newton_fd(F&& f, Eigen::Matrix<double, N, 1>& x, double relax, double tol, int maxIter,
               const Eigen::Matrix<double, N, 1>& floor) {
  using V = Eigen::Matrix<double, N, 1>;
  for (int it = 0; it < maxIter; ++it) {
    const V g = f(x);
    if (!g.allFinite()) return false;
    Eigen::Matrix<double, N, N> Jm;
    for (int j = 0; j < N; ++j) {
      const double dj = 1e-7 * std::abs(x[j]) + 1e-20;
      V xp = x;
      xp[j] += dj;
      Jm.col(j) = (f(xp) - g) / dj;
    }
    const V dx = Jm.partialPivLu().solve(-g);
    if (!dx.allFinite()) return false;
    x += relax * dx;
    bool done = true;
    for (int i = 0; i < N; ++i)
      if (std::abs(dx[i]) > tol * std::max(std::abs(x[i]), floor[i])) done = false;
    if (done) return true;
  }
  return false;
}

}  // namespace detail

// Backward Euler with damped Newton and a finite-difference Jacobian. When
// Newton cycles (the damage equation can have several roots once h times the
// growth rate exceeds one) the step falls back to the smallest root
// xi1 >= xi0, found by bracketing with A solved for each trial xi.
template <class System>
std::vector<KineticSample> implicit_euler_integrate(const Vec10& Q0, double t0, double tend, long nsteps,
                                                    const System& sys, const ImplicitEulerOptions& opt = {}) {
  std::vector<KineticSample> traj;
  traj.push_back({t0, Q0});
  const double h = (tend - t0) / static_cast<double>(nsteps);
  Vec10 q = Q0;
  using V9 = Eigen::Matrix<double, 9, 1>;
  Vec10 floor10 = Vec10::Ones();
  floor10[0] = 1e-300;
  const V9 floor9 = V9::Ones();
  for (long n = 0; n < nsteps; ++n) {
    const double t1 = n + 1 == nsteps ? tend : t0 + (n + 1) * h;
    auto G = [&](const Vec10& x) { return Vec10(x - q - h * kinetic_rhs(sys, x, t1)); };
    Vec10 x = q;
    bool ok = detail::newton_fd<10>(G, x, 1.0, opt.tol, opt.maxIter, floor10) && x[0] >= 0.0 && x[0] <= 1.0;
    if (!ok) {
      x = q;
      ok = detail::newton_fd<10>(G, x, 0.5, opt.tol, opt.maxIter, floor10) && x[0] >= 0.0 && x[0] <= 1.0;
    }
    if (!ok) {
      V9 a = q.template tail<9>();
      auto residual = [&](double xi) {
        auto GA = [&](const V9& y) {
          Vec10 z;
          z[0] = xi;
          z.template tail<9>() = y;
          return V9(G(z).template tail<9>());
        };
        if (!detail::newton_fd<9>(GA, a, 1.0, opt.tol, opt.maxIter, floor9))
          throw NewtonDivergence("implicit Euler distortion solve failed at t=" + std::to_string(t1));
        Vec10 z;
        z[0] = xi;
        z.template tail<9>() = a;
        return G(z)[0];
      };
      const double xi0 = q[0];
      double lo = xi0, rlo = residual(lo), hi = lo, rhi = rlo;
      for (int k = 0; k <= 64 && rhi < 0.0; ++k) {
        lo = hi;
        rlo = rhi;
        hi = xi0 + (1.0 - xi0) * std::pow(10.0, -16.0 + 16.0 * k / 64.0);
        rhi = residual(hi);
      }
      if (!(rhi >= 0.0)) throw NewtonDivergence("implicit Euler root bracketing failed at t=" + std::to_string(t1));
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(hi, 1e-300); ++it) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) < 0.0 ? lo : hi) = mid;
      }
      (void)rlo;
      x[0] = hi;
      residual(hi);
      x.template tail<9>() = a;
    }
    q = x;
    if ((n + 1) % opt.recordEvery == 0 || n + 1 == nsteps || q[0] >= opt.stopAtXi) traj.push_back({t1, q});
    if (q[0] >= opt.stopAtXi) break;
  }
  return traj;
}

// First time xi reaches `level`, linearly interpolated between samples; NaN if never.
inline double crossing_time(const std::vector<KineticSample>& traj, double level = 0.5) {
  for (std::size_t i = 1; i < traj.size(); ++i) {
    const double a = traj[i - 1].q[0], b = traj[i].q[0];
    if (a < level && b >= level) {
      const double w = (level - a) / (b - a);
      return traj[i - 1].t + w * (traj[i].t - traj[i - 1].t);
    }
    if (i == 1 && a >= level) return traj[0].t;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace gprfail
