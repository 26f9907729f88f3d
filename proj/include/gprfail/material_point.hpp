#pragma once

// Homogeneous sample driven by a prescribed uniaxial strain rate.

#include "gprfail/eos.hpp"
#include "gprfail/expint.hpp"
#include "gprfail/materials.hpp"
#include "gprfail/pde.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <vector>

namespace gprfail {

struct StrainDrive {
  enum class Kind { Constant, Sinusoidal, Composite };
  Kind kind = Kind::Constant;
  double rate = 0.0;       // constant rate
  double amplitude = 0.0;  // sinusoidal rate amplitude
  double frequency = 1.0;
  std::vector<std::pair<double, StrainDrive>> segments;  // (duration, drive)

  static StrainDrive constant(double r) {
    StrainDrive d;
    d.rate = r;
    return d;
  }
  static StrainDrive sinusoidal(double amp, double f) {
    StrainDrive d;
    d.kind = Kind::Sinusoidal;
    d.amplitude = amp;
    d.frequency = f;
    return d;
  }
  static StrainDrive composite(std::vector<std::pair<double, StrainDrive>> segs) {
    for (const auto& s : segs)
      if (!(s.first > 0.0)) throw std::invalid_argument("drive segment durations must be positive");
    StrainDrive d;
    d.kind = Kind::Composite;
    d.segments = std::move(segs);
    return d;
  }

  double strain_rate(double t) const {
    switch (kind) {
      case Kind::Constant:
        return rate;
      case Kind::Sinusoidal:
        return amplitude * std::sin(2.0 * std::numbers::pi * frequency * t);
      case Kind::Composite: {
        double t0 = 0.0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
          const auto& [dur, d] = segments[i];
          if (t < t0 + dur || i + 1 == segments.size()) return d.strain_rate(t - t0);
          t0 += dur;
        }
        return 0.0;
      }
    }
    return 0.0;
  }

  // Integrated rate from 0 to t.
  double strain(double t) const {
    switch (kind) {
      case Kind::Constant:
        return rate * t;
      case Kind::Sinusoidal: {
        const double w = 2.0 * std::numbers::pi * frequency;
        return amplitude * (1.0 - std::cos(w * t)) / w;
      }
      case Kind::Composite: {
        double t0 = 0.0, e = 0.0;
        for (std::size_t i = 0; i < segments.size(); ++i) {
          const auto& [dur, d] = segments[i];
          if (t < t0 + dur || i + 1 == segments.size()) return e + d.strain(t - t0);
          e += d.strain(dur);
          t0 += dur;
        }
        return e;
      }
    }
    return 0.0;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> b;
    double t0 = 0.0;
    for (const auto& s : segments) b.push_back(t0 += s.first);
    return b;
  }
};

class MaterialPointSystem {
 public:
  MaterialPointSystem(MaterialParams mat, StrainDrive drive, EquivalentStressSpec eq = {},
                      JacobianSplit split = JacobianSplit::FourBlock)
      : mat_(mat), drive_(std::move(drive)), eq_(eq), split_(split) {}

  struct Local {
    double xi, rho, Y, tau1;
    Mat3 A, Sigma;
  };

  Local local(const Vec10& q) const {
    Local l;
    l.A = kin_A(q);
    l.xi = std::clamp(q[0], 0.0, 1.0);
    l.rho = mat_.rho0 * l.A.determinant();
    ThermoState s;
    s.rho = l.rho;
    s.A = l.A;
    s.xi = l.xi;
    l.Sigma = stress_tensor(s, mat_).Sigma;
    l.Y = equivalent_stress(l.Sigma, eq_);
    l.tau1 = relaxation_time(l.xi, l.Y, mat_);
    return l;
  }

  KineticPoint evaluate(const Vec10& q, double t, bool jacobian) const {
    const Local l = local(q);
    if (!(l.rho > 0.0)) throw NonPhysicalEnergy("material point with non-positive det A");
    KineticPoint kp;
    kp.Y = l.Y;
    kp.tau1 = l.tau1;
    kp.split = split_;
    const double r = drive_.strain_rate(t);
    if (jacobian) {
      const KineticJacobian kj = source_jacobian_blocks(q, l.Y, l.rho, mat_, split_, l.tau1);
      kp.S = kj.S;
      kp.J = kj.J;
      for (int i = 0; i < 3; ++i) kp.J(1 + 3 * i, 1 + 3 * i) -= r;
    } else {
      kp.S = kinetic_source(q, l.Y, l.rho, l.tau1, mat_);
    }
    for (int i = 0; i < 3; ++i) kp.S[1 + 3 * i] -= l.A(i, 0) * r;
    const Mat3 Gdev = finger_deviator(l.A).Gdev;
    kp.damageRate = damage_rate_theta(l.xi, l.Y, mat_) * std::abs(energy_xi_derivative(l.rho, Gdev, l.xi, mat_));
    return kp;
  }

  double equivalent_stress_at(const Vec10& q) const { return local(q).Y; }
  double von_mises_at(const Vec10& q) const { return von_mises(local(q).Sigma); }

  const StrainDrive& drive() const { return drive_; }
  const MaterialParams& material() const { return mat_; }

 private:
  MaterialParams mat_;
  StrainDrive drive_;
  EquivalentStressSpec eq_;
  JacobianSplit split_;
};

inline Vec10 material_point_rhs(const Vec10& q, double t, const StrainDrive& drive, const MaterialParams& mat,
                                const EquivalentStressSpec& eq = {}) {
  return MaterialPointSystem(mat, drive, eq).evaluate(q, t, false).S;
}

inline Vec10 virgin_state() { return kin_pack(0.0, Mat3::Identity()); }

struct DiagramSample {
  double t, strain, Y, xi, A11;
};
using Diagram = std::vector<DiagramSample>;

inline Diagram to_diagram(const std::vector<KineticSample>& traj, const MaterialPointSystem& sys) {
  Diagram d;
  d.reserve(traj.size());
  for (const auto& s : traj)
    d.push_back({s.t, sys.drive().strain(s.t), sys.von_mises_at(s.q), s.q[0], s.q[1]});
  return d;
}

// Keeps at most n samples (uniform in index), always including the ends.
inline Diagram thin_diagram(const Diagram& d, std::size_t n) {
  if (n == 0 || d.size() <= n) return d;
  Diagram out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(d[i * (d.size() - 1) / (n - 1)]);
  return out;
}

inline double peak_stress(const Diagram& d) {
  double p = 0.0;
  for (const auto& s : d) p = std::max(p, s.Y);
  return p;
}

inline double failure_time(const Diagram& d, double level = 0.5) {
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i - 1].xi < level && d[i].xi >= level)
      return d[i - 1].t + (level - d[i - 1].xi) / (d[i].xi - d[i - 1].xi) * (d[i].t - d[i - 1].t);
  return std::numeric_limits<double>::quiet_NaN();
}

inline Diagram stress_strain_test(const MaterialParams& mat, double rate, double tend, std::size_t nsamples = 0,
                                  const ExpIntOptions& opt = {}, IntegrationStats* stats = nullptr) {
  if (rate == 0.0) throw std::invalid_argument("strain rate must be nonzero");
  const MaterialPointSystem sys(mat, StrainDrive::constant(rate));
  return thin_diagram(to_diagram(expint_integrate(virgin_state(), 0.0, tend, sys, opt, stats), sys), nsamples);
}

inline std::vector<Diagram> rate_sweep(const MaterialParams& mat, const std::vector<double>& rates, double tend,
                                       const ExpIntOptions& opt = {}) {
  std::vector<Diagram> out;
  for (double r : rates) out.push_back(stress_strain_test(mat, r, tend, 0, opt));
  return out;
}

// Exponential integrator against the fixed-step RK4 oracle (dt = 1e-6*tend)
// on a constant-rate test; Y is compared on the oracle sample grid
// before 0.99 of the oracle failure time.
struct OracleComparison {
  double tFailExpint = std::numeric_limits<double>::quiet_NaN();
  double tFailOracle = std::numeric_limits<double>::quiet_NaN();
  double maxRelY = 0.0;
  double peakExpint = 0.0, peakOracle = 0.0;
  long expintSteps = 0;
  Diagram expint, oracle;
};

inline OracleComparison compare_with_oracle(const MaterialParams& mat, double rate, double tend,
                                            const ExpIntOptions& optIn = {}, long oracleSteps = 1000000) {
  const MaterialPointSystem sys(mat, StrainDrive::constant(rate));
  OracleComparison c;
  const auto fine = oracle_rk4_integrate(virgin_state(), 0.0, tend, oracleSteps, sys, {.recordEvery = 10});
  c.tFailOracle = crossing_time(fine);
  // comparison grid of about 2000 points
  std::vector<KineticSample> ref;
  const std::size_t every = std::max<std::size_t>(1, fine.size() / 2000);
  for (std::size_t i = 0; i < fine.size(); i += every) ref.push_back(fine[i]);
  c.oracle = to_diagram(ref, sys);

  ExpIntOptions opt = optIn;
  opt.recordSteps = true;
  for (const auto& s : ref) opt.stopTimes.push_back(s.t);
  IntegrationStats st;
  const auto tr = expint_integrate(virgin_state(), 0.0, tend, sys, opt, &st);
  c.expintSteps = st.accepted;
  c.expint = to_diagram(tr, sys);
  c.tFailExpint = crossing_time(tr);
  c.peakExpint = peak_stress(c.expint);
  c.peakOracle = peak_stress(c.oracle);

  const double tcut = std::isnan(c.tFailOracle) ? tend : 0.99 * c.tFailOracle;
  std::size_t j = 0;
  for (const auto& r : c.oracle) {
    if (r.t <= 0.0 || r.t > tcut) continue;
    while (j < c.expint.size() && c.expint[j].t < r.t) ++j;
    if (j == c.expint.size() || c.expint[j].t != r.t) continue;
    const double d = std::abs(c.expint[j].Y - r.Y) / std::max(std::abs(r.Y), 1e-12 * c.peakOracle);
    c.maxRelY = std::max(c.maxRelY, d);
  }
  return c;
}

struct FatigueResult {
  double residualStrength = std::numeric_limits<double>::quiet_NaN();
  double xiEndOfCycling = 0.0;
  Diagram history;  // log-spaced in time
  long steps = 0;
};

inline constexpr double kDestructiveStrainCap = 0.1;

inline FatigueResult fatigue_test(const MaterialParams& mat, double amplitude, double frequency, long ncycles,
                                  double destructiveRate, const ExpIntOptions& optIn = {}) {
  FatigueResult res;
  if (destructiveRate == 0.0) {
    std::cerr << "warning: destructive rate is zero, strength undefined\n";
    return res;
  }
  const double tCycle = ncycles > 0 ? ncycles / frequency : 0.0;
  const double tDestroy = kDestructiveStrainCap / std::abs(destructiveRate);
  std::vector<std::pair<double, StrainDrive>> segs;
  if (ncycles > 0) segs.push_back({tCycle, StrainDrive::sinusoidal(amplitude, frequency)});
  segs.push_back({tDestroy, StrainDrive::constant(destructiveRate)});
  const MaterialPointSystem sys(mat, StrainDrive::composite(segs));

  ExpIntOptions opt = optIn;
  opt.recordSteps = false;
  opt.stopAtXi = 0.99;
  // log-spaced samples plus the cycling/destructive boundary
  std::vector<double> stops;
  const double tEnd = tCycle + tDestroy;
  for (int i = 0; i <= 400; ++i) stops.push_back(tEnd * std::pow(10.0, -8.0 + 8.0 * i / 400.0));
  if (ncycles > 0) stops.push_back(tCycle);
  opt.stopTimes = stops;

  // cycling phase
  Vec10 q = virgin_state();
  IntegrationStats st;
  std::vector<KineticSample> all;
  double dtCarry = 0.0;
  if (ncycles > 0) {
    ExpIntOptions oc = opt;
    oc.stopAtXi = std::numeric_limits<double>::infinity();
    oc.dt0 = 0.01 / frequency;
    auto tr = expint_integrate(q, 0.0, tCycle, sys, oc, &st, &dtCarry);
    q = tr.back().q;
    all.insert(all.end(), tr.begin(), tr.end());
    res.xiEndOfCycling = q[0];
  }
  // destructive phase with dense recording for the peak
  ExpIntOptions od = opt;
  od.recordSteps = true;
  od.dt0 = 1e-3 * tDestroy;
  const auto tr = expint_integrate(q, tCycle, tEnd, sys, od, &st);
  double peak = 0.0;
  for (const auto& s : tr) peak = std::max(peak, sys.von_mises_at(s.q));
  res.residualStrength = peak;
  all.insert(all.end(), tr.begin() + (ncycles > 0 ? 1 : 0), tr.end());
  res.steps = st.accepted;

  // keep the log-spaced stops for the history
  Diagram full = to_diagram(all, sys);
  std::size_t k = 0;
  for (const auto& s : full) {
    while (k < stops.size() && stops[k] < s.t * (1 - 1e-12)) ++k;
    if (k < stops.size() && std::abs(stops[k] - s.t) <= 1e-12 * std::max(1.0, s.t)) res.history.push_back(s);
  }
  if (res.history.empty() || res.history.back().t != full.back().t) res.history.push_back(full.back());
  return res;
}

struct WohlerPoint {
  long N;
  double strength;
};

inline std::vector<WohlerPoint> wohler_curve(const MaterialParams& mat, const std::vector<long>& Nlist,
                                             double amplitude, double frequency, double destructiveRate,
                                             const ExpIntOptions& opt = {}) {
  if (Nlist.empty()) throw std::invalid_argument("empty cycle list");
  std::vector<WohlerPoint> out;
  for (long N : Nlist) out.push_back({N, fatigue_test(mat, amplitude, frequency, N, destructiveRate, opt).residualStrength});
  return out;
}

}  // namespace gprfail
