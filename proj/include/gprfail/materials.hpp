#pragma once

#include "gprfail/core.hpp"
#include "gprfail/kvtext.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>

namespace gprfail {

struct MaterialParams {
  double rho0 = 1.0;
  double muI = 1.0, muD = 1.0;
  double lamI = 1.0, lamD = 1.0;
  double tauI0 = 1e30, tauD0 = 1e30;
  double alphaI = 0.0, alphaD = 0.0;
  double betaI = 0.0, betaD = 0.0;
  double theta0 = 0.0;
  double Y0 = 1e22, Y1 = 1e22;
  double a = 1.0;
  double xiEps = 1e-16;
  double cv = 1000.0;
  double T0 = 300.0;
  double ch = 0.0;
  double tau2 = 1.0;
};

// Name table used for parsing, blending and printing.
inline constexpr std::array<std::pair<std::string_view, double MaterialParams::*>, 21> kMaterialFields{{
    {"rho0", &MaterialParams::rho0},     {"muI", &MaterialParams::muI},
    {"muD", &MaterialParams::muD},       {"lamI", &MaterialParams::lamI},
    {"lamD", &MaterialParams::lamD},     {"tauI0", &MaterialParams::tauI0},
    {"tauD0", &MaterialParams::tauD0},   {"alphaI", &MaterialParams::alphaI},
    {"alphaD", &MaterialParams::alphaD}, {"betaI", &MaterialParams::betaI},
    {"betaD", &MaterialParams::betaD},   {"theta0", &MaterialParams::theta0},
    {"Y0", &MaterialParams::Y0},         {"Y1", &MaterialParams::Y1},
    {"a", &MaterialParams::a},           {"xiEps", &MaterialParams::xiEps},
    {"cv", &MaterialParams::cv},         {"T0", &MaterialParams::T0},
    {"ch", &MaterialParams::ch},         {"tau2", &MaterialParams::tau2},
    {"rho", &MaterialParams::rho0},  // alias
}};

inline bool set_material_field(MaterialParams& m, const std::string& key, double value) {
  for (const auto& [name, ptr] : kMaterialFields)
    if (name == key) {
      m.*ptr = value;
      return true;
    }
  return false;
}

// Throws ConfigError naming the first violated invariant.
inline void validate_material(const MaterialParams& m, const std::string& name = "material") {
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError(name + ": invariant violated: " + what);
  };
  need(m.rho0 > 0, "rho0>0");
  need(m.muD > 0 && m.muI >= m.muD, "muI>=muD>0");
  need(m.lamI > 0 && m.lamD > 0, "lamI,lamD>0");
  need(m.tauI0 > 0 && m.tauD0 > 0, "tauI0,tauD0>0");
  need(m.Y0 > 0 && m.Y1 > 0, "Y0,Y1>0");
  need(m.xiEps > 0, "xiEps>0");
  need(m.cv > 0 && m.T0 > 0, "cv>0,T0>0");
  need(m.ch >= 0, "ch>=0");
  need(m.tau2 > 0, "tau2>0");
  need(m.theta0 >= 0, "theta0>=0");
}

// Rock 1-4, pyrex and copper follow the published table; brittle, ductile and
// fatigue are the homogeneous-sample benchmark sets. Units are SI.
inline constexpr std::string_view kBuiltinMaterialText = R"(
[rock1]
rho0 = 2670
muI = 32.04e9
muD = 27.46e9
lamI = 32.04e9
lamD = 35.10e9
theta0 = 10.0
Y0 = 180e6
Y1 = 10e6
a = 42.5
alphaI = 36.25
alphaD = 36.25
betaI = 0
betaD = 1e-6
tauI0 = 3.2e6
tauD0 = 2.75e6

[rock2]
rho0 = 2620
muI = 21.44e9
muD = 0.15008e9
lamI = 21.44e9
lamD = 0.15008e9
theta0 = 1.0
Y0 = 10e6
Y1 = 1.0
a = 60.0
alphaI = 0
alphaD = 0
betaI = 0
betaD = 0
tauI0 = 1e5
tauD0 = 1e-3

[rock3]
rho0 = 2670
muI = 32.04e9
muD = 27.46e9
lamI = 32.04e9
lamD = 35.10e9
theta0 = 0.2
Y0 = 240e6
Y1 = 10e6
a = 42.5
alphaI = 36.25
alphaD = 36.25
betaI = 0
betaD = 1e-6
tauI0 = 3.2e6
tauD0 = 2.75e6

[rock4]
rho0 = 2670
muI = 32.04e9
muD = 0.03204e9
lamI = 32.04e9
lamD = 53.38e9
theta0 = 1.0
Y0 = 9e6
Y1 = 10e6
a = 52.5
alphaI = 36.25
alphaD = 36.25
betaI = 0
betaD = 1e-6
tauI0 = 3.2e6
tauD0 = 3.2e3

[pyrex]
rho0 = 2230
muI = 30.36e9
muD = 0.1518e9
lamI = 20.90e9
lamD = 30.97e9
theta0 = 1.0
Y0 = 1200e6
Y1 = 10e6
a = 32.5
alphaI = 36.25
alphaD = 34.8
betaI = 22.31e-9
betaD = 223.07e-9
tauI0 = 3.0e6
tauD0 = 1.5e4

[copper]
rho0 = 8930
muI = 48.27e9
muD = 41.38e9
lamI = 105.79e9
lamD = 110.39e9
theta0 = 0.0
Y0 = 1e22
Y1 = 1e22
a = 1.0
alphaI = 40.0
alphaD = 40.0
betaI = 0
betaD = 0
tauI0 = 4.8e6
tauD0 = 4.1e6

[brittle]
rho0 = 3000
muI = 30e9
muD = 30e6
lamI = 60e9
lamD = 60e9
tauI0 = 3e3
tauD0 = 3
theta0 = 8
a = 32.5
Y0 = 1.4e9
Y1 = 10e6
alphaI = 35
alphaD = 35
betaI = 2.2e-8
betaD = 2.2e-7

[ductile]
rho0 = 3000
muI = 30e9
muD = 30e6
lamI = 60e9
lamD = 60e9
tauI0 = 1e3
tauD0 = 1
theta0 = 1
a = 1
Y0 = 8e12
Y1 = 4e6
alphaI = 0
alphaD = 30
betaI = 2e-8
betaD = 1e-4

[fatigue]
rho0 = 3000
muI = 30e9
muD = 33e6
lamI = 60e9
lamD = 60e9
tauI0 = 2e5
tauD0 = 2e3
theta0 = 1
a = 1
Y0 = 8e12
Y1 = 8e12
alphaI = 0
alphaD = 0
betaI = 3e-8
betaD = 0
)";

// Applies the entries of one section on top of `base`. Unknown keys throw.
inline MaterialParams material_from_section(const KvSection& sec, MaterialParams base = {}) {
  for (const auto& e : sec.entries) {
    if (!set_material_field(base, e.key, parse_double(e.value, e.line)))
      throw ConfigError("unknown material key '" + e.key + "'", e.line);
  }
  return base;
}

inline const std::map<std::string, MaterialParams>& builtin_materials() {
  static const std::map<std::string, MaterialParams> table = [] {
    std::map<std::string, MaterialParams> t;
    for (const auto& sec : parse_kv_text(std::string(kBuiltinMaterialText))) {
      if (sec.name.empty()) continue;
      t[sec.name] = material_from_section(sec);
    }
    return t;
  }();
  return table;
}

inline MaterialParams builtin_material(const std::string& name) {
  const auto& t = builtin_materials();
  auto it = t.find(name);
  if (it == t.end()) throw ConfigError("unknown material '" + name + "'");
  return it->second;
}

// Linear interpolation of every scalar; w=0 gives a, w=1 gives b.
inline MaterialParams blend(const MaterialParams& a, const MaterialParams& b, double w) {
  if (w <= 0.0) return a;
  if (w >= 1.0) return b;
  MaterialParams m = a;
  for (std::size_t i = 0; i + 1 < kMaterialFields.size(); ++i) {
    auto ptr = kMaterialFields[i].second;
    m.*ptr = (1.0 - w) * (a.*ptr) + w * (b.*ptr);
  }
  return m;
}

struct Moduli {
  double lambda;
  double mu;
  double K;
};

inline Moduli mixture_moduli(double xi, const MaterialParams& m) {
  const double KI = m.lamI + 2.0 / 3.0 * m.muI;
  const double KD = m.lamD + 2.0 / 3.0 * m.muD;
  const double Kt = xi * KI + (1.0 - xi) * KD;
  const double mut = xi * m.muI + (1.0 - xi) * m.muD;
  const double mu = m.muI * m.muD / mut;
  const double K = KI * KD / Kt;
  return {K - 2.0 / 3.0 * mu, mu, K};
}

inline double clamped_exp(double x) { return std::exp(std::clamp(x, -700.0, 700.0)); }

inline double relaxation_time(double xi, double Y, const MaterialParams& m) {
  const double tauI = m.tauI0 * clamped_exp(m.alphaI - m.betaI * (1.0 - xi) * Y);
  const double tauD = m.tauD0 * clamped_exp(m.alphaD - m.betaD * xi * Y);
  return 1.0 / ((1.0 - xi) / tauI + xi / tauD);
}

inline double damage_rate_theta(double xi, double Y, const MaterialParams& m) {
  if (Y <= 0.0 || m.theta0 == 0.0) return 0.0;
  // (Y/Y0)^a through exp/log so that huge ratios saturate instead of overflowing
  const double ratio_a = clamped_exp(m.a * std::log(Y / m.Y0));
  const double th = m.theta0 * (1.0 - xi) * (xi + m.xiEps) * ((1.0 - xi) * ratio_a + xi * (Y / m.Y1));
  return std::max(th, 0.0);
}

inline double energy_xi_derivative(double rho, const Mat3& Gdev, double xi, const MaterialParams& m) {
  const double KI = m.lamI + 2.0 / 3.0 * m.muI;
  const double KD = m.lamD + 2.0 / 3.0 * m.muD;
  const double Kt = xi * KI + (1.0 - xi) * KD;
  const double mut = xi * m.muI + (1.0 - xi) * m.muD;
  const double vol = (KI - KD) * KI * KD / (Kt * Kt) * sqr(1.0 - rho / m.rho0) / (2.0 * m.rho0);
  const double shear = (m.muI - m.muD) * m.muI * m.muD / (mut * mut) * ddot(Gdev, Gdev) / (4.0 * m.rho0);
  return -vol - shear;
}

}  // namespace gprfail
