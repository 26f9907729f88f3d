#pragma once

// Scenario setup: stress-to-distortion initialisation, diffuse interfaces,
// the run configuration format, shipped presets and output writers.

#include "gprfail/ader2d.hpp"
#include "gprfail/core.hpp"
#include "gprfail/eos.hpp"
#include "gprfail/kvtext.hpp"
#include "gprfail/materials.hpp"
#include "gprfail/pde.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace gprfail {

using Vec6 = Eigen::Matrix<double, 6, 1>;

// ---- distortion from stress ------------------------------------------------------

inline Mat3 rotation_z(double theta) {
  Mat3 R;
  R << std::cos(theta), -std::sin(theta), 0.0, std::sin(theta), std::cos(theta), 0.0, 0.0, 0.0, 1.0;
  return R;
}

inline Mat3 lower_triangular(const Vec6& s) {
  Mat3 L;
  L << s[0], 0.0, 0.0, s[1], s[2], 0.0, s[3], s[4], s[5];
  return L;
}

// (xx, yy, zz, xy, yz, xz) of the total stress of an unheated, undamaged state
// with rho = rho0 det A.
inline Vec6 stress_of_distortion(const Mat3& A, const MaterialParams& m) {
  ThermoState ts;
  ts.A = A;
  ts.rho = m.rho0 * A.determinant();
  const Mat3 S = stress_tensor(ts, m).Sigma;
  Vec6 f;
  f << S(0, 0), S(1, 1), S(2, 2), S(0, 1), S(1, 2), S(0, 2);
  return f;
}

struct DistortionFit {
  Mat3 A;
  double rho = 0.0;
  int iterations = 0;
  double residual = 0.0;  // |f - sigma0| / max(1, |sigma0|, 1e-5 mu)
};

inline DistortionFit init_A_from_stress(const Vec6& sigma0, double theta, const MaterialParams& m) {
  const Mat3 R = rotation_z(theta);
  Vec6 s;
  s << 1.0, 0.0, 1.0, 0.0, 0.0, 1.0;
  // tiny targets are limited by roundoff of the energy terms, which scales with the modulus
  const double scale = std::max({1.0, sigma0.norm(), 1e-5 * m.muI});
  auto F = [&](const Vec6& x) { return Vec6(stress_of_distortion(lower_triangular(x) * R, m) - sigma0); };
  Vec6 f = F(s);
  int polish = 0;
  for (int it = 0;; ++it) {
    const double res = f.norm() / scale;
    if (res <= 1e-9 && (res <= 1e-13 || polish == 1)) {
      DistortionFit out;
      out.A = lower_triangular(s) * R;
      out.rho = m.rho0 * out.A.determinant();
      out.iterations = it;
      out.residual = res;
      return out;
    }
    if (it == 100 || !f.allFinite())
      throw NewtonFailure("distortion from stress: no convergence after " + std::to_string(it) +
                          " Newton iterations, residual " + std::to_string(res));
    Eigen::Matrix<double, 6, 6> J;
    for (int j = 0; j < 6; ++j) {
      Vec6 sp = s;
      const double h = 1e-7 * std::max(1.0, std::abs(s[j]));
      sp[j] += h;
      J.col(j) = (F(sp) - f) / h;
    }
    const Vec6 sNew = s - J.fullPivLu().solve(f);
    const Vec6 fNew = F(sNew);
    if (res <= 1e-9) {
      // one polishing step, kept only if it helps
      polish = 1;
      if (!(fNew.norm() < f.norm())) continue;
    }
    s = sNew;
    f = fNew;
  }
}

// ---- geometry ---------------------------------------------------------------------

inline double smooth_volume_fraction(double signedDistance, double d) {
  if (!(d > 0.0)) throw std::invalid_argument("smoothing length must be positive");
  return 0.5 * (1.0 - std::erf(signedDistance / d));
}

// Signed distance (negative inside) of the shapes used by the configuration.
struct Shape {
  enum class Kind { Rect, Disc, Box, BelowSine };
  Kind kind = Kind::Rect;
  std::array<double, 5> p{};

  double distance(double x, double y) const {
    switch (kind) {
      case Kind::Rect: {
        const double cx = 0.5 * (p[0] + p[1]), cy = 0.5 * (p[2] + p[3]);
        return box_distance(x - cx, y - cy, 0.5 * (p[1] - p[0]), 0.5 * (p[3] - p[2]));
      }
      case Kind::Disc:
        return std::hypot(x - p[0], y - p[1]) - p[2];
      case Kind::Box: {
        const double a = p[4] * std::numbers::pi / 180.0;
        const double dx = x - p[0], dy = y - p[1];
        return box_distance(std::cos(a) * dx + std::sin(a) * dy, -std::sin(a) * dx + std::cos(a) * dy, p[2], p[3]);
      }
      case Kind::BelowSine:
        // vertical distance to y = y0 - amp*sin(k x)
        return y - (p[0] - p[1] * std::sin(p[2] * x));
    }
    return 0.0;
  }

  static double box_distance(double x, double y, double hx, double hy) {
    const double qx = std::abs(x) - hx, qy = std::abs(y) - hy;
    return std::hypot(std::max(qx, 0.0), std::max(qy, 0.0)) + std::min(std::max(qx, qy), 0.0);
  }
};

inline double union_distance(const std::vector<Shape>& shapes, double x, double y) {
  double d = INFINITY;
  for (const auto& s : shapes) d = std::min(d, s.distance(x, y));
  return d;
}

// 1 inside, 0 outside; a sharp step when d == 0.
inline double region_indicator(const std::vector<Shape>& shapes, double d, double x, double y) {
  if (shapes.empty()) return 0.0;
  const double s = union_distance(shapes, x, y);
  if (d > 0.0) return smooth_volume_fraction(s, d);
  return s < 0.0 ? 1.0 : (s == 0.0 ? 0.5 : 0.0);
}

// ---- configuration ------------------------------------------------------------------

struct SideDrive {
  bool gaussian = false;
  Vec3 v = Vec3::Zero();
  double amplitude = 0.0, k = 0.0;  // |v| = amplitude exp(-(k s)^2), s along the side, pointing inwards
};

struct Pulse {
  bool on = false;
  int axis = 0;
  double center = 0.0, width = 1.0, amplitude = 0.0;
  Vec6 rSigma = Vec6::Zero();
  Vec3 rVelocity = Vec3::Zero();
};

struct ScenarioConfig {
  std::string name;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  int nx = 0, ny = 0, N = 2;
  double cfl = 0.45;  // default_cfl(N) unless given
  double tEnd = 0.0;
  double outputEvery = 0.0;  // 0: initial and final snapshot only
  double epsAlpha = 1e-3;
  std::array<BoundaryKind, 4> bc{BoundaryKind::Periodic, BoundaryKind::Periodic, BoundaryKind::Periodic,
                                 BoundaryKind::Periodic};
  std::array<SideDrive, 4> drive;
  EquivalentStressSpec eq;

  MaterialParams material;
  bool twoMaterials = false;
  MaterialParams material2;
  std::vector<Shape> region2;
  double region2Smoothing = 0.0;
  Vec3 region2Velocity = Vec3::Zero();

  Vec6 stress = Vec6::Zero();
  double theta = 0.0;
  Vec3 velocity = Vec3::Zero();
  std::vector<Shape> alphaShapes;  // empty: solid everywhere
  double alphaSmoothing = 0.0;
  std::vector<Shape> damageShapes;
  double damageXi = 1.0;
  double damageSmoothing = 0.0;
  Pulse pulse;
  std::vector<std::array<double, 2>> probes;
};

// Raw merged text: section -> key -> entry.
using RawConfig = std::map<std::string, std::map<std::string, KvEntry>>;

inline const std::map<std::string, std::string>& preset_texts();

inline void merge_text(RawConfig& raw, const std::string& text, int depth = 0) {
  const auto secs = parse_kv_text(text);
  // a preset named in [scenario] is applied first, then this text on top
  for (const auto& sec : secs)
    if (sec.name == "scenario")
      for (const auto& e : sec.entries)
        if (e.key == "preset") {
          const auto& t = preset_texts();
          auto it = t.find(e.value);
          if (it == t.end()) throw ConfigError("unknown preset '" + e.value + "'", e.line);
          if (depth > 4) throw ConfigError("presets nest too deeply", e.line);
          merge_text(raw, it->second, depth + 1);
        }
  for (const auto& sec : secs) {
    if (sec.name.empty()) {
      if (!sec.entries.empty()) throw ConfigError("key outside of a section", sec.entries.front().line);
      continue;
    }
    auto& dst = raw[sec.name];
    for (const auto& e : sec.entries)
      if (e.key != "preset") dst[e.key] = e;
  }
}

namespace detail {

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> w;
  std::string t;
  while (in >> t) w.push_back(t);
  return w;
}

inline std::vector<double> numbers(const KvEntry& e, std::size_t n) {
  std::vector<double> v;
  for (const auto& w : words(e.value)) v.push_back(parse_double(w, e.line));
  if (n > 0 && v.size() != n)
    throw ConfigError("'" + e.key + "' needs " + std::to_string(n) + " numbers, got " + std::to_string(v.size()),
                      e.line);
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

inline std::vector<Shape> shapes(const KvEntry& e) {
  std::vector<Shape> out;
  for (const auto& item : split(e.value, ';')) {
    const auto w = words(item);
    Shape s;
    std::size_t n = 0;
    if (w[0] == "rect") {
      s.kind = Shape::Kind::Rect;
      n = 4;
    } else if (w[0] == "disc") {
      s.kind = Shape::Kind::Disc;
      n = 3;
    } else if (w[0] == "box") {
      s.kind = Shape::Kind::Box;
      n = 5;
    } else if (w[0] == "below_sine") {
      s.kind = Shape::Kind::BelowSine;
      n = 3;
    } else {
      throw ConfigError("unknown shape '" + w[0] + "'", e.line);
    }
    if (w.size() != n + 1) throw ConfigError("shape '" + w[0] + "' needs " + std::to_string(n) + " numbers", e.line);
    for (std::size_t i = 0; i < n; ++i) s.p[i] = parse_double(w[i + 1], e.line);
    out.push_back(s);
  }
  return out;
}

inline BoundaryKind boundary_kind(const KvEntry& e) {
  if (e.value == "periodic") return BoundaryKind::Periodic;
  if (e.value == "extrapolation") return BoundaryKind::Extrapolation;
  if (e.value == "velocity") return BoundaryKind::PrescribedVelocity;
  throw ConfigError("unknown boundary '" + e.value + "' (periodic, extrapolation, velocity)", e.line);
}

inline SideDrive side_drive(const KvEntry& e) {
  SideDrive d;
  const auto w = words(e.value);
  if (!w.empty() && w[0] == "gaussian") {
    if (w.size() != 3) throw ConfigError("gaussian drive needs amplitude and k", e.line);
    d.gaussian = true;
    d.amplitude = parse_double(w[1], e.line);
    d.k = parse_double(w[2], e.line);
  } else {
    const auto v = numbers(e, 3);
    d.v = Vec3(v[0], v[1], v[2]);
  }
  return d;
}

inline MaterialParams material_section(const std::map<std::string, KvEntry>& sec, const std::string& name,
                                       std::vector<std::string> extra) {
  MaterialParams m;
  if (auto it = sec.find("base"); it != sec.end()) {
    const auto& t = builtin_materials();
    auto f = t.find(it->second.value);
    if (f == t.end()) throw ConfigError("unknown material '" + it->second.value + "'", it->second.line);
    m = f->second;
  }
  extra.push_back("base");
  for (const auto& [k, e] : sec) {
    if (std::find(extra.begin(), extra.end(), k) != extra.end()) continue;
    if (!set_material_field(m, k, parse_double(e.value, e.line)))
      throw ConfigError("unknown key '" + k + "' in [" + name + "]", e.line);
  }
  validate_material(m, name);
  return m;
}

}  // namespace detail

inline ScenarioConfig config_from_raw(const RawConfig& raw) {
  using detail::numbers;
  static const std::map<std::string, std::vector<std::string>> known = {
      {"scenario",
       {"name", "domain", "nx", "ny", "N", "cfl", "t_end", "output_every", "eps_alpha", "bc", "bc_left", "bc_right",
        "bc_bottom", "bc_top", "velocity_left", "velocity_right", "velocity_bottom", "velocity_top",
        "equivalent_stress", "eq_A", "eq_B", "eq_C", "eq_s0", "eq_eps"}},
      {"material", {}},
      {"material2", {}},
      {"initial",
       {"stress", "theta", "velocity", "alpha", "alpha_smoothing", "damage", "damage_xi", "damage_smoothing"}},
      {"pulse", {"axis", "center", "width", "amplitude", "r_sigma", "r_velocity"}},
      {"probes", {"points"}},
  };
  for (const auto& [sec, keys] : raw) {
    auto k = known.find(sec);
    if (k == known.end()) {
      const int line = keys.empty() ? 0 : keys.begin()->second.line;
      throw ConfigError("unknown section [" + sec + "]", line);
    }
    if (sec == "material" || sec == "material2") continue;
    for (const auto& [key, e] : keys)
      if (std::find(k->second.begin(), k->second.end(), key) == k->second.end())
        throw ConfigError("unknown key '" + key + "' in [" + sec + "]", e.line);
  }
  auto sec = [&](const std::string& s) -> const std::map<std::string, KvEntry>& {
    static const std::map<std::string, KvEntry> empty;
    auto it = raw.find(s);
    return it == raw.end() ? empty : it->second;
  };
  auto get = [&](const std::string& s, const std::string& key) -> const KvEntry* {
    const auto& m = sec(s);
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  };
  auto need = [&](const std::string& s, const std::string& key) -> const KvEntry& {
    const KvEntry* e = get(s, key);
    if (!e) throw ConfigError("missing key '" + key + "' in [" + s + "]");
    return *e;
  };

  ScenarioConfig c;
  if (auto e = get("scenario", "name")) c.name = e->value;
  {
    const KvEntry& e = need("scenario", "domain");
    const auto d = numbers(e, 4);
    c.x0 = d[0];
    c.x1 = d[1];
    c.y0 = d[2];
    c.y1 = d[3];
    if (!(c.x1 > c.x0) || !(c.y1 > c.y0)) throw ConfigError("domain bounds must be ordered", e.line);
  }
  auto positive_int = [&](const KvEntry& e) {
    const long v = parse_int(e.value, e.line);
    if (v <= 0) throw ConfigError("'" + e.key + "' must be positive", e.line);
    return static_cast<int>(v);
  };
  c.nx = positive_int(need("scenario", "nx"));
  c.ny = positive_int(need("scenario", "ny"));
  if (auto e = get("scenario", "N")) {
    c.N = static_cast<int>(parse_int(e->value, e->line));
    if (c.N < 0 || c.N > 4) throw ConfigError("N must be in 0..4", e->line);
  }
  c.cfl = default_cfl(c.N);
  if (auto e = get("scenario", "cfl")) {
    c.cfl = parse_double(e->value, e->line);
    if (!(c.cfl > 0.0 && c.cfl <= 1.0)) throw ConfigError("cfl must lie in (0,1]", e->line);
  }
  {
    const KvEntry& e = need("scenario", "t_end");
    c.tEnd = parse_double(e.value, e.line);
    if (!(c.tEnd > 0.0)) throw ConfigError("t_end must be positive", e.line);
  }
  if (auto e = get("scenario", "output_every")) c.outputEvery = parse_double(e->value, e->line);
  if (auto e = get("scenario", "eps_alpha")) c.epsAlpha = parse_double(e->value, e->line);
  if (auto e = get("scenario", "bc")) c.bc.fill(detail::boundary_kind(*e));
  static const char* sideNames[4] = {"left", "right", "bottom", "top"};
  for (int s = 0; s < 4; ++s) {
    if (auto e = get("scenario", std::string("bc_") + sideNames[s])) c.bc[s] = detail::boundary_kind(*e);
    const KvEntry* v = get("scenario", std::string("velocity_") + sideNames[s]);
    if (v) c.drive[s] = detail::side_drive(*v);
    if (c.bc[s] == BoundaryKind::PrescribedVelocity && !v)
      throw ConfigError(std::string("velocity boundary on the ") + sideNames[s] + " side needs velocity_" +
                        sideNames[s]);
  }
  for (int a : {0, 2})
    if ((c.bc[a] == BoundaryKind::Periodic) != (c.bc[a + 1] == BoundaryKind::Periodic))
      throw ConfigError("periodic boundaries must come in pairs");
  if (auto e = get("scenario", "equivalent_stress")) {
    if (e->value == "von_mises")
      c.eq.kind = EqStressKind::VonMises;
    else if (e->value == "linear")
      c.eq.kind = EqStressKind::LinearCombination;
    else if (e->value == "erf")
      c.eq.kind = EqStressKind::ErfSmoothed;
    else if (e->value == "drucker_prager")
      c.eq.kind = EqStressKind::DruckerPrager;
    else
      throw ConfigError("unknown equivalent stress '" + e->value + "'", e->line);
  }
  if (auto e = get("scenario", "eq_A")) c.eq.A = parse_double(e->value, e->line);
  if (auto e = get("scenario", "eq_B")) c.eq.B = parse_double(e->value, e->line);
  if (auto e = get("scenario", "eq_C")) c.eq.C = parse_double(e->value, e->line);
  if (auto e = get("scenario", "eq_s0")) c.eq.s0 = parse_double(e->value, e->line);
  if (auto e = get("scenario", "eq_eps")) c.eq.epsSmooth = parse_double(e->value, e->line);

  if (!raw.count("material")) throw ConfigError("missing section [material]");
  c.material = detail::material_section(sec("material"), "material", {});
  if (raw.count("material2")) {
    c.twoMaterials = true;
    c.material2 = detail::material_section(sec("material2"), "material2", {"region", "smoothing", "velocity"});
    c.region2 = detail::shapes(need("material2", "region"));
    if (auto e = get("material2", "smoothing")) c.region2Smoothing = parse_double(e->value, e->line);
    if (auto e = get("material2", "velocity")) {
      const auto v = numbers(*e, 3);
      c.region2Velocity = Vec3(v[0], v[1], v[2]);
    }
  }

  if (auto e = get("initial", "stress")) {
    const auto v = numbers(*e, 6);
    for (int i = 0; i < 6; ++i) c.stress[i] = v[i];
  }
  if (auto e = get("initial", "theta")) c.theta = parse_double(e->value, e->line);
  if (auto e = get("initial", "velocity")) {
    const auto v = numbers(*e, 3);
    c.velocity = Vec3(v[0], v[1], v[2]);
  }
  if (auto e = get("initial", "alpha")) c.alphaShapes = detail::shapes(*e);
  if (auto e = get("initial", "alpha_smoothing")) c.alphaSmoothing = parse_double(e->value, e->line);
  if (auto e = get("initial", "damage")) c.damageShapes = detail::shapes(*e);
  if (auto e = get("initial", "damage_xi")) {
    c.damageXi = parse_double(e->value, e->line);
    if (c.damageXi < 0.0 || c.damageXi > 1.0) throw ConfigError("damage_xi must lie in [0,1]", e->line);
  }
  if (auto e = get("initial", "damage_smoothing")) c.damageSmoothing = parse_double(e->value, e->line);

  if (raw.count("pulse")) {
    c.pulse.on = true;
    const KvEntry& ax = need("pulse", "axis");
    if (ax.value != "x" && ax.value != "y") throw ConfigError("pulse axis must be x or y", ax.line);
    c.pulse.axis = ax.value == "x" ? 0 : 1;
    c.pulse.center = parse_double(need("pulse", "center").value, need("pulse", "center").line);
    c.pulse.width = parse_double(need("pulse", "width").value, need("pulse", "width").line);
    c.pulse.amplitude = parse_double(need("pulse", "amplitude").value, need("pulse", "amplitude").line);
    const auto rs = numbers(need("pulse", "r_sigma"), 6);
    for (int i = 0; i < 6; ++i) c.pulse.rSigma[i] = rs[i];
    const auto rv = numbers(need("pulse", "r_velocity"), 3);
    c.pulse.rVelocity = Vec3(rv[0], rv[1], rv[2]);
  }
  if (auto e = get("probes", "points")) {
    for (const auto& item : detail::split(e->value, ';')) {
      const auto w = detail::words(item);
      if (w.size() != 2) throw ConfigError("probe points are 'x y' pairs separated by ';'", e->line);
      c.probes.push_back({parse_double(w[0], e->line), parse_double(w[1], e->line)});
    }
  }
  return c;
}

inline ScenarioConfig parse_config_text(const std::string& text, const std::string& preset = "") {
  RawConfig raw;
  if (!preset.empty()) merge_text(raw, "[scenario]\npreset = " + preset + "\n");
  merge_text(raw, text);
  return config_from_raw(raw);
}

inline ScenarioConfig parse_config(const std::string& path, const std::string& preset = "") {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), preset);
}

inline ScenarioConfig preset_config(const std::string& name) { return parse_config_text("", name); }

// ---- presets --------------------------------------------------------------------------

inline const std::map<std::string, std::string>& preset_texts() {
  static const std::map<std::string, std::string> t = {
      {"stiff_inclusion", R"(
[scenario]
name = stiff_inclusion
domain = -1.0 1.0 -0.52 0.52
nx = 100
ny = 52
N = 2
t_end = 0.3
output_every = 0.1
bc = extrapolation

# dimensionless units, (lambda, mu, rho) = (2, 1, 1) outside
[material]
rho0 = 1
lamI = 2
lamD = 2
muI = 1
muD = 1
Y0 = 1e22
Y1 = 1e22
theta0 = 0
tauI0 = 1e30
tauD0 = 1e30
cv = 1
T0 = 1
ch = 0

# inclusion, moduli times 100
[material2]
rho0 = 1
lamI = 200
lamD = 200
muI = 100
muD = 100
Y0 = 1e22
Y1 = 1e22
theta0 = 0
tauI0 = 1e30
tauD0 = 1e30
cv = 1
T0 = 1
ch = 0
region = rect -0.5 0.5 -0.1 0.1

[initial]
alpha = rect -1.5 1.5 -0.5 0.5
alpha_smoothing = 0.005

[pulse]
axis = x
center = -0.8
width = 0.01
amplitude = 1e-4
r_sigma = 4 2 2 0 0 0
r_velocity = -2 0 0

[probes]
points = -0.3 0.0; 0.0 0.3
)"},
      {"plate_impact_1d", R"(
[scenario]
name = plate_impact_1d
domain = -0.005 0.021 -0.001 0.001
nx = 130
ny = 8
N = 3
t_end = 2e-6
output_every = 5e-7
bc_left = velocity
velocity_left = 250 0 0
bc_right = extrapolation
bc_bottom = periodic
bc_top = periodic
equivalent_stress = linear
eq_A = 0.9
eq_B = 0.05

[material]
base = pyrex

# flyer plate, moving with the impact velocity; 5 mm thick so the echo from
# the driven wall cannot reach the probes before t_end
[material2]
base = copper
region = rect -0.01 0.0 -0.01 0.01
velocity = 250 0 0

[probes]
points = 0.0025 0.0; 0.0075 0.0
)"},
      {"brazilian_disc", R"(
[scenario]
name = brazilian_disc
domain = -1.1 1.1 -1.1 1.1
nx = 48
ny = 48
N = 3
t_end = 2e-3
output_every = 5e-4
bc_left = extrapolation
bc_right = extrapolation
bc_bottom = velocity
bc_top = velocity
velocity_bottom = gaussian 4 25
velocity_top = gaussian 4 25
equivalent_stress = drucker_prager
eq_A = 1.0
eq_B = 1.5
eq_C = -2e6

[material]
base = rock2

# clamps: contact patch 0.1 of the domain height wide, unbreakable
[material2]
base = rock2
Y0 = 1e14
Y1 = 1e14
region = rect -0.11 0.11 0.9 1.2; rect -0.11 0.11 -1.2 -0.9

[initial]
alpha = disc 0 0 1; rect -0.11 0.11 0.9 1.2; rect -0.11 0.11 -1.2 -0.9
alpha_smoothing = 0.02
# slit inclined at 35 degrees
damage = box 0 0 0.25 0.02 35
damage_xi = 1
damage_smoothing = 0.02

[probes]
points = 0 0.5; 0 0
)"},
      {"rupture_2d", R"(
[scenario]
name = rupture_2d
domain = -5000 5000 -7500 7500
nx = 30
ny = 24
N = 3
t_end = 5.0
output_every = 1.0
bc = extrapolation

[material]
base = rock1

[initial]
stress = -120e6 -120e6 -120e6 70e6 0 0
damage = rect -1000 1000 -66 66
damage_xi = 1
damage_smoothing = 150

[probes]
points = 2000 0; -2000 0
)"},
      {"sine_surface", R"(
[scenario]
name = sine_surface
domain = -8000 8000 -8000 8000
nx = 25
ny = 25
N = 3
t_end = 2.0
output_every = 0.5
bc = extrapolation

[material]
base = rock1

[initial]
alpha = below_sine 6000 500 1e-3
alpha_smoothing = 300
# pre-damaged line through (3000,-2000) at 45 degrees, horizontal extent 2000 sqrt(2)
damage = box 3000 -2000 2000 100 45
damage_xi = 1
damage_smoothing = 150

# eps = 1.79e8/(2 mu), R_sigma = (lam, lam+2mu, lam), R_v = -c_p along y
[pulse]
axis = y
center = -4000
width = 1000
amplitude = 2.7933e-3
r_sigma = 32.04e9 96.12e9 32.04e9 0 0 0
r_velocity = 0 -6000.0 0

[probes]
points = 0 0; 3000 -2000
)"},
  };
  return t;
}

// ---- building the grid -----------------------------------------------------------------

inline Physics scenario_physics(const ScenarioConfig& c) {
  Physics ph;
  ph.mat0 = c.material;
  ph.mat1 = c.twoMaterials ? c.material2 : c.material;
  ph.eq = c.eq;
  ph.epsAlpha = c.epsAlpha;
  return ph;
}

inline GridSpec scenario_grid(const ScenarioConfig& c) {
  GridSpec g;
  g.nx = c.nx;
  g.ny = c.ny;
  g.N = c.N;
  g.x0 = c.x0;
  g.x1 = c.x1;
  g.y0 = c.y0;
  g.y1 = c.y1;
  static const Vec3 inward[4] = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)};
  for (int s = 0; s < 4; ++s) {
    g.bc[s].kind = c.bc[s];
    if (c.bc[s] != BoundaryKind::PrescribedVelocity) continue;
    const SideDrive d = c.drive[s];
    const Vec3 n = inward[s];
    const bool vertical = s < 2;
    if (d.gaussian)
      g.bc[s].velocity = [d, n, vertical](double x, double y, double) {
        const double along = vertical ? y : x;
        return Vec3(d.amplitude * std::exp(-sqr(d.k * along)) * n);
      };
    else
      g.bc[s].velocity = [d](double, double, double) { return d.v; };
  }
  return g;
}

// Conserved state at one point; depends on (x, y) only.
inline State scenario_state(const ScenarioConfig& c, double x, double y) {
  const double w = c.twoMaterials ? region_indicator(c.region2, c.region2Smoothing, x, y) : 0.0;
  const MaterialParams m = c.twoMaterials ? blend(c.material, c.material2, w) : c.material;
  Vec6 sigma = c.stress;
  Vec3 v = c.velocity + w * c.region2Velocity;
  if (c.pulse.on) {
    const double s = c.pulse.axis == 0 ? x : y;
    const double g = c.pulse.amplitude * std::exp(-0.5 * sqr(s - c.pulse.center) / sqr(c.pulse.width));
    sigma += g * c.pulse.rSigma;
    v += g * c.pulse.rVelocity;
  }
  const DistortionFit fit = init_A_from_stress(sigma, c.theta, m);
  Primitive P;
  P.alpha = c.alphaShapes.empty() ? 1.0 : region_indicator(c.alphaShapes, c.alphaSmoothing, x, y);
  P.rho = fit.rho;
  P.v = v;
  P.A = fit.A;
  P.xi = c.damageShapes.empty() ? 0.0 : c.damageXi * region_indicator(c.damageShapes, c.damageSmoothing, x, y);
  P.lam = m.lamI;
  P.mu = m.muI;
  P.Y0 = m.Y0;
  P.rho0adv = m.rho0;
  P.mblend = w;
  return prim_to_cons(P, m);
}

inline std::unique_ptr<AderDG> build_scenario(const ScenarioConfig& c, const SolverOptions& opt = {}) {
  auto s = std::make_unique<AderDG>(scenario_grid(c), scenario_physics(c), opt);
  s->set_initial([&](double x, double y) { return scenario_state(c, x, y); });
  return s;
}

// ---- output ------------------------------------------------------------------------------

struct ProbeSample {
  double t, sxx, syy, sxy, Y, xi, u, v;
};

inline ProbeSample probe_sample(const AderDG& s, double x, double y) {
  const State q = s.value_at(x, y);
  const PointEval e = eval_point(q, s.physics());
  const Mat3 S = e.Sigma();
  return {s.time(), S(0, 0), S(1, 1), S(0, 1), von_mises(S), e.xi, e.v[0], e.v[1]};
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline void write_probe_csv(const std::vector<ProbeSample>& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "t,sigma_xx,sigma_yy,sigma_xy,Y,xi,u,v\n";
  for (const auto& p : series)
    out << fmt(p.t) << ',' << fmt(p.sxx) << ',' << fmt(p.syy) << ',' << fmt(p.sxy) << ',' << fmt(p.Y) << ','
        << fmt(p.xi) << ',' << fmt(p.u) << ',' << fmt(p.v) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void write_snapshot_vtk(const AderDG& s, const std::string& path) {
  const int nx = s.nx(), ny = s.ny(), nc = nx * ny;
  static const char* names[9] = {"alpha", "rho", "u", "v", "xi", "Y_vonMises", "p", "detA", "limiter"};
  std::vector<std::array<double, 9>> val(nc);
  for (int c = 0; c < nc; ++c) {
    const State q = s.cell_mean(c);
    auto& r = val[c];
    r.fill(std::numeric_limits<double>::quiet_NaN());
    r[0] = q[ix::alpha];
    r[1] = q[ix::rho];
    r[4] = q[ix::xi];
    r[7] = get_A(q).determinant();
    r[8] = s.status(c) == LimiterStatus::Limited ? 1.0 : 0.0;
    try {
      const PointEval e = eval_point(q, s.physics());
      r[2] = e.v[0];
      r[3] = e.v[1];
      r[5] = von_mises(e.Sigma());
      r[6] = e.p;
    } catch (const NumericalError&) {
      // left as nan
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  const GridSpec& g = s.spec();
  out << "# vtk DataFile Version 3.0\n";
  out << "gprfail snapshot t=" << fmt(s.time()) << "\n";
  out << "ASCII\nDATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << nx + 1 << ' ' << ny + 1 << " 1\n";
  out << "ORIGIN " << fmt(g.x0) << ' ' << fmt(g.y0) << " 0\n";
  out << "SPACING " << fmt(s.dx()) << ' ' << fmt(s.dy()) << " 1\n";
  out << "CELL_DATA " << nc << "\n";
  for (int k = 0; k < 9; ++k) {
    out << "SCALARS " << names[k] << " double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c) out << fmt(val[c][k]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

// ---- driver ---------------------------------------------------------------------------

struct RunSummary {
  long steps = 0;
  double t = 0.0;
  long limitedCellSteps = 0;
  int snapshots = 0;
  std::vector<std::vector<ProbeSample>> probes;
};

struct RunOptions {
  std::string outDir;  // empty: no files
  bool verbose = false;
  SolverOptions solver;
};

inline RunSummary run_scenario(const ScenarioConfig& c, const RunOptions& ro = {}) {
  auto s = build_scenario(c, ro.solver);
  RunSummary sum;
  sum.probes.resize(c.probes.size());
  auto record = [&] {
    for (std::size_t p = 0; p < c.probes.size(); ++p)
      sum.probes[p].push_back(probe_sample(*s, c.probes[p][0], c.probes[p][1]));
  };
  auto snapshot = [&] {
    if (ro.outDir.empty()) return;
    char name[64];
    std::snprintf(name, sizeof name, "/snapshot_%04d.vtk", sum.snapshots);
    write_snapshot_vtk(*s, ro.outDir + name);
    ++sum.snapshots;
  };
  record();
  snapshot();
  int nextOut = 1;
  while (s->time() < c.tEnd) {
    double dt = s->compute_dt(c.cfl);
    double target = c.tEnd;
    if (c.outputEvery > 0.0) target = std::min(target, nextOut * c.outputEvery);
    bool hit = false;
    if (s->time() + dt >= target * (1.0 - 1e-12)) {
      dt = target - s->time();
      hit = true;
    }
    const StepReport r = s->advance(dt);
    if (hit) s->set_time(target);
    ++sum.steps;
    sum.limitedCellSteps += r.limited;
    record();
    if (ro.verbose && sum.steps % 50 == 0)
      std::fprintf(stderr, "step %ld t=%.6e dt=%.3e limited=%d\n", sum.steps, s->time(), dt, r.limited);
    if (hit && s->time() < c.tEnd) {
      snapshot();
      ++nextOut;
    }
  }
  snapshot();
  sum.t = s->time();
  if (!ro.outDir.empty())
    for (std::size_t p = 0; p < c.probes.size(); ++p) {
      char name[64];
      std::snprintf(name, sizeof name, "/probe_%02zu.csv", p);
      write_probe_csv(sum.probes[p], ro.outDir + name);
    }
  return sum;
}

}  // namespace gprfail
