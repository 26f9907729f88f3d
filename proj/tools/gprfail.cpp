// gprfail command line: material-point lab, ODE validation, 2D scenarios,
// and the stress-to-distortion helper.

#include "gprfail/material_point.hpp"
#include "gprfail/scenarios.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace gprfail;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kConfig = 2, kNumerical = 3;

void ensure_dir(const std::string& d) {
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec || !fs::is_directory(d)) throw IoError("cannot create output directory '" + d + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

void write_diagram(std::ostream& out, const Diagram& d) {
  out << "t,strain,Y,xi,A11\n";
  for (const auto& s : d)
    out << fmt(s.t) << ',' << fmt(s.strain) << ',' << fmt(s.Y) << ',' << fmt(s.xi) << ',' << fmt(s.A11) << '\n';
}

struct MaterialPointArgs {
  std::string material = "brittle";
  double rate = -0.001;
  double tEnd = 20.0;
  long cycles = 0;
  double amplitude = -0.001;
  double frequency = 1.0;
  std::string wohler;
  std::string out = "material_point.csv";
};

int run_material_point(const MaterialPointArgs& a) {
  const MaterialParams mat = builtin_material(a.material);
  std::vector<long> Ns;
  if (!a.wohler.empty())
    for (double v : parse_double_list(a.wohler, 0)) {
      if (v < 0.0 || v != std::floor(v)) throw ConfigError("--wohler takes non-negative integer cycle counts");
      Ns.push_back(static_cast<long>(v));
    }
  if (!fs::path(a.out).parent_path().empty()) ensure_dir(fs::path(a.out).parent_path().string());

  Diagram d;
  if (a.cycles > 0) {
    const FatigueResult r = fatigue_test(mat, a.amplitude, a.frequency, a.cycles, a.rate);
    d = r.history;
    std::printf("residual strength after %ld cycles: %.6e Pa\n", a.cycles, r.residualStrength);
  } else {
    d = stress_strain_test(mat, a.rate, a.tEnd);
    std::printf("peak von Mises stress: %.6e Pa, failure time: %.6e s\n", peak_stress(d), failure_time(d));
  }
  auto out = open_out(a.out);
  write_diagram(out, d);

  if (!Ns.empty()) {
    // strength per cycle count goes next to the diagram
    fs::path wp(a.out);
    wp.replace_filename(wp.stem().string() + "_wohler.csv");
    const auto curve = wohler_curve(mat, Ns, a.amplitude, a.frequency, a.rate);
    auto w = open_out(wp.string());
    w << "N,strength\n";
    for (const auto& p : curve) {
      w << p.N << ',' << fmt(p.strength) << '\n';
      std::printf("N=%ld strength=%.6e Pa\n", p.N, p.strength);
    }
  }
  return kOk;
}

int run_validate_ode(const std::string& material, double rate, double tEnd, const std::string& dir) {
  if (material != "brittle" && material != "ductile") throw ConfigError("--material must be brittle or ductile");
  if (rate == 0.0 || !(tEnd > 0.0)) throw ConfigError("--rate must be nonzero and --t-end positive");
  const MaterialParams mat = builtin_material(material);
  ensure_dir(dir);
  const OracleComparison c = compare_with_oracle(mat, rate, tEnd);
  const MaterialPointSystem sys(mat, StrainDrive::constant(rate));
  const long nIE = 10000;
  const auto ie = implicit_euler_integrate(virgin_state(), 0.0, tEnd, nIE, sys, {.recordEvery = 5});
  const Diagram ieD = to_diagram(ie, sys);
  const double tIE = crossing_time(ie);

  const std::string path = dir + "/validate_ode_" + material + ".csv";
  auto out = open_out(path);
  out << "t,strain,Y_vonMises,xi,integrator\n";
  auto rows = [&](const Diagram& d, const char* name) {
    for (const auto& s : d)
      out << fmt(s.t) << ',' << fmt(s.strain) << ',' << fmt(s.Y) << ',' << fmt(s.xi) << ',' << name << '\n';
  };
  rows(c.expint, "expint");
  rows(ieD, "implicit_euler");
  rows(c.oracle, "rk4");
  std::printf("failure time: rk4 %.9e  expint %.9e (%ld steps)  implicit Euler %.9e (%ld steps)\n", c.tFailOracle,
              c.tFailExpint, c.expintSteps, tIE, nIE);
  std::printf("max relative von Mises error of expint before failure: %.3e\n", c.maxRelY);
  std::printf("wrote %s\n", path.c_str());
  return kOk;
}

int run_simulate(const std::string& config, const std::string& preset, const std::string& dir, bool verbose) {
  if (config.empty() && preset.empty()) throw ConfigError("simulate needs --config or --preset");
  const ScenarioConfig c = config.empty() ? preset_config(preset) : parse_config(config, preset);
  ensure_dir(dir);
  RunOptions ro;
  ro.outDir = dir;
  ro.verbose = verbose;
  const RunSummary s = run_scenario(c, ro);
  std::printf("%s: %ld steps to t=%.6e, %ld limited cell updates, %d snapshots, %zu probes in %s\n",
              c.name.empty() ? "scenario" : c.name.c_str(), s.steps, s.t, s.limitedCellSteps, s.snapshots,
              s.probes.size(), dir.c_str());
  return kOk;
}

int run_init_a(const Vec6& sigma, double theta, const std::string& material) {
  const MaterialParams m = builtin_material(material);
  const DistortionFit f = init_A_from_stress(sigma, theta, m);
  std::printf("A =\n");
  for (int i = 0; i < 3; ++i) std::printf("  % .15e % .15e % .15e\n", f.A(i, 0), f.A(i, 1), f.A(i, 2));
  std::printf("rho = %.15e\ndet A = %.15e\niterations = %d\nresidual = %.3e\n", f.rho, f.A.determinant(),
              f.iterations, f.residual);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gprfail: hyperelastic solids with damage"};
  app.require_subcommand(1);
  bool verbose = false;

  MaterialPointArgs mp;
  auto* cmp = app.add_subcommand("material-point", "homogeneous sample under prescribed strain rate");
  cmp->add_option("--material", mp.material, "built-in material name")->capture_default_str();
  cmp->add_option("--rate", mp.rate, "strain rate [1/s] (destructive rate after cycling)")->capture_default_str();
  cmp->add_option("--t-end", mp.tEnd, "end time [s]")->capture_default_str();
  cmp->add_option("--cycles", mp.cycles, "number of load cycles before the destructive test")->capture_default_str();
  cmp->add_option("--amplitude", mp.amplitude, "cyclic strain-rate amplitude [1/s]")->capture_default_str();
  cmp->add_option("--frequency", mp.frequency, "cycle frequency [Hz]")->capture_default_str();
  cmp->add_option("--wohler", mp.wohler, "comma separated cycle counts for a Woehler curve");
  cmp->add_option("--out", mp.out, "CSV path")->capture_default_str();

  std::string voMat = "brittle", voOut = "validate_ode";
  double voRate = -0.001, voT = 20.0;
  auto* cvo = app.add_subcommand("validate-ode", "exponential integrator against implicit Euler and RK4");
  cvo->add_option("--material", voMat, "brittle or ductile")->capture_default_str();
  cvo->add_option("--rate", voRate, "strain rate [1/s]")->capture_default_str();
  cvo->add_option("--t-end", voT, "end time [s]")->capture_default_str();
  cvo->add_option("--out", voOut, "output directory")->capture_default_str();

  std::string simConfig, simPreset, simOut = "out";
  auto* csim = app.add_subcommand("simulate", "run a 2D scenario");
  csim->add_option("--config", simConfig, "scenario file");
  csim->add_option("--preset", simPreset, "preset used as the base of the file");
  csim->add_option("--out", simOut, "output directory")->capture_default_str();
  csim->add_flag("-v,--verbose", verbose, "progress on stderr");

  std::array<double, 6> s{};
  double theta = 0.0;
  std::string iaMat = "rock1";
  auto* cia = app.add_subcommand("init-a", "distortion matrix of a prescribed stress");
  const char* names[6] = {"--sxx", "--syy", "--szz", "--sxy", "--syz", "--sxz"};
  for (int k = 0; k < 6; ++k) cia->add_option(names[k], s[k], "stress component [Pa]")->capture_default_str();
  cia->add_option("--theta", theta, "rotation about z [rad]")->capture_default_str();
  cia->add_option("--material", iaMat, "built-in material name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*cmp) return run_material_point(mp);
    if (*cvo) return run_validate_ode(voMat, voRate, voT, voOut);
    if (*csim) return run_simulate(simConfig, simPreset, simOut, verbose);
    if (*cia) return run_init_a(Eigen::Map<const Vec6>(s.data()), theta, iaMat);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return kConfig;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }
  return kOk;
}
