#pragma once

// One-step ADER-DG on a uniform Cartesian grid with an a posteriori subcell
// finite volume limiter. Stiff kinetics are only integrated inside the limiter.

#include "gprfail/basis.hpp"
#include "gprfail/core.hpp"
#include "gprfail/expint.hpp"
#include "gprfail/pde.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace gprfail {

enum class BoundaryKind { Periodic, Extrapolation, PrescribedVelocity };
enum Side { kLeft = 0, kRight = 1, kBottom = 2, kTop = 3 };

using VelocityField = std::function<Vec3(double x, double y, double t)>;

struct Boundary {
  BoundaryKind kind = BoundaryKind::Periodic;
  VelocityField velocity;  // PrescribedVelocity only
};

struct GridSpec {
  int nx = 1, ny = 1, N = 2;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  std::array<Boundary, 4> bc;
};

// CFL numbers for compute_dt on 2D grids; the one-step scheme loses linear
// stability above roughly these values (0.45 is already too large for N=3).
inline double default_cfl(int N) {
  static const double t[5] = {0.45, 0.45, 0.4, 0.3, 0.25};
  return t[std::clamp(N, 0, 4)];
}

enum class LimiterStatus : std::uint8_t { Unlimited = 0, Limited = 1 };

struct SolverOptions {
  double picardTol = 1e-10;
  int picardMaxIter = 0;  // 0: 2(N+1)
  bool limiter = true;
  bool forceLimiter = false;  // every cell through the subcell scheme
  double stiffFactor = 10.0;
  double yieldFlag = 0.8;
  double boundTol = 1e-8;  // slack on alpha and xi bounds in the detector
  ExpIntTolerances kinetics;
};

struct StepReport {
  int limited = 0;
  int apriori = 0;
  int maxPicard = 0;
  long kineticSteps = 0;
  long kineticRejections = 0;
};

// ---- interface fluctuations ---------------------------------------------------

// B~ (qR - qL) along axis dir: three-point Gauss-Legendre average of B over the straight path.
inline State path_ncp(const State& qL, const State& qR, int dir, double epsAlpha) {
  static const double s5 = std::sqrt(0.6);
  static const double sg[3] = {0.5 * (1.0 - s5), 0.5, 0.5 * (1.0 + s5)};
  static const double wg[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  const State dq = qR - qL;
  State acc = State::Zero();
  for (int g = 0; g < 3; ++g) {
    const State psi = qL + sg[g] * dq;
    acc += wg[g] * ncp_dir(velocity(psi, epsAlpha), dq, dir);
  }
  return acc;
}

// Numerical flux plus half the path term, as seen from the left (HL) and right (HR) cell.
struct FaceFlux {
  State HL, HR;
};

inline FaceFlux rusanov_face(const PointEval& eL, const PointEval& eR, const State& qL, const State& qR, int dir,
                             double epsAlpha) {
  Vec3 n = Vec3::Zero();
  n[dir] = 1.0;
  const double s = std::max(signal_speed_from(eL, n), signal_speed_from(eR, n));
  const State Fhat = 0.5 * (flux_from(eL, dir) + flux_from(eR, dir)) - 0.5 * s * (qR - qL);
  const State nc = 0.5 * path_ncp(qL, qR, dir, epsAlpha);
  return {Fhat + nc, Fhat - nc};
}

// D- = (F(qR)-F(qL))/2 + (B~ - s I)(qR-qL)/2
inline State rusanov_fluctuation(const State& qL, const State& qR, int dir, const Physics& ph) {
  const PointEval eL = eval_point(qL, ph), eR = eval_point(qR, ph);
  Vec3 n = Vec3::Zero();
  n[dir] = 1.0;
  const double s = std::max(signal_speed_from(eL, n), signal_speed_from(eR, n));
  const State dq = qR - qL;
  return 0.5 * (flux_from(eR, dir) - flux_from(eL, dir)) + 0.5 * (path_ncp(qL, qR, dir, ph.epsAlpha) - s * dq);
}

// (xi, A) kinetics of one subcell with everything else frozen.
struct FrozenKinetics {
  State base;
  const Physics* ph;
  JacobianSplit split = JacobianSplit::FourBlock;

  KineticPoint evaluate(const Vec10& q, double, bool jacobian) const {
    State Q = base;
    kin_to_state(q, Q);
    const PointEval e = eval_point(Q, *ph);
    KineticPoint kp;
    kp.split = split;
    const double xi = std::clamp(q[0], 0.0, 1.0);
    kp.Y = equivalent_stress(e.Sigma(), ph->eq);
    kp.tau1 = relaxation_time(xi, kp.Y, e.mat);
    if (jacobian) {
      const KineticJacobian kj = source_jacobian_blocks(q, kp.Y, e.rho, e.mat, split, kp.tau1);
      kp.S = kj.S;
      kp.J = kj.J;
    } else {
      kp.S = kinetic_source(q, kp.Y, e.rho, kp.tau1, e.mat);
    }
    kp.damageRate = damage_rate_theta(xi, kp.Y, e.mat) * std::abs(energy_xi_derivative(e.rho, e.f.Gdev, xi, e.mat));
    return kp;
  }
};

// Inverse timescale of the damage ODE near xi, used for the stiffness flag.
inline double damage_stiffness(const PointEval& e, double Y) {
  const MaterialParams& m = e.mat;
  if (m.theta0 == 0.0 || !(Y > 0.0)) return 0.0;
  const double xi = std::clamp(e.xi, 0.0, 1.0);
  const double g = (1.0 - xi) * clamped_exp(m.a * std::log(Y / m.Y0)) + xi * (Y / m.Y1);
  return m.theta0 * g * std::abs(energy_xi_derivative(e.rho, e.f.Gdev, xi, m));
}

class AderDG {
 public:
  AderDG(GridSpec spec, Physics ph, SolverOptions opt = {})
      : spec_(std::move(spec)), ph_(std::move(ph)), opt_(opt), b_(build_basis(spec_.N)) {
    if (spec_.nx < 1 || spec_.ny < 1) throw std::invalid_argument("grid needs at least one cell per direction");
    if (!(spec_.x1 > spec_.x0) || !(spec_.y1 > spec_.y0)) throw std::invalid_argument("domain bounds must be ordered");
    for (int a : {0, 2}) {
      const bool p0 = spec_.bc[a].kind == BoundaryKind::Periodic, p1 = spec_.bc[a + 1].kind == BoundaryKind::Periodic;
      if (p0 != p1) throw std::invalid_argument("periodic boundaries must come in pairs");
    }
    for (const auto& bc : spec_.bc)
      if (bc.kind == BoundaryKind::PrescribedVelocity && !bc.velocity)
        throw std::invalid_argument("prescribed velocity boundary without a velocity field");
    nx_ = spec_.nx;
    ny_ = spec_.ny;
    n_ = b_.n;
    nn_ = n_ * n_;
    ns_ = b_.ns;
    dx_ = (spec_.x1 - spec_.x0) / nx_;
    dy_ = (spec_.y1 - spec_.y0) / ny_;
    const int nc = nx_ * ny_;
    dofs_.assign(static_cast<std::size_t>(nc) * nn_, State::Zero());
    sub_.assign(static_cast<std::size_t>(nc) * ns_ * ns_, State::Zero());
    status_.assign(nc, LimiterStatus::Unlimited);
    SX_ = nx_ * ns_ + 2 * kGhost;
    SY_ = ny_ * ns_ + 2 * kGhost;
  }

  // ---- access -----------------------------------------------------------------
  const GridSpec& spec() const { return spec_; }
  const Physics& physics() const { return ph_; }
  const BasisData& basis() const { return b_; }
  SolverOptions& options() { return opt_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int N() const { return b_.N; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double time() const { return t_; }
  void set_time(double t) { t_ = t; }
  int cell(int cx, int cy) const { return cy * nx_ + cx; }
  double cell_x(int cx) const { return spec_.x0 + (cx + 0.5) * dx_; }
  double cell_y(int cy) const { return spec_.y0 + (cy + 0.5) * dy_; }
  double node_x(int cx, int i) const { return spec_.x0 + (cx + b_.x[i]) * dx_; }
  double node_y(int cy, int j) const { return spec_.y0 + (cy + b_.x[j]) * dy_; }
  State& dof(int c, int i, int j) { return dofs_[static_cast<std::size_t>(c) * nn_ + j * n_ + i]; }
  const State& dof(int c, int i, int j) const { return dofs_[static_cast<std::size_t>(c) * nn_ + j * n_ + i]; }
  LimiterStatus status(int c) const { return status_[c]; }
  const std::vector<LimiterStatus>& status_map() const { return status_; }

  void set_initial(const std::function<State(double x, double y)>& f) {
    for (int cy = 0; cy < ny_; ++cy)
      for (int cx = 0; cx < nx_; ++cx)
        for (int j = 0; j < n_; ++j)
          for (int i = 0; i < n_; ++i) dof(cell(cx, cy), i, j) = f(node_x(cx, i), node_y(cy, j));
    status_.assign(nx_ * ny_, LimiterStatus::Unlimited);
  }

  State cell_mean(int c) const {
    State s = State::Zero();
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i) s += b_.w[i] * b_.w[j] * dof(c, i, j);
    return s;
  }

  // Point value: DG polynomial, or the containing subcell average for limited cells.
  State value_at(double x, double y) const {
    const double fx = (x - spec_.x0) / dx_, fy = (y - spec_.y0) / dy_;
    const int cx = std::clamp(static_cast<int>(std::floor(fx)), 0, nx_ - 1);
    const int cy = std::clamp(static_cast<int>(std::floor(fy)), 0, ny_ - 1);
    const double lx = std::clamp(fx - cx, 0.0, 1.0), ly = std::clamp(fy - cy, 0.0, 1.0);
    const int c = cell(cx, cy);
    if (status_[c] == LimiterStatus::Limited) {
      const int si = std::min(static_cast<int>(lx * ns_), ns_ - 1), sj = std::min(static_cast<int>(ly * ns_), ns_ - 1);
      return sub_[static_cast<std::size_t>(c) * ns_ * ns_ + sj * ns_ + si];
    }
    State s = State::Zero();
    for (int j = 0; j < n_; ++j) {
      const double pj = b_.lagrange(j, ly);
      for (int i = 0; i < n_; ++i) s += b_.lagrange(i, lx) * pj * dof(c, i, j);
    }
    return s;
  }

  // Domain integrals of the conserved slots, fixed summation order.
  std::array<double, 5> conserved_totals() const {
    std::array<double, 5> tot{};
    std::array<double, 5> comp{};
    for (int c = 0; c < nx_ * ny_; ++c) {
      const State m = cell_mean(c);
      for (int k = 0; k < 5; ++k) {
        const double y = m[kConservedSlots[k]] * dx_ * dy_ - comp[k];
        const double t = tot[k] + y;
        comp[k] = (t - tot[k]) - y;
        tot[k] = t;
      }
    }
    return tot;
  }

  // max |det(A) rho0adv / rho - 1| over nodes (subcells for limited cells)
  double constraint_drift() const {
    double worst = 0.0;
    auto check = [&](const State& q) {
      worst = std::max(worst, std::abs(get_A(q).determinant() * q[ix::rho0] / q[ix::rho] - 1.0));
    };
    for (int c = 0; c < nx_ * ny_; ++c) {
      if (status_[c] == LimiterStatus::Limited) {
        for (int s = 0; s < ns_ * ns_; ++s) check(sub_[static_cast<std::size_t>(c) * ns_ * ns_ + s]);
      } else {
        for (int l = 0; l < nn_; ++l) check(dofs_[static_cast<std::size_t>(c) * nn_ + l]);
      }
    }
    return worst;
  }

  double compute_dt(double cfl = 0.9) const {
    double smax = 0.0;
    const Vec3 ex(1, 0, 0), ey(0, 1, 0);
    auto speed = [&](const State& q, int c) {
      try {
        const PointEval e = eval_point(q, ph_);
        smax = std::max({smax, signal_speed_from(e, ex), signal_speed_from(e, ey)});
      } catch (const NumericalError& err) {
        throw NumericalError(std::string(err.what()) + " in cell (" + std::to_string(c % nx_) + "," +
                             std::to_string(c / nx_) + ")");
      }
    };
    for (int c = 0; c < nx_ * ny_; ++c) {
      if (status_[c] == LimiterStatus::Limited) {
        for (int s = 0; s < ns_ * ns_; ++s) speed(sub_[static_cast<std::size_t>(c) * ns_ * ns_ + s], c);
      } else {
        for (int l = 0; l < nn_; ++l) speed(dofs_[static_cast<std::size_t>(c) * nn_ + l], c);
      }
    }
    if (!(smax > 0.0)) throw NumericalError("zero signal speed");
    return cfl * std::min(dx_, dy_) / ((2 * b_.N + 1) * smax);
  }

  // Space-time predictor of one cell; exposed for tests. Returns false when the
  // cell has to go through the limiter. On success qh holds (N+1)^3 nodes, time slowest.
  bool predictor(int c, double dt, std::vector<State>& qh, int* iterations = nullptr) {
    base_.resize(dofs_.size());
    trace_.resize(dofs_.size() * 4);
    const bool ok = predict_cell(c, dt, iterations);
    if (ok) qh = qh_;
    return ok;
  }

  StepReport advance(double dt);

 private:
  static constexpr int kGhost = 2;

  struct Hancock {
    State q;         // average at t^n
    State slope[2];  // undivided
    State lo[2], hi[2];  // face values evolved to the half step
    Vec3 vmid;
  };
  struct FaceSet {
    std::vector<std::uint8_t> type;  // 0 none, 1 DG, 2 FV
    std::vector<State> momL, momR;   // per face node
    std::vector<State> subL, subR;   // per subface (FV type)
  };

  // ---- helpers --------------------------------------------------------------------
  int xface(int i, int cy) const { return cy * (nx_ + 1) + i; }
  int yface(int cx, int j) const { return j * nx_ + cx; }
  bool periodic_x() const { return spec_.bc[kLeft].kind == BoundaryKind::Periodic; }
  bool periodic_y() const { return spec_.bc[kBottom].kind == BoundaryKind::Periodic; }

  // cells adjacent to x-face i in row cy (-1 if outside)
  std::pair<int, int> xface_cells(int i, int cy) const {
    int l = i - 1, r = i;
    if (periodic_x()) {
      if (l < 0) l = nx_ - 1;
      if (r >= nx_) r = 0;
    }
    return {l >= 0 ? cell(l, cy) : -1, r < nx_ ? cell(r, cy) : -1};
  }
  std::pair<int, int> yface_cells(int cx, int j) const {
    int bo = j - 1, to = j;
    if (periodic_y()) {
      if (bo < 0) bo = ny_ - 1;
      if (to >= ny_) to = 0;
    }
    return {bo >= 0 ? cell(cx, bo) : -1, to < ny_ ? cell(cx, to) : -1};
  }

  State mirror(const State& q, const Vec3& vB) const {
    State g = q;
    const Vec3 v = velocity(q, ph_.epsAlpha);
    const Vec3 vg = 2.0 * vB - v;
    g.segment<3>(ix::m) = std::max(q[ix::alpha], ph_.epsAlpha) * q[ix::rho] * vg;
    g[ix::rhoE] += 0.5 * q[ix::rho] * (vg.squaredNorm() - v.squaredNorm());
    return g;
  }
  State ghost_of(const State& interior, int side, double x, double y, double t) const {
    const Boundary& bc = spec_.bc[side];
    if (bc.kind == BoundaryKind::PrescribedVelocity) return mirror(interior, bc.velocity(x, y, t));
    return interior;
  }

  bool admissible(const State& q, PointEval* out = nullptr) const {
    if (!q.allFinite()) return false;
    const double tol = opt_.boundTol;
    if (q[ix::alpha] < -tol || q[ix::alpha] > 1.0 + tol) return false;
    if (q[ix::xi] < -tol || q[ix::xi] > 1.0 + tol) return false;
    if (!(q[ix::rho] > 0.0) || !(get_A(q).determinant() > 0.0)) return false;
    try {
      if (out)
        *out = eval_point(q, ph_);
      else
        eval_point(q, ph_);
    } catch (const NumericalError&) {
      return false;
    }
    return true;
  }

  bool stiff(const PointEval& e, double dt) const {
    const double Y = equivalent_stress(e.Sigma(), ph_.eq);
    if (Y > opt_.yieldFlag * e.mat.Y0) return true;
    const double tau1 = relaxation_time(std::clamp(e.xi, 0.0, 1.0), Y, e.mat);
    if (tau1 < opt_.stiffFactor * dt) return true;
    return damage_stiffness(e, Y) * opt_.stiffFactor * dt > 1.0;
  }

  State& sg(int sx, int sy) { return sg_[static_cast<std::size_t>(sy) * SX_ + sx]; }
  const State& sg(int sx, int sy) const { return sg_[static_cast<std::size_t>(sy) * SX_ + sx]; }

  bool predict_cell(int c, double dt, int* iterations = nullptr);
  void fill_subcell_grid(double dt);
  const Hancock& hancock(int sx, int sy, double dt);
  void dg_xface(int i, int cy, double dt, std::vector<std::uint8_t>& lim);
  void dg_yface(int cx, int j, double dt, std::vector<std::uint8_t>& lim);
  void fv_face(int dir, int f, double dt);
  void sync_faces(const std::vector<std::uint8_t>& lim, double dt, std::vector<std::uint8_t>* touched);
  void assemble(int c, double dt);
  bool detect(int c);
  void fv_cell(int c, double dt, StepReport& rep);
  void project(const State* nodal, State* subs) const;
  void reconstruct(const State* subs, State* nodal) const;
  void relax_J(State& q, double dt) const {
    if (get_J(q).squaredNorm() == 0.0) return;
    const PointEval e = eval_point(q, ph_);
    q.segment<3>(ix::J) *= std::exp(-dt * thermal_relaxation_rate(e.rho, e.T, e.mat));
  }

  GridSpec spec_;
  Physics ph_;
  SolverOptions opt_;
  BasisData b_;
  int nx_, ny_, n_, nn_, ns_, SX_, SY_;
  double dx_, dy_, t_ = 0.0;
  std::vector<State> dofs_, sub_;
  std::vector<LimiterStatus> status_;

  // per-step work
  std::vector<State> qh_, F0_, F1_, ncp_, src_, qnew_;
  std::vector<Vec3> vel_;
  std::vector<State> base_, trace_, cand_;
  std::vector<State> sg_;
  std::vector<std::array<double, kNumVars>> smin_, smax_;
  std::vector<int> hidx_;
  std::deque<Hancock> hpool_;
  FaceSet fx_, fy_;
};

// ---- predictor ------------------------------------------------------------------

inline bool AderDG::predict_cell(int c, double dt, int* iterations) {
  const int n = n_, nn = nn_, nst = nn * n;
  qh_.resize(nst);
  F0_.resize(nst);
  F1_.resize(nst);
  ncp_.resize(nst);
  src_.resize(nst);
  qnew_.resize(nst);
  vel_.resize(nst);
  const State* u = &dofs_[static_cast<std::size_t>(c) * nn];
  for (int a = 0; a < n; ++a)
    for (int l = 0; l < nn; ++l) qh_[a * nn + l] = u[l];
  const int maxIt = opt_.picardMaxIter > 0 ? opt_.picardMaxIter : 2 * (b_.N + 1);
  const SourceParts parts{true, false};
  const double idx = 1.0 / dx_, idy = 1.0 / dy_;
  int it = 0;
  double incr = 0.0, cmax = 0.0, T0max = 0.0;
  for (; it < maxIt; ++it) {
    for (int s = 0; s < nst; ++s) {
      if (!qh_[s].allFinite()) return false;
      PointEval e;
      try {
        e = eval_point(qh_[s], ph_);
      } catch (const NumericalError&) {
        return false;
      }
      if (it == 0 && s < nn && stiff(e, dt)) return false;
      if (it == 0) {
        cmax = std::max(cmax, signal_speed_from(e, Vec3::UnitX()));
        T0max = std::max(T0max, e.mat.T0);
      }
      F0_[s] = flux_from(e, 0);
      F1_[s] = flux_from(e, 1);
      src_[s] = algebraic_source_from(e, ph_.eq, parts);
      vel_[s] = e.v;
    }
    State dmax = State::Zero(), qmax = State::Zero(), rmax = State::Zero();
    // rhs at every space-time node; reuse qnew_ as scratch for it
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const int s = a * nn + j * n + i;
          State gx = State::Zero(), gy = State::Zero(), dF = State::Zero();
          // difference form: rows of D sum to zero, and constants (Y0 ~ 1e22) must differentiate to exactly 0
          for (int m = 0; m < n; ++m) {
            const double Dx = b_.D(i, m) * idx, Dy = b_.D(j, m) * idy;
            gx += Dx * (qh_[a * nn + j * n + m] - qh_[s]);
            gy += Dy * (qh_[a * nn + m * n + i] - qh_[s]);
            dF += Dx * (F0_[a * nn + j * n + m] - F0_[s]) + Dy * (F1_[a * nn + m * n + i] - F1_[s]);
          }
          ncp_[s] = ncp_from_velocity(vel_[s], gx, gy);
          qnew_[s] = src_[s] - dF - ncp_[s];
          rmax = rmax.cwiseMax(qnew_[s].cwiseAbs());
        }
    // time solve, written into a second buffer
    std::vector<State>& rhs = qnew_;
    static thread_local std::vector<State> next;
    next.resize(nst);
    for (int l = 0; l < nn; ++l)
      for (int a = 0; a < n; ++a) {
        // K1^-1 phi(0) is exactly the constant 1; adding u separately keeps large slots exact
        State acc = State::Zero();
        for (int bb = 0; bb < n; ++bb) acc += (b_.K1inv(a, bb) * dt * b_.w[bb]) * rhs[bb * nn + l];
        next[a * nn + l] = u[l] + acc;
      }
    for (int s = 0; s < nst; ++s) {
      dmax = dmax.cwiseMax((next[s] - qh_[s]).cwiseAbs());
      qmax = qmax.cwiseMax(qh_[s].cwiseAbs());
    }
    // slots that sit at zero are measured against a physical scale of their group
    const double rho = qmax[ix::rho];
    State floor;
    floor.setOnes();
    floor[ix::rho] = rho;
    floor.segment<3>(ix::m).setConstant(rho * cmax);
    floor.segment<3>(ix::J).setConstant(dt * T0max / std::min(dx_, dy_));
    floor[ix::rhoE] = rho * cmax * cmax;
    floor.segment<9>(ix::A).setConstant(std::max(1.0, qmax.segment<9>(ix::A).maxCoeff()));
    incr = 0.0;
    for (int k = 0; k < kNumVars; ++k) {
      const double ref = std::max({qmax[k], dt * rmax[k], floor[k]});
      if (dmax[k] > 0.0) incr = std::max(incr, ref > 0.0 ? dmax[k] / ref : INFINITY);
    }
    if (!std::isfinite(incr)) return false;
    if (incr < opt_.picardTol) break;
    if (it + 1 < maxIt) std::swap(qh_, next);
  }
  if (iterations) *iterations = std::min(it + 1, maxIt);
  // the last evaluated iterate is what the corrector uses; give up if it is far off
  if (incr > 1e-6) return false;

  // corrector volume terms
  State* base = &base_[static_cast<std::size_t>(c) * nn];
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      State acc = State::Zero();
      for (int a = 0; a < n; ++a) {
        State va = src_[a * nn + j * n + i] - ncp_[a * nn + j * n + i];
        for (int m = 0; m < n; ++m) {
          va += (b_.w[m] / b_.w[i] * b_.D(m, i) * idx) * F0_[a * nn + j * n + m];
          va += (b_.w[m] / b_.w[j] * b_.D(m, j) * idy) * F1_[a * nn + m * n + i];
        }
        acc += b_.w[a] * va;
      }
      base[j * n + i] = u[j * n + i] + dt * acc;
    }
  // traces: face f (0 left, 1 right, 2 bottom, 3 top), time node a, face node
  State* tr = &trace_[static_cast<std::size_t>(c) * 4 * nn];
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < n; ++k) {
      State L = State::Zero(), R = State::Zero(), B = State::Zero(), T = State::Zero();
      for (int m = 0; m < n; ++m) {
        L += b_.phi0[m] * qh_[a * nn + k * n + m];
        R += b_.phi1[m] * qh_[a * nn + k * n + m];
        B += b_.phi0[m] * qh_[a * nn + m * n + k];
        T += b_.phi1[m] * qh_[a * nn + m * n + k];
      }
      tr[(0 * n + a) * n + k] = L;
      tr[(1 * n + a) * n + k] = R;
      tr[(2 * n + a) * n + k] = B;
      tr[(3 * n + a) * n + k] = T;
    }
  return true;
}

// ---- subcell data -----------------------------------------------------------------

inline void AderDG::project(const State* nodal, State* subs) const {
  const int n = n_, ns = ns_;
  static thread_local std::vector<State> tmp;
  tmp.resize(static_cast<std::size_t>(ns) * n);
  // x first: tmp(s, j)
  for (int j = 0; j < n; ++j)
    for (int s = 0; s < ns; ++s) {
      State acc = State::Zero();
      for (int i = 0; i < n; ++i) acc += b_.P(s, i) * nodal[j * n + i];
      tmp[j * ns + s] = acc;
    }
  for (int t = 0; t < ns; ++t)
    for (int s = 0; s < ns; ++s) {
      State acc = State::Zero();
      for (int j = 0; j < n; ++j) acc += b_.P(t, j) * tmp[j * ns + s];
      subs[t * ns + s] = acc;
    }
}

inline void AderDG::reconstruct(const State* subs, State* nodal) const {
  const int n = n_, ns = ns_;
  static thread_local std::vector<State> tmp;
  tmp.resize(static_cast<std::size_t>(ns) * n);
  for (int t = 0; t < ns; ++t)
    for (int i = 0; i < n; ++i) {
      State acc = State::Zero();
      for (int s = 0; s < ns; ++s) acc += b_.R(i, s) * subs[t * ns + s];
      tmp[t * n + i] = acc;
    }
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      State acc = State::Zero();
      for (int t = 0; t < ns; ++t) acc += b_.R(j, t) * tmp[t * n + i];
      nodal[j * n + i] = acc;
    }
}

inline void AderDG::fill_subcell_grid(double dt) {
  const int ns = ns_, g = kGhost;
  sg_.resize(static_cast<std::size_t>(SX_) * SY_);
  smin_.resize(nx_ * ny_);
  smax_.resize(nx_ * ny_);
  std::vector<State> buf(ns * ns);
  for (int cy = 0; cy < ny_; ++cy)
    for (int cx = 0; cx < nx_; ++cx) {
      const int c = cell(cx, cy);
      const State* s = &sub_[static_cast<std::size_t>(c) * ns * ns];
      if (status_[c] != LimiterStatus::Limited) {
        project(&dofs_[static_cast<std::size_t>(c) * nn_], buf.data());
        // an oscillating polynomial can project to unusable subcells (alpha ~ 0 with momentum);
        // fall back to the cell mean there, which keeps the averages conservative
        for (int k = 0; k < ns * ns; ++k)
          if (!admissible(buf[k])) {
            std::fill(buf.begin(), buf.end(), cell_mean(c));
            break;
          }
        s = buf.data();
      }
      auto& mn = smin_[c];
      auto& mx = smax_[c];
      mn.fill(INFINITY);
      mx.fill(-INFINITY);
      for (int t = 0; t < ns; ++t)
        for (int r = 0; r < ns; ++r) {
          const State& q = s[t * ns + r];
          sg(g + cx * ns + r, g + cy * ns + t) = q;
          for (int k = 0; k < kNumVars; ++k) {
            mn[k] = std::min(mn[k], q[k]);
            mx[k] = std::max(mx[k], q[k]);
          }
        }
    }
  const double th = t_ + 0.5 * dt;
  const double hx = dx_ / ns, hy = dy_ / ns;
  const int X0 = g, X1 = g + nx_ * ns - 1, Y0 = g, Y1 = g + ny_ * ns - 1;
  for (int sy = Y0; sy <= Y1; ++sy) {
    const double y = spec_.y0 + (sy - g + 0.5) * hy;
    for (int k = 0; k < g; ++k) {
      if (periodic_x()) {
        sg(X0 - 1 - k, sy) = sg(X1 - k, sy);
        sg(X1 + 1 + k, sy) = sg(X0 + k, sy);
      } else {
        const bool mL = spec_.bc[kLeft].kind == BoundaryKind::PrescribedVelocity;
        const bool mR = spec_.bc[kRight].kind == BoundaryKind::PrescribedVelocity;
        sg(X0 - 1 - k, sy) = mL ? ghost_of(sg(X0 + k, sy), kLeft, spec_.x0, y, th) : sg(X0, sy);
        sg(X1 + 1 + k, sy) = mR ? ghost_of(sg(X1 - k, sy), kRight, spec_.x1, y, th) : sg(X1, sy);
      }
    }
  }
  for (int sx = 0; sx < SX_; ++sx) {
    const double x = std::clamp(spec_.x0 + (sx - g + 0.5) * hx, spec_.x0, spec_.x1);
    for (int k = 0; k < g; ++k) {
      if (periodic_y()) {
        sg(sx, Y0 - 1 - k) = sg(sx, Y1 - k);
        sg(sx, Y1 + 1 + k) = sg(sx, Y0 + k);
      } else {
        const bool mB = spec_.bc[kBottom].kind == BoundaryKind::PrescribedVelocity;
        const bool mT = spec_.bc[kTop].kind == BoundaryKind::PrescribedVelocity;
        sg(sx, Y0 - 1 - k) = mB ? ghost_of(sg(sx, Y0 + k), kBottom, x, spec_.y0, th) : sg(sx, Y0);
        sg(sx, Y1 + 1 + k) = mT ? ghost_of(sg(sx, Y1 - k), kTop, x, spec_.y1, th) : sg(sx, Y1);
      }
    }
  }
  hidx_.assign(static_cast<std::size_t>(SX_) * SY_, -1);
  hpool_.clear();
}

inline State minmod(const State& a, const State& b) {
  State r;
  for (int k = 0; k < kNumVars; ++k) {
    if (a[k] * b[k] <= 0.0)
      r[k] = 0.0;
    else
      r[k] = std::abs(a[k]) < std::abs(b[k]) ? a[k] : b[k];
  }
  return r;
}

inline const AderDG::Hancock& AderDG::hancock(int sx, int sy, double dt) {
  int& id = hidx_[static_cast<std::size_t>(sy) * SX_ + sx];
  if (id >= 0) return hpool_[id];
  Hancock h;
  h.q = sg(sx, sy);
  const double hx = dx_ / ns_, hy = dy_ / ns_;
  auto try_slopes = [&](const State& sx_, const State& sy_) {
    h.slope[0] = sx_;
    h.slope[1] = sy_;
    State lo0 = h.q - 0.5 * sx_, hi0 = h.q + 0.5 * sx_, lo1 = h.q - 0.5 * sy_, hi1 = h.q + 0.5 * sy_;
    PointEval e[4];
    if (!admissible(lo0, &e[0]) || !admissible(hi0, &e[1]) || !admissible(lo1, &e[2]) || !admissible(hi1, &e[3]))
      return false;
    const Vec3 v = velocity(h.q, ph_.epsAlpha);
    const State dq = -(0.5 * dt / hx) * (flux_from(e[1], 0) - flux_from(e[0], 0) + ncp_dir(v, sx_, 0)) -
                     (0.5 * dt / hy) * (flux_from(e[3], 1) - flux_from(e[2], 1) + ncp_dir(v, sy_, 1));
    h.lo[0] = lo0 + dq;
    h.hi[0] = hi0 + dq;
    h.lo[1] = lo1 + dq;
    h.hi[1] = hi1 + dq;
    const State mid = h.q + dq;
    if (!admissible(mid) || !admissible(h.lo[0]) || !admissible(h.hi[0]) || !admissible(h.lo[1]) ||
        !admissible(h.hi[1]))
      return false;
    h.vmid = velocity(mid, ph_.epsAlpha);
    return true;
  };
  const State slx = minmod(h.q - sg(sx - 1, sy), sg(sx + 1, sy) - h.q);
  const State sly = minmod(h.q - sg(sx, sy - 1), sg(sx, sy + 1) - h.q);
  if (!try_slopes(slx, sly)) {
    h.slope[0] = h.slope[1] = State::Zero();
    h.lo[0] = h.hi[0] = h.lo[1] = h.hi[1] = h.q;
    h.vmid = velocity(h.q, ph_.epsAlpha);
  }
  id = static_cast<int>(hpool_.size());
  hpool_.push_back(h);
  return hpool_.back();
}

// ---- faces -------------------------------------------------------------------------

inline void AderDG::dg_xface(int i, int cy, double dt, std::vector<std::uint8_t>& lim) {
  const int f = xface(i, cy), n = n_;
  const auto [cl, cr] = xface_cells(i, cy);
  for (int k = 0; k < n; ++k) {
    fx_.momL[f * n + k].setZero();
    fx_.momR[f * n + k].setZero();
  }
  try {
    for (int a = 0; a < n; ++a) {
      const double ta = t_ + b_.x[a] * dt;
      for (int k = 0; k < n; ++k) {
        const double y = node_y(cy, k);
        State qL, qR;
        if (cl >= 0) qL = trace_[static_cast<std::size_t>(cl) * 4 * nn_ + (1 * n + a) * n + k];
        if (cr >= 0) qR = trace_[static_cast<std::size_t>(cr) * 4 * nn_ + (0 * n + a) * n + k];
        if (cl < 0) qL = ghost_of(qR, kLeft, spec_.x0, y, ta);
        if (cr < 0) qR = ghost_of(qL, kRight, spec_.x1, y, ta);
        const PointEval eL = eval_point(qL, ph_), eR = eval_point(qR, ph_);
        const FaceFlux ff = rusanov_face(eL, eR, qL, qR, 0, ph_.epsAlpha);
        fx_.momL[f * n + k] += b_.w[a] * ff.HL;
        fx_.momR[f * n + k] += b_.w[a] * ff.HR;
      }
    }
    fx_.type[f] = 1;
  } catch (const NumericalError&) {
    if (cl >= 0) lim[cl] = 1;
    if (cr >= 0) lim[cr] = 1;
    fx_.type[f] = 0;
  }
}

inline void AderDG::dg_yface(int cx, int j, double dt, std::vector<std::uint8_t>& lim) {
  const int f = yface(cx, j), n = n_;
  const auto [cb, ct] = yface_cells(cx, j);
  for (int k = 0; k < n; ++k) {
    fy_.momL[f * n + k].setZero();
    fy_.momR[f * n + k].setZero();
  }
  try {
    for (int a = 0; a < n; ++a) {
      const double ta = t_ + b_.x[a] * dt;
      for (int k = 0; k < n; ++k) {
        const double x = node_x(cx, k);
        State qL, qR;
        if (cb >= 0) qL = trace_[static_cast<std::size_t>(cb) * 4 * nn_ + (3 * n + a) * n + k];
        if (ct >= 0) qR = trace_[static_cast<std::size_t>(ct) * 4 * nn_ + (2 * n + a) * n + k];
        if (cb < 0) qL = ghost_of(qR, kBottom, x, spec_.y0, ta);
        if (ct < 0) qR = ghost_of(qL, kTop, x, spec_.y1, ta);
        const PointEval eL = eval_point(qL, ph_), eR = eval_point(qR, ph_);
        const FaceFlux ff = rusanov_face(eL, eR, qL, qR, 1, ph_.epsAlpha);
        fy_.momL[f * n + k] += b_.w[a] * ff.HL;
        fy_.momR[f * n + k] += b_.w[a] * ff.HR;
      }
    }
    fy_.type[f] = 1;
  } catch (const NumericalError&) {
    if (cb >= 0) lim[cb] = 1;
    if (ct >= 0) lim[ct] = 1;
    fy_.type[f] = 0;
  }
}

// Subcell fluxes along a whole cell face, from the half-step MUSCL-Hancock data.
inline void AderDG::fv_face(int dir, int f, double dt) {
  FaceSet& fs = dir == 0 ? fx_ : fy_;
  const int ns = ns_, n = n_, g = kGhost;
  for (int s = 0; s < ns; ++s) {
    int sxL, syL, sxR, syR;
    if (dir == 0) {
      const int i = f % (nx_ + 1), cy = f / (nx_ + 1);
      sxL = g + i * ns - 1;
      sxR = sxL + 1;
      syL = syR = g + cy * ns + s;
    } else {
      const int cx = f % nx_, j = f / nx_;
      syL = g + j * ns - 1;
      syR = syL + 1;
      sxL = sxR = g + cx * ns + s;
    }
    const State qL = hancock(sxL, syL, dt).hi[dir];
    const State qR = hancock(sxR, syR, dt).lo[dir];
    const FaceFlux ff = rusanov_face(eval_point(qL, ph_), eval_point(qR, ph_), qL, qR, dir, ph_.epsAlpha);
    fs.subL[f * ns + s] = ff.HL;
    fs.subR[f * ns + s] = ff.HR;
  }
  for (int k = 0; k < n; ++k) {
    State mL = State::Zero(), mR = State::Zero();
    for (int s = 0; s < ns; ++s) {
      mL += b_.Psub(s, k) * fs.subL[f * ns + s];
      mR += b_.Psub(s, k) * fs.subR[f * ns + s];
    }
    fs.momL[f * n + k] = mL / b_.w[k];
    fs.momR[f * n + k] = mR / b_.w[k];
  }
  fs.type[f] = 2;
}

// Every face touching a limited cell becomes a subcell face.
inline void AderDG::sync_faces(const std::vector<std::uint8_t>& lim, double dt, std::vector<std::uint8_t>* touched) {
  for (int cy = 0; cy < ny_; ++cy)
    for (int i = 0; i <= nx_; ++i) {
      const int f = xface(i, cy);
      const auto [cl, cr] = xface_cells(i, cy);
      const bool need = (cl >= 0 && lim[cl]) || (cr >= 0 && lim[cr]);
      if (need && fx_.type[f] != 2) {
        fv_face(0, f, dt);
        if (touched) {
          if (cl >= 0) (*touched)[cl] = 1;
          if (cr >= 0) (*touched)[cr] = 1;
        }
      }
    }
  for (int j = 0; j <= ny_; ++j)
    for (int cx = 0; cx < nx_; ++cx) {
      const int f = yface(cx, j);
      const auto [cb, ct] = yface_cells(cx, j);
      const bool need = (cb >= 0 && lim[cb]) || (ct >= 0 && lim[ct]);
      if (need && fy_.type[f] != 2) {
        fv_face(1, f, dt);
        if (touched) {
          if (cb >= 0) (*touched)[cb] = 1;
          if (ct >= 0) (*touched)[ct] = 1;
        }
      }
    }
}

inline void AderDG::assemble(int c, double dt) {
  const int n = n_, cx = c % nx_, cy = c / nx_;
  const int fl = xface(cx, cy), fr = xface(cx + 1, cy), fb = yface(cx, cy), ft = yface(cx, cy + 1);
  const State* base = &base_[static_cast<std::size_t>(c) * nn_];
  State* out = &cand_[static_cast<std::size_t>(c) * nn_];
  const double rx = dt / dx_, ry = dt / dy_;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      State q = base[j * n + i];
      q -= (rx * b_.phi1[i] / b_.w[i]) * fx_.momL[fr * n + j];
      q += (rx * b_.phi0[i] / b_.w[i]) * fx_.momR[fl * n + j];
      q -= (ry * b_.phi1[j] / b_.w[j]) * fy_.momL[ft * n + i];
      q += (ry * b_.phi0[j] / b_.w[j]) * fy_.momR[fb * n + i];
      out[j * n + i] = q;
    }
}

// a posteriori check of a candidate
inline bool AderDG::detect(int c) {
  const int ns = ns_, cx = c % nx_, cy = c / nx_;
  const State* q = &cand_[static_cast<std::size_t>(c) * nn_];
  for (int l = 0; l < nn_; ++l) {
    PointEval e;
    if (!admissible(q[l], &e)) return false;
    if (equivalent_stress(e.Sigma(), ph_.eq) > opt_.yieldFlag * e.mat.Y0) return false;
  }
  static thread_local std::vector<State> subs;
  subs.resize(ns * ns);
  project(q, subs.data());
  std::array<double, kNumVars> mn, mx;
  mn.fill(INFINITY);
  mx.fill(-INFINITY);
  for (int oy = -1; oy <= 1; ++oy)
    for (int ox = -1; ox <= 1; ++ox) {
      int x = cx + ox, y = cy + oy;
      if (periodic_x()) x = (x + nx_) % nx_;
      if (periodic_y()) y = (y + ny_) % ny_;
      if (x < 0 || x >= nx_ || y < 0 || y >= ny_) continue;
      const int d = cell(x, y);
      for (int k = 0; k < kNumVars; ++k) {
        mn[k] = std::min(mn[k], smin_[d][k]);
        mx[k] = std::max(mx[k], smax_[d][k]);
      }
    }
  std::array<double, kNumVars> tol;
  for (int k = 0; k < kNumVars; ++k) {
    const double scale = std::max({1.0, std::abs(mn[k]), std::abs(mx[k])});
    tol[k] = std::max(1e-4 * scale, 1e-3 * (mx[k] - mn[k]));
  }
  for (int s = 0; s < ns * ns; ++s) {
    if (!admissible(subs[s])) return false;
    for (int k = 0; k < kNumVars; ++k)
      if (subs[s][k] < mn[k] - tol[k] || subs[s][k] > mx[k] + tol[k]) return false;
  }
  return true;
}

inline void AderDG::fv_cell(int c, double dt, StepReport& rep) {
  const int ns = ns_, g = kGhost, cx = c % nx_, cy = c / nx_;
  const double hx = dx_ / ns, hy = dy_ / ns;
  const int ox = g + cx * ns, oy = g + cy * ns;
  // internal subface fluxes; index (row, face) with faces 0..ns
  static thread_local std::vector<State> xL, xR, yL, yR;
  xL.resize(ns * (ns + 1));
  xR.resize(ns * (ns + 1));
  yL.resize(ns * (ns + 1));
  yR.resize(ns * (ns + 1));
  const int fl = xface(cx, cy), fr = xface(cx + 1, cy), fb = yface(cx, cy), ft = yface(cx, cy + 1);
  for (int r = 0; r < ns; ++r) {
    xR[r * (ns + 1) + 0] = fx_.subR[fl * ns + r];
    xL[r * (ns + 1) + ns] = fx_.subL[fr * ns + r];
    yR[r * (ns + 1) + 0] = fy_.subR[fb * ns + r];
    yL[r * (ns + 1) + ns] = fy_.subL[ft * ns + r];
    for (int k = 1; k < ns; ++k) {
      {
        const State qL = hancock(ox + k - 1, oy + r, dt).hi[0];
        const State qR = hancock(ox + k, oy + r, dt).lo[0];
        const FaceFlux ff = rusanov_face(eval_point(qL, ph_), eval_point(qR, ph_), qL, qR, 0, ph_.epsAlpha);
        xL[r * (ns + 1) + k] = ff.HL;
        xR[r * (ns + 1) + k] = ff.HR;
      }
      {
        const State qL = hancock(ox + r, oy + k - 1, dt).hi[1];
        const State qR = hancock(ox + r, oy + k, dt).lo[1];
        const FaceFlux ff = rusanov_face(eval_point(qL, ph_), eval_point(qR, ph_), qL, qR, 1, ph_.epsAlpha);
        yL[r * (ns + 1) + k] = ff.HL;
        yR[r * (ns + 1) + k] = ff.HR;
      }
    }
  }
  State* out = &sub_[static_cast<std::size_t>(c) * ns * ns];
  for (int j = 0; j < ns; ++j)
    for (int i = 0; i < ns; ++i) {
      const Hancock& h = hancock(ox + i, oy + j, dt);
      State q = h.q;
      q -= (dt / hx) * (xL[j * (ns + 1) + i + 1] - xR[j * (ns + 1) + i]);
      q -= (dt / hy) * (yL[i * (ns + 1) + j + 1] - yR[i * (ns + 1) + j]);
      q -= dt * ncp_from_velocity(h.vmid, State(h.slope[0] / hx), State(h.slope[1] / hy));
      const std::string where = "cell (" + std::to_string(cx) + "," + std::to_string(cy) + ") subcell (" +
                                std::to_string(i) + "," + std::to_string(j) + ")";
      if (!q.allFinite() || !(q[ix::rho] > 0.0)) throw NumericalError("subcell update lost admissibility in " + where);
      q[ix::xi] = std::clamp(q[ix::xi], 0.0, 1.0);
      FrozenKinetics sys{q, &ph_};
      ExpIntOptions o;
      o.tol = opt_.kinetics;
      o.dt0 = dt;
      o.recordSteps = false;
      IntegrationStats st;
      try {
        const double d0 = get_A(q).determinant();
        const auto tr = expint_integrate(kin_from_state(q), t_, t_ + dt, sys, o, &st);
        kin_to_state(tr.back().q, q);
        // relaxation leaves det A unchanged; remove the integrator's drift
        const double d1 = get_A(q).determinant();
        if (d0 > 0.0 && d1 > 0.0) set_A(q, get_A(q) * std::cbrt(d0 / d1));
        relax_J(q, dt);
      } catch (const StallError& err) {
        throw StallError(std::string(err.what()) + " in " + where);
      } catch (const NumericalError& err) {
        throw NumericalError(std::string(err.what()) + " in " + where);
      }
      rep.kineticSteps += st.accepted;
      rep.kineticRejections += st.rejected;
      out[j * ns + i] = q;
    }
}

// ---- one step ------------------------------------------------------------------------

inline StepReport AderDG::advance(double dt) {
  StepReport rep;
  const int nc = nx_ * ny_, n = n_;
  base_.resize(static_cast<std::size_t>(nc) * nn_);
  cand_.resize(static_cast<std::size_t>(nc) * nn_);
  trace_.resize(static_cast<std::size_t>(nc) * 4 * nn_);
  const int nfx = (nx_ + 1) * ny_, nfy = nx_ * (ny_ + 1);
  for (auto* fs : {&fx_, &fy_}) {
    const int nf = fs == &fx_ ? nfx : nfy;
    fs->type.assign(nf, 0);
    fs->momL.resize(static_cast<std::size_t>(nf) * n);
    fs->momR.resize(static_cast<std::size_t>(nf) * n);
    fs->subL.resize(static_cast<std::size_t>(nf) * ns_);
    fs->subR.resize(static_cast<std::size_t>(nf) * ns_);
  }
  fill_subcell_grid(dt);

  std::vector<std::uint8_t> lim(nc, 0);
  for (int c = 0; c < nc; ++c) {
    int its = 0;
    const bool ok = !(opt_.limiter && opt_.forceLimiter) && predict_cell(c, dt, &its);
    if (!ok) {
      if (!opt_.limiter)
        throw PredictorDivergence("space-time predictor failed in cell (" + std::to_string(c % nx_) + "," +
                                  std::to_string(c / nx_) + ") with the limiter disabled");
      lim[c] = 1;
    }
    rep.maxPicard = std::max(rep.maxPicard, its);
  }
  for (int cy = 0; cy < ny_; ++cy)
    for (int i = 0; i <= nx_; ++i) {
      const auto [cl, cr] = xface_cells(i, cy);
      if ((cl >= 0 && lim[cl]) || (cr >= 0 && lim[cr])) continue;
      dg_xface(i, cy, dt, lim);
    }
  for (int j = 0; j <= ny_; ++j)
    for (int cx = 0; cx < nx_; ++cx) {
      const auto [cb, ct] = yface_cells(cx, j);
      if ((cb >= 0 && lim[cb]) || (ct >= 0 && lim[ct])) continue;
      dg_yface(cx, j, dt, lim);
    }
  if (!opt_.limiter)
    for (int c = 0; c < nc; ++c)
      if (lim[c]) throw PredictorDivergence("interface state inadmissible with the limiter disabled");
  for (int c = 0; c < nc; ++c) rep.apriori += lim[c];
  sync_faces(lim, dt, nullptr);
  for (int c = 0; c < nc; ++c)
    if (!lim[c]) assemble(c, dt);

  if (opt_.limiter) {
    std::vector<std::uint8_t> newly(nc, 0);
    bool any = false;
    for (int c = 0; c < nc; ++c)
      if (!lim[c] && !detect(c)) newly[c] = 1, any = true;
    if (any) {
      for (int c = 0; c < nc; ++c) lim[c] |= newly[c];
      std::vector<std::uint8_t> touched(nc, 0);
      sync_faces(lim, dt, &touched);
      for (int c = 0; c < nc; ++c)
        if (!lim[c] && touched[c]) assemble(c, dt);
    }
  } else {
    for (int c = 0; c < nc; ++c)
      for (int l = 0; l < nn_; ++l)
        if (!cand_[static_cast<std::size_t>(c) * nn_ + l].allFinite())
          throw NumericalError("non-finite DG update with the limiter disabled");
  }

  for (int c = 0; c < nc; ++c) {
    if (lim[c]) {
      fv_cell(c, dt, rep);
      ++rep.limited;
    }
  }
  for (int c = 0; c < nc; ++c) {
    State* d = &dofs_[static_cast<std::size_t>(c) * nn_];
    if (lim[c]) {
      reconstruct(&sub_[static_cast<std::size_t>(c) * ns_ * ns_], d);
      status_[c] = LimiterStatus::Limited;
    } else {
      const State* q = &cand_[static_cast<std::size_t>(c) * nn_];
      for (int l = 0; l < nn_; ++l) {
        d[l] = q[l];
        relax_J(d[l], dt);
      }
      status_[c] = LimiterStatus::Unlimited;
    }
  }
  t_ += dt;
  return rep;
}

}  // namespace gprfail
