#pragma once

#include "gprfail/core.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gprfail {

// Nodal Lagrange basis on the Gauss-Legendre points of [0,1], plus the
// matrices the solver needs in 1D. 2D and space-time operators are tensor
// products of these.
struct BasisData {
  int N = 0;
  int n = 1;   // N+1 nodes
  int ns = 1;  // 2N+1 subcells
  std::vector<double> x, w;
  std::vector<double> phi0, phi1;  // values at 0 and 1
  Eigen::MatrixXd D;               // D(k,l) = phi_l'(x_k)
  Eigen::MatrixXd K1inv;           // inverse of the time stiffness matrix after integration by parts
  Eigen::MatrixXd P;               // subcell averages from nodal values, ns x n
  Eigen::MatrixXd R;               // nodal values from subcell averages, n x ns
  Eigen::MatrixXd Psub;            // P(s,l) / ns: integral of phi_l over subcell s, in units of the cell

  double lagrange(int l, double t) const {
    double v = 1.0;
    for (int m = 0; m < n; ++m)
      if (m != l) v *= (t - x[m]) / (x[l] - x[m]);
    return v;
  }
  double lagrange_deriv(int l, double t) const {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == l) continue;
      double p = 1.0 / (x[l] - x[j]);
      for (int m = 0; m < n; ++m)
        if (m != l && m != j) p *= (t - x[m]) / (x[l] - x[m]);
      s += p;
    }
    return s;
  }
};

// Gauss-Legendre rule with n points on [0,1].
inline void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (z * p1 - p0) / (z * z - 1.0);
    // ascending order on [0,1]
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

inline BasisData build_basis(int N) {
  if (N < 0 || N > 4) throw UnsupportedDegree("polynomial degree " + std::to_string(N) + " not in 0..4");
  BasisData b;
  b.N = N;
  b.n = N + 1;
  b.ns = 2 * N + 1;
  const int n = b.n, ns = b.ns;
  gauss_legendre01(n, b.x, b.w);
  b.phi0.resize(n);
  b.phi1.resize(n);
  for (int l = 0; l < n; ++l) {
    b.phi0[l] = b.lagrange(l, 0.0);
    b.phi1[l] = b.lagrange(l, 1.0);
  }
  b.D.resize(n, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) b.D(k, l) = b.lagrange_deriv(l, b.x[k]);

  // K1(a,b) = phi_a(1) phi_b(1) - w_b phi_a'(t_b)
  Eigen::MatrixXd K1(n, n);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) K1(a, c) = b.phi1[a] * b.phi1[c] - b.w[c] * b.D(c, a);
  b.K1inv = K1.inverse();

  b.P.resize(ns, n);
  for (int s = 0; s < ns; ++s)
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int q = 0; q < n; ++q) acc += b.w[q] * b.lagrange(l, (s + b.x[q]) / ns);
      b.P(s, l) = acc;
    }
  b.Psub = b.P / ns;

  // least squares with the cell mean as a hard constraint (KKT system)
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n) = b.P.transpose() * b.P;
  for (int l = 0; l < n; ++l) K(l, n) = K(n, l) = b.w[l];
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, ns);
  rhs.topRows(n) = b.P.transpose();
  rhs.row(n).setConstant(1.0 / ns);
  b.R = K.fullPivLu().solve(rhs).topRows(n);
  return b;
}

}  // namespace gprfail
