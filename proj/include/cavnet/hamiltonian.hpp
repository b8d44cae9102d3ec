#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cavnet/sector.hpp"

namespace cavnet {

// Physical rates in units of g (hbar = 1, g = 1; time in units of 1/g).
// When dissipative is false the loss rates are ignored by assembly.
struct SystemParams {
  double delta = 3.0;
  double w = 10.0;
  double gamma = 0.0;
  double kappa = 0.0;
  double kappa_f = 0.0;
  bool dissipative = false;
  std::vector<double> w_bond;  // optional per-bond override of w

  void validate() const {
    if (delta == 0) throw std::invalid_argument("params: delta must be nonzero");
    if (w <= 0) throw std::invalid_argument("params: w must be positive");
    if (gamma < 0 || kappa < 0 || kappa_f < 0)
      throw std::invalid_argument("params: loss rates must be nonnegative");
  }

  double gamma_eff() const { return dissipative ? gamma : 0.0; }
  double kappa_eff() const { return dissipative ? kappa : 0.0; }
  double kappa_f_eff() const { return dissipative ? kappa_f : 0.0; }

  double bond_w(int b) const {
    return w_bond.empty() ? w : w_bond[static_cast<std::size_t>(b)];
  }
};

// Laser couplings frozen at one instant: s_i = Omega_i / (delta + i*gamma).
// The denominator is shared between the q<-p element (Omega) and the p<-q
// element (conj(Omega)); only the drive phase is conjugated.
struct CouplingSnapshot {
  std::vector<Complex> omega;
  std::vector<Complex> s;
  Complex denom{1.0, 0.0};
};

inline CouplingSnapshot make_snapshot(std::span<const Complex> omega,
                                      const SystemParams& params) {
  params.validate();
  CouplingSnapshot snap;
  snap.denom = Complex(params.delta, params.gamma_eff());
  snap.omega.assign(omega.begin(), omega.end());
  snap.s.resize(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i)
    snap.s[i] = omega[i] == Complex(0, 0) ? Complex(0, 0) : omega[i] / snap.denom;
  return snap;
}

/// y = H(snapshot) x, matrix-free. Equations of motion in graph form:
///   y_p(i) = conj(Omega_i)/denom * B_i
///   y_q(i) = s_i A_i + sum_{b at i} w_b F_b - i*kappa B_i
///   y_f(b) = w_b (B_i + B_j) - i*kappa_f F_b     for b = (i, j)
inline void apply_into(const SectorBasis& basis, const CouplingSnapshot& snap,
                       const SystemParams& params, const StateVector& x,
                       StateVector& y) {
  require_same_basis(x, y);
  if (x.basis != basis.fingerprint())
    throw std::invalid_argument("hamiltonian: basis mismatch");
  const Lattice& lat = basis.lattice();
  const int n = lat.n_nodes();
  if (static_cast<int>(snap.s.size()) != n)
    throw std::invalid_argument("hamiltonian: snapshot size mismatch");
  const Complex ikap(0, params.kappa_eff());
  const Complex ikapf(0, params.kappa_f_eff());
  for (int i = 0; i < n; ++i) {
    const Complex a = x[basis.p(i)];
    const Complex b = x[basis.q(i)];
    y[basis.p(i)] = std::conj(snap.omega[static_cast<std::size_t>(i)]) /
                    snap.denom * b;
    Complex qi = snap.s[static_cast<std::size_t>(i)] * a - ikap * b;
    for (int bd : lat.bonds_at(i)) qi += params.bond_w(bd) * x[basis.f(bd)];
    y[basis.q(i)] = qi;
  }
  for (int bd = 0; bd < lat.n_bonds(); ++bd) {
    const Bond& e = lat.bond(bd);
    y[basis.f(bd)] = params.bond_w(bd) * (x[basis.q(e.i)] + x[basis.q(e.j)]) -
                     ikapf * x[basis.f(bd)];
  }
}

inline StateVector apply(const SectorBasis& basis, const CouplingSnapshot& snap,
                         const SystemParams& params, const StateVector& x) {
  StateVector y(basis);
  apply_into(basis, snap, params, x, y);
  return y;
}

/// Dense matrix M with M v = apply(v); oracle and spectral-analysis backend.
inline Eigen::MatrixXcd dense_matrix(const SectorBasis& basis,
                                     const CouplingSnapshot& snap,
                                     const SystemParams& params,
                                     int dim_cap = 2000) {
  const int d = basis.dim();
  if (d > dim_cap)
    throw std::invalid_argument("hamiltonian: dimension exceeds dense cap");
  const Lattice& lat = basis.lattice();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (int i = 0; i < lat.n_nodes(); ++i) {
    m(basis.q(i), basis.p(i)) = snap.s[static_cast<std::size_t>(i)];
    m(basis.p(i), basis.q(i)) =
        std::conj(snap.omega[static_cast<std::size_t>(i)]) / snap.denom;
    m(basis.q(i), basis.q(i)) = Complex(0, -params.kappa_eff());
  }
  for (int bd = 0; bd < lat.n_bonds(); ++bd) {
    const Bond& e = lat.bond(bd);
    const double wb = params.bond_w(bd);
    m(basis.f(bd), basis.q(e.i)) = wb;
    m(basis.f(bd), basis.q(e.j)) = wb;
    m(basis.q(e.i), basis.f(bd)) = wb;
    m(basis.q(e.j), basis.f(bd)) = wb;
    m(basis.f(bd), basis.f(bd)) = Complex(0, -params.kappa_f_eff());
  }
  return m;
}

inline bool is_hermitian_mode(const SystemParams& params) {
  return !params.dissipative ||
         (params.gamma == 0 && params.kappa == 0 && params.kappa_f == 0);
}

}  // namespace cavnet
