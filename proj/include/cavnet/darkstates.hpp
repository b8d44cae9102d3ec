#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cavnet/hamiltonian.hpp"

namespace cavnet {

/// Zero-energy eigenstate on bond b = (i, j), regularized form
///   D ~ s_j w |p_i> - s_i s_j |f_b> + s_i w |p_j>,
/// equal to the 1/s form up to the overall factor s_i s_j w. Finite as either
/// coupling vanishes: at s_i = 0 it reduces exactly to |p_i>.
inline StateVector bond_dark_state(const SectorBasis& basis,
                                   const CouplingSnapshot& snap,
                                   const SystemParams& params, int b) {
  const Bond& e = basis.lattice().bond(b);
  const Complex si = snap.s[static_cast<std::size_t>(e.i)];
  const Complex sj = snap.s[static_cast<std::size_t>(e.j)];
  if (si == Complex(0, 0) && sj == Complex(0, 0))
    throw std::domain_error("dark state: both couplings vanish on bond");
  const double wb = params.bond_w(b);
  StateVector v(basis);
  v[basis.p(e.i)] = sj * wb;
  v[basis.f(b)] = -si * sj;
  v[basis.p(e.j)] = si * wb;
  return normalized(v);
}

/// Orthonormal span of the numerical null space of the Hermitian H.
struct DarkManifold {
  std::vector<StateVector> vectors;
  double tolerance = 0.0;  // absolute eigenvalue threshold used
  int dim() const { return static_cast<int>(vectors.size()); }
};

inline DarkManifold dark_manifold(const SectorBasis& basis,
                                  const CouplingSnapshot& snap,
                                  const SystemParams& params,
                                  double rel_tol = 1e-10, int dim_cap = 2000) {
  SystemParams lossless = params;
  lossless.dissipative = false;  // manifold is defined for the lossless model
  Eigen::MatrixXcd h = dense_matrix(basis, snap, lossless, dim_cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const auto& evals = es.eigenvalues();
  const double scale = evals.cwiseAbs().maxCoeff();
  DarkManifold out;
  out.tolerance = rel_tol * scale;
  for (int k = 0; k < evals.size(); ++k) {
    if (std::abs(evals(k)) > out.tolerance) continue;
    StateVector v(basis);
    for (int m = 0; m < basis.dim(); ++m) v[m] = es.eigenvectors()(m, k);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

/// Population of psi inside the manifold: sum_k |<v_k, psi>|^2.
inline double dark_population(const StateVector& psi,
                              const DarkManifold& manifold) {
  double acc = 0;
  for (const StateVector& v : manifold.vectors) acc += std::norm(inner(v, psi));
  return acc;
}

/// Smallest |E| above the null-space threshold; separates the dark manifold
/// from the bright states and controls the allowed adiabatic speed.
inline double spectral_gap(const SectorBasis& basis,
                           const CouplingSnapshot& snap,
                           const SystemParams& params, double rel_tol = 1e-10,
                           int dim_cap = 2000) {
  SystemParams lossless = params;
  lossless.dissipative = false;
  Eigen::MatrixXcd h = dense_matrix(basis, snap, lossless, dim_cap);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  const auto& evals = es.eigenvalues();
  const double scale = evals.cwiseAbs().maxCoeff();
  if (scale == 0) throw std::domain_error("spectral gap: H vanishes");
  double gap = 0;
  for (int k = 0; k < evals.size(); ++k) {
    const double e = std::abs(evals(k));
    if (e > rel_tol * scale && (gap == 0 || e < gap)) gap = e;
  }
  if (gap == 0) throw std::domain_error("spectral gap: no nonzero eigenvalue");
  return gap;
}

/// Gram matrix of the raw (non-orthogonal) bond dark states. Bonds sharing a
/// node give nonzero off-diagonal overlap; the matrix stays full rank.
inline Eigen::MatrixXcd dark_gram(const SectorBasis& basis,
                                  const CouplingSnapshot& snap,
                                  const SystemParams& params) {
  const int nb = basis.lattice().n_bonds();
  std::vector<StateVector> d;
  d.reserve(static_cast<std::size_t>(nb));
  for (int b = 0; b < nb; ++b)
    d.push_back(bond_dark_state(basis, snap, params, b));
  Eigen::MatrixXcd g(nb, nb);
  for (int r = 0; r < nb; ++r)
    for (int c = 0; c < nb; ++c)
      g(r, c) = inner(d[static_cast<std::size_t>(r)],
                      d[static_cast<std::size_t>(c)]);
  return g;
}

}  // namespace cavnet
