#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cavnet/lattice.hpp"

namespace cavnet {

enum class SlotKind { P, Q, F };

/// Basis label: p(i) atomic excitation at node i, q(i) photon in cavity i,
/// f(b) photon in fiber b.
struct Slot {
  SlotKind kind;
  int index;
};

inline Slot p_slot(int i) { return {SlotKind::P, i}; }
inline Slot q_slot(int i) { return {SlotKind::Q, i}; }
inline Slot f_slot(int b) { return {SlotKind::F, b}; }

// Single-excitation sector over a lattice. Slot order is [all P][all Q][all F],
// so P populations and phases are a prefix view of the amplitude array.
class SectorBasis {
 public:
  explicit SectorBasis(Lattice lattice) : lattice_(std::move(lattice)) {}

  int dim() const { return 2 * lattice_.n_nodes() + lattice_.n_bonds(); }

  int p(int i) const {
    check(i, lattice_.n_nodes(), "p");
    return i;
  }
  int q(int i) const {
    check(i, lattice_.n_nodes(), "q");
    return lattice_.n_nodes() + i;
  }
  int f(int b) const {
    check(b, lattice_.n_bonds(), "f");
    return 2 * lattice_.n_nodes() + b;
  }

  int slot(Slot s) const {
    switch (s.kind) {
      case SlotKind::P: return p(s.index);
      case SlotKind::Q: return q(s.index);
      case SlotKind::F: return f(s.index);
    }
    throw std::out_of_range("basis: bad slot kind");
  }

  const Lattice& lattice() const { return lattice_; }
  std::uint64_t fingerprint() const { return lattice_.fingerprint(); }

 private:
  static void check(int k, int n, const char* what) {
    if (k < 0 || k >= n)
      throw std::out_of_range(std::string("basis: ") + what +
                              " label out of range");
  }

  Lattice lattice_;
};

inline SectorBasis build_basis(const Lattice& lattice) {
  return SectorBasis(lattice);
}

/// Complex amplitude vector over a SectorBasis. Value type; carries the basis
/// fingerprint so cross-basis arithmetic is rejected.
struct StateVector {
  std::uint64_t basis = 0;
  std::vector<Complex> a;

  StateVector() = default;
  explicit StateVector(const SectorBasis& b)
      : basis(b.fingerprint()), a(static_cast<std::size_t>(b.dim())) {}

  int dim() const { return static_cast<int>(a.size()); }
  Complex& operator[](int k) { return a[static_cast<std::size_t>(k)]; }
  const Complex& operator[](int k) const {
    return a[static_cast<std::size_t>(k)];
  }
};

inline void require_same_basis(const StateVector& x, const StateVector& y) {
  if (x.basis != y.basis || x.a.size() != y.a.size())
    throw std::invalid_argument("state: basis mismatch");
}

/// Sesquilinear inner product, conjugate-linear in the first argument.
inline Complex inner(const StateVector& x, const StateVector& y) {
  require_same_basis(x, y);
  Complex acc = 0;
  for (std::size_t k = 0; k < x.a.size(); ++k)
    acc += std::conj(x.a[k]) * y.a[k];
  return acc;
}

inline double norm2(const StateVector& x) {
  double acc = 0;
  for (const Complex& c : x.a) acc += std::norm(c);
  return acc;
}

inline double norm(const StateVector& x) { return std::sqrt(norm2(x)); }

inline StateVector pure_state(const SectorBasis& basis, Slot s) {
  StateVector v(basis);
  v[basis.slot(s)] = 1.0;
  return v;
}

inline StateVector superpose(
    const std::vector<std::pair<Complex, StateVector>>& terms,
    bool normalize = false) {
  if (terms.empty()) throw std::invalid_argument("superpose: no terms");
  StateVector out = terms.front().second;
  for (Complex& c : out.a) c *= terms.front().first;
  for (std::size_t k = 1; k < terms.size(); ++k) {
    require_same_basis(out, terms[k].second);
    for (std::size_t m = 0; m < out.a.size(); ++m)
      out.a[m] += terms[k].first * terms[k].second.a[m];
  }
  if (normalize) {
    double n = norm(out);
    if (n == 0) throw std::invalid_argument("superpose: zero vector");
    for (Complex& c : out.a) c /= n;
  }
  return out;
}

inline StateVector scaled(const StateVector& x, Complex c) {
  StateVector out = x;
  for (Complex& v : out.a) v *= c;
  return out;
}

inline StateVector normalized(const StateVector& x) {
  double n = norm(x);
  if (n == 0) throw std::invalid_argument("state: cannot normalize zero");
  return scaled(x, 1.0 / n);
}

}  // namespace cavnet
