#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "cavnet/sector.hpp"

namespace cavnet {

/// Weighted combination of basis slots; the serializable form of a state.
struct StateSpec {
  std::vector<std::pair<Slot, Complex>> terms;

  bool empty() const { return terms.empty(); }

  StateVector make_state(const SectorBasis& basis) const {
    if (terms.empty()) throw std::invalid_argument("state spec: empty");
    StateVector v(basis);
    for (const auto& [slot, amp] : terms) v[basis.slot(slot)] += amp;
    return normalized(v);
  }

  static StateSpec site(int node) { return {{{p_slot(node), 1.0}}}; }
};

// Target of a protocol, supported on P slots only.
struct TargetSpec {
  enum class Kind { None, Site, WState, Fourier, Explicit };

  Kind kind = Kind::None;
  int site = 0;                 // Site
  std::vector<int> nodes;       // WState
  double phi0 = 0.0;            // Fourier: phases phi0*(n - first)
  int first = 0, last = 0;      // Fourier node range, inclusive
  std::vector<std::pair<int, Complex>> amps;  // Explicit (node, amplitude)

  bool empty() const { return kind == Kind::None; }

  static TargetSpec make_site(int node) {
    TargetSpec t;
    t.kind = Kind::Site;
    t.site = node;
    return t;
  }

  static TargetSpec make_w(std::vector<int> set) {
    TargetSpec t;
    t.kind = Kind::WState;
    t.nodes = std::move(set);
    return t;
  }

  static TargetSpec make_fourier(double phi0, int first, int last) {
    TargetSpec t;
    t.kind = Kind::Fourier;
    t.phi0 = phi0;
    t.first = first;
    t.last = last;
    return t;
  }

  static TargetSpec make_explicit(std::vector<std::pair<int, Complex>> amps) {
    TargetSpec t;
    t.kind = Kind::Explicit;
    t.amps = std::move(amps);
    return t;
  }

  StateVector make_state(const SectorBasis& basis) const {
    StateVector v(basis);
    switch (kind) {
      case Kind::None:
        throw std::invalid_argument("target: none specified");
      case Kind::Site:
        v[basis.p(site)] = 1.0;
        break;
      case Kind::WState: {
        if (nodes.empty()) throw std::invalid_argument("target: empty W set");
        for (int n : nodes) v[basis.p(n)] = 1.0;
        break;
      }
      case Kind::Fourier: {
        if (last < first) throw std::invalid_argument("target: bad range");
        for (int n = first; n <= last; ++n)
          v[basis.p(n)] = std::polar(1.0, phi0 * (n - first));
        break;
      }
      case Kind::Explicit: {
        if (amps.empty()) throw std::invalid_argument("target: empty state");
        for (const auto& [n, c] : amps) v[basis.p(n)] += c;
        break;
      }
    }
    return normalized(v);
  }
};

}  // namespace cavnet
