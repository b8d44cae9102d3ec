#pragma once

#include <algorithm>
#include <array>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "cavnet/common.hpp"

namespace cavnet {

struct Bond {
  int i = 0;
  int j = 0;
};

// Cavity-fiber network: nodes are atom-cavity systems, bonds are fibers.
// Immutable after construction; chains, rings, square lattices and custom
// graphs all share the same edge-list representation.
class Lattice {
 public:
  static Lattice chain(int n, bool periodic = false) {
    if (n < 2) throw std::invalid_argument("lattice: chain needs n >= 2");
    if (periodic && n < 3)
      throw std::invalid_argument("lattice: ring needs n >= 3");
    Lattice lat;
    lat.n_nodes_ = n;
    for (int i = 0; i + 1 < n; ++i) lat.bonds_.push_back({i, i + 1});
    if (periodic) lat.bonds_.push_back({n - 1, 0});
    for (int i = 0; i < n; ++i) lat.coords_.push_back({i, 0});
    lat.finish("chain");
    return lat;
  }

  static Lattice square(int nx, int ny, bool periodic = false) {
    if (nx < 1 || ny < 1 || nx * ny < 2)
      throw std::invalid_argument("lattice: square needs nx*ny >= 2");
    // A periodic direction of length < 3 would duplicate a bond pair.
    if (periodic && (nx < 3 || ny < 3))
      throw std::invalid_argument("lattice: periodic square needs nx, ny >= 3");
    Lattice lat;
    lat.n_nodes_ = nx * ny;
    auto idx = [nx](int x, int y) { return y * nx + x; };
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        if (x + 1 < nx)
          lat.bonds_.push_back({idx(x, y), idx(x + 1, y)});
        else if (periodic)
          lat.bonds_.push_back({idx(x, y), idx(0, y)});
        if (y + 1 < ny)
          lat.bonds_.push_back({idx(x, y), idx(x, y + 1)});
        else if (periodic)
          lat.bonds_.push_back({idx(x, y), idx(x, 0)});
      }
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) lat.coords_.push_back({x, y});
    lat.finish("square");
    return lat;
  }

  static Lattice custom(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n < 1) throw std::invalid_argument("lattice: custom needs n >= 1");
    Lattice lat;
    lat.n_nodes_ = n;
    for (auto [i, j] : edges) lat.bonds_.push_back({i, j});
    for (int i = 0; i < n; ++i) lat.coords_.push_back({i, 0});
    lat.finish("custom");
    return lat;
  }

  int n_nodes() const { return n_nodes_; }
  int n_bonds() const { return static_cast<int>(bonds_.size()); }
  const std::vector<Bond>& bonds() const { return bonds_; }

  const Bond& bond(int b) const {
    if (b < 0 || b >= n_bonds()) throw std::out_of_range("lattice: bond index");
    return bonds_[static_cast<std::size_t>(b)];
  }

  std::array<int, 2> coord(int node) const {
    check_node(node);
    return coords_[static_cast<std::size_t>(node)];
  }

  /// Bond indices incident on a node, in bond-index order.
  const std::vector<int>& bonds_at(int node) const {
    check_node(node);
    return incidence_[static_cast<std::size_t>(node)];
  }

  std::vector<int> neighbors(int node) const {
    std::vector<int> out;
    for (int b : bonds_at(node)) {
      const Bond& e = bonds_[static_cast<std::size_t>(b)];
      out.push_back(e.i == node ? e.j : e.i);
    }
    return out;
  }

  /// Bond index joining i and j, or -1 if not adjacent.
  int bond_between(int i, int j) const {
    check_node(i);
    check_node(j);
    for (int b : bonds_at(i)) {
      const Bond& e = bonds_[static_cast<std::size_t>(b)];
      if ((e.i == i && e.j == j) || (e.i == j && e.j == i)) return b;
    }
    return -1;
  }

  bool adjacent(int i, int j) const { return bond_between(i, j) >= 0; }

  const std::string& kind() const { return kind_; }

  std::uint64_t fingerprint() const { return fingerprint_; }

 private:
  void check_node(int node) const {
    if (node < 0 || node >= n_nodes_)
      throw std::out_of_range("lattice: node index");
  }

  void finish(std::string kind) {
    kind_ = std::move(kind);
    std::set<std::pair<int, int>> seen;
    for (const Bond& e : bonds_) {
      if (e.i < 0 || e.i >= n_nodes_ || e.j < 0 || e.j >= n_nodes_)
        throw std::invalid_argument("lattice: bond endpoint out of range");
      if (e.i == e.j) throw std::invalid_argument("lattice: self-loop bond");
      auto key = std::minmax(e.i, e.j);
      if (!seen.insert(key).second)
        throw std::invalid_argument("lattice: duplicate bond");
    }
    incidence_.assign(static_cast<std::size_t>(n_nodes_), {});
    for (int b = 0; b < n_bonds(); ++b) {
      incidence_[static_cast<std::size_t>(bonds_[b].i)].push_back(b);
      incidence_[static_cast<std::size_t>(bonds_[b].j)].push_back(b);
    }
    if (!connected())
      throw std::invalid_argument("lattice: graph is disconnected");
    std::uint64_t h = fnv1a(&n_nodes_, sizeof n_nodes_);
    for (const Bond& e : bonds_) {
      h = fnv1a(&e.i, sizeof e.i, h);
      h = fnv1a(&e.j, sizeof e.j, h);
    }
    fingerprint_ = h;
  }

  bool connected() const {
    if (n_nodes_ == 0) return false;
    std::vector<char> vis(static_cast<std::size_t>(n_nodes_), 0);
    std::queue<int> q;
    q.push(0);
    vis[0] = 1;
    int count = 1;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int b : incidence_[static_cast<std::size_t>(u)]) {
        const Bond& e = bonds_[static_cast<std::size_t>(b)];
        int v = (e.i == u) ? e.j : e.i;
        if (!vis[static_cast<std::size_t>(v)]) {
          vis[static_cast<std::size_t>(v)] = 1;
          ++count;
          q.push(v);
        }
      }
    }
    return count == n_nodes_;
  }

  int n_nodes_ = 0;
  std::vector<Bond> bonds_;
  std::vector<std::array<int, 2>> coords_;
  std::vector<std::vector<int>> incidence_;
  std::string kind_;
  std::uint64_t fingerprint_ = 0;
};

/// Breadth-first shortest path from `from` to `to`, skipping `blocked` nodes.
/// Returns the node sequence including both endpoints, or empty if unreachable.
inline std::vector<int> shortest_path(const Lattice& lat, int from, int to,
                                      const std::set<int>& blocked = {}) {
  if (blocked.count(from) || blocked.count(to)) return {};
  std::vector<int> prev(static_cast<std::size_t>(lat.n_nodes()), -2);
  std::queue<int> q;
  q.push(from);
  prev[static_cast<std::size_t>(from)] = -1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u == to) break;
    for (int v : lat.neighbors(u)) {
      if (prev[static_cast<std::size_t>(v)] != -2 || blocked.count(v)) continue;
      prev[static_cast<std::size_t>(v)] = u;
      q.push(v);
    }
  }
  if (prev[static_cast<std::size_t>(to)] == -2) return {};
  std::vector<int> path;
  for (int u = to; u != -1; u = prev[static_cast<std::size_t>(u)])
    path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace cavnet
