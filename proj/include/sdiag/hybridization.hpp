#pragma once

// Eigenvector-based coupling diagnosis: planar projection norms, equivalence
// classes of eigenvectors, strongly coupled mode pairs and region labels.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sdiag/decomposition.hpp"
#include "sdiag/errors.hpp"
#include "sdiag/grid.hpp"
#include "sdiag/parallel.hpp"

namespace sdiag {

/// Unordered mode pair, stored 0-based with first < second.
using ModePair = std::pair<std::size_t, std::size_t>;

template <class Real = double>
struct ProjectionTable {
  std::size_t n_modes = 0;
  std::vector<ModePair> pairs;                 // lexicographic
  std::vector<std::vector<Real>> norms;        // [alpha][pair]
  std::vector<std::vector<Real>> participation;  // [alpha][mode] = |V^alpha_j|

  std::size_t size() const { return norms.size(); }

  std::size_t pair_index(std::size_t j, std::size_t k) const {
    if (j > k) std::swap(j, k);
    // offset of row j in the lexicographic list, then column
    return j * n_modes - j * (j + 1) / 2 + (k - j - 1);
  }

  Real norm(std::size_t alpha, std::size_t j, std::size_t k) const { return norms[alpha][pair_index(j, k)]; }
};

template <class Real = double>
struct EquivalenceClasses {
  std::vector<std::vector<std::size_t>> classes;  // members ascending, classes by first member
  Real tolerance = Real(0);
};

template <class Real = double>
struct HybridizationTolerances {
  /// Equality tolerance on planar norms (absolute; the norms lie in [0, 1]).
  Real tau_eq = Real(1e-6);
  /// Dead zone of the strict dominance inequality.
  Real margin = Real(1e-5);
  /// Minimum eigenvalue gap, relative to max(1, ||M||_F), below which the
  /// point is flagged as near an EP.
  Real near_ep_gap = Real(1e-6);
};

template <class Real = double>
struct EdgeAnalysis {
  /// Pairs dominated by each class against every outsider; for singleton
  /// classes these are not edges.
  std::vector<std::vector<ModePair>> dominated;
  /// E_m per class (empty for singletons).
  std::vector<std::vector<ModePair>> edge_sets;
  /// Some hybridized class has a pair whose worst difference lies in the
  /// dead zone (tau_eq, margin].
  bool indeterminate = false;
};

template <class Real = double>
struct CouplingDiagnosis {
  EquivalenceClasses<Real> classes;
  std::vector<std::size_t> depth;
  std::vector<std::vector<ModePair>> edge_sets;
  std::vector<std::size_t> connectivity;
  std::vector<bool> epd_flags;
  std::vector<ModePair> strongly_coupled_pairs;  // union of edge sets, sorted
  bool indeterminate = false;
  bool near_ep = false;
  std::string region_label;
  ProjectionTable<Real> table;
  EigenDecomposition<Real> decomposition;

  std::size_t depth_max() const { return depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end()); }
  std::size_t connectivity_total() const { return std::accumulate(connectivity.begin(), connectivity.end(), std::size_t{0}); }
  bool weak() const { return strongly_coupled_pairs.empty() && !indeterminate; }
  bool has_edge(std::size_t j, std::size_t k) const {
    const ModePair p{std::min(j, k), std::max(j, k)};
    return std::find(strongly_coupled_pairs.begin(), strongly_coupled_pairs.end(), p) != strongly_coupled_pairs.end();
  }
};

/// "j:k" with 1-based mode indices.
inline std::string pair_to_string(const ModePair& p) {
  return std::to_string(p.first + 1) + ":" + std::to_string(p.second + 1);
}

/// Planar 2-norms L^alpha_(j,k) = sqrt(|V_j|^2 + |V_k|^2) of the unit-norm left
/// eigenvectors, plus their magnitude (participation) vectors.
template <class Real>
ProjectionTable<Real> planar_norms(const EigenDecomposition<Real>& dec) {
  using std::sqrt;
  ProjectionTable<Real> t;
  t.n_modes = dec.left_vectors.empty() ? 0 : dec.left_vectors.front().size();
  for (std::size_t j = 0; j < t.n_modes; ++j)
    for (std::size_t k = j + 1; k < t.n_modes; ++k) t.pairs.emplace_back(j, k);
  for (const auto& v : dec.left_vectors) {
    const Real nrm = detail::vector_norm(v);
    std::vector<Real> mag(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) mag[j] = nrm > Real(0) ? std::abs(v[j]) / nrm : Real(0);
    std::vector<Real> row;
    row.reserve(t.pairs.size());
    for (const auto& [j, k] : t.pairs) row.push_back(sqrt(mag[j] * mag[j] + mag[k] * mag[k]));
    t.norms.push_back(std::move(row));
    t.participation.push_back(std::move(mag));
  }
  return t;
}

/// Groups eigenvectors whose norms agree within tol on every pair, closed
/// transitively (single linkage). With two modes the only planar norm is 1
/// for every vector, so the component magnitudes are compared instead (for
/// N >= 3 the pair norms determine them, and the two tests agree).
template <class Real>
EquivalenceClasses<Real> partition_classes(const ProjectionTable<Real>& t, Real tol) {
  if (!(tol > Real(0))) throw std::invalid_argument("partition_classes: tolerance must be positive");
  const std::size_t n = t.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      using std::abs;
      bool same = true;
      if (t.pairs.size() == 1) {
        for (std::size_t j = 0; j < t.n_modes && same; ++j)
          same = abs(t.participation[a][j] - t.participation[b][j]) <= tol;
      } else {
        for (std::size_t p = 0; p < t.pairs.size() && same; ++p) same = abs(t.norms[a][p] - t.norms[b][p]) <= tol;
      }
      if (same) {
        const auto ra = find(a), rb = find(b);
        parent[std::max(ra, rb)] = std::min(ra, rb);
      }
    }
  EquivalenceClasses<Real> out;
  out.tolerance = tol;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto r = find(a);
    if (slot[r] == n) {
      slot[r] = out.classes.size();
      out.classes.emplace_back();
    }
    out.classes[slot[r]].push_back(a);
  }
  return out;
}

/// Pair (j,k) is dominated by class m when every member's norm exceeds every
/// outsider's by more than margin; with no outsiders every pair is
/// dominated. Differences within the class tolerance count as equal (not
/// dominated); a hybridized class whose worst difference falls between that
/// tolerance and margin makes the result indeterminate.
template <class Real>
EdgeAnalysis<Real> strongly_coupled_pairs(const EquivalenceClasses<Real>& ec, const ProjectionTable<Real>& t,
                                          Real margin) {
  using std::abs;
  EdgeAnalysis<Real> out;
  const std::size_t n = t.size();
  for (const auto& members : ec.classes) {
    std::vector<bool> inside(n, false);
    for (auto a : members) inside[a] = true;
    std::vector<ModePair> dom;
    for (std::size_t p = 0; p < t.pairs.size(); ++p) {
      Real worst = std::numeric_limits<Real>::infinity();
      for (auto a : members)
        for (std::size_t b = 0; b < n; ++b)
          if (!inside[b]) worst = std::min<Real>(worst, t.norms[a][p] - t.norms[b][p]);
      if (worst > margin) {
        dom.push_back(t.pairs[p]);
      } else if (members.size() >= 2 && abs(worst) <= margin && abs(worst) > ec.tolerance) {
        out.indeterminate = true;
      }
    }
    out.edge_sets.push_back(members.size() >= 2 ? dom : std::vector<ModePair>{});
    out.dominated.push_back(std::move(dom));
  }
  return out;
}

/// True when the edges are exactly all C(D,2) pairs among D distinct modes.
inline bool is_clique(const std::vector<ModePair>& edges, std::size_t d) {
  if (d < 2 || edges.size() != d * (d - 1) / 2) return false;
  std::set<std::size_t> modes;
  for (const auto& [j, k] : edges) modes.insert({j, k});
  if (modes.size() != d) return false;
  const std::set<ModePair> have(edges.begin(), edges.end());
  for (auto j = modes.begin(); j != modes.end(); ++j)
    for (auto k = std::next(j); k != modes.end(); ++k)
      if (!have.count({*j, *k})) return false;
  return true;
}

/// Canonical label: per hybridized class its sorted edges joined by '+',
/// classes sorted and joined by '|'; "weak" without edges, "indeterminate"
/// when a dominance test fell into the dead zone.
inline std::string region_label(const std::vector<std::vector<ModePair>>& edge_sets, bool indeterminate) {
  if (indeterminate) return "indeterminate";
  std::vector<std::string> parts;
  for (auto edges : edge_sets) {
    if (edges.empty()) continue;
    std::sort(edges.begin(), edges.end());
    std::string s;
    for (const auto& e : edges) s += (s.empty() ? "" : "+") + pair_to_string(e);
    parts.push_back(std::move(s));
  }
  if (parts.empty()) return "weak";
  std::sort(parts.begin(), parts.end());
  std::string label;
  for (const auto& p : parts) label += (label.empty() ? "" : "|") + p;
  return label;
}

/// Assembles the diagnosis from a decomposition (which is kept in the result).
template <class Real>
CouplingDiagnosis<Real> diagnose(EigenDecomposition<Real> dec, const ModeMatrix<Real>& m,
                                 const HybridizationTolerances<Real>& tol = {}) {
  if (!(tol.tau_eq > Real(0)) || !(tol.margin > Real(0)))
    throw std::invalid_argument("hybridization tolerances must be positive");
  CouplingDiagnosis<Real> d;
  d.table = planar_norms(dec);
  d.classes = partition_classes(d.table, tol.tau_eq);
  auto edges = strongly_coupled_pairs(d.classes, d.table, tol.margin);
  d.indeterminate = edges.indeterminate;
  std::set<ModePair> all;
  for (std::size_t c = 0; c < d.classes.classes.size(); ++c) {
    const std::size_t depth = d.classes.classes[c].size();
    d.depth.push_back(depth);
    d.connectivity.push_back(edges.edge_sets[c].size());
    d.epd_flags.push_back(is_clique(edges.edge_sets[c], depth));
    all.insert(edges.edge_sets[c].begin(), edges.edge_sets[c].end());
  }
  d.edge_sets = std::move(edges.edge_sets);
  d.strongly_coupled_pairs.assign(all.begin(), all.end());
  d.region_label = region_label(d.edge_sets, d.indeterminate);

  Real gap = std::numeric_limits<Real>::max();
  for (std::size_t a = 0; a < dec.size(); ++a)
    for (std::size_t b = a + 1; b < dec.size(); ++b)
      gap = std::min<Real>(gap, std::abs(dec.eigenvalues[a] - dec.eigenvalues[b]));
  d.near_ep = dec.near_defective || gap < tol.near_ep_gap * std::max<Real>(Real(1), m.frobenius_norm());
  d.decomposition = std::move(dec);
  return d;
}

/// Full pipeline at one point: general eigendecomposition, projections,
/// classes, edges, depth, connectivity, EP-D flags and region label.
template <class Real>
CouplingDiagnosis<Real> classify_point(const ModeMatrix<Real>& m, const HybridizationTolerances<Real>& tol = {},
                                       const DecompositionOptions<Real>& opts = {}) {
  return diagnose(eigen_general(m, opts), m, tol);
}

template <class Real = double>
struct CouplingMapCell {
  std::string label;
  std::size_t depth_max = 0;
  std::size_t connectivity_total = 0;
  bool near_ep = false;
  std::vector<std::vector<std::size_t>> classes;
  std::vector<std::vector<ModePair>> edge_sets;
};

template <class Real = double>
struct CouplingMap {
  GridSpec<Real> grid;
  Field2D<CouplingMapCell<Real>> cells;
  Field2D<bool> boundary;  // label differs from a 4-neighbour
};

template <class Real>
Field2D<bool> label_boundaries(const Field2D<CouplingMapCell<Real>>& cells) {
  Field2D<bool> b{cells.nx, cells.ny, std::vector<bool>(cells.values.size(), false)};
  for (std::size_t iy = 0; iy < cells.ny; ++iy)
    for (std::size_t ix = 0; ix < cells.nx; ++ix) {
      const auto& here = cells(ix, iy).label;
      const bool diff = (ix > 0 && cells(ix - 1, iy).label != here) ||
                        (ix + 1 < cells.nx && cells(ix + 1, iy).label != here) ||
                        (iy > 0 && cells(ix, iy - 1).label != here) ||
                        (iy + 1 < cells.ny && cells(ix, iy + 1).label != here);
      b(ix, iy) = diff;
    }
  return b;
}

/// Region label at every grid node; non-convergence names the offending node.
template <class Real>
CouplingMap<Real> scan_coupling_map(const GridSpec<Real>& grid, const HybridizationTolerances<Real>& tol = {},
                                    unsigned threads = 1) {
  grid.validate();
  CouplingMap<Real> map{grid, {grid.nx(), grid.ny(), std::vector<CouplingMapCell<Real>>(grid.size())}, {}};
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const auto ix = i % grid.nx(), iy = i / grid.nx();
    const Real g1 = grid.g1_range.at(ix), g2 = grid.g2_range.at(iy);
    try {
      const auto d = classify_point(grid.matrix_at(g1, g2), tol);
      map.cells.values[i] = {d.region_label, d.depth_max(), d.connectivity_total(), d.near_ep, d.classes.classes,
                             d.edge_sets};
    } catch (const convergence_error& e) {
      throw convergence_error(std::string(e.what()) + " at (g1, g2) = (" + std::to_string(static_cast<double>(g1)) +
                              ", " + std::to_string(static_cast<double>(g2)) + ")");
    }
  });
  map.boundary = label_boundaries(map.cells);
  return map;
}

}  // namespace sdiag
