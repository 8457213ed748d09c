#pragma once

// Exceptional points of the two-coupling chains: discriminant fields, traced
// EP2 loci and EP3 points.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdiag/closed_form.hpp"
#include "sdiag/decomposition.hpp"
#include "sdiag/errors.hpp"
#include "sdiag/grid.hpp"
#include "sdiag/parallel.hpp"
#include "sdiag/polynomial.hpp"

namespace sdiag {

template <class Real = double>
struct EpCurvePoint {
  Real g1 = Real(0);
  Real g2 = Real(0);
  std::string branch_label;  // "lambda_a=lambda_b" for the closest pair (1-based)
  Real gap = Real(0);        // that pair's eigenvalue distance
};

template <class Real = double>
struct EpCurve {
  std::vector<EpCurvePoint<Real>> points;
  std::string branch_label;  // most frequent point label
};

template <class Real = double>
struct Ep3Point {
  Real g1 = Real(0);
  Real g2 = Real(0);
  /// Named residuals of the defining conditions at (g1, g2).
  std::vector<std::pair<std::string, Real>> verification;

  Real max_residual() const {
    Real m(0);
    for (const auto& [name, r] : verification) m = std::max<Real>(m, r);
    return m;
  }
};

namespace detail {

inline std::string pair_label(std::size_t a, std::size_t b) {
  return "lambda" + std::to_string(a + 1) + "=lambda" + std::to_string(b + 1);
}

template <class Real>
std::string with_point(const std::string& what, Real g1, Real g2) {
  return what + " at (g1, g2) = (" + std::to_string(static_cast<double>(g1)) + ", " +
         std::to_string(static_cast<double>(g2)) + ")";
}

}  // namespace detail

/// Real part of the discriminant of the characteristic polynomial (real for
/// zero detuning).
template <class Real>
Real discriminant_at(const ModeMatrix<Real>& m) {
  return discriminant(char_poly(m)).real();
}

template <class Real>
Field2D<Real> disc_field(const GridSpec<Real>& grid, unsigned threads = 1) {
  grid.validate();
  Field2D<Real> f{grid.nx(), grid.ny(), std::vector<Real>(grid.size())};
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    f.values[i] = discriminant_at(grid.matrix_at_node(i % grid.nx(), i / grid.nx()));
  });
  return f;
}

/// Eigenvalues with |Im| <= tol max(1, ||M||_F), from the general solver.
template <class Real>
std::size_t real_root_count(const ModeMatrix<Real>& m, Real tol = Real(1e-9)) {
  const auto dec = eigen_general(m, {.check_residual = false});
  const Real bound = tol * std::max<Real>(Real(1), m.frobenius_norm());
  std::size_t n = 0;
  for (const auto& l : dec.eigenvalues)
    if (std::abs(l.imag()) <= bound) ++n;
  return n;
}

template <class Real>
Field2D<std::size_t> real_root_count_field(const GridSpec<Real>& grid, unsigned threads = 1) {
  grid.validate();
  Field2D<std::size_t> f{grid.nx(), grid.ny(), std::vector<std::size_t>(grid.size())};
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    const auto ix = i % grid.nx(), iy = i / grid.nx();
    try {
      f.values[i] = real_root_count(grid.matrix_at_node(ix, iy));
    } catch (const convergence_error& e) {
      throw convergence_error(detail::with_point(e.what(), grid.g1_range.at(ix), grid.g2_range.at(iy)));
    }
  });
  return f;
}

/// Weak coupling: every eigenvalue real. For three modes this is disc > 0;
/// for four modes disc > 0 also admits two conjugate pairs, so the real-root
/// count decides.
template <class Real>
Field2D<bool> weak_field(const GridSpec<Real>& grid, unsigned threads = 1) {
  Field2D<bool> f{grid.nx(), grid.ny(), std::vector<bool>(grid.size())};
  if (grid.system_kind == SystemKind::four_mode) {
    const auto counts = real_root_count_field(grid, threads);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = counts.values[i] == 4;
  } else {
    const auto d = disc_field(grid, threads);
    for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = d.values[i] > Real(0);
  }
  return f;
}

/// Closest eigenvalue pair of the general decomposition.
template <class Real>
EpCurvePoint<Real> label_point(const ModeMatrix<Real>& m, Real g1, Real g2) {
  const auto dec = eigen_general(m, {.check_residual = false});
  EpCurvePoint<Real> p{g1, g2, {}, std::numeric_limits<Real>::max()};
  for (std::size_t a = 0; a < dec.size(); ++a)
    for (std::size_t b = a + 1; b < dec.size(); ++b) {
      const Real d = std::abs(dec.eigenvalues[a] - dec.eigenvalues[b]);
      if (d < p.gap) {
        p.gap = d;
        p.branch_label = detail::pair_label(a, b);
      }
    }
  return p;
}

/// Sign changes of the discriminant along every grid row (fixed g2) and
/// column (fixed g1), each refined by bisection until the bracket is below
/// tol. Node values that are exactly zero are reported as they are. Order:
/// rows by g2 then g1, followed by columns by g1 then g2.
template <class Real>
std::vector<EpCurvePoint<Real>> ep2_crossings(const GridSpec<Real>& grid, Real tol = Real(1e-10),
                                              unsigned threads = 1) {
  if (!(tol > Real(0))) throw std::invalid_argument("bisection tolerance must be positive");
  const auto field = disc_field(grid, threads);
  auto sign = [](Real v) { return (v > Real(0)) - (v < Real(0)); };

  // (line, position) pairs: horizontal lines over g1 at fixed g2, then vertical.
  struct Bracket {
    bool horizontal;
    std::size_t line, at;
  };
  std::vector<Bracket> brackets;
  for (std::size_t iy = 0; iy < grid.ny(); ++iy)
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      const int s = sign(field(ix, iy));
      if (s == 0 || (ix + 1 < grid.nx() && s * sign(field(ix + 1, iy)) < 0)) brackets.push_back({true, iy, ix});
    }
  for (std::size_t ix = 0; ix < grid.nx(); ++ix)
    for (std::size_t iy = 0; iy < grid.ny(); ++iy) {
      const int s = sign(field(ix, iy));
      if (s == 0) continue;  // already reported by the row scan
      if (iy + 1 < grid.ny() && s * sign(field(ix, iy + 1)) < 0) brackets.push_back({false, ix, iy});
    }

  std::vector<EpCurvePoint<Real>> out(brackets.size());
  parallel_for(brackets.size(), threads, [&](std::size_t i) {
    const auto& br = brackets[i];
    const Real fixed = br.horizontal ? grid.g2_range.at(br.line) : grid.g1_range.at(br.line);
    const auto& axis = br.horizontal ? grid.g1_range : grid.g2_range;
    auto eval = [&](Real t) {
      return br.horizontal ? discriminant_at(grid.matrix_at(t, fixed)) : discriminant_at(grid.matrix_at(fixed, t));
    };
    Real lo = axis.at(br.at), root = lo;
    const auto ix = br.horizontal ? br.at : br.line, iy = br.horizontal ? br.line : br.at;
    if (sign(field(ix, iy)) != 0) {
      Real hi = axis.at(br.at + 1);
      int s_lo = sign(field(ix, iy));
      while (hi - lo > tol) {
        const Real mid = (lo + hi) / 2;
        if (mid <= lo || mid >= hi) break;
        const int s = sign(eval(mid));
        if (s == 0) {
          lo = hi = mid;
          break;
        }
        if (s == s_lo) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      root = (lo + hi) / 2;
    }
    const Real g1 = br.horizontal ? root : fixed, g2 = br.horizontal ? fixed : root;
    out[i] = label_point(grid.matrix_at(g1, g2), g1, g2);
  });
  return out;
}

/// Chains crossings into curves by nearest-neighbour continuation; steps
/// longer than max_jump grid cells start a new curve.
template <class Real>
std::vector<EpCurve<Real>> chain_curves(const GridSpec<Real>& grid, const std::vector<EpCurvePoint<Real>>& pts,
                                        Real max_jump = Real(2)) {
  const Real sx = grid.g1_range.step(), sy = grid.g2_range.step();
  auto dist = [&](const EpCurvePoint<Real>& a, const EpCurvePoint<Real>& b) {
    using std::hypot;
    return hypot((a.g1 - b.g1) / sx, (a.g2 - b.g2) / sy);
  };
  std::vector<bool> used(pts.size(), false);
  auto nearest = [&](const EpCurvePoint<Real>& from) {
    std::size_t best = pts.size();
    Real best_d = max_jump;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (used[i]) continue;
      const Real d = dist(from, pts[i]);
      if (d <= best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };

  std::vector<EpCurve<Real>> curves;
  for (std::size_t start = 0; start < pts.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    std::vector<EpCurvePoint<Real>> tail{pts[start]}, head;
    for (std::size_t k; (k = nearest(tail.back())) != pts.size();) {
      used[k] = true;
      tail.push_back(pts[k]);
    }
    for (std::size_t k; (k = nearest(head.empty() ? pts[start] : head.back())) != pts.size();) {
      used[k] = true;
      head.push_back(pts[k]);
    }
    EpCurve<Real> c;
    c.points.assign(head.rbegin(), head.rend());
    c.points.insert(c.points.end(), tail.begin(), tail.end());
    std::map<std::string, std::size_t> votes;
    for (const auto& p : c.points) ++votes[p.branch_label];
    std::size_t top = 0;
    for (const auto& [label, n] : votes)
      if (n > top) {
        top = n;
        c.branch_label = label;
      }
    curves.push_back(std::move(c));
  }
  return curves;
}

/// EP2 loci (disc = 0) on the grid; needs a resolution that brackets every
/// sign change (about 200 points per axis for rates and couplings of order 1 to 20).
template <class Real>
std::vector<EpCurve<Real>> trace_ep2_curves(const GridSpec<Real>& grid, Real tol = Real(1e-10),
                                            unsigned threads = 1) {
  return chain_curves(grid, ep2_crossings(grid, tol, threads));
}

/// Coalescence threshold of a decoupled pair, |k_i - k_j| / 4.
template <class Real>
Real pair_threshold(Real ki, Real kj) {
  using std::abs;
  return abs(ki - kj) / Real(4);
}

/// EP3 of the three-mode chain from the closed-form coordinates,
///   g1^2 = 4 (2 gm + km)^3 / (27 (gm + km)),  g2^2 = 4 (2 km + gm)^3 / (27 (gm + km)),
/// gm = |k1 - k2|/4, km = |k2 - k3|/4, then checked against eps1 = eps2 = 0
/// (|eps1| <= tol max(1, s^2), |eps2| <= tol max(1, s^3), s = max k / 2). The
/// coordinates solve the conditions only for a monotone decay hierarchy;
/// otherwise std::domain_error.
template <class Real>
Ep3Point<Real> locate_ep3_three_mode(Real k1, Real k2, Real k3, Real tol = Real(1e-8)) {
  using std::sqrt;
  detail::require_nonnegative_rates<Real>({k1, k2, k3});
  const Real gm = pair_threshold(k1, k2), km = pair_threshold(k2, k3);
  Ep3Point<Real> p;
  if (gm + km > Real(0)) {
    const Real a = 2 * gm + km, b = 2 * km + gm;
    p.g1 = sqrt(4 * a * a * a / (27 * (gm + km)));
    p.g2 = sqrt(4 * b * b * b / (27 * (gm + km)));
  }
  const auto q = cubic_intermediates(char_poly(build_three_mode(k1, k2, k3, p.g1, p.g2)));
  const Real e1 = std::abs(q.epsilon1), e2 = std::abs(q.epsilon2);
  p.verification = {{"epsilon1", e1}, {"epsilon2", e2}};
  const Real s = std::max<Real>(Real(1), std::max({k1, k2, k3}) / 2);
  if (!(e1 <= tol * s * s) || !(e2 <= tol * s * s * s))
    throw std::domain_error("no EP3 for this decay-rate family: the closed-form point leaves |eps1| = " +
                            std::to_string(static_cast<double>(e1)) +
                            ", |eps2| = " + std::to_string(static_cast<double>(e2)));
  return p;
}

template <class Real = double>
struct NewtonOptions {
  Real tol = Real(1e-8);
  int max_iterations = 100;
};

namespace detail {

/// Scale-free EP3 system for the alternating four-mode chain: (r1/c^3, r2/c^2).
/// r1 = r2 = 0 is equivalent to r1^2 = 4 r2^3 together with f3 = -f1^2/12
/// (the latter is r2/12), but has a regular Jacobian at the root.
template <class Real>
std::array<Real, 2> four_mode_ep3_system(const std::array<Real, 4>& k, Real g1, Real g2) {
  const auto p = char_poly(build_four_mode(k[0], k[1], k[2], k[3], g1, g2));
  const auto q = quartic_intermediates(p);
  const Real c = p.coefficients[2].real();
  return {q.r1.real() / (c * c * c), q.r2.real() / (c * c)};
}

template <class Real>
Real inf_norm(const std::array<Real, 2>& v) {
  using std::abs;
  return std::max(abs(v[0]), abs(v[1]));
}

}  // namespace detail

/// Residuals of the two EP3 conditions of the four-mode chain, normalized by
/// c^6 and c^2 respectively.
template <class Real>
std::vector<std::pair<std::string, Real>> four_mode_ep3_residuals(const std::array<Real, 4>& k, Real g1, Real g2) {
  const auto p = char_poly(build_four_mode(k[0], k[1], k[2], k[3], g1, g2));
  const auto q = quartic_intermediates(p);
  const Real c = p.coefficients[2].real();
  return {{"r1^2-4r2^3", std::abs(quartic_ep2_condition(q)) / (c * c * c * c * c * c)},
          {"f3+f1^2/12", std::abs(quartic_ep3_condition(q)) / (c * c)}};
}

/// EP3 of the alternating four-mode chain by damped Newton (forward-difference
/// Jacobian) from a seed near the intersection of the two conditions.
template <class Real>
Ep3Point<Real> locate_ep3_four_mode(const std::array<Real, 4>& k, Real seed_g1, Real seed_g2,
                                    const NewtonOptions<Real>& opts = {}) {
  using std::abs;
  using std::sqrt;
  detail::require_nonnegative_rates<Real>({k[0], k[1], k[2], k[3]});
  const Real eps = std::numeric_limits<Real>::epsilon();
  std::array<Real, 2> x{seed_g1, seed_g2};
  auto F = [&](const std::array<Real, 2>& at) { return detail::four_mode_ep3_system(k, at[0], at[1]); };
  auto fx = F(x);
  const Real target = Real(64) * eps;
  for (int it = 0; it < opts.max_iterations && detail::inf_norm(fx) > target; ++it) {
    Real J[2][2];
    for (int j = 0; j < 2; ++j) {
      auto xp = x;
      const Real h = sqrt(eps) * std::max<Real>(Real(1), abs(x[j]));
      xp[j] += h;
      const auto fp = F(xp);
      for (int i = 0; i < 2; ++i) J[i][j] = (fp[i] - fx[i]) / h;
    }
    const Real det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    if (det == Real(0) || !std::isfinite(static_cast<double>(det))) break;
    const std::array<Real, 2> dx{-(J[1][1] * fx[0] - J[0][1] * fx[1]) / det,
                                 -(-J[1][0] * fx[0] + J[0][0] * fx[1]) / det};
    Real t(1);
    const Real before = detail::inf_norm(fx);
    std::array<Real, 2> trial;
    std::array<Real, 2> ft;
    for (;;) {
      trial = {x[0] + t * dx[0], x[1] + t * dx[1]};
      ft = F(trial);
      if (detail::inf_norm(ft) < before || t < Real(1e-6)) break;
      t /= 2;
    }
    if (!(detail::inf_norm(ft) < before)) break;
    x = trial;
    fx = ft;
  }
  Ep3Point<Real> p{abs(x[0]), abs(x[1]), four_mode_ep3_residuals(k, abs(x[0]), abs(x[1]))};
  if (!(p.max_residual() < opts.tol))
    throw convergence_error("four-mode EP3 search did not converge from seed (" +
                            std::to_string(static_cast<double>(seed_g1)) + ", " +
                            std::to_string(static_cast<double>(seed_g2)) + "); residual " +
                            std::to_string(static_cast<double>(p.max_residual())));
  return p;
}

/// Seed for the four-mode EP3: the traced EP2 point where r2/c^2 is smallest
/// in magnitude (on the real EP2 locus r2 >= 0, so there is no sign change to
/// bracket).
template <class Real>
EpCurvePoint<Real> four_mode_ep3_seed(const std::array<Real, 4>& k, const std::vector<EpCurve<Real>>& curves) {
  using std::abs;
  EpCurvePoint<Real> best;
  Real best_v = std::numeric_limits<Real>::max();
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      const Real v = abs(detail::four_mode_ep3_system(k, p.g1, p.g2)[1]);
      if (v < best_v) {
        best_v = v;
        best = p;
      }
    }
  if (best_v == std::numeric_limits<Real>::max()) throw std::invalid_argument("no EP2 points to seed from");
  return best;
}

}  // namespace sdiag
