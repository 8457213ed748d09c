#pragma once

// Steady-state phonon occupancy of a mechanical mode (a1) cooled through one
// optical mode (a2) or a chain of two (a2, a3): closed forms, a
// spectral-density quadrature from the Fourier-domain Langevin solution, and
// the eigenvector threshold for mechanical hybridization.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "sdiag/errors.hpp"
#include "sdiag/hybridization.hpp"
#include "sdiag/mode_system.hpp"
#include "sdiag/parallel.hpp"

namespace sdiag {

template <class Real = double>
struct CoolingParams {
  Real kappa1 = Real(0.01);  // mechanical
  Real kappa2 = Real(1);     // primary optical
  Real kappa3 = Real(20);    // auxiliary optical
  Real g1 = Real(0);
  Real g2 = Real(0);
  Real n_m = Real(0);
  Real n_o = Real(0);
  Real n_a = Real(0);

  void validate() const {
    auto nonneg = [](Real v, const char* name) {
      if (!(v >= Real(0))) throw std::invalid_argument(std::string(name) + " must be nonnegative");
    };
    nonneg(kappa1, "kappa1");
    nonneg(kappa2, "kappa2");
    nonneg(kappa3, "kappa3");
    nonneg(g1, "g1");
    nonneg(g2, "g2");
    nonneg(n_m, "n_m");
    nonneg(n_o, "n_o");
    nonneg(n_a, "n_a");
    if (g1 > Real(0) && !(kappa2 > Real(0))) throw std::invalid_argument("kappa2 must be positive when g1 > 0");
    if (g2 > Real(0) && !(kappa3 > Real(0))) throw std::invalid_argument("kappa3 must be positive when g2 > 0");
  }

  ModeMatrix<Real> mode_matrix() const { return build_three_mode(kappa1, kappa2, kappa3, g1, g2); }
};

template <class Real = double>
struct DerivedRates {
  Real C1 = Real(0);
  Real C2 = Real(0);
  Real kappa2_eff = Real(0);
  Real kappa_par = Real(0);
  Real kappa_perp = Real(0);
};

template <class Real>
DerivedRates<Real> derived_rates(const CoolingParams<Real>& p) {
  p.validate();
  DerivedRates<Real> r;
  r.C1 = p.g1 > Real(0) ? 4 * p.g1 * p.g1 / (p.kappa1 * p.kappa2) : Real(0);
  r.C2 = p.g2 > Real(0) ? 4 * p.g2 * p.g2 / (p.kappa2 * p.kappa3) : Real(0);
  r.kappa2_eff = p.kappa2 * (1 + r.C2);
  r.kappa_perp = p.kappa2 + p.kappa3;
  r.kappa_par = r.kappa_perp > Real(0) ? p.kappa2 * p.kappa3 / r.kappa_perp : Real(0);
  return r;
}

template <class Real = double>
struct PhononResult {
  Real n_two_mode = Real(0);
  Real n_two_mode_approx = Real(0);
  Real n_eff = Real(0);
  Real n_full = Real(0);
  Real n_approx = Real(0);
  /// sigma1/Sigma, sigma2/Sigma, sigma3/Sigma: weights of n_m, n_o, n_a in n_full.
  std::array<Real, 3> components{};
  bool eff_valid = false;     // C2 <= 1
  bool approx_valid = false;  // C1, C2 >= 10 and kappa3 > kappa2 > kappa1
  bool decay_dominated = false;
};

namespace detail {

template <class Real>
void require_positive(Real v, const char* name) {
  if (!(v > Real(0))) throw std::domain_error(std::string(name) + " must be positive here");
}

}  // namespace detail

/// Exact two-mode occupancy with r = kappa1/kappa2:
///   n_m (1 + r (1 + C1)) / ((1 + r)(1 + C1)) + n_o C1 / ((1 + r)(1 + C1)).
/// g2 is ignored.
template <class Real>
Real phonon_two_mode(const CoolingParams<Real>& p) {
  detail::require_positive(p.kappa1, "kappa1");
  detail::require_positive(p.kappa2, "kappa2");
  const auto d = derived_rates(p);
  const Real r = p.kappa1 / p.kappa2, den = (1 + r) * (1 + d.C1);
  return p.n_m * (1 + r * (1 + d.C1)) / den + p.n_o * d.C1 / den;
}

/// n_m (kappa1/kappa2 + 1/C1) + n_o; diverges (returns +inf) at C1 = 0.
template <class Real>
Real phonon_two_mode_approx(const CoolingParams<Real>& p) {
  detail::require_positive(p.kappa1, "kappa1");
  detail::require_positive(p.kappa2, "kappa2");
  const auto d = derived_rates(p);
  if (d.C1 == Real(0)) return std::numeric_limits<Real>::infinity();
  return p.n_m * (p.kappa1 / p.kappa2 + 1 / d.C1) + p.n_o;
}

/// Two-mode system with a3 adiabatically eliminated (decay kappa2_eff and
/// noise from both optical baths); strictly valid for C2 <= 1.
template <class Real>
Real phonon_eff_three_mode(const CoolingParams<Real>& p) {
  detail::require_positive(p.kappa1, "kappa1");
  detail::require_positive(p.kappa2, "kappa2");
  const auto d = derived_rates(p);
  const Real r = p.kappa1 / d.kappa2_eff, s = 1 + d.C1 + d.C2, den = (1 + r) * s;
  return p.n_m * ((1 + d.C2) + r * s) / den + p.n_o * (d.C1 / (1 + d.C2)) / den +
         p.n_a * (d.C1 * d.C2 / (1 + d.C2)) / den;
}

/// Full three-mode occupancy as the weighted sum n_m s1/S + n_o s2/S + n_a s3/S
/// with the closed-form weights. These are the leading terms in kappa1/kappa2
/// (the weights sum to 1 only to that order).
template <class Real>
PhononResult<Real> phonon_full_three_mode(const CoolingParams<Real>& p) {
  detail::require_positive(p.kappa1, "kappa1");
  detail::require_positive(p.kappa2, "kappa2");
  detail::require_positive(p.kappa3, "kappa3");
  const auto d = derived_rates(p);
  const Real k1 = p.kappa1, k2 = p.kappa2, k3 = p.kappa3, kp = d.kappa_par, kq = d.kappa_perp;
  const Real C1 = d.C1, C2 = d.C2;
  const Real s1 = (k1 * k1 / (kp * kp) + k1 * k1 * k1 / (k2 * kp * kq) + k1 * k1 * k1 / (k3 * kp * kq) * (1 + C1)) *
                      (1 + C1 + C2) +
                  (k1 / kp) * (1 + C2) * (1 + C2) - (k1 * k1 / (kp * kq)) * C1 * (1 + C2);
  const Real s2 = (k1 / kp) * C1 + (k1 * k1 / (k3 * k3)) * C1 * (C1 + C2);
  const Real s3 = (k1 / kp + k1 * k1 / (kp * kq)) * C1 * C2;
  const Real S = (1 + C1 + C2) * ((k1 / kp) * (1 + C2) + (k1 * k1 / (k3 * k3)) * (1 + C1));
  PhononResult<Real> r;
  r.components = {s1 / S, s2 / S, s3 / S};
  r.n_full = p.n_m * r.components[0] + p.n_o * r.components[1] + p.n_a * r.components[2];
  return r;
}

/// Large-cooperativity form for kappa3 >> kappa2 > kappa1:
///   n_m (C2/(C1+C2) + (k1/k3)^2 C1/C2) + (n_o C1 + n_a q C2)/(C1 + q C2),
/// q = k3^2/(k1 k2). Diverges (returns +inf) at C2 = 0.
template <class Real>
Real phonon_approx_three_mode(const CoolingParams<Real>& p) {
  detail::require_positive(p.kappa1, "kappa1");
  detail::require_positive(p.kappa2, "kappa2");
  detail::require_positive(p.kappa3, "kappa3");
  const auto d = derived_rates(p);
  if (d.C2 == Real(0)) return std::numeric_limits<Real>::infinity();
  const Real ratio = p.kappa1 / p.kappa3, q = p.kappa3 * p.kappa3 / (p.kappa1 * p.kappa2);
  return p.n_m * (d.C2 / (d.C1 + d.C2) + ratio * ratio * d.C1 / d.C2) +
         p.n_o * (d.C1 / (d.C1 + q * d.C2)) + p.n_a * (q * d.C2 / (d.C1 + q * d.C2));
}

/// Every closed form at one point, with validity and regime flags.
template <class Real>
PhononResult<Real> evaluate_cooling(const CoolingParams<Real>& p) {
  auto r = phonon_full_three_mode(p);
  const auto d = derived_rates(p);
  r.n_two_mode = phonon_two_mode(p);
  r.n_two_mode_approx = phonon_two_mode_approx(p);
  r.n_eff = phonon_eff_three_mode(p);
  r.n_approx = phonon_approx_three_mode(p);
  r.eff_valid = d.C2 <= Real(1);
  r.approx_valid = d.C1 >= Real(10) && d.C2 >= Real(10) && p.kappa3 > p.kappa2 && p.kappa2 > p.kappa1;
  // n_m coefficient regimes: decay-dominated when C2/C1 < k1/k3 (three
  // modes) or k1/k2 > 1/C1 (two modes).
  if (d.C2 > Real(0)) {
    r.decay_dominated = d.C2 * p.kappa3 < d.C1 * p.kappa1;
  } else {
    r.decay_dominated = d.C1 * p.kappa1 > p.kappa2;
  }
  return r;
}

/// Transfer coefficients T_in(w) of a1[w] = sum_in sqrt(kappa_in) T_in a_in^in[w],
/// solving the Fourier-domain Langevin equations with x_j = -i w + kappa_j/2:
///   D = x1 (x2 x3 + g2^2) + g1^2 x3,
///   T1 = (x2 x3 + g2^2)/D,  T2 = -i g1 x3 / D,  T3 = -g1 g2 / D.
template <class Real>
std::array<std::complex<Real>, 3> transfer_coefficients(const CoolingParams<Real>& p, Real w) {
  const std::complex<Real> mi(0, -1);
  const auto x1 = mi * w + p.kappa1 / 2, x2 = mi * w + p.kappa2 / 2, x3 = mi * w + p.kappa3 / 2;
  const auto inner = x2 * x3 + p.g2 * p.g2;
  const auto D = x1 * inner + p.g1 * p.g1 * x3;
  return {inner / D, mi * p.g1 * x3 / D, -p.g1 * p.g2 / D};
}

/// Symmetrized spectral density of a1 for white inputs with occupancies
/// (n_m, n_o, n_a), each weighted by n + 1/2.
template <class Real>
Real spectral_density(const CoolingParams<Real>& p, Real w) {
  const auto t = transfer_coefficients(p, w);
  return p.kappa1 * std::norm(t[0]) * (p.n_m + Real(0.5)) + p.kappa2 * std::norm(t[1]) * (p.n_o + Real(0.5)) +
         p.kappa3 * std::norm(t[2]) * (p.n_a + Real(0.5));
}

template <class Real = double>
struct QuadratureOptions {
  /// Per-piece Gauss-Kronrod target; tighter values sit below the
  /// error-estimate roundoff floor and only deepen the recursion.
  Real rel_tol = Real(1e-10);
  /// Largest accepted sum of error estimates, relative to the integral.
  Real max_rel_error = Real(1e-7);
  Real tail_tol = Real(1e-8);
  Real window_factor = Real(50);
  unsigned max_depth = 12;
  int max_extensions = 200;
};

template <class Real = double>
struct QuadratureResult {
  Real n = Real(0);
  Real error_estimate = Real(0);
  Real window = Real(0);
  Real extent = Real(0);  // |w| reached by the tail extension
};

/// n1 = int dw/2pi S(w) - 1/2. The central window |w| <= window_factor
/// max(kappa, g) is split at the resonances w = -Im(lambda) of the mode
/// matrix (and at 1, 10, 100 linewidths either side) and integrated by
/// adaptive Gauss-Kronrod; the tails are extended
/// geometrically until the last piece is below tail_tol of the total, and the
/// remaining 1/w^2 tail is added in closed form.
template <class Real>
QuadratureResult<Real> spectral_density_quadrature(const CoolingParams<Real>& p, const QuadratureOptions<Real>& o = {}) {
  using boost::math::quadrature::gauss_kronrod;
  p.validate();
  detail::require_positive(p.kappa1, "kappa1");
  const Real two_pi = 2 * boost::math::constants::pi<Real>();
  auto f = [&](Real w) { return spectral_density(p, w) / two_pi; };

  const Real scale = std::max({p.kappa1, p.kappa2, p.kappa3, p.g1, p.g2});
  const Real W = o.window_factor * scale;
  std::vector<Real> cuts{-W, W};
  // Resonances follow from the eigenvalues of the 3x3 mode matrix.
  const auto m = p.mode_matrix();
  const auto dec = eigen_general(m, {.check_residual = false});
  for (const auto& l : dec.eigenvalues) {
    const Real w = -l.imag(), hw = std::abs(l.real());
    if (w > -W && w < W) cuts.push_back(w);
    // geometric cuts keep each piece within a factor 4 of distance from the peak
    for (Real d = hw; hw > Real(0) && d < 2 * W; d *= 4) {
      if (w + d < W) cuts.push_back(w + d);
      if (w - d > -W) cuts.push_back(w - d);
    }
  }
  cuts.push_back(Real(0));
  std::sort(cuts.begin(), cuts.end());
  const Real merge = Real(1e-9) * W;
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [merge](Real a, Real b) { return b - a < merge; }), cuts.end());

  QuadratureResult<Real> r;
  r.window = W;
  Real total(0), err_total(0);
  auto piece = [&](Real a, Real b) {
    Real err(0);
    const Real v = gauss_kronrod<Real, 61>::integrate(f, a, b, o.max_depth, o.rel_tol, &err);
    err_total += err;
    return v;
  };
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += piece(cuts[i], cuts[i + 1]);

  Real x = W;
  int ext = 0;
  for (; ext < o.max_extensions; ++ext) {
    const Real right = piece(x, 2 * x), left = piece(-2 * x, -x);
    total += right + left;
    x *= 2;
    if (right + left < o.tail_tol * total) break;
  }
  if (ext == o.max_extensions)
    throw convergence_error("spectral-density tail did not decay below tolerance; achieved relative piece " +
                            std::to_string(static_cast<double>(err_total / total)));
  // beyond x the density is c/w^2 to leading order
  total += x * (f(x) + f(-x));
  r.extent = x;
  r.n = total - Real(0.5);
  r.error_estimate = err_total;
  const Real bound = o.max_rel_error * std::max<Real>(Real(1), std::abs(total));
  if (!(err_total <= bound))
    throw convergence_error("spectral-density quadrature error estimate " +
                            std::to_string(static_cast<double>(err_total)) + " exceeds " +
                            std::to_string(static_cast<double>(bound)));
  return r;
}

template <class Real = double>
struct CoolingSweepPoint {
  Real g1 = Real(0);
  PhononResult<Real> result;
  Real n_quadrature = Real(0);
};

template <class Real = double>
struct CoolingSweep {
  std::vector<CoolingSweepPoint<Real>> points;
  std::size_t argmin_full = 0;       // index of the smallest n_full
  std::size_t argmin_two_mode = 0;   // index of the smallest n_two_mode
  Real min_full() const { return points[argmin_full].result.n_full; }
  Real min_two_mode() const { return points[argmin_two_mode].result.n_two_mode; }
  Real argmin_g1() const { return points[argmin_full].g1; }
};

/// All formulas (and the quadrature, when requested) at each g1 of a
/// monotone grid; params.g1 is overridden.
template <class Real>
CoolingSweep<Real> cooling_sweep(const CoolingParams<Real>& params, const std::vector<Real>& g1_values,
                                 bool with_quadrature = true, unsigned threads = 1) {
  for (std::size_t i = 1; i < g1_values.size(); ++i)
    if (!(g1_values[i] > g1_values[i - 1])) throw std::invalid_argument("cooling_sweep: g1 grid must increase");
  CoolingSweep<Real> s;
  s.points.resize(g1_values.size());
  parallel_for(g1_values.size(), threads, [&](std::size_t i) {
    auto p = params;
    p.g1 = g1_values[i];
    s.points[i].g1 = p.g1;
    s.points[i].result = evaluate_cooling(p);
    if (with_quadrature) {
      try {
        s.points[i].n_quadrature = spectral_density_quadrature(p).n;
      } catch (const convergence_error& e) {
        throw convergence_error(std::string(e.what()) + " at g1 = " + std::to_string(static_cast<double>(p.g1)));
      }
    }
  });
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    if (s.points[i].result.n_full < s.points[s.argmin_full].result.n_full) s.argmin_full = i;
    if (s.points[i].result.n_two_mode < s.points[s.argmin_two_mode].result.n_two_mode) s.argmin_two_mode = i;
  }
  return s;
}

/// n points from a to b, evenly spaced in log(g) (a > 0).
template <class Real>
std::vector<Real> log_grid(Real a, Real b, std::size_t n) {
  using std::exp;
  using std::log;
  if (!(a > Real(0)) || !(b > a) || n < 2) throw std::invalid_argument("log_grid needs 0 < a < b and n >= 2");
  std::vector<Real> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = exp(log(a) + (log(b) - log(a)) * Real(i) / Real(n - 1));
  g.front() = a;
  g.back() = b;
  return g;
}

template <class Real = double>
struct GscOptions {
  Real resolution = Real(1e-4);
  Real g1_max = Real(0);  // 0: 100 max(kappa, g2)
  Real coarse_step = Real(0);  // 0: 1e-2 max(kappa)
};

/// True when the mechanical mode (index 0) appears in some edge set.
template <class Real>
bool mechanics_hybridized(const CoolingParams<Real>& p, Real g1, const HybridizationTolerances<Real>& tol) {
  const auto d = classify_point(build_three_mode(p.kappa1, p.kappa2, p.kappa3, g1, p.g2), tol);
  return d.has_edge(0, 1) || d.has_edge(0, 2);
}

/// Smallest g1 at which (1,2) or (1,3) enters an edge set at fixed g2: coarse
/// scan for the first hybridized point, then bisection to the resolution.
template <class Real>
Real find_g_sc(const CoolingParams<Real>& p, const HybridizationTolerances<Real>& tol = {},
               const GscOptions<Real>& o = {}) {
  p.validate();
  const Real kmax = std::max({p.kappa1, p.kappa2, p.kappa3});
  const Real g_max = o.g1_max > Real(0) ? o.g1_max : Real(100) * std::max(kmax, p.g2);
  const Real step = o.coarse_step > Real(0) ? o.coarse_step : Real(1e-2) * kmax;
  if (mechanics_hybridized(p, Real(0), tol))
    throw std::domain_error("find_g_sc: mechanics already hybridized at g1 = 0");
  Real lo(0), hi(-1);
  for (Real g = step; g <= g_max + step / 2; g += step) {
    if (mechanics_hybridized(p, g, tol)) {
      hi = g;
      break;
    }
    lo = g;
  }
  if (hi < Real(0))
    throw std::domain_error("find_g_sc: no hybridization of the mechanical mode for g1 <= " +
                            std::to_string(static_cast<double>(g_max)));
  while (hi - lo > o.resolution) {
    const Real mid = (lo + hi) / 2;
    if (mechanics_hybridized(p, mid, tol)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return (lo + hi) / 2;
}

}  // namespace sdiag
