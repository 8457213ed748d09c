#pragma once

// Closed-form spectra of the resonant three- and four-mode chains: Cardano
// for the cubic, Ferrari (with the resolvent-cubic parametrization) for the
// quartic. Templated on the real type so the same code runs in extended
// precision for EP verification.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/constants/constants.hpp>

#include "sdiag/decomposition.hpp"
#include "sdiag/polynomial.hpp"

namespace sdiag {

/// Depressed cubic t^3 + 3 eps1 t + 2 eps2 with lambda = t + eta0.
template <class Real = double>
struct CubicIntermediates {
  complex_t<Real> epsilon1{};
  complex_t<Real> epsilon2{};
  complex_t<Real> eta0{};
  complex_t<Real> eta_plus{};
  complex_t<Real> eta_minus{};
};

/// Depressed quartic y^4 + f1 y^2 + f2 y + f3 with lambda = y + G1; r1, r2,
/// r3 are the resolvent quantities (Delta_1, Delta_0 and -2 f1 / 3).
template <class Real = double>
struct QuarticIntermediates {
  complex_t<Real> f1{}, f2{}, f3{};
  complex_t<Real> r1{}, r2{}, r3{};
  complex_t<Real> G1{}, G2{}, G3{};
};

namespace detail {

template <class Real>
complex_t<Real> principal_cbrt(const complex_t<Real>& z) {
  using std::cbrt;
  if (z == complex_t<Real>{}) return z;
  return std::polar(Real(cbrt(std::abs(z))), Real(std::arg(z) / Real(3)));
}

template <class Real>
complex_t<Real> cube_root_of_unity(int k) {
  const Real two_pi_third = Real(2) * boost::math::constants::pi<Real>() / Real(3);
  return std::polar(Real(1), Real(two_pi_third * Real(k)));
}

template <class Real>
void require_monic_degree(const CharPoly<Real>& p, std::size_t degree) {
  if (p.degree() != degree)
    throw std::invalid_argument("expected a degree-" + std::to_string(degree) + " polynomial, got degree " +
                                std::to_string(p.degree()));
  if (p.coefficients.front() != complex_t<Real>(1)) throw std::invalid_argument("polynomial must be monic");
}

template <class Real>
void require_zero_detuning(const ModeMatrix<Real>& m) {
  if (!m.has_zero_detuning())
    throw std::invalid_argument("closed-form solvers require zero detuning (real diagonal)");
}

}  // namespace detail

/// Cardano's reduction of a monic cubic.
template <class Real>
CubicIntermediates<Real> cubic_intermediates(const CharPoly<Real>& p) {
  detail::require_monic_degree(p, 3);
  const auto& c = p.coefficients;
  const auto beta = c[1], gamma = c[2], delta = c[3];
  CubicIntermediates<Real> q;
  q.epsilon1 = (Real(3) * gamma - beta * beta) / Real(9);
  q.epsilon2 = -(Real(9) * beta * gamma - Real(27) * delta - Real(2) * beta * beta * beta) / Real(54);
  q.eta0 = -beta / Real(3);
  // u^3 = -eps2 +- sqrt(eps2^2 + eps1^3), v = -eps1/u; the sign maximizing
  // |u^3| avoids cancellation.
  const auto s = std::sqrt(q.epsilon2 * q.epsilon2 + q.epsilon1 * q.epsilon1 * q.epsilon1);
  const auto w_plus = -q.epsilon2 + s, w_minus = -q.epsilon2 - s;
  const auto w = std::abs(w_plus) >= std::abs(w_minus) ? w_plus : w_minus;
  q.eta_plus = detail::principal_cbrt(w);
  q.eta_minus = q.eta_plus == complex_t<Real>{} ? complex_t<Real>{} : -q.epsilon1 / q.eta_plus;
  return q;
}

/// eps1^3 + eps2^2; zero exactly at an EP2 (disc = -108 times this).
template <class Real>
complex_t<Real> cubic_ep2_condition(const CubicIntermediates<Real>& q) {
  return q.epsilon1 * q.epsilon1 * q.epsilon1 + q.epsilon2 * q.epsilon2;
}

template <class Real>
std::array<complex_t<Real>, 3> cubic_roots(const CubicIntermediates<Real>& q) {
  const auto w1 = detail::cube_root_of_unity<Real>(1), w2 = detail::cube_root_of_unity<Real>(2);
  return {q.eta0 + q.eta_plus + q.eta_minus, q.eta0 + w1 * q.eta_plus + w2 * q.eta_minus,
          q.eta0 + w2 * q.eta_plus + w1 * q.eta_minus};
}

/// Ferrari's reduction of a monic quartic (G2, G3 left unset).
template <class Real>
QuarticIntermediates<Real> quartic_intermediates(const CharPoly<Real>& p) {
  detail::require_monic_degree(p, 4);
  const auto& k = p.coefficients;
  const auto b = k[1], c = k[2], d = k[3], e = k[4];
  QuarticIntermediates<Real> q;
  q.f1 = (Real(8) * c - Real(3) * b * b) / Real(8);
  q.f2 = (b * b * b - Real(4) * b * c + Real(8) * d) / Real(8);
  q.f3 = (-Real(3) * b * b * b * b + Real(16) * b * b * c - Real(64) * b * d + Real(256) * e) / Real(256);
  q.r1 = Real(2) * c * c * c - Real(9) * b * c * d + Real(27) * b * b * e + Real(27) * d * d - Real(72) * c * e;
  q.r2 = c * c - Real(3) * b * d + Real(12) * e;
  q.r3 = (Real(3) * b * b - Real(8) * c) / Real(12);
  q.G1 = -b / Real(4);
  return q;
}

/// r1^2 - 4 r2^3; the quartic discriminant is -(this)/27.
template <class Real>
complex_t<Real> quartic_ep2_condition(const QuarticIntermediates<Real>& q) {
  return q.r1 * q.r1 - Real(4) * q.r2 * q.r2 * q.r2;
}

/// f3 + f1^2/12 (= r2/12); vanishes together with the EP2 condition at an EP3.
template <class Real>
complex_t<Real> quartic_ep3_condition(const QuarticIntermediates<Real>& q) {
  return q.f3 + q.f1 * q.f1 / Real(12);
}

namespace detail {

template <class Real>
std::array<complex_t<Real>, 4> ferrari_roots(const QuarticIntermediates<Real>& q, const complex_t<Real>& G3) {
  const auto base = -G3 * G3 - q.f1 / Real(2);
  const auto t = q.f2 / (Real(4) * G3);
  const auto s1 = std::sqrt(base + t), s2 = std::sqrt(base - t);
  return {q.G1 - G3 + s1, q.G1 - G3 - s1, q.G1 + G3 + s2, q.G1 + G3 - s2};
}

template <class Real>
Real max_abs_value(const CharPoly<Real>& p, const std::array<complex_t<Real>, 4>& roots) {
  Real worst(0);
  for (const auto& r : roots) worst = std::max<Real>(worst, std::abs(p(r)));
  return worst;
}

}  // namespace detail

/// Roots of a monic quartic. Of the three cube-root branches for G2 (and the
/// biquadratic split, exact when f2 = 0) the candidate whose roots best
/// satisfy p(lambda) = 0 is kept.
template <class Real>
std::array<complex_t<Real>, 4> quartic_roots(const CharPoly<Real>& p, QuarticIntermediates<Real>& q) {
  q = quartic_intermediates(p);
  const auto disc_like = std::sqrt(quartic_ep2_condition(q));
  const auto plus = (q.r1 + disc_like) / Real(2), minus = (q.r1 - disc_like) / Real(2);
  const auto base_G2 = detail::principal_cbrt(std::abs(plus) >= std::abs(minus) ? plus : minus);

  bool found = false;
  Real best_score(0);
  std::array<complex_t<Real>, 4> best{};
  auto consider = [&](const std::array<complex_t<Real>, 4>& roots, const complex_t<Real>& G2,
                      const complex_t<Real>& G3) {
    for (const auto& r : roots) {
      using std::isfinite;
      if (!isfinite(r.real()) || !isfinite(r.imag())) return;
    }
    const Real score = detail::max_abs_value(p, roots);
    if (!found || score < best_score) {
      found = true;
      best_score = score;
      best = roots;
      q.G2 = G2;
      q.G3 = G3;
    }
  };
  for (int k = 0; k < 3; ++k) {
    const auto G2 = base_G2 * detail::cube_root_of_unity<Real>(k);
    const auto inner = G2 == complex_t<Real>{} ? q.r3 : q.r3 + (G2 + q.r2 / G2) / Real(3);
    const auto G3 = std::sqrt(inner) / Real(2);
    if (G3 == complex_t<Real>{}) continue;
    consider(detail::ferrari_roots(q, G3), G2, G3);
  }
  // y^4 + f1 y^2 + f3 = 0, exact when f2 = 0 (where G3 may vanish)
  const auto root = std::sqrt(q.f1 * q.f1 - Real(4) * q.f3);
  const auto ya = std::sqrt((-q.f1 + root) / Real(2)), yb = std::sqrt((-q.f1 - root) / Real(2));
  consider({q.G1 + ya, q.G1 - ya, q.G1 + yb, q.G1 - yb}, complex_t<Real>{}, complex_t<Real>{});
  return best;
}

/// Eigendecomposition of a resonant 3 x 3 mode matrix via Cardano; vectors
/// from the null spaces of M - lambda I and its transpose.
template <class Real>
EigenDecomposition<Real> eigen_cubic_closed_form(const ModeMatrix<Real>& m,
                                                 const DecompositionOptions<Real>& opts = {}) {
  if (m.dimension() != 3) throw std::invalid_argument("eigen_cubic_closed_form: matrix must be 3 x 3");
  detail::require_zero_detuning(m);
  const auto q = cubic_intermediates(char_poly(m));
  const auto roots = cubic_roots(q);
  cvector<Real> values(roots.begin(), roots.end());
  auto right = null_space_vectors(m, values, false);
  auto left = null_space_vectors(m, values, true);
  return finalize_decomposition(m, std::move(values), std::move(right), std::move(left), opts);
}

/// Eigendecomposition of the resonant alternating four-mode chain via Ferrari.
template <class Real>
EigenDecomposition<Real> eigen_quartic_closed_form(const ModeMatrix<Real>& m,
                                                   const DecompositionOptions<Real>& opts = {}) {
  if (m.dimension() != 4) throw std::invalid_argument("eigen_quartic_closed_form: matrix must be 4 x 4");
  detail::require_zero_detuning(m);
  if (!m.is_tridiagonal() || m(0, 1) != m(2, 3) || m(1, 0) != m(3, 2))
    throw std::invalid_argument("eigen_quartic_closed_form: expects the alternating chain g12 = g34");
  QuarticIntermediates<Real> q;
  const auto roots = quartic_roots(char_poly(m), q);
  cvector<Real> values(roots.begin(), roots.end());
  auto right = null_space_vectors(m, values, false);
  auto left = null_space_vectors(m, values, true);
  return finalize_decomposition(m, std::move(values), std::move(right), std::move(left), opts);
}

}  // namespace sdiag
