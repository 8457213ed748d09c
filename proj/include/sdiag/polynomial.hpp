#pragma once

// Characteristic polynomials of mode matrices and their discriminants.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sdiag/mode_system.hpp"

namespace sdiag {

/// Monic polynomial, coefficients highest degree first.
template <class Real = double>
struct CharPoly {
  std::vector<complex_t<Real>> coefficients;

  std::size_t degree() const { return coefficients.empty() ? 0 : coefficients.size() - 1; }

  complex_t<Real> operator()(const complex_t<Real>& x) const {
    complex_t<Real> acc{};
    for (const auto& c : coefficients) acc = acc * x + c;
    return acc;
  }

  CharPoly derivative() const {
    CharPoly d;
    const std::size_t n = degree();
    for (std::size_t i = 0; i < n; ++i) d.coefficients.push_back(coefficients[i] * Real(n - i));
    return d;
  }

  /// Largest |imag| over the coefficients.
  Real max_imag() const {
    using std::abs;
    Real m(0);
    for (const auto& c : coefficients) m = std::max<Real>(m, abs(c.imag()));
    return m;
  }

  /// Scale for "small" comparisons: max |c_i|.
  Real magnitude() const {
    Real m(0);
    for (const auto& c : coefficients) m = std::max<Real>(m, std::abs(c));
    return m;
  }
};

namespace detail {

template <class Real>
using cpoly = std::vector<complex_t<Real>>;  // highest degree first

template <class Real>
cpoly<Real> poly_sub(const cpoly<Real>& a, const cpoly<Real>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  cpoly<Real> r(n);
  for (std::size_t i = 0; i < a.size(); ++i) r[n - a.size() + i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[n - b.size() + i] -= b[i];
  return r;
}

// (x - a) * p
template <class Real>
cpoly<Real> times_linear(const cpoly<Real>& p, const complex_t<Real>& a) {
  cpoly<Real> r(p.size() + 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    r[i] += p[i];
    r[i + 1] -= a * p[i];
  }
  return r;
}

template <class Real>
cpoly<Real> scaled(cpoly<Real> p, const complex_t<Real>& s) {
  for (auto& c : p) c *= s;
  return p;
}

}  // namespace detail

/// det(x I - M) for tridiagonal M via the continuant recurrence
///   p_k = (x - M_kk) p_{k-1} - M_{k-1,k} M_{k,k-1} p_{k-2}.
template <class Real>
CharPoly<Real> char_poly_tridiagonal(const ModeMatrix<Real>& m) {
  if (!m.is_tridiagonal()) throw std::invalid_argument("char_poly_tridiagonal: matrix is not tridiagonal");
  const std::size_t n = m.dimension();
  detail::cpoly<Real> prev{complex_t<Real>(1)};
  if (n == 0) return {prev};
  detail::cpoly<Real> cur = detail::times_linear(prev, m(0, 0));
  for (std::size_t k = 1; k < n; ++k) {
    auto next = detail::poly_sub(detail::times_linear(cur, m(k, k)),
                                 detail::scaled(prev, m(k - 1, k) * m(k, k - 1)));
    prev = std::move(cur);
    cur = std::move(next);
  }
  return {cur};
}

/// det(x I - M) for any square M by the Faddeev-LeVerrier trace recursion.
template <class Real>
CharPoly<Real> char_poly_faddeev(const ModeMatrix<Real>& m) {
  const std::size_t n = m.dimension();
  std::vector<complex_t<Real>> c(n + 1);
  c[0] = complex_t<Real>(1);
  // aux = M_k, starts at 0; M_k = A M_{k-1} + c_{k-1} I, c_k = -tr(A M_k)/k
  ModeMatrix<Real> aux(n);
  for (std::size_t k = 1; k <= n; ++k) {
    ModeMatrix<Real> next(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t col = 0; col < n; ++col) {
        complex_t<Real> s{};
        for (std::size_t q = 0; q < n; ++q) s += m(r, q) * aux(q, col);
        next(r, col) = s;
      }
      next(r, r) += c[k - 1];
    }
    complex_t<Real> tr{};
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t q = 0; q < n; ++q) tr += m(r, q) * next(q, r);
    c[k] = -tr / Real(k);
    aux = std::move(next);
  }
  return {c};
}

template <class Real>
CharPoly<Real> char_poly(const ModeMatrix<Real>& m) {
  return m.is_tridiagonal() ? char_poly_tridiagonal(m) : char_poly_faddeev(m);
}

/// Determinant by LU with partial pivoting.
template <class Real>
complex_t<Real> determinant(std::vector<complex_t<Real>> a, std::size_t n) {
  complex_t<Real> det(1);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    Real best = std::abs(a[col * n + col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const Real v = std::abs(a[r * n + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == Real(0)) return complex_t<Real>{};
    if (piv != col) {
      for (std::size_t q = 0; q < n; ++q) std::swap(a[col * n + q], a[piv * n + q]);
      det = -det;
    }
    const auto d = a[col * n + col];
    det *= d;
    for (std::size_t r = col + 1; r < n; ++r) {
      const auto f = a[r * n + col] / d;
      if (f == complex_t<Real>{}) continue;
      for (std::size_t q = col; q < n; ++q) a[r * n + q] -= f * a[col * n + q];
    }
  }
  return det;
}

/// Sylvester matrix of p (degree m) and q (degree n), size (m+n).
template <class Real>
std::vector<complex_t<Real>> sylvester_matrix(const CharPoly<Real>& p, const CharPoly<Real>& q) {
  const std::size_t m = p.degree(), n = q.degree(), size = m + n;
  std::vector<complex_t<Real>> s(size * size);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i <= m; ++i) s[r * size + r + i] = p.coefficients[i];
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t i = 0; i <= n; ++i) s[(n + r) * size + r + i] = q.coefficients[i];
  return s;
}

template <class Real>
complex_t<Real> resultant(const CharPoly<Real>& p, const CharPoly<Real>& q) {
  return determinant(sylvester_matrix(p, q), p.degree() + q.degree());
}

/// disc(p) = (-1)^{n(n-1)/2} Res(p, p') / a_n = prod_{a<b} (x_a - x_b)^2.
template <class Real>
complex_t<Real> discriminant(const CharPoly<Real>& p) {
  const std::size_t n = p.degree();
  if (n < 2) throw std::invalid_argument("discriminant: degree must be at least 2");
  const auto res = resultant(p, p.derivative());
  const bool negate = ((n * (n - 1) / 2) % 2) == 1;
  const auto d = res / p.coefficients.front();
  return negate ? -d : d;
}

/// prod_{a<b} (x_a - x_b)^2 from a list of roots.
template <class Real>
complex_t<Real> discriminant_from_roots(const std::vector<complex_t<Real>>& roots) {
  complex_t<Real> d(1);
  for (std::size_t a = 0; a < roots.size(); ++a)
    for (std::size_t b = a + 1; b < roots.size(); ++b) {
      const auto diff = roots[a] - roots[b];
      d *= diff * diff;
    }
  return d;
}

/// Real coefficients {1, beta, gamma, delta} of the resonant three-mode chain.
template <class Real>
std::array<Real, 4> three_mode_coefficients(Real k1, Real k2, Real k3, Real g1, Real g2) {
  const Real beta = (k1 + k2 + k3) / 2;
  const Real gamma = g1 * g1 + g2 * g2 + (k1 * k2 + k1 * k3 + k2 * k3) / 4;
  const Real delta = (4 * g1 * g1 * k3 + 4 * g2 * g2 * k1 + k1 * k2 * k3) / 8;
  return {Real(1), beta, gamma, delta};
}

/// Real coefficients {1, b, c, d, e} of the resonant alternating four-mode
/// chain. b is the negated trace, sum(kappa)/2.
template <class Real>
std::array<Real, 5> four_mode_coefficients(Real k1, Real k2, Real k3, Real k4, Real g1, Real g2) {
  const Real s1 = g1 * g1, s2 = g2 * g2;
  const Real b = (k1 + k2 + k3 + k4) / 2;
  const Real c = 2 * s1 + s2 + (k1 * k2 + k1 * k3 + k2 * k3 + k1 * k4 + k2 * k4 + k3 * k4) / 4;
  const Real d = (4 * s1 * (k1 + k2 + k3 + k4) + 4 * s2 * (k1 + k4) + k1 * k2 * k3 + k1 * k2 * k4 +
                  k1 * k3 * k4 + k2 * k3 * k4) /
                 8;
  const Real e = s1 * s1 + s1 * (k1 * k2 + k3 * k4) / 4 + k1 * k4 * (4 * s2 + k2 * k3) / 16;
  return {Real(1), b, c, d, e};
}

}  // namespace sdiag
