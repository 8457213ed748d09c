#pragma once

// Eigendecompositions of mode matrices: the common result type, its
// normalization rules, and the general-N dense solver.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sdiag/errors.hpp"
#include "sdiag/mode_system.hpp"

namespace sdiag {

template <class Real>
using cvector = std::vector<complex_t<Real>>;

template <class Real = double>
struct DecompositionOptions {
  /// Minimum pairwise right-eigenvector angle (rad) below which the matrix
  /// is reported as near-defective.
  Real near_defective_angle = Real(1e-4);
  /// Residual bound relative to max(1, ||M||_F).
  Real residual_tol = Real(1e-9);
  bool check_residual = true;
};

/// Eigenvalues sorted by (Re, Im) ascending (real parts equal within
/// 1e-10 max(1, ||M||_F) tie); vectors unit-norm with their
/// largest-magnitude component real positive. left_vectors[a] satisfies
/// V M = lambda_a V (stored as a column of components).
template <class Real = double>
struct EigenDecomposition {
  cvector<Real> eigenvalues;
  std::vector<cvector<Real>> right_vectors;
  std::vector<cvector<Real>> left_vectors;
  Real max_residual = Real(0);
  Real min_angle = Real(0);
  bool near_defective = false;

  std::size_t size() const { return eigenvalues.size(); }
};

namespace detail {

template <class Real>
Real vector_norm(const cvector<Real>& v) {
  using std::sqrt;
  Real s(0);
  for (const auto& z : v) s += std::norm(z);
  return sqrt(s);
}

template <class Real>
void normalize_and_fix_phase(cvector<Real>& v) {
  const Real nrm = vector_norm(v);
  if (nrm == Real(0)) return;
  std::size_t big = 0;
  Real best(-1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Real a = std::abs(v[i]);
    if (a > best) {
      best = a;
      big = i;
    }
  }
  const complex_t<Real> phase = std::conj(v[big]) / (best * nrm);
  for (auto& z : v) z *= phase;
  v[big] = complex_t<Real>(v[big].real(), Real(0));
}

/// sin of the angle between unit vectors u and v: ||v - (u^H v) u||.
template <class Real>
Real angle_between(const cvector<Real>& u, const cvector<Real>& v) {
  using std::asin;
  complex_t<Real> dot{};
  for (std::size_t i = 0; i < u.size(); ++i) dot += std::conj(u[i]) * v[i];
  Real s(0);
  for (std::size_t i = 0; i < u.size(); ++i) s += std::norm(v[i] - dot * u[i]);
  using std::sqrt;
  const Real sn = std::min<Real>(Real(1), sqrt(s));
  return asin(sn);
}

template <class Real>
Real right_residual(const ModeMatrix<Real>& m, const complex_t<Real>& lambda, const cvector<Real>& v) {
  const std::size_t n = m.dimension();
  cvector<Real> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    complex_t<Real> s{};
    for (std::size_t j = 0; j < n; ++j) s += m(i, j) * v[j];
    r[i] = s - lambda * v[i];
  }
  return vector_norm(r);
}

template <class Real>
Real left_residual(const ModeMatrix<Real>& m, const complex_t<Real>& lambda, const cvector<Real>& v) {
  const std::size_t n = m.dimension();
  cvector<Real> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    complex_t<Real> s{};
    for (std::size_t i = 0; i < n; ++i) s += v[i] * m(i, j);
    r[j] = s - lambda * v[j];
  }
  return vector_norm(r);
}

template <class Real>
bool eigenvalue_less(const complex_t<Real>& a, const complex_t<Real>& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Real parts closer than this count as equal when ordering, so a conjugate
/// pair whose real parts differ only by rounding sorts the same way from every
/// solver.
template <class Real>
Real ordering_tolerance(const ModeMatrix<Real>& m) {
  return Real(1e-10) * std::max<Real>(Real(1), m.frobenius_norm());
}

/// Ascending by real part, then imaginary part; runs of real parts chained
/// within tol are treated as ties.
template <class Real>
std::vector<std::size_t> eigenvalue_order(const cvector<Real>& values, Real tol) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return eigenvalue_less(values[a], values[b]); });
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]].real() - values[order[end - 1]].real() <= tol) ++end;
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return values[a].imag() < values[b].imag(); });
    start = end;
  }
  return order;
}

}  // namespace detail

/// Null vector of the (numerically) singular n x n matrix a, by Gaussian
/// elimination with complete pivoting; the last pivot is always treated as
/// zero. Result is unnormalized.
template <class Real>
cvector<Real> null_vector(std::vector<complex_t<Real>> a, std::size_t n) {
  std::vector<std::size_t> col_of(n);
  std::iota(col_of.begin(), col_of.end(), std::size_t{0});
  Real scale(0);
  for (const auto& z : a) scale = std::max<Real>(scale, std::abs(z));
  const Real tiny = scale * std::numeric_limits<Real>::epsilon() * Real(16);
  std::size_t rank = 0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t pr = step, pc = step;
    Real best(-1);
    for (std::size_t r = step; r < n; ++r)
      for (std::size_t c = step; c < n; ++c) {
        const Real v = std::abs(a[r * n + c]);
        if (v > best) {
          best = v;
          pr = r;
          pc = c;
        }
      }
    if (best <= tiny) break;
    if (pr != step)
      for (std::size_t c = 0; c < n; ++c) std::swap(a[step * n + c], a[pr * n + c]);
    if (pc != step) {
      for (std::size_t r = 0; r < n; ++r) std::swap(a[r * n + step], a[r * n + pc]);
      std::swap(col_of[step], col_of[pc]);
    }
    const auto d = a[step * n + step];
    for (std::size_t r = step + 1; r < n; ++r) {
      const auto f = a[r * n + step] / d;
      for (std::size_t c = step; c < n; ++c) a[r * n + c] -= f * a[step * n + c];
    }
    ++rank;
  }
  // Permuted unknowns y: y[rank] = 1, y[rank+1..] = 0, back-substitute.
  cvector<Real> y(n);
  y[rank] = complex_t<Real>(1);
  for (std::size_t rr = rank; rr-- > 0;) {
    complex_t<Real> s{};
    for (std::size_t c = rr + 1; c < n; ++c) s += a[rr * n + c] * y[c];
    y[rr] = -s / a[rr * n + rr];
  }
  cvector<Real> x(n);
  for (std::size_t i = 0; i < n; ++i) x[col_of[i]] = y[i];
  return x;
}

/// Shared post-processing: normalization, phase convention, ordering,
/// residuals and the near-defective flag.
template <class Real>
EigenDecomposition<Real> finalize_decomposition(const ModeMatrix<Real>& m, cvector<Real> values,
                                                std::vector<cvector<Real>> right,
                                                std::vector<cvector<Real>> left,
                                                const DecompositionOptions<Real>& opts) {
  const std::size_t n = values.size();
  for (auto& v : right) detail::normalize_and_fix_phase(v);
  for (auto& v : left) detail::normalize_and_fix_phase(v);

  const auto order = detail::eigenvalue_order(values, detail::ordering_tolerance(m));

  EigenDecomposition<Real> dec;
  for (std::size_t idx : order) {
    dec.eigenvalues.push_back(values[idx]);
    dec.right_vectors.push_back(std::move(right[idx]));
    dec.left_vectors.push_back(std::move(left[idx]));
  }

  Real worst(0);
  for (std::size_t a = 0; a < n; ++a) {
    worst = std::max(worst, detail::right_residual(m, dec.eigenvalues[a], dec.right_vectors[a]));
    worst = std::max(worst, detail::left_residual(m, dec.eigenvalues[a], dec.left_vectors[a]));
  }
  dec.max_residual = worst;

  Real min_angle = std::numeric_limits<Real>::max();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      min_angle = std::min(min_angle, detail::angle_between(dec.right_vectors[a], dec.right_vectors[b]));
  dec.min_angle = n > 1 ? min_angle : Real(0);
  dec.near_defective = n > 1 && min_angle < opts.near_defective_angle;

  if (opts.check_residual) {
    const Real bound = opts.residual_tol * std::max<Real>(Real(1), m.frobenius_norm());
    if (!(worst <= bound)) {
      throw convergence_error("eigendecomposition residual " + std::to_string(static_cast<double>(worst)) +
                              " exceeds tolerance " + std::to_string(static_cast<double>(bound)));
    }
  }
  return dec;
}

/// Right (or, with transpose, left) eigenvectors from the null space of
/// M - lambda I for each given eigenvalue.
template <class Real>
std::vector<cvector<Real>> null_space_vectors(const ModeMatrix<Real>& m, const cvector<Real>& values,
                                              bool transpose) {
  const std::size_t n = m.dimension();
  std::vector<cvector<Real>> out;
  out.reserve(values.size());
  for (const auto& lambda : values) {
    std::vector<complex_t<Real>> a(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] = transpose ? m(c, r) : m(r, c);
    for (std::size_t i = 0; i < n; ++i) a[i * n + i] -= lambda;
    out.push_back(null_vector(std::move(a), n));
  }
  return out;
}

namespace detail {

template <class Real>
using eigen_cmatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
void dense_eigen(const ModeMatrix<Real>& m, cvector<Real>& values, std::vector<cvector<Real>>& vectors) {
  const auto n = static_cast<Eigen::Index>(m.dimension());
  eigen_cmatrix<Real> a(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      a(r, c) = m(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  Eigen::ComplexEigenSolver<eigen_cmatrix<Real>> solver;
  solver.setMaxIterations(static_cast<Eigen::Index>(60) * std::max<Eigen::Index>(n, 1));
  solver.compute(a, true);
  if (solver.info() != Eigen::Success)
    throw convergence_error("complex QR iteration did not converge (dimension " + std::to_string(n) + ")");
  values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
  vectors.clear();
  for (Eigen::Index c = 0; c < n; ++c) {
    cvector<Real> v(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) v[static_cast<std::size_t>(r)] = solver.eigenvectors()(r, c);
    vectors.push_back(std::move(v));
  }
}

template <class Real>
Real symmetry_tolerance(const ModeMatrix<Real>& m) {
  return Real(64) * std::numeric_limits<Real>::epsilon() * std::max<Real>(Real(1), m.frobenius_norm());
}

}  // namespace detail

/// Left eigenvectors matching dec.eigenvalues. For complex-symmetric M these
/// are the transposed right vectors; otherwise they come from the spectrum of
/// transpose(M), matched to dec.eigenvalues by nearest eigenvalue.
template <class Real>
std::vector<cvector<Real>> left_eigenvectors(const EigenDecomposition<Real>& dec, const ModeMatrix<Real>& m,
                                             Real match_tol = Real(1e-8)) {
  if (m.is_complex_symmetric(detail::symmetry_tolerance(m))) return dec.right_vectors;

  cvector<Real> tvals;
  std::vector<cvector<Real>> tvecs;
  detail::dense_eigen(m.transpose(), tvals, tvecs);
  const Real tol = match_tol * std::max<Real>(Real(1), m.frobenius_norm());
  std::vector<bool> used(tvals.size(), false);
  std::vector<cvector<Real>> out;
  for (const auto& lambda : dec.eigenvalues) {
    std::size_t best = tvals.size();
    Real best_d = std::numeric_limits<Real>::max();
    std::size_t candidates = 0;
    for (std::size_t i = 0; i < tvals.size(); ++i) {
      if (used[i]) continue;
      const Real d = std::abs(tvals[i] - lambda);
      if (d <= tol) ++candidates;
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    if (candidates > 1)
      throw ambiguity_error("left/right eigenvalue matching is ambiguous near lambda = (" +
                            std::to_string(static_cast<double>(lambda.real())) + ", " +
                            std::to_string(static_cast<double>(lambda.imag())) + ")");
    if (best == tvals.size()) throw ambiguity_error("left/right eigenvalue matching found no candidate");
    used[best] = true;
    out.push_back(tvecs[best]);
  }
  return out;
}

/// General dense decomposition (complex Schur via shifted QR). Sole route for
/// N > 4 or detuned systems; oracle for the closed forms otherwise.
template <class Real = double>
EigenDecomposition<Real> eigen_general(const ModeMatrix<Real>& m, const DecompositionOptions<Real>& opts = {}) {
  cvector<Real> values;
  std::vector<cvector<Real>> right;
  detail::dense_eigen(m, values, right);
  EigenDecomposition<Real> provisional;
  provisional.eigenvalues = values;
  provisional.right_vectors = right;
  auto left = left_eigenvectors(provisional, m);
  return finalize_decomposition(m, std::move(values), std::move(right), std::move(left), opts);
}

}  // namespace sdiag
