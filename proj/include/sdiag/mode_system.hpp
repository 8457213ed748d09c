#pragma once

// N-mode open systems with bilinear couplings and their dynamical (mode)
// matrix. All rates are dimensionless, in units of a reference decay rate.
//
// Convention: the mode matrix is the generator of the Langevin equations,
//   dV/dt = M V + sqrt(K) V_in,
// so with H_jj = Delta_j - i kappa_j/2 and H_jk = g_jk,
//   M_jj = -i H_jj = -kappa_j/2 - i Delta_j,   M_jk = -i g_jk,
//   M_kj = -i conj(g_jk).
// For zero detuning and real couplings M is complex-symmetric and
// tridiagonal for a chain.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sdiag {

template <class Real>
using complex_t = std::complex<Real>;

/// Coupling g_jk between modes j < k (0-based). g_kj = conj(g_jk) is implied.
template <class Real = double>
struct Coupling {
  std::size_t j = 0;
  std::size_t k = 0;
  complex_t<Real> g{};
};

template <class Real = double>
struct ModeSystemSpec {
  std::size_t n_modes = 0;
  std::vector<Real> detunings;
  std::vector<Real> decay_rates;
  std::vector<Coupling<Real>> couplings;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const {
    if (n_modes < 2) throw std::invalid_argument("mode system needs at least 2 modes");
    if (detunings.size() != n_modes)
      throw std::invalid_argument("detunings: expected " + std::to_string(n_modes) + " entries, got " +
                                  std::to_string(detunings.size()));
    if (decay_rates.size() != n_modes)
      throw std::invalid_argument("decay_rates: expected " + std::to_string(n_modes) + " entries, got " +
                                  std::to_string(decay_rates.size()));
    for (std::size_t i = 0; i < n_modes; ++i) {
      if (!(decay_rates[i] >= Real(0)))
        throw std::invalid_argument("decay rate of mode " + std::to_string(i + 1) + " is negative");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& c : couplings) {
      if (c.j >= n_modes || c.k >= n_modes)
        throw std::invalid_argument("coupling (" + std::to_string(c.j + 1) + "," + std::to_string(c.k + 1) +
                                    ") references a mode out of range");
      if (c.j >= c.k)
        throw std::invalid_argument("coupling (" + std::to_string(c.j + 1) + "," + std::to_string(c.k + 1) +
                                    ") must satisfy j < k");
      if (!seen.emplace(c.j, c.k).second)
        throw std::invalid_argument("duplicate coupling pair (" + std::to_string(c.j + 1) + "," +
                                    std::to_string(c.k + 1) + ")");
    }
  }

  bool zero_detuning() const {
    return std::all_of(detunings.begin(), detunings.end(), [](const Real& d) { return d == Real(0); });
  }
};

/// Dense N x N complex matrix, row-major.
template <class Real = double>
class ModeMatrix {
 public:
  using value_type = complex_t<Real>;

  ModeMatrix() = default;
  explicit ModeMatrix(std::size_t n) : n_(n), entries_(n * n) {}

  std::size_t dimension() const noexcept { return n_; }

  value_type& operator()(std::size_t r, std::size_t c) { return entries_[r * n_ + c]; }
  const value_type& operator()(std::size_t r, std::size_t c) const { return entries_[r * n_ + c]; }

  const std::vector<value_type>& entries() const noexcept { return entries_; }

  value_type trace() const {
    value_type t{};
    for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  Real frobenius_norm() const {
    using std::sqrt;
    Real s(0);
    for (const auto& z : entries_) s += std::norm(z);
    return sqrt(s);
  }

  ModeMatrix transpose() const {
    ModeMatrix t(n_);
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool is_complex_symmetric(Real tol = Real(0)) const {
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = r + 1; c < n_; ++c)
        if (std::abs((*this)(r, c) - (*this)(c, r)) > tol) return false;
    return true;
  }

  bool is_tridiagonal() const {
    for (std::size_t r = 0; r < n_; ++r)
      for (std::size_t c = 0; c < n_; ++c) {
        const auto d = r > c ? r - c : c - r;
        if (d > 1 && (*this)(r, c) != value_type{}) return false;
      }
    return true;
  }

  /// Zero detuning shows up as a purely real diagonal.
  bool has_zero_detuning() const {
    for (std::size_t i = 0; i < n_; ++i)
      if ((*this)(i, i).imag() != Real(0)) return false;
    return true;
  }

  friend bool operator==(const ModeMatrix&, const ModeMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<value_type> entries_;
};

template <class Real>
ModeMatrix<Real> build_mode_matrix(const ModeSystemSpec<Real>& spec) {
  spec.validate();
  const complex_t<Real> minus_i(Real(0), Real(-1));
  ModeMatrix<Real> m(spec.n_modes);
  for (std::size_t i = 0; i < spec.n_modes; ++i)
    m(i, i) = complex_t<Real>(-spec.decay_rates[i] / Real(2), -spec.detunings[i]);
  for (const auto& c : spec.couplings) {
    m(c.j, c.k) = minus_i * c.g;
    m(c.k, c.j) = minus_i * std::conj(c.g);
  }
  return m;
}

namespace detail {

template <class Real>
void require_nonnegative_rates(const std::vector<Real>& kappa) {
  for (std::size_t i = 0; i < kappa.size(); ++i)
    if (!(kappa[i] >= Real(0)))
      throw std::invalid_argument("decay rate kappa" + std::to_string(i + 1) + " is negative");
}

template <class Real>
ModeSystemSpec<Real> chain_spec(const std::vector<Real>& kappa, const std::vector<Real>& bonds) {
  require_nonnegative_rates(kappa);
  ModeSystemSpec<Real> s;
  s.n_modes = kappa.size();
  s.decay_rates = kappa;
  s.detunings.assign(kappa.size(), Real(0));
  for (std::size_t b = 0; b < bonds.size(); ++b) s.couplings.push_back({b, b + 1, complex_t<Real>(bonds[b])});
  return s;
}

}  // namespace detail

/// Three-mode chain with g12 = g1, g23 = g2 and resonant driving.
template <class Real>
ModeMatrix<Real> build_three_mode(Real k1, Real k2, Real k3, Real g1, Real g2) {
  return build_mode_matrix(detail::chain_spec<Real>({k1, k2, k3}, {g1, g2}));
}

/// Four-mode chain with the alternating pattern g12 = g34 = g1, g23 = g2.
template <class Real>
ModeMatrix<Real> build_four_mode(Real k1, Real k2, Real k3, Real k4, Real g1, Real g2) {
  return build_mode_matrix(detail::chain_spec<Real>({k1, k2, k3, k4}, {g1, g2, g1}));
}

/// Two coupled modes; the simplest system with an EP2 at |k1 - k2|/4.
template <class Real>
ModeMatrix<Real> build_two_mode(Real k1, Real k2, Real g) {
  return build_mode_matrix(detail::chain_spec<Real>({k1, k2}, {g}));
}

enum class SystemKind { two_mode, three_mode, four_mode };

inline std::size_t mode_count(SystemKind kind) {
  switch (kind) {
    case SystemKind::two_mode: return 2;
    case SystemKind::three_mode: return 3;
    case SystemKind::four_mode: return 4;
  }
  return 0;
}

inline const char* to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::two_mode: return "two_mode";
    case SystemKind::three_mode: return "three_mode";
    case SystemKind::four_mode: return "four_mode";
  }
  return "?";
}

/// Chain matrix for a named family at the coupling point (g1, g2); g2 is
/// ignored for two modes.
template <class Real>
ModeMatrix<Real> build_family(SystemKind kind, const std::vector<Real>& kappa, Real g1, Real g2) {
  if (kappa.size() != mode_count(kind))
    throw std::invalid_argument(std::string(to_string(kind)) + " needs " + std::to_string(mode_count(kind)) +
                                " decay rates, got " + std::to_string(kappa.size()));
  switch (kind) {
    case SystemKind::two_mode: return build_two_mode(kappa[0], kappa[1], g1);
    case SystemKind::three_mode: return build_three_mode(kappa[0], kappa[1], kappa[2], g1, g2);
    case SystemKind::four_mode: return build_four_mode(kappa[0], kappa[1], kappa[2], kappa[3], g1, g2);
  }
  throw std::invalid_argument("unknown system kind");
}

}  // namespace sdiag
