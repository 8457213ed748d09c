#pragma once

// Rectangular (g1, g2) grids over a two-coupling chain family.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdiag/mode_system.hpp"

namespace sdiag {

template <class Real = double>
struct AxisRange {
  Real min = Real(0);
  Real max = Real(1);
  std::size_t n_points = 2;

  Real at(std::size_t i) const { return min + (max - min) * Real(i) / Real(n_points - 1); }
  Real step() const { return (max - min) / Real(n_points - 1); }
};

template <class Real = double>
struct GridSpec {
  AxisRange<Real> g1_range;
  AxisRange<Real> g2_range;
  std::vector<Real> decay_rates;
  SystemKind system_kind = SystemKind::three_mode;

  void validate() const {
    auto check = [](const AxisRange<Real>& a, const char* name) {
      if (!(a.min < a.max)) throw std::invalid_argument(std::string(name) + ": min must be below max");
      if (a.n_points < 2) throw std::invalid_argument(std::string(name) + ": need at least 2 points");
    };
    check(g1_range, "g1_range");
    check(g2_range, "g2_range");
    if (decay_rates.size() != mode_count(system_kind))
      throw std::invalid_argument(std::string(to_string(system_kind)) + " needs " +
                                  std::to_string(mode_count(system_kind)) + " decay rates");
    detail::require_nonnegative_rates(decay_rates);
  }

  std::size_t nx() const { return g1_range.n_points; }
  std::size_t ny() const { return g2_range.n_points; }
  std::size_t size() const { return nx() * ny(); }

  /// Node index = iy * nx + ix (g1 fastest).
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * nx() + ix; }

  ModeMatrix<Real> matrix_at(Real g1, Real g2) const { return build_family(system_kind, decay_rates, g1, g2); }
  ModeMatrix<Real> matrix_at_node(std::size_t ix, std::size_t iy) const {
    return matrix_at(g1_range.at(ix), g2_range.at(iy));
  }
};

/// Row-major field over a grid (g1 fastest).
template <class T>
struct Field2D {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<T> values;

  typename std::vector<T>::reference operator()(std::size_t ix, std::size_t iy) { return values[iy * nx + ix]; }
  typename std::vector<T>::const_reference operator()(std::size_t ix, std::size_t iy) const {
    return values[iy * nx + ix];
  }
};

}  // namespace sdiag
