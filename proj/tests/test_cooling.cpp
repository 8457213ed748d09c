#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sdiag/cooling.hpp"

using namespace sdiag;
using Catch::Approx;

namespace {

CoolingParams<double> reference(double g1 = 0.0) { return {0.01, 1.0, 20.0, g1, 10.0, 300.0, 0.1, 0.1}; }

CoolingParams<double> from_cooperativities(double k1, double k2, double k3, double C1, double C2) {
  CoolingParams<double> p{k1, k2, k3, std::sqrt(C1 * k1 * k2 / 4), std::sqrt(C2 * k2 * k3 / 4), 300.0, 0.1, 0.1};
  return p;
}

// Steady-state covariance of the linear Langevin system: with
// dV/dt = M V + sqrt(K) V_in and symmetrized inputs (n + 1/2),
// M C + C M^H + K (N + 1/2) = 0 and n1 = C_11 - 1/2. Solved through the
// Kronecker form (I (x) M + conj(M) (x) I) vec(C) = -vec(Q).
double lyapunov_occupancy(const CoolingParams<double>& p) {
  using cd = std::complex<double>;
  Eigen::Matrix3cd M = Eigen::Matrix3cd::Zero();
  M(0, 0) = -p.kappa1 / 2;
  M(1, 1) = -p.kappa2 / 2;
  M(2, 2) = -p.kappa3 / 2;
  M(0, 1) = M(1, 0) = cd(0, -p.g1);
  M(1, 2) = M(2, 1) = cd(0, -p.g2);
  Eigen::Matrix3cd Q = Eigen::Matrix3cd::Zero();
  Q(0, 0) = p.kappa1 * (p.n_m + 0.5);
  Q(1, 1) = p.kappa2 * (p.n_o + 0.5);
  Q(2, 2) = p.kappa3 * (p.n_a + 0.5);
  Eigen::Matrix<cd, 9, 9> A = Eigen::Matrix<cd, 9, 9>::Zero();
  const Eigen::Matrix3cd I = Eigen::Matrix3cd::Identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      // column-major vec: vec(M C) = (I (x) M) vec C, vec(C M^H) = (conj(M) (x) I) vec C
      A.block<3, 3>(3 * r, 3 * c) += I(r, c) * M;
      A.block<3, 3>(3 * r, 3 * c) += std::conj(M(r, c)) * I;
    }
  Eigen::Matrix<cd, 9, 1> q;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) q(3 * c + r) = -Q(r, c);
  const Eigen::Matrix<cd, 9, 1> x = A.fullPivLu().solve(q);
  return x(0).real() - 0.5;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("derived rates", "[cooling]") {
  const auto d = derived_rates(reference(1.0));
  CHECK(d.C1 == Approx(400.0));
  CHECK(d.C2 == Approx(20.0));
  CHECK(d.kappa2_eff == Approx(21.0));
  CHECK(d.kappa_par == Approx(20.0 / 21.0));
  CHECK(d.kappa_perp == Approx(21.0));
  CHECK(d.kappa_par <= std::min(1.0, 20.0));
  auto p = reference();
  p.g2 = std::sqrt(20.0 / 4);  // C2 = 1
  CHECK(derived_rates(p).kappa2_eff == Approx(2 * p.kappa2));
}

TEST_CASE("two-mode occupancy", "[cooling]") {
  auto p = reference(0.0);
  p.g2 = 0;
  CHECK(phonon_two_mode(p) == 300.0);
  CHECK(std::isinf(phonon_two_mode_approx(p)));

  p.g1 = 1e6;
  p.n_o = 0;
  CHECK(phonon_two_mode(p) == Approx(300 * 0.01 / 1.01).epsilon(1e-9));
  CHECK(phonon_two_mode(p) == Approx(3.0).epsilon(0.011));

  auto q = reference();
  q.g1 = std::sqrt(100 * q.kappa1 * q.kappa2 / 4);  // C1 = 100
  CHECK(derived_rates(q).C1 == Approx(100));
  CHECK(rel(phonon_two_mode_approx(q), phonon_two_mode(q)) < 0.05);

  const double r = 0.01, C1 = 100;
  CHECK(phonon_two_mode(q) == Approx(300 * (1 + r * (1 + C1)) / ((1 + r) * (1 + C1)) + 0.1 * C1 / ((1 + r) * (1 + C1))));

  auto bad = reference(1.0);
  bad.kappa2 = 0;
  CHECK_THROWS(phonon_two_mode(bad));
  bad = reference(1.0);
  bad.kappa1 = 0;
  CHECK_THROWS_AS(phonon_two_mode(bad), std::domain_error);
  bad = reference(1.0);
  bad.n_m = -1;
  CHECK_THROWS_AS(phonon_two_mode(bad), std::invalid_argument);
}

TEST_CASE("effective three-mode occupancy", "[cooling]") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int t = 0; t < 50; ++t) {
    CoolingParams<double> p{u(rng), u(rng), u(rng), u(rng), 0.0, u(rng), u(rng), u(rng)};
    CHECK(phonon_eff_three_mode(p) == Approx(phonon_two_mode(p)).epsilon(1e-14));
  }
  auto p = reference(1e6);
  p.g2 = 1.0;
  p.n_o = p.n_a = 0;
  const double k2eff = derived_rates(p).kappa2_eff;
  CHECK(rel(phonon_eff_three_mode(p), 300 * 0.01 / k2eff) < 2 * 0.01 / k2eff);
  CHECK(evaluate_cooling(p).eff_valid == (derived_rates(p).C2 <= 1));
  CHECK_FALSE(evaluate_cooling(reference(1.0)).eff_valid);
}

TEST_CASE("full three-mode closed form", "[cooling]") {
  const auto r = phonon_full_three_mode(reference(10.0));
  const double total = 300 * r.components[0] + 0.1 * r.components[1] + 0.1 * r.components[2];
  CHECK(r.n_full == Approx(total));
  // the closed form is leading order in kappa1/kappa2: no coupling leaves
  // n_m up to O(kappa1/kappa2)
  CHECK(rel(phonon_full_three_mode(reference(0.0)).n_full, 300.0) < 0.01 / 1.0);

  auto p = reference(0.0);
  p.g2 = 0;
  for (double g1 : {0.5, 1.0, 3.0, 10.0}) {
    p.g1 = g1;
    CHECK(rel(phonon_full_three_mode(p).n_full, phonon_two_mode(p)) < 0.02);
  }
}

TEST_CASE("large-cooperativity form", "[cooling]") {
  // n_m terms cross where C2/C1 = kappa1/kappa3, i.e. g1 = g2
  auto p = reference(10.0);
  const auto d = derived_rates(p);
  CHECK(d.C2 / d.C1 == Approx(p.kappa1 / p.kappa3));
  const double t1 = d.C2 / (d.C1 + d.C2), t2 = std::pow(p.kappa1 / p.kappa3, 2) * d.C1 / d.C2;
  CHECK(t1 == Approx(p.kappa1 / p.kappa3).epsilon(1e-3));
  CHECK(t2 == Approx(p.kappa1 / p.kappa3));
  p.n_o = p.n_a = 0;
  CHECK(phonon_approx_three_mode(p) == Approx(2 * 300 * p.kappa1 / p.kappa3).epsilon(1e-3));

  CHECK(evaluate_cooling(reference(10.0)).approx_valid);
  CHECK_FALSE(evaluate_cooling(reference(0.1)).approx_valid);  // C1 = 4
  auto q = reference(10.0);
  q.kappa3 = 0.5;
  CHECK_FALSE(evaluate_cooling(q).approx_valid);

  auto z = reference(1.0);
  z.g2 = 0;
  CHECK(std::isinf(phonon_approx_three_mode(z)));
}

TEST_CASE("large-cooperativity form against the full closed form over the reference sweep", "[cooling]") {
  // within 20% up to g1 = 18; the gap keeps growing with C1/C2 beyond that
  for (double g1 = 1.0; g1 <= 18.0; g1 += 0.5) {
    const auto r = evaluate_cooling(reference(g1));
    CHECK(rel(r.n_approx, r.n_full) < 0.2);
  }
  const auto end = evaluate_cooling(reference(30.0));
  CHECK(rel(end.n_approx, end.n_full) > 0.4);
}

TEST_CASE("regime flags", "[cooling]") {
  CHECK_FALSE(evaluate_cooling(reference(5.0)).decay_dominated);
  CHECK(evaluate_cooling(reference(15.0)).decay_dominated);
  auto p = reference(0.5);
  p.g2 = 0;
  CHECK(evaluate_cooling(p).decay_dominated == (derived_rates(p).C1 * p.kappa1 > p.kappa2));
}

TEST_CASE("quadrature limits", "[cooling]") {
  auto p = reference(0.0);
  p.g2 = 0;
  CHECK(spectral_density_quadrature(p).n == Approx(300.0).epsilon(1e-9));
  p.g2 = 10;
  CHECK(spectral_density_quadrature(p).n == Approx(300.0).epsilon(1e-9));
  p.g2 = 0;
  for (double g1 : {0.1, 0.2475, 1.0, 3.0, 30.0}) {
    p.g1 = g1;
    CHECK(rel(spectral_density_quadrature(p).n, phonon_two_mode(p)) < 1e-6);
  }
}

TEST_CASE("quadrature against the Lyapunov steady state", "[cooling][oracle]") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    CoolingParams<double> p{0.001 + 5 * u(rng), 0.1 + 5 * u(rng), 0.1 + 30 * u(rng), 10 * u(rng), 15 * u(rng),
                            500 * u(rng), u(rng), u(rng)};
    const double a = spectral_density_quadrature(p).n, b = lyapunov_occupancy(p);
    CHECK(rel(a, b) < 1e-7);
  }
  // narrow mechanical line, weak mechanical coupling
  std::uniform_real_distribution<double> c(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const auto p = from_cooperativities(1e-4, 1.0, 20.0, c(rng), 100 * c(rng));
    CHECK(rel(spectral_density_quadrature(p).n, lyapunov_occupancy(p)) < 1e-7);
  }
  CHECK(lyapunov_occupancy(reference(10.62)) == Approx(0.38533).epsilon(1e-4));
}

TEST_CASE("full closed form against the quadrature scales with kappa1/kappa2", "[cooling][oracle]") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<double> worst;
  for (double k1 : {1e-2, 1e-3, 1e-4}) {
    double w = 0;
    for (int t = 0; t < 60; ++t) {
      const auto p = from_cooperativities(k1, 1.0, 20.0, u(rng), u(rng));
      w = std::max(w, rel(phonon_full_three_mode(p).n_full, spectral_density_quadrature(p).n));
    }
    worst.push_back(w);
  }
  CHECK(worst[0] < 2e-2);
  CHECK(worst[1] < worst[0] / 5);
  // a kappa1-independent residual near 1e-4 takes over at the smallest kappa1
  CHECK(worst[2] < worst[1] / 2);
  CHECK(worst[2] < 1e-3);
}

TEST_CASE("occupancies and weights are nonnegative", "[cooling][property]") {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int t = 0; t < 2000; ++t) {
    CoolingParams<double> p{u(rng) + 1e-6, u(rng) + 1e-6, u(rng) + 1e-6, u(rng), u(rng), u(rng), u(rng), u(rng)};
    const auto r = evaluate_cooling(p);
    CHECK(r.n_two_mode >= 0);
    CHECK(r.n_eff >= 0);
    CHECK(r.n_full >= 0);
    CHECK(r.n_approx >= 0);
    for (double c : r.components) CHECK(c >= 0);
  }
}

TEST_CASE("reference cooling sweep", "[cooling]") {
  const auto s = cooling_sweep(reference(), log_grid(0.1, 30.0, 300), false, 2);
  REQUIRE(s.points.size() == 300);
  CHECK(s.points.front().g1 == 0.1);
  CHECK(s.points.back().g1 == 30.0);
  CHECK(std::abs(s.argmin_g1() - 10.0) < 1.5);
  CHECK(s.min_full() < s.min_two_mode());
  CHECK(std::abs(s.min_full() - 0.3) < 0.15);
  for (const auto& p : s.points)
    if (p.g1 > 5.0) CHECK(rel(p.result.n_two_mode, 3.0 + 0.1) < 0.05);

  const auto t1 = cooling_sweep(reference(), log_grid(0.1, 30.0, 40), true, 1);
  const auto t4 = cooling_sweep(reference(), log_grid(0.1, 30.0, 40), true, 4);
  for (std::size_t i = 0; i < t1.points.size(); ++i) CHECK(t1.points[i].n_quadrature == t4.points[i].n_quadrature);
  CHECK_THROWS_AS(cooling_sweep(reference(), std::vector<double>{1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("strong-coupling threshold", "[cooling]") {
  auto p = reference();
  p.g2 = 0;
  CHECK(std::abs(find_g_sc(p) - 0.2475) < 1e-4);

  p.g2 = 10;
  const double g = find_g_sc(p);
  CHECK(mechanics_hybridized(p, g + 1e-4, {}));
  CHECK_FALSE(mechanics_hybridized(p, g - 1e-4, {}));
  // same crossing as a fine scan of scan_coupling_map along g2 = 10
  const GridSpec<double> line{{0, 10, 1001}, {9.99, 10.01, 3}, {0.01, 1, 20}, SystemKind::three_mode};
  const auto map = scan_coupling_map(line);
  double first = -1;
  for (std::size_t ix = 0; ix < line.nx(); ++ix) {
    const auto& label = map.cells(ix, 1).label;
    if (label.find("1:2") != std::string::npos || label.find("1:3") != std::string::npos) {
      first = line.g1_range.at(ix);
      break;
    }
  }
  CHECK(first - g >= 0);
  CHECK(first - g < line.g1_range.step());
  CHECK(g < cooling_sweep(reference(), log_grid(0.1, 30.0, 300), false).argmin_g1());

  GscOptions<double> tight;
  tight.g1_max = 1.0;
  CHECK_THROWS_AS(find_g_sc(p, {}, tight), std::domain_error);
}

TEST_CASE("occupancy falls with g1 well below the strong-coupling threshold", "[cooling][property]") {
  const auto p = reference();
  const double g_sc = find_g_sc(p);
  const auto s = cooling_sweep(p, log_grid(0.01, 0.1 * g_sc, 60), true);
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    CHECK(s.points[i].n_quadrature < s.points[i - 1].n_quadrature);
    CHECK(s.points[i].result.n_full < s.points[i - 1].result.n_full);
  }
}
