#include <catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "sdiag/ep_locator.hpp"
#include "sdiag/hybridization.hpp"

using namespace sdiag;
using Catch::Approx;

namespace {

const HybridizationTolerances<double> ep_tol{1e-3, 1e-2, 1e-6};

std::vector<ModePair> pairs(std::initializer_list<ModePair> p) { return p; }

std::size_t class_of_size(const CouplingDiagnosis<double>& d, std::size_t size) {
  for (std::size_t c = 0; c < d.classes.classes.size(); ++c)
    if (d.classes.classes[c].size() == size) return c;
  return d.classes.classes.size();
}

ModeMatrix<double> random_chain(std::mt19937_64& rng, std::size_t n, double gmax) {
  std::uniform_real_distribution<double> k(1e-3, 20.0), g(0.0, gmax);
  if (n == 3) return build_three_mode(k(rng), k(rng), k(rng), g(rng), g(rng));
  return build_four_mode(k(rng), k(rng), k(rng), k(rng), g(rng), g(rng));
}

ModeMatrix<double> scaled(const ModeMatrix<double>& m, double s) {
  ModeMatrix<double> out(m.dimension());
  for (std::size_t r = 0; r < m.dimension(); ++r)
    for (std::size_t c = 0; c < m.dimension(); ++c) out(r, c) = s * m(r, c);
  return out;
}

}  // namespace

TEST_CASE("decoupled modes project onto basis vectors", "[hybridization]") {
  const auto d = classify_point(build_three_mode(0.01, 1.0, 20.0, 0.0, 0.0));
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& part = d.table.participation[a];
    const auto j = static_cast<std::size_t>(std::max_element(part.begin(), part.end()) - part.begin());
    CHECK(part[j] == Approx(1.0).margin(1e-15));
    for (std::size_t p = 0; p < d.table.pairs.size(); ++p) {
      const auto [x, y] = d.table.pairs[p];
      CHECK(d.table.norms[a][p] == Approx((x == j || y == j) ? 1.0 : 0.0).margin(1e-15));
    }
  }
  CHECK(d.classes.classes.size() == 3);
  CHECK(d.region_label == "weak");
  CHECK(d.weak());
}

TEST_CASE("two-mode eigenvectors beyond the EP2 split evenly", "[hybridization]") {
  const double g_ep = pair_threshold(0.01, 1.0);
  for (double f : {1.0 + 1e-6, 1.01, 1.5, 10.0}) {
    const auto d = classify_point(build_two_mode(0.01, 1.0, f * g_ep));
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t j = 0; j < 2; ++j) CHECK(d.table.participation[a][j] == Approx(1 / std::sqrt(2.0)).margin(1e-10));
    CHECK(d.region_label == "1:2");
    CHECK(d.epd_flags == std::vector<bool>{true});
  }
  CHECK(classify_point(build_two_mode(0.01, 1.0, 0.5 * g_ep)).region_label == "weak");
}

TEST_CASE("three-mode EP3: one class of depth 3", "[hybridization]") {
  const auto p = locate_ep3_three_mode(0.01, 1.0, 20.0);
  const auto d = classify_point(build_three_mode(0.01, 1.0, 20.0, p.g1, p.g2), ep_tol, {.check_residual = false});
  REQUIRE(d.classes.classes.size() == 1);
  CHECK(d.depth == std::vector<std::size_t>{3});
  CHECK(d.connectivity == std::vector<std::size_t>{3});
  CHECK(d.epd_flags == std::vector<bool>{true});
  CHECK(d.region_label == "1:2+1:3+2:3");
  const std::array<double, 3> expected{0.42, 0.71, 0.57};
  for (const auto& part : d.table.participation)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(part[j] - expected[j]) < 0.01);
  CHECK(d.near_ep);
}

TEST_CASE("three-mode region I: modes 1 and 2 hybridize", "[hybridization]") {
  const auto d = classify_point(build_three_mode(0.01, 1.0, 20.0, 1.0, 0.5));
  REQUIRE(d.classes.classes.size() == 2);
  const auto c2 = class_of_size(d, 2), c1 = class_of_size(d, 1);
  REQUIRE(c2 < 2);
  REQUIRE(c1 < 2);
  CHECK(d.edge_sets[c2] == pairs({{0, 1}}));
  CHECK(d.edge_sets[c1].empty());
  const auto& t = d.table;
  const auto a = d.classes.classes[c2][0], b = d.classes.classes[c2][1], s = d.classes.classes[c1][0];
  CHECK(t.norm(a, 0, 1) == Approx(t.norm(b, 0, 1)).margin(1e-12));
  CHECK(t.norm(a, 0, 1) > t.norm(s, 0, 1));
  CHECK(t.norm(a, 1, 2) < t.norm(s, 1, 2));
  CHECK(t.norm(a, 0, 2) < t.norm(s, 0, 2));
  CHECK(d.region_label == "1:2");
}

TEST_CASE("three-mode region III: modes 1 and 3 stay weakly coupled", "[hybridization]") {
  const auto d = classify_point(build_three_mode(0.01, 1.0, 20.0, 4.5, 7.0));
  CHECK(d.region_label == "1:2+2:3");
  CHECK(d.has_edge(0, 1));
  CHECK(d.has_edge(1, 2));
  CHECK_FALSE(d.has_edge(0, 2));
  CHECK(classify_point(build_three_mode(0.01, 1.0, 20.0, 3.0, 10.0)).region_label == "2:3");
}

TEST_CASE("four-mode superexchange point and decoupled pairs", "[hybridization]") {
  const auto s = classify_point(build_four_mode(0.01, 1.0, 5.0, 10.0, 3.0, 0.05));
  REQUIRE(s.classes.classes.size() == 2);
  CHECK(s.connectivity == std::vector<std::size_t>{2, 2});
  auto e = s.edge_sets;
  std::sort(e.begin(), e.end());
  CHECK(e[0] == pairs({{0, 1}, {1, 2}}));
  CHECK(e[1] == pairs({{0, 3}, {2, 3}}));
  CHECK(s.depth_max() == 2);
  CHECK(s.region_label == "1:2+2:3|1:4+3:4");

  const auto p = classify_point(build_four_mode(0.01, 1.0, 5.0, 10.0, 3.0, 0.0));
  REQUIRE(p.classes.classes.size() == 2);
  e = p.edge_sets;
  std::sort(e.begin(), e.end());
  CHECK(e[0] == pairs({{0, 1}}));
  CHECK(e[1] == pairs({{2, 3}}));
  CHECK(p.epd_flags == std::vector<bool>{true, true});
  CHECK(p.region_label == "1:2|3:4");
}

TEST_CASE("four-mode EP3: 3-way class against mode 4", "[hybridization]") {
  const std::array<double, 4> k{0.01, 1, 5, 10};
  const GridSpec<double> grid{{0, 4, 200}, {0, 5, 200}, {k.begin(), k.end()}, SystemKind::four_mode};
  const auto seed = four_mode_ep3_seed(k, trace_ep2_curves(grid));
  const auto r = locate_ep3_four_mode(k, seed.g1, seed.g2);
  const auto d = classify_point(build_four_mode(k[0], k[1], k[2], k[3], r.g1, r.g2), ep_tol, {.check_residual = false});
  const auto c3 = class_of_size(d, 3), c1 = class_of_size(d, 1);
  REQUIRE(c3 < d.classes.classes.size());
  REQUIRE(c1 < d.classes.classes.size());
  CHECK(d.edge_sets[c3] == pairs({{0, 1}, {0, 2}, {1, 2}}));
  CHECK(d.epd_flags[c3]);
  const auto s = d.classes.classes[c1][0];
  for (auto a : d.classes.classes[c3])
    for (std::size_t j = 0; j < 3; ++j) CHECK(d.table.norm(s, j, 3) > d.table.norm(a, j, 3));
}

TEST_CASE("dead zone between tolerance and margin is indeterminate", "[hybridization]") {
  ProjectionTable<double> t;
  t.n_modes = 3;
  t.pairs = {{0, 1}, {0, 2}, {1, 2}};
  t.norms = {{0.9, 0.5, 0.5}, {0.9, 0.5, 0.5}, {0.9 - 5e-6, 0.5, 0.5}};
  const auto ec = partition_classes(t, 1e-6);
  REQUIRE(ec.classes.size() == 2);
  const auto e = strongly_coupled_pairs(ec, t, 1e-5);
  CHECK(e.indeterminate);
  CHECK(e.edge_sets[0].empty());

  t.norms = {{0.9, 0.5, 0.5}, {0.9, 0.5, 0.5}, {0.8, 0.5, 0.5}};
  const auto clear = strongly_coupled_pairs(partition_classes(t, 1e-6), t, 1e-5);
  CHECK_FALSE(clear.indeterminate);
  CHECK(clear.edge_sets[0] == pairs({{0, 1}}));
  CHECK(clear.edge_sets[1].empty());
  CHECK(clear.dominated[1].empty());
  CHECK(region_label(clear.edge_sets, clear.indeterminate) == "1:2");
  CHECK(region_label(clear.edge_sets, true) == "indeterminate");
  CHECK_THROWS_AS(partition_classes(t, 0.0), std::invalid_argument);
}

TEST_CASE("clique detection", "[hybridization]") {
  CHECK(is_clique(pairs({{0, 1}}), 2));
  CHECK(is_clique(pairs({{0, 1}, {0, 2}, {1, 2}}), 3));
  CHECK_FALSE(is_clique(pairs({{0, 1}, {1, 2}}), 3));
  CHECK_FALSE(is_clique(pairs({{0, 1}, {1, 2}, {2, 3}}), 3));
  CHECK_FALSE(is_clique({}, 1));
}

TEST_CASE("projection norms square-sum to N-1", "[hybridization][property]") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {3u, 4u})
    for (int trial = 0; trial < 300; ++trial) {
      const auto d = classify_point(random_chain(rng, n, 10.0));
      for (const auto& row : d.table.norms) {
        double s = 0;
        for (double l : row) s += l * l;
        CHECK(std::abs(s - double(n - 1)) < 1e-10);
      }
    }
}

TEST_CASE("conjugate eigenvalue pairs share participation vectors", "[hybridization][property]") {
  std::mt19937_64 rng(12);
  std::size_t pairs_seen = 0;
  for (std::size_t n : {3u, 4u})
    for (int trial = 0; trial < 300; ++trial) {
      const auto d = classify_point(random_chain(rng, n, 10.0));
      if (d.near_ep) continue;
      const auto& ev = d.decomposition.eigenvalues;
      for (std::size_t a = 0; a < ev.size(); ++a) {
        if (std::abs(ev[a].imag()) < 1e-9) continue;
        std::size_t b = a;
        double best = INFINITY;
        for (std::size_t c = 0; c < ev.size(); ++c)
          if (c != a && std::abs(ev[c] - std::conj(ev[a])) < best) {
            best = std::abs(ev[c] - std::conj(ev[a]));
            b = c;
          }
        ++pairs_seen;
        for (std::size_t j = 0; j < n; ++j)
          CHECK(std::abs(d.table.participation[a][j] - d.table.participation[b][j]) < 1e-8);
      }
    }
  CHECK(pairs_seen > 200);
}

TEST_CASE("region labels are invariant under global rate scaling", "[hybridization][property]") {
  std::mt19937_64 rng(13);
  for (std::size_t n : {3u, 4u})
    for (int trial = 0; trial < 200; ++trial) {
      const auto m = random_chain(rng, n, 10.0);
      const auto label = classify_point(m).region_label;
      for (double s : {0.1, 10.0}) CHECK(classify_point(scaled(m, s)).region_label == label);
    }
}

TEST_CASE("zero coupling is weak for any rates", "[hybridization][property]") {
  std::mt19937_64 rng(14);
  for (std::size_t n : {3u, 4u})
    for (int trial = 0; trial < 100; ++trial) {
      const auto d = classify_point(random_chain(rng, n, 0.0));
      CHECK(d.weak());
      CHECK(d.region_label == "weak");
      CHECK(d.classes.classes.size() == n);
    }
}

TEST_CASE("weak/strong changes along scan lines bracket EP2 crossings", "[hybridization][property]") {
  const std::vector<GridSpec<double>> grids{
      {{0, 6, 80}, {0, 8, 80}, {0.01, 1, 20}, SystemKind::three_mode},
      {{0, 4, 80}, {0, 5, 80}, {0.01, 1, 5, 10}, SystemKind::four_mode}};
  for (const auto& grid : grids) {
    const auto map = scan_coupling_map(grid);
    const auto disc = disc_field(grid);
    const auto roots = real_root_count_field(grid);
    const bool three = grid.system_kind == SystemKind::three_mode;
    auto changed = [&](std::size_t a, std::size_t b) {
      return three ? (disc.values[a] > 0) != (disc.values[b] > 0) : roots.values[a] != roots.values[b];
    };
    auto weak = [&](std::size_t i) { return map.cells.values[i].label == "weak"; };
    std::size_t checked = 0;
    for (std::size_t iy = 0; iy < grid.ny(); ++iy)
      for (std::size_t ix = 0; ix + 1 < grid.nx(); ++ix) {
        const auto a = grid.index(ix, iy), b = grid.index(ix + 1, iy);
        if (weak(a) == weak(b)) continue;
        ++checked;
        bool near = changed(a, b);
        if (ix > 0) near = near || changed(grid.index(ix - 1, iy), a);
        if (ix + 2 < grid.nx()) near = near || changed(b, grid.index(ix + 2, iy));
        CHECK(near);
      }
    CHECK(checked > 10);
  }
}

TEST_CASE("EP-D flags at refined EP2 points come with coalesced eigenvalues", "[hybridization][property]") {
  const GridSpec<double> grid{{0, 6, 100}, {0, 8, 100}, {0.01, 1, 20}, SystemKind::three_mode};
  std::size_t n = 0;
  for (const auto& c : trace_ep2_curves(grid))
    for (std::size_t i = 0; i < c.points.size(); i += 5) {
      const auto& p = c.points[i];
      const auto d = classify_point(grid.matrix_at(p.g1, p.g2), ep_tol, {.check_residual = false});
      const auto c2 = class_of_size(d, 2);
      if (c2 == d.classes.classes.size()) continue;
      ++n;
      CHECK(d.epd_flags[c2]);
      const auto& m = d.classes.classes[c2];
      CHECK(std::abs(d.decomposition.eigenvalues[m[0]] - d.decomposition.eigenvalues[m[1]]) < 1e-4);
    }
  CHECK(n > 10);
}

TEST_CASE("coupling map corner and thread independence", "[hybridization]") {
  const GridSpec<double> grid{{0, 6, 30}, {0, 8, 30}, {0.01, 1, 20}, SystemKind::three_mode};
  const auto one = scan_coupling_map(grid, {}, 1);
  const auto four = scan_coupling_map(grid, {}, 4);
  CHECK(one.cells(0, 0).label == "weak");
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(one.cells.values[i].label == four.cells.values[i].label);
}
