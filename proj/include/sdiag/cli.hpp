#pragma once

// Command runner behind tools/sdiag: evaluates a RunConfig and writes CSV
// and JSON files into its output directory. Grid work goes to a worker pool
// and results are merged by index, so files do not depend on the thread
// count.
//
// Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure
// (the message names the offending point).

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "sdiag/config.hpp"
#include "sdiag/cooling.hpp"
#include "sdiag/decomposition.hpp"
#include "sdiag/ep_locator.hpp"
#include "sdiag/errors.hpp"
#include "sdiag/hybridization.hpp"

namespace sdiag::cli {

inline constexpr const char* version = "0.3.0";

using json = nlohmann::ordered_json;

class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// CSV text with a versioned comment header; numbers at 17 significant digits.
class Csv {
 public:
  Csv(const std::string& schema, const RunConfig& c, const std::vector<std::string>& columns) {
    text_ = "# sdiag " + std::string(version) + " schema=" + schema + " config=" + hex64(c.hash()) + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) text_ += (i ? "," : "") + columns[i];
    text_ += "\n";
  }

  Csv& num(double v) { return cell(fmt17(v)); }
  Csv& integer(std::size_t v) { return cell(std::to_string(v)); }
  Csv& flag(bool v) { return cell(v ? "1" : "0"); }
  Csv& str(const std::string& s) { return cell(s); }
  void end() {
    text_ += "\n";
    first_ = true;
  }

  const std::string& text() const { return text_; }

 private:
  Csv& cell(const std::string& s) {
    if (!first_) text_ += ",";
    text_ += s;
    first_ = false;
    return *this;
  }

  std::string text_;
  bool first_ = true;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw io_error("write failed for '" + path.string() + "'");
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json complex_json(const std::complex<double>& z) { return json::array({z.real(), z.imag()}); }

inline json classes_json(const std::vector<std::vector<std::size_t>>& classes) {
  json a = json::array();
  for (const auto& c : classes) {
    json m = json::array();
    for (auto i : c) m.push_back(i + 1);
    a.push_back(m);
  }
  return a;
}

inline json edge_sets_json(const std::vector<std::vector<ModePair>>& sets) {
  json a = json::array();
  for (const auto& s : sets) {
    json e = json::array();
    for (const auto& p : s) e.push_back(json::array({p.first + 1, p.second + 1}));
    a.push_back(e);
  }
  return a;
}

inline json diagnosis_json(const CouplingDiagnosis<double>& d) {
  json j;
  j["label"] = d.region_label;
  j["classes"] = classes_json(d.classes.classes);
  j["edge_sets"] = edge_sets_json(d.edge_sets);
  j["depth"] = d.depth;
  j["connectivity"] = d.connectivity;
  json flags = json::array();
  for (bool f : d.epd_flags) flags.push_back(f);
  j["epd_flags"] = flags;
  j["indeterminate"] = d.indeterminate;
  j["near_ep"] = d.near_ep;
  return j;
}

inline std::string header_json_comment(const RunConfig& c, const std::string& schema) {
  return "sdiag " + std::string(version) + " schema=" + schema + " config=" + hex64(c.hash());
}

inline HybridizationTolerances<double> hybridization_tolerances(const RunConfig& c) {
  HybridizationTolerances<double> t;
  t.tau_eq = c.tolerances.tau_eq;
  t.margin = c.tolerances.margin;
  return t;
}

/// Smallest diameter (max pairwise distance) over all eigenvalue triples.
inline double triple_spread(const std::vector<std::complex<double>>& ev) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ev.size(); ++a)
    for (std::size_t b = a + 1; b < ev.size(); ++b)
      for (std::size_t c = b + 1; c < ev.size(); ++c)
        best = std::min(best, std::max({std::abs(ev[a] - ev[b]), std::abs(ev[a] - ev[c]), std::abs(ev[b] - ev[c])}));
  return best;
}

inline void run_spectrum(const RunConfig& c, const std::filesystem::path& out) {
  DecompositionOptions<double> opts;
  opts.residual_tol = c.tolerances.residual_tol;
  const auto m = c.point_matrix();
  const auto d = classify_point(m, hybridization_tolerances(c), opts);
  const auto& dec = d.decomposition;
  const std::size_t n = m.dimension();

  Csv ev("spectrum_eigenvalues/1", c, {"alpha", "re", "im"});
  for (std::size_t a = 0; a < n; ++a) ev.integer(a + 1).num(dec.eigenvalues[a].real()).num(dec.eigenvalues[a].imag()).end();
  write_file(out / "eigenvalues.csv", ev.text());

  Csv vec("spectrum_eigenvectors/1", c,
          {"alpha", "mode", "right_re", "right_im", "left_re", "left_im", "participation"});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t j = 0; j < n; ++j)
      vec.integer(a + 1)
          .integer(j + 1)
          .num(dec.right_vectors[a][j].real())
          .num(dec.right_vectors[a][j].imag())
          .num(dec.left_vectors[a][j].real())
          .num(dec.left_vectors[a][j].imag())
          .num(d.table.participation[a][j])
          .end();
  write_file(out / "eigenvectors.csv", vec.text());

  Csv proj("spectrum_projections/1", c, {"alpha", "pair", "norm"});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t p = 0; p < d.table.pairs.size(); ++p)
      proj.integer(a + 1).str(pair_to_string(d.table.pairs[p])).num(d.table.norms[a][p]).end();
  write_file(out / "projections.csv", proj.text());

  json j;
  j["header"] = header_json_comment(c, "spectrum/1");
  j["n_modes"] = n;
  if (c.family) {
    j["g1"] = c.g1;
    j["g2"] = c.g2;
  }
  json evs = json::array();
  for (const auto& l : dec.eigenvalues) evs.push_back(complex_json(l));
  j["eigenvalues"] = evs;
  j["max_residual"] = dec.max_residual;
  j["min_angle"] = dec.min_angle;
  j["near_defective"] = dec.near_defective;
  j["diagnosis"] = diagnosis_json(d);
  write_file(out / "spectrum.json", j.dump(2) + "\n");
}

inline void run_phase_diagram(const RunConfig& c, const std::filesystem::path& out) {
  const auto grid = c.grid();
  const auto disc = disc_field(grid, c.threads);
  const auto roots = real_root_count_field(grid, c.threads);
  const auto weak = weak_field(grid, c.threads);
  Csv f("disc_field/1", c, {"g1", "g2", "disc", "real_roots", "weak_flag"});
  for (std::size_t iy = 0; iy < grid.ny(); ++iy)
    for (std::size_t ix = 0; ix < grid.nx(); ++ix)
      f.num(grid.g1_range.at(ix)).num(grid.g2_range.at(iy)).num(disc(ix, iy)).integer(roots(ix, iy)).flag(weak(ix, iy)).end();
  write_file(out / "disc_field.csv", f.text());

  const auto curves = trace_ep2_curves(grid, c.tolerances.bisect_tol, c.threads);
  Csv k("ep2_curves/1", c, {"g1", "g2", "branch_label", "curve"});
  for (std::size_t ci = 0; ci < curves.size(); ++ci)
    for (const auto& p : curves[ci].points) k.num(p.g1).num(p.g2).str(p.branch_label).integer(ci + 1).end();
  write_file(out / "ep2_curves.csv", k.text());
}

inline void run_coupling_map(const RunConfig& c, const std::filesystem::path& out) {
  const auto grid = c.grid();
  const auto tol = hybridization_tolerances(c);
  const auto map = scan_coupling_map(grid, tol, c.threads);
  Csv f("coupling_map/1", c, {"g1", "g2", "label", "depth_max", "connectivity_total", "near_ep_flag", "boundary_flag"});
  std::map<std::string, std::pair<std::size_t, std::size_t>> regions;  // label -> (count, first index)
  for (std::size_t iy = 0; iy < grid.ny(); ++iy)
    for (std::size_t ix = 0; ix < grid.nx(); ++ix) {
      const auto& cell = map.cells(ix, iy);
      f.num(grid.g1_range.at(ix))
          .num(grid.g2_range.at(iy))
          .str(cell.label)
          .integer(cell.depth_max)
          .integer(cell.connectivity_total)
          .flag(cell.near_ep)
          .flag(map.boundary(ix, iy))
          .end();
      auto [it, fresh] = regions.emplace(cell.label, std::make_pair(std::size_t{0}, grid.index(ix, iy)));
      ++it->second.first;
      (void)fresh;
    }
  write_file(out / "coupling_map.csv", f.text());

  json j;
  j["header"] = header_json_comment(c, "edge_graphs/1");
  json rs = json::array();
  for (const auto& [label, info] : regions) {
    const auto& cell = map.cells.values[info.second];
    json r;
    r["label"] = label;
    r["cells"] = info.first;
    r["first_point"] = json::array({grid.g1_range.at(info.second % grid.nx()), grid.g2_range.at(info.second / grid.nx())});
    r["classes"] = classes_json(cell.classes);
    r["edge_sets"] = edge_sets_json(cell.edge_sets);
    rs.push_back(r);
  }
  j["regions"] = rs;
  json qs = json::array();
  for (const auto& q : c.query_points) {
    CouplingDiagnosis<double> d;
    try {
      d = classify_point(grid.matrix_at(q[0], q[1]), tol);
    } catch (const convergence_error& e) {
      throw convergence_error(std::string(e.what()) + " at query point (g1, g2) = (" + fmt17(q[0]) + ", " +
                              fmt17(q[1]) + ")");
    }
    json p = diagnosis_json(d);
    p["g1"] = q[0];
    p["g2"] = q[1];
    qs.push_back(p);
  }
  j["points"] = qs;
  write_file(out / "edge_graphs.json", j.dump(2) + "\n");
}

inline void run_ep3(const RunConfig& c, const std::filesystem::path& out) {
  const auto& k = c.system.decay_rates;
  Ep3Point<double> p;
  json seed = nullptr;
  if (*c.family == SystemKind::three_mode) {
    try {
      p = locate_ep3_three_mode(k[0], k[1], k[2]);
    } catch (const std::domain_error& e) {
      throw convergence_error(e.what());
    }
  } else {
    const std::array<double, 4> k4{k[0], k[1], k[2], k[3]};
    std::array<double, 2> s;
    if (c.ep3_seed) {
      s = *c.ep3_seed;
    } else {
      const auto sp = four_mode_ep3_seed(k4, trace_ep2_curves(c.grid(), c.tolerances.bisect_tol, c.threads));
      s = {sp.g1, sp.g2};
    }
    seed = json::array({s[0], s[1]});
    p = locate_ep3_four_mode(k4, s[0], s[1]);
  }
  const auto m = build_family(*c.family, k, p.g1, p.g2);
  DecompositionOptions<double> opts;
  opts.check_residual = false;
  // eigenvectors at an EP agree only to ~eps^(1/3)
  HybridizationTolerances<double> ep_tol;
  ep_tol.tau_eq = 1e-3;
  ep_tol.margin = 1e-2;
  const auto d = classify_point(m, ep_tol, opts);
  const double spread = triple_spread(d.decomposition.eigenvalues);

  json j;
  j["header"] = header_json_comment(c, "ep3/1");
  json pt;
  pt["g1"] = p.g1;
  pt["g2"] = p.g2;
  if (!seed.is_null()) pt["seed"] = seed;
  json v;
  for (const auto& [name, r] : p.verification) v[name] = r;
  pt["verification"] = v;
  json evs = json::array();
  for (const auto& l : d.decomposition.eigenvalues) evs.push_back(complex_json(l));
  pt["eigenvalues"] = evs;
  pt["triple_spread"] = spread;
  json part = json::array();
  for (const auto& row : d.table.participation) part.push_back(row);
  pt["participation"] = part;
  pt["diagnosis"] = diagnosis_json(d);
  j["points"] = json::array({pt});
  write_file(out / "ep3.json", j.dump(2) + "\n");

  Csv f("ep3/1", c, {"g1", "g2", "max_residual", "triple_spread", "label"});
  f.num(p.g1).num(p.g2).num(p.max_residual()).num(spread).str(d.region_label).end();
  write_file(out / "ep3.csv", f.text());
}

inline void run_cooling(const RunConfig& c, const std::filesystem::path& out) {
  CoolingParams<double> params;
  params.kappa1 = c.system.decay_rates[0];
  params.kappa2 = c.system.decay_rates[1];
  params.kappa3 = c.system.decay_rates[2];
  params.g2 = c.g2;
  params.n_m = c.n_m;
  params.n_o = c.n_o;
  params.n_a = c.n_a;
  const auto& a = *c.g1_sweep;
  std::vector<double> g1s;
  if (c.log_spacing) {
    g1s = log_grid(a.min, a.max, a.n_points);
  } else {
    for (std::size_t i = 0; i < a.n_points; ++i) g1s.push_back(a.at(i));
  }
  const auto s = cooling_sweep(params, g1s, c.quadrature, c.threads);

  Csv f("cooling_sweep/1", c,
        {"g1", "n_two_mode", "n_eff", "n_full", "n_approx", "in_decay_dominated_flag", "n_two_mode_approx",
         "n_quadrature", "eff_valid_flag", "approx_valid_flag"});
  for (const auto& p : s.points) {
    const auto& r = p.result;
    f.num(p.g1).num(r.n_two_mode).num(r.n_eff).num(r.n_full).num(r.n_approx).flag(r.decay_dominated)
        .num(r.n_two_mode_approx);
    if (c.quadrature) {
      f.num(p.n_quadrature);
    } else {
      f.str("");
    }
    f.flag(r.eff_valid).flag(r.approx_valid).end();
  }
  write_file(out / "cooling_sweep.csv", f.text());

  json j;
  j["header"] = header_json_comment(c, "cooling_summary/1");
  j["argmin_g1"] = s.argmin_g1();
  j["min_n_full"] = s.min_full();
  if (c.quadrature) j["n_quadrature_at_argmin"] = s.points[s.argmin_full].n_quadrature;
  j["argmin_two_mode_g1"] = s.points[s.argmin_two_mode].g1;
  j["min_n_two_mode"] = s.min_two_mode();
  j["two_mode_at_sweep_end"] = s.points.back().result.n_two_mode;
  j["two_mode_floor"] = params.n_m * params.kappa1 / params.kappa2 + params.n_o;
  j["three_mode_floor"] = 2 * params.n_m * params.kappa1 / params.kappa3;
  try {
    j["g_sc"] = find_g_sc(params, hybridization_tolerances(c));
  } catch (const std::domain_error& e) {
    j["g_sc"] = nullptr;
    j["g_sc_note"] = e.what();
  }
  write_file(out / "cooling_summary.json", j.dump(2) + "\n");
}

}  // namespace detail

/// Runs one command; diagnostics go to `log`.
inline int run(const RunConfig& c, std::ostream& log = std::cerr) {
  try {
    c.validate();
    const std::filesystem::path out(c.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw io_error("cannot create output directory '" + c.output_dir + "': " + ec.message());
    switch (c.command) {
      case Command::spectrum: detail::run_spectrum(c, out); break;
      case Command::phase_diagram: detail::run_phase_diagram(c, out); break;
      case Command::coupling_map: detail::run_coupling_map(c, out); break;
      case Command::ep3: detail::run_ep3(c, out); break;
      case Command::cooling: detail::run_cooling(c, out); break;
    }
    return 0;
  } catch (const config_error& e) {
    log << "sdiag: config error: " << e.what() << "\n";
    return 1;
  } catch (const io_error& e) {
    log << "sdiag: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    log << "sdiag: invalid input: " << e.what() << "\n";
    return 1;
  } catch (const convergence_error& e) {
    log << "sdiag: no convergence: " << e.what() << "\n";
    return 2;
  } catch (const ambiguity_error& e) {
    log << "sdiag: ambiguous eigenvectors: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    log << "sdiag: numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sdiag::cli
