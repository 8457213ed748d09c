#pragma once

// Run configuration: a flat text format of `key = value` lines.
//
//   # comment
//   command   = "coupling-map"
//   system    = "three_mode"          # two_mode | three_mode | four_mode | custom
//   kappa     = [0.01, 1, 20]
//   g1_range  = [0, 6, 200]           # min, max, points
//   couplings = [{1, 2, 0.5, 0}]      # custom systems: {j, k, re, im}, 1-based
//
// Values are numbers, "strings", true/false, [arrays] and {tuples}.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdiag/grid.hpp"
#include "sdiag/mode_system.hpp"

namespace sdiag::cli {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigValue {
  enum class Kind { number, string, boolean, array, tuple };
  Kind kind = Kind::number;
  double number = 0;
  std::string text;
  bool flag = false;
  std::vector<ConfigValue> items;
  std::size_t line = 0;
};

using ConfigTable = std::map<std::string, ConfigValue>;

namespace detail {

class ConfigParser {
 public:
  ConfigParser(const std::string& s, std::size_t line) : s_(s), line_(line) {}

  ConfigValue value() {
    skip_space();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return string_value();
    if (c == '[') return list(']', ConfigValue::Kind::array);
    if (c == '{') return list('}', ConfigValue::Kind::tuple);
    if (s_.compare(pos_, 4, "true") == 0) return word(4, true);
    if (s_.compare(pos_, 5, "false") == 0) return word(5, false);
    return number_value();
  }

  void finish() {
    skip_space();
    if (pos_ < s_.size()) fail("unexpected trailing text '" + s_.substr(pos_) + "'");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw config_error("line " + std::to_string(line_) + ": " + what);
  }

 private:
  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }

  ConfigValue make(ConfigValue::Kind k) const {
    ConfigValue v;
    v.kind = k;
    v.line = line_;
    return v;
  }

  ConfigValue word(std::size_t len, bool flag) {
    pos_ += len;
    auto v = make(ConfigValue::Kind::boolean);
    v.flag = flag;
    return v;
  }

  ConfigValue string_value() {
    const auto end = s_.find('"', pos_ + 1);
    if (end == std::string::npos) fail("unterminated string");
    auto v = make(ConfigValue::Kind::string);
    v.text = s_.substr(pos_ + 1, end - pos_ - 1);
    pos_ = end + 1;
    return v;
  }

  ConfigValue number_value() {
    auto v = make(ConfigValue::Kind::number);
    const char* first = s_.data() + pos_;
    const char* last = s_.data() + s_.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr == first) fail("expected a value at '" + s_.substr(pos_) + "'");
    pos_ = static_cast<std::size_t>(ptr - s_.data());
    return v;
  }

  ConfigValue list(char close, ConfigValue::Kind kind) {
    auto v = make(kind);
    ++pos_;
    skip_space();
    if (pos_ < s_.size() && s_[pos_] == close) {
      ++pos_;
      return v;
    }
    for (;;) {
      v.items.push_back(value());
      skip_space();
      if (pos_ >= s_.size()) fail(std::string("missing '") + close + "'");
      if (s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      if (s_[pos_] == close) {
        ++pos_;
        return v;
      }
      fail(std::string("expected ',' or '") + close + "'");
    }
  }

  const std::string& s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

inline std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

/// Parses the text into a key table; duplicate keys and syntax errors throw
/// config_error naming the line.
inline ConfigTable parse_config_text(const std::string& text) {
  ConfigTable table;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto body = detail::trim(detail::strip_comment(raw));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw config_error("line " + std::to_string(line) + ": expected 'key = value'");
    const auto key = detail::trim(body.substr(0, eq));
    if (key.empty() || key.find_first_of(" \t\"[]{}") != std::string::npos)
      throw config_error("line " + std::to_string(line) + ": bad key '" + key + "'");
    const auto rhs = body.substr(eq + 1);
    detail::ConfigParser p(rhs, line);
    auto v = p.value();
    p.finish();
    if (!table.emplace(key, std::move(v)).second)
      throw config_error("line " + std::to_string(line) + ": duplicate key '" + key + "'");
  }
  return table;
}

enum class Command { spectrum, phase_diagram, coupling_map, ep3, cooling };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::spectrum: return "spectrum";
    case Command::phase_diagram: return "phase-diagram";
    case Command::coupling_map: return "coupling-map";
    case Command::ep3: return "ep3";
    case Command::cooling: return "cooling";
  }
  return "?";
}

inline Command parse_command(const std::string& s) {
  for (auto c : {Command::spectrum, Command::phase_diagram, Command::coupling_map, Command::ep3, Command::cooling})
    if (s == to_string(c)) return c;
  throw config_error("unknown command '" + s + "' (spectrum, phase-diagram, coupling-map, ep3, cooling)");
}

struct RunTolerances {
  double tau_eq = 1e-6;
  double margin = 1e-5;
  double bisect_tol = 1e-10;
  double residual_tol = 1e-9;
};

struct RunConfig {
  Command command = Command::spectrum;
  /// Chain family, or nullopt for a custom system given by couplings.
  std::optional<SystemKind> family = SystemKind::three_mode;
  ModeSystemSpec<double> system;  // kappa/delta; couplings for custom systems
  double g1 = 0;
  double g2 = 0;
  std::optional<AxisRange<double>> g1_range;
  std::optional<AxisRange<double>> g2_range;
  RunTolerances tolerances;
  std::string output_dir = ".";
  unsigned threads = 1;
  std::optional<std::array<double, 2>> ep3_seed;
  std::vector<std::array<double, 2>> query_points;
  // cooling
  double n_m = 0;
  double n_o = 0;
  double n_a = 0;
  std::optional<AxisRange<double>> g1_sweep;
  bool log_spacing = true;
  bool quadrature = true;

  GridSpec<double> grid() const {
    GridSpec<double> g;
    g.g1_range = *g1_range;
    g.g2_range = *g2_range;
    g.decay_rates = system.decay_rates;
    g.system_kind = *family;
    return g;
  }

  /// Mode matrix at (g1, g2) for a family, or the custom system.
  ModeMatrix<double> point_matrix() const {
    if (family) return build_family(*family, system.decay_rates, g1, g2);
    return build_mode_matrix(system);
  }

  /// Everything that determines the numerical content, one `key=value` per
  /// line in fixed order (threads and output_dir excluded).
  std::string canonical() const;
  std::uint64_t hash() const;

  /// Throws config_error when a command-specific field is missing or a
  /// tolerance is not positive.
  void validate() const;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join17(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt17(v[i]);
  return s;
}

inline std::string axis17(const std::optional<AxisRange<double>>& a) {
  if (!a) return "-";
  return fmt17(a->min) + "," + fmt17(a->max) + "," + std::to_string(a->n_points);
}

}  // namespace detail

inline std::string RunConfig::canonical() const {
  using detail::fmt17;
  std::string s;
  auto put = [&](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
  put("command", to_string(command));
  put("system", family ? sdiag::to_string(*family) : "custom");
  put("n_modes", std::to_string(system.n_modes));
  put("kappa", detail::join17(system.decay_rates));
  put("delta", detail::join17(system.detunings));
  std::string cs;
  for (const auto& c : system.couplings)
    cs += "{" + std::to_string(c.j + 1) + "," + std::to_string(c.k + 1) + "," + fmt17(c.g.real()) + "," +
          fmt17(c.g.imag()) + "}";
  put("couplings", cs);
  put("g1", fmt17(g1));
  put("g2", fmt17(g2));
  put("g1_range", detail::axis17(g1_range));
  put("g2_range", detail::axis17(g2_range));
  put("tau_eq", fmt17(tolerances.tau_eq));
  put("margin", fmt17(tolerances.margin));
  put("bisect_tol", fmt17(tolerances.bisect_tol));
  put("residual_tol", fmt17(tolerances.residual_tol));
  put("ep3_seed", ep3_seed ? fmt17((*ep3_seed)[0]) + "," + fmt17((*ep3_seed)[1]) : "-");
  std::string qs;
  for (const auto& q : query_points) qs += "{" + fmt17(q[0]) + "," + fmt17(q[1]) + "}";
  put("query_points", qs);
  put("n_m", fmt17(n_m));
  put("n_o", fmt17(n_o));
  put("n_a", fmt17(n_a));
  put("g1_sweep", detail::axis17(g1_sweep));
  put("g1_spacing", log_spacing ? "log" : "linear");
  put("quadrature", quadrature ? "true" : "false");
  return s;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t RunConfig::hash() const { return fnv1a(canonical()); }

inline void RunConfig::validate() const {
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw config_error(std::string(to_string(command)) + ": " + what);
  };
  const auto& t = tolerances;
  need(t.tau_eq > 0 && t.margin > 0 && t.bisect_tol > 0 && t.residual_tol > 0, "tolerances must be positive");
  need(threads >= 1, "threads must be at least 1");
  try {
    if (family) {
      need(system.decay_rates.size() == mode_count(*family),
           std::string(sdiag::to_string(*family)) + " needs " + std::to_string(mode_count(*family)) + " kappa values");
      sdiag::detail::require_nonnegative_rates(system.decay_rates);
    } else {
      system.validate();
    }
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
  const bool family2d = family && (*family == SystemKind::three_mode || *family == SystemKind::four_mode);
  auto axis_ok = [](const std::optional<AxisRange<double>>& a) { return a && a->min < a->max && a->n_points >= 2; };
  switch (command) {
    case Command::spectrum: break;
    case Command::phase_diagram:
    case Command::coupling_map:
      need(family2d, "needs system = three_mode or four_mode");
      need(axis_ok(g1_range) && axis_ok(g2_range), "needs g1_range and g2_range as [min, max, points], min < max");
      need(t.margin >= t.tau_eq, "margin must not be below tau_eq");
      break;
    case Command::ep3:
      need(family2d, "needs system = three_mode or four_mode");
      if (*family == SystemKind::four_mode && !ep3_seed)
        need(axis_ok(g1_range) && axis_ok(g2_range), "four_mode needs ep3_seed or g1_range/g2_range to trace a seed");
      break;
    case Command::cooling:
      need(family == SystemKind::three_mode, "needs system = three_mode");
      need(system.decay_rates[0] > 0 && system.decay_rates[1] > 0 && system.decay_rates[2] > 0,
           "needs positive kappa");
      need(n_m >= 0 && n_o >= 0 && n_a >= 0, "bath occupancies must be nonnegative");
      need(g2 >= 0, "g2 must be nonnegative");
      need(axis_ok(g1_sweep) && g1_sweep->min >= 0, "needs g1_sweep = [min, max, points] with 0 <= min < max");
      need(!log_spacing || g1_sweep->min > 0, "log g1_spacing needs g1_sweep min > 0");
      break;
  }
}

namespace detail {

class TableReader {
 public:
  explicit TableReader(const ConfigTable& t) : t_(t) {}

  const ConfigValue* find(const std::string& key) {
    used_.push_back(key);
    const auto it = t_.find(key);
    return it == t_.end() ? nullptr : &it->second;
  }

  static double number(const ConfigValue& v, const std::string& key) {
    if (v.kind != ConfigValue::Kind::number) bad(v, key, "a number");
    return v.number;
  }

  static std::size_t count(const ConfigValue& v, const std::string& key) {
    const double d = number(v, key);
    if (!(d >= 0) || d != static_cast<double>(static_cast<std::size_t>(d))) bad(v, key, "a nonnegative integer");
    return static_cast<std::size_t>(d);
  }

  static std::vector<double> numbers(const ConfigValue& v, const std::string& key) {
    if (v.kind != ConfigValue::Kind::array && v.kind != ConfigValue::Kind::tuple) bad(v, key, "an array of numbers");
    std::vector<double> out;
    for (const auto& i : v.items) out.push_back(number(i, key));
    return out;
  }

  static AxisRange<double> axis(const ConfigValue& v, const std::string& key) {
    const auto n = numbers(v, key);
    if (n.size() != 3) bad(v, key, "[min, max, points]");
    ConfigValue c;
    c.number = n[2];
    c.line = v.line;
    return {n[0], n[1], count(c, key)};
  }

  std::optional<double> opt_number(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    return number(*v, key);
  }

  std::optional<std::string> opt_string(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (v->kind != ConfigValue::Kind::string) bad(*v, key, "a string");
    return v->text;
  }

  std::optional<bool> opt_bool(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (v->kind != ConfigValue::Kind::boolean) bad(*v, key, "true or false");
    return v->flag;
  }

  void reject_unknown() const {
    for (const auto& [key, v] : t_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        throw config_error("line " + std::to_string(v.line) + ": unknown key '" + key + "'");
  }

  [[noreturn]] static void bad(const ConfigValue& v, const std::string& key, const std::string& expected) {
    throw config_error("line " + std::to_string(v.line) + ": " + key + " must be " + expected);
  }

 private:
  const ConfigTable& t_;
  std::vector<std::string> used_;
};

}  // namespace detail

inline RunConfig run_config_from_table(const ConfigTable& table) {
  detail::TableReader r(table);
  RunConfig c;
  const auto cmd = r.opt_string("command");
  if (!cmd) throw config_error("missing key 'command'");
  c.command = parse_command(*cmd);

  const auto sys = r.opt_string("system").value_or("three_mode");
  if (sys == "custom") {
    c.family.reset();
  } else if (sys == "two_mode") {
    c.family = SystemKind::two_mode;
  } else if (sys == "three_mode") {
    c.family = SystemKind::three_mode;
  } else if (sys == "four_mode") {
    c.family = SystemKind::four_mode;
  } else {
    throw config_error("unknown system '" + sys + "' (two_mode, three_mode, four_mode, custom)");
  }

  if (const auto* v = r.find("kappa")) {
    c.system.decay_rates = detail::TableReader::numbers(*v, "kappa");
  } else {
    throw config_error("missing key 'kappa'");
  }
  c.system.n_modes = c.system.decay_rates.size();
  if (const auto* v = r.find("n_modes")) {
    const auto n = detail::TableReader::count(*v, "n_modes");
    if (n != c.system.n_modes)
      throw config_error("line " + std::to_string(v->line) + ": n_modes = " + std::to_string(n) + " but kappa has " +
                         std::to_string(c.system.n_modes) + " entries");
  }
  if (const auto* v = r.find("delta")) {
    c.system.detunings = detail::TableReader::numbers(*v, "delta");
    if (c.family && !c.system.zero_detuning())
      throw config_error("line " + std::to_string(v->line) + ": chain families are zero-detuning; use system = \"custom\"");
  } else {
    c.system.detunings.assign(c.system.n_modes, 0.0);
  }
  if (const auto* v = r.find("couplings")) {
    if (c.family)
      throw config_error("line " + std::to_string(v->line) + ": couplings are only read for system = \"custom\"");
    if (v->kind != ConfigValue::Kind::array) detail::TableReader::bad(*v, "couplings", "an array of {j, k, re, im}");
    for (const auto& item : v->items) {
      const auto n = detail::TableReader::numbers(item, "couplings");
      if (item.kind != ConfigValue::Kind::tuple || (n.size() != 3 && n.size() != 4))
        detail::TableReader::bad(item, "couplings", "a list of {j, k, re, im} tuples");
      auto index = [&](double d) {
        if (!(d >= 1) || d != static_cast<double>(static_cast<std::size_t>(d)))
          detail::TableReader::bad(item, "couplings", "1-based integer mode indices");
        return static_cast<std::size_t>(d) - 1;
      };
      c.system.couplings.push_back({index(n[0]), index(n[1]), {n[2], n.size() == 4 ? n[3] : 0.0}});
    }
  } else if (!c.family) {
    throw config_error("system = \"custom\" needs couplings");
  }

  c.g1 = r.opt_number("g1").value_or(0.0);
  c.g2 = r.opt_number("g2").value_or(0.0);
  if (const auto* v = r.find("g1_range")) c.g1_range = detail::TableReader::axis(*v, "g1_range");
  if (const auto* v = r.find("g2_range")) c.g2_range = detail::TableReader::axis(*v, "g2_range");
  c.tolerances.tau_eq = r.opt_number("tau_eq").value_or(c.tolerances.tau_eq);
  c.tolerances.margin = r.opt_number("margin").value_or(c.tolerances.margin);
  c.tolerances.bisect_tol = r.opt_number("bisect_tol").value_or(c.tolerances.bisect_tol);
  c.tolerances.residual_tol = r.opt_number("residual_tol").value_or(c.tolerances.residual_tol);
  c.output_dir = r.opt_string("output_dir").value_or(c.output_dir);
  if (const auto* v = r.find("threads")) c.threads = static_cast<unsigned>(detail::TableReader::count(*v, "threads"));
  if (const auto* v = r.find("ep3_seed")) {
    const auto n = detail::TableReader::numbers(*v, "ep3_seed");
    if (n.size() != 2) detail::TableReader::bad(*v, "ep3_seed", "[g1, g2]");
    c.ep3_seed = std::array<double, 2>{n[0], n[1]};
  }
  if (const auto* v = r.find("query_points")) {
    if (v->kind != ConfigValue::Kind::array) detail::TableReader::bad(*v, "query_points", "an array of [g1, g2]");
    for (const auto& item : v->items) {
      const auto n = detail::TableReader::numbers(item, "query_points");
      if (n.size() != 2) detail::TableReader::bad(item, "query_points", "an array of [g1, g2]");
      c.query_points.push_back({n[0], n[1]});
    }
  }
  c.n_m = r.opt_number("n_m").value_or(0);
  c.n_o = r.opt_number("n_o").value_or(0);
  c.n_a = r.opt_number("n_a").value_or(0);
  if (const auto* v = r.find("g1_sweep")) c.g1_sweep = detail::TableReader::axis(*v, "g1_sweep");
  const auto spacing = r.opt_string("g1_spacing").value_or("log");
  if (spacing != "log" && spacing != "linear") throw config_error("g1_spacing must be \"log\" or \"linear\"");
  c.log_spacing = spacing == "log";
  c.quadrature = r.opt_bool("quadrature").value_or(true);
  r.reject_unknown();
  return c;
}

inline RunConfig parse_run_config(const std::string& text) { return run_config_from_table(parse_config_text(text)); }

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace sdiag::cli
