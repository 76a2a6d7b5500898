#ifndef ROBINCOL_IO_HPP
#define ROBINCOL_IO_HPP

// Run configuration (INI text or the JSON echo stored in a manifest), table
// files, and CSV output. Needs nlohmann/json on the include path as "json.hpp".

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "json.hpp"

#include "robincol/core_model.hpp"
#include "robincol/error.hpp"
#include "robincol/exit_flux.hpp"
#include "robincol/series.hpp"
#include "robincol/smooth_fn.hpp"

namespace robincol {

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A scalar function as written in a config: a closed form or a two-column table.
struct FnSpec {
  std::string type = "constant";  // constant | polynomial | pulse | sinusoid | gaussian | table
  double value = 0.0;
  std::vector<double> coeffs;
  double level = 1.0, start = 0.0, stop = 1.0, ramp = 0.1;  // pulse
  double mean = 0.0, amplitude = 1.0, period = 1.0, phase = 0.0;  // sinusoid
  double center = 0.0, width = 1.0;  // gaussian (uses level)
  std::string file;                  // table source, informational once loaded
  std::vector<double> xs, ys;        // table data

  SmoothFn build() const {
    if (type == "constant") return SmoothFn::constant(value);
    if (type == "polynomial") return SmoothFn::polynomial(coeffs);
    if (type == "pulse") return SmoothFn::smooth_pulse(level, start, stop, ramp);
    if (type == "sinusoid") return SmoothFn::sinusoid(mean, amplitude, period, phase);
    if (type == "gaussian") return SmoothFn::gaussian_pulse(level, center, width);
    if (type == "table") return SmoothFn::tabulated(xs, ys);
    throw ConfigError("unknown function type '" + type + "'");
  }
};

struct RunConfig {
  TransportParams params;
  double t0 = 0.0;
  double t_end = 1.0;
  FnSpec phi;
  FnSpec g;
  std::string exit_mode = "computed";  // computed | measured
  FnSpec exit_fn;                      // measured exit concentration
  int exit_points = 512;
  double exit_defect_tol = 1e-6;
  std::string extension = "blend";  // blend | natural
  TruncationPolicy policy;
  int nx = 101, nt = 101;        // output sample grid
  int fd_nx = 800, fd_nt = 800;  // finite-difference oracle grid
  double balance_tol = 1e-4;
  double fd_tol = 1e-3;
  std::string out_dir = "out";

  PhiExtension phi_extension() const {
    return extension == "natural" ? PhiExtension::natural : PhiExtension::blend;
  }

  /// The column problem; a Computed exit is left unresolved.
  ProblemData problem() const {
    ProblemData d;
    d.params = params;
    d.t0 = t0;
    d.phi = phi.build();
    d.g = g.build();
    if (exit_mode == "measured") d.exit = MeasuredExit{exit_fn.build()};
    else d.exit = ComputedExit{{}, exit_points, t_end, 0.0};
    return d;
  }

  void validate() const {
    try {
      params.validate();
      policy.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    if (!(t_end > t0)) throw ConfigError("[params] t_end must exceed t0");
    if (exit_mode != "computed" && exit_mode != "measured")
      throw ConfigError("[exit] mode must be 'computed' or 'measured'");
    if (extension != "blend" && extension != "natural")
      throw ConfigError("[exit] extension must be 'blend' or 'natural'");
    if (exit_mode == "computed" && params.unbalanced_production())
      throw ConfigError("[exit] a computed exit needs mu > 0 when gamma > 0 (the flux transform divides by mu)");
    if (exit_points < 8) throw ConfigError("[exit] grid_points must be >= 8");
    if (nx < 2 || nt < 2) throw ConfigError("[grid] nx and nt must be >= 2");
    if (fd_nx < 10 || fd_nt < 10) throw ConfigError("[grid] fd_nx and fd_nt must be >= 10");
    try {
      phi.build();
      g.build();
      if (exit_mode == "measured") exit_fn.build();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(where + ": expected a number, got '" + text + "'");
  return v;
}

inline int parse_int(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  int v = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, v);
  if (t.empty() || ec != std::errc() || ptr != end) throw ConfigError(where + ": expected an integer, got '" + text + "'");
  return v;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Two numeric columns separated by a comma; '#' comments and one header line allowed.
inline void read_table(const std::filesystem::path& path, std::vector<double>& xs, std::vector<double>& ys) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file " + path.string());
  std::string line;
  int lineno = 0;
  bool first = true;
  xs.clear();
  ys.clear();
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (comma == std::string::npos) throw ConfigError(where + ": expected two comma-separated columns");
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    if (first) {
      first = false;
      double tmp;
      const std::string ta = trim(a);
      if (std::from_chars(ta.data(), ta.data() + ta.size(), tmp).ec != std::errc()) continue;  // header
    }
    xs.push_back(parse_number(a, where));
    ys.push_back(parse_number(b, where));
    if (xs.size() > 1 && !(xs.back() > xs[xs.size() - 2]))
      throw ConfigError(where + ": abscissae must be strictly increasing");
  }
  if (xs.size() < 2) throw ConfigError(path.string() + ": a table needs at least two rows");
}

/// "section.key" -> line number, for diagnostics.
inline std::map<std::string, int> ini_lines(const std::filesystem::path& path) {
  std::map<std::string, int> out;
  std::ifstream in(path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      out.emplace(section + ".", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq != std::string::npos) out.emplace(section + "." + trim(line.substr(0, eq)), lineno);
  }
  return out;
}

class IniReader {
 public:
  IniReader(const std::filesystem::path& path) : path_(path), lines_(ini_lines(path)) {
    try {
      boost::property_tree::ini_parser::read_ini(path.string(), tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << e.line() << ": " << e.message();
      throw ConfigError(msg.str());
    }
    static const std::map<std::string, std::set<std::string>> known = {
        {"params", {"R", "D", "v", "mu", "gamma", "ell", "t0", "t_end"}},
        {"phi", {"type", "value", "coeffs", "level", "start", "stop", "ramp", "mean", "amplitude", "period",
                 "phase", "center", "width", "file"}},
        {"g", {"type", "value", "coeffs", "level", "start", "stop", "ramp", "mean", "amplitude", "period",
               "phase", "center", "width", "file"}},
        {"exit", {"mode", "type", "value", "coeffs", "level", "start", "stop", "ramp", "mean", "amplitude",
                  "period", "phase", "center", "width", "file", "grid_points", "defect_tol", "extension"}},
        {"policy", {"n_max", "tail_tol", "time_quad_tol", "modes"}},
        {"grid", {"nx", "nt", "fd_nx", "fd_nt"}},
        {"verify", {"balance_tol", "fd_tol"}},
        {"output", {"dir"}},
        {"chain", {"segments"}},
    };
    for (const auto& [section, body] : tree_) {
      const auto it = known.find(section);
      if (it == known.end()) throw ConfigError(where(section, "") + ": unknown section [" + section + "]");
      for (const auto& [key, value] : body) {
        if (!it->second.count(key)) throw ConfigError(where(section, key) + ": unknown key '" + key + "'");
      }
    }
  }

  std::string where(const std::string& section, const std::string& key) const {
    const auto it = lines_.find(section + "." + key);
    std::string w = path_.string();
    if (it != lines_.end()) w += ":" + std::to_string(it->second);
    return w + ": [" + section + "]" + (key.empty() ? "" : " " + key);
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = tree_.get_child_optional(section);
    return s && s->get_child_optional(boost::property_tree::ptree::path_type(key, '\0'));
  }
  bool has_section(const std::string& section) const { return tree_.get_child_optional(section).has_value(); }

  std::string text(const std::string& section, const std::string& key) const {
    return trim(tree_.get_child(section).get<std::string>(boost::property_tree::ptree::path_type(key, '\0')));
  }

  void number(const std::string& section, const std::string& key, double& out) const {
    if (has(section, key)) out = parse_number(text(section, key), where(section, key));
  }
  void integer(const std::string& section, const std::string& key, int& out) const {
    if (has(section, key)) out = parse_int(text(section, key), where(section, key));
  }
  void string(const std::string& section, const std::string& key, std::string& out) const {
    if (has(section, key)) out = text(section, key);
  }

  FnSpec function(const std::string& section, FnSpec spec) const {
    if (!has_section(section)) return spec;
    string(section, "type", spec.type);
    number(section, "value", spec.value);
    if (has(section, "coeffs")) {
      spec.coeffs.clear();
      for (const auto& c : split_list(text(section, "coeffs")))
        spec.coeffs.push_back(parse_number(c, where(section, "coeffs")));
    }
    for (auto [key, field] : {std::pair{"level", &spec.level}, {"start", &spec.start}, {"stop", &spec.stop},
                              {"ramp", &spec.ramp}, {"mean", &spec.mean}, {"amplitude", &spec.amplitude},
                              {"period", &spec.period}, {"phase", &spec.phase}, {"center", &spec.center},
                              {"width", &spec.width}})
      number(section, key, *field);
    static const std::set<std::string> types = {"constant", "polynomial", "pulse", "sinusoid", "gaussian", "table"};
    if (!types.count(spec.type)) throw ConfigError(where(section, "type") + ": unknown function type '" + spec.type + "'");
    if (spec.type == "table") {
      if (!has(section, "file")) throw ConfigError(where(section, "") + ": type = table needs a file");
      spec.file = text(section, "file");
      auto p = std::filesystem::path(spec.file);
      if (p.is_relative()) p = path_.parent_path() / p;
      read_table(p, spec.xs, spec.ys);
    }
    if (spec.type == "polynomial" && spec.coeffs.empty())
      throw ConfigError(where(section, "coeffs") + ": polynomial needs coefficients");
    try {
      spec.build();
    } catch (const DomainError& e) {
      throw ConfigError(where(section, "") + ": " + e.what());
    }
    return spec;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::map<std::string, int> lines_;
  boost::property_tree::ptree tree_;
};

}  // namespace detail

// ---- JSON echo of a configuration (embedded in every manifest) ----

inline nlohmann::ordered_json to_json(const FnSpec& f) {
  nlohmann::ordered_json j;
  j["type"] = f.type;
  if (f.type == "constant") j["value"] = f.value;
  if (f.type == "polynomial") j["coeffs"] = f.coeffs;
  if (f.type == "pulse") {
    j["level"] = f.level;
    j["start"] = f.start;
    j["stop"] = f.stop;
    j["ramp"] = f.ramp;
  }
  if (f.type == "sinusoid") {
    j["mean"] = f.mean;
    j["amplitude"] = f.amplitude;
    j["period"] = f.period;
    j["phase"] = f.phase;
  }
  if (f.type == "gaussian") {
    j["level"] = f.level;
    j["center"] = f.center;
    j["width"] = f.width;
  }
  if (f.type == "table") {
    j["file"] = f.file;
    j["xs"] = f.xs;
    j["ys"] = f.ys;
  }
  return j;
}

inline FnSpec fn_from_json(const nlohmann::json& j) {
  FnSpec f;
  f.type = j.value("type", f.type);
  f.value = j.value("value", f.value);
  f.coeffs = j.value("coeffs", f.coeffs);
  f.level = j.value("level", f.level);
  f.start = j.value("start", f.start);
  f.stop = j.value("stop", f.stop);
  f.ramp = j.value("ramp", f.ramp);
  f.mean = j.value("mean", f.mean);
  f.amplitude = j.value("amplitude", f.amplitude);
  f.period = j.value("period", f.period);
  f.phase = j.value("phase", f.phase);
  f.center = j.value("center", f.center);
  f.width = j.value("width", f.width);
  f.file = j.value("file", f.file);
  f.xs = j.value("xs", f.xs);
  f.ys = j.value("ys", f.ys);
  return f;
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["params"] = {{"R", c.params.R},   {"D", c.params.D},         {"v", c.params.v},   {"mu", c.params.mu},
                 {"gamma", c.params.gamma}, {"ell", c.params.ell}, {"t0", c.t0}, {"t_end", c.t_end}};
  j["phi"] = to_json(c.phi);
  j["g"] = to_json(c.g);
  nlohmann::ordered_json ex;
  ex["mode"] = c.exit_mode;
  if (c.exit_mode == "measured") ex["function"] = to_json(c.exit_fn);
  ex["grid_points"] = c.exit_points;
  ex["defect_tol"] = c.exit_defect_tol;
  ex["extension"] = c.extension;
  j["exit"] = ex;
  j["policy"] = {{"n_max", c.policy.n_max},
                 {"tail_tol", c.policy.tail_tol},
                 {"time_quad_tol", c.policy.time_quad_tol},
                 {"modes", c.policy.fixed_modes}};
  j["grid"] = {{"nx", c.nx}, {"nt", c.nt}, {"fd_nx", c.fd_nx}, {"fd_nt", c.fd_nt}};
  j["verify"] = {{"balance_tol", c.balance_tol}, {"fd_tol", c.fd_tol}};
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    const auto& p = j.at("params");
    c.params = {p.at("R"), p.at("D"), p.at("v"), p.at("mu"), p.at("gamma"), p.at("ell")};
    c.t0 = p.at("t0");
    c.t_end = p.at("t_end");
    c.phi = fn_from_json(j.at("phi"));
    c.g = fn_from_json(j.at("g"));
    const auto& ex = j.at("exit");
    c.exit_mode = ex.at("mode");
    if (ex.contains("function")) c.exit_fn = fn_from_json(ex.at("function"));
    c.exit_points = ex.value("grid_points", c.exit_points);
    c.exit_defect_tol = ex.value("defect_tol", c.exit_defect_tol);
    c.extension = ex.value("extension", c.extension);
    const auto& pol = j.at("policy");
    c.policy.n_max = pol.at("n_max");
    c.policy.tail_tol = pol.at("tail_tol");
    c.policy.time_quad_tol = pol.at("time_quad_tol");
    c.policy.fixed_modes = pol.value("modes", 0);
    const auto& gr = j.at("grid");
    c.nx = gr.at("nx");
    c.nt = gr.at("nt");
    c.fd_nx = gr.at("fd_nx");
    c.fd_nt = gr.at("fd_nt");
    if (j.contains("verify")) {
      c.balance_tol = j["verify"].value("balance_tol", c.balance_tol);
      c.fd_tol = j["verify"].value("fd_tol", c.fd_tol);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("manifest config: ") + e.what());
  }
  return c;
}

/// Reads an INI run configuration, or a manifest (.json) whose "config" entry echoes one.
inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  RunConfig c;
  if (path.extension() == ".json") {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    if (j.contains("segments")) throw ConfigError(path.string() + ": this is a chain manifest; use the chain command");
    c = config_from_json(j.contains("config") ? j["config"] : j);
    c.validate();
    return c;
  }
  detail::IniReader ini(path);
  ini.number("params", "R", c.params.R);
  ini.number("params", "D", c.params.D);
  ini.number("params", "v", c.params.v);
  ini.number("params", "mu", c.params.mu);
  ini.number("params", "gamma", c.params.gamma);
  ini.number("params", "ell", c.params.ell);
  ini.number("params", "t0", c.t0);
  ini.number("params", "t_end", c.t_end);
  c.phi = ini.function("phi", c.phi);
  c.g = ini.function("g", c.g);
  ini.string("exit", "mode", c.exit_mode);
  if (c.exit_mode == "measured") {
    if (!ini.has("exit", "type")) throw ConfigError(ini.where("exit", "mode") + ": a measured exit needs a type");
    c.exit_fn = ini.function("exit", c.exit_fn);
  }
  ini.integer("exit", "grid_points", c.exit_points);
  ini.number("exit", "defect_tol", c.exit_defect_tol);
  ini.string("exit", "extension", c.extension);
  ini.integer("policy", "n_max", c.policy.n_max);
  ini.number("policy", "tail_tol", c.policy.tail_tol);
  ini.number("policy", "time_quad_tol", c.policy.time_quad_tol);
  ini.integer("policy", "modes", c.policy.fixed_modes);
  ini.integer("grid", "nx", c.nx);
  ini.integer("grid", "nt", c.nt);
  ini.integer("grid", "fd_nx", c.fd_nx);
  ini.integer("grid", "fd_nt", c.fd_nt);
  ini.number("verify", "balance_tol", c.balance_tol);
  ini.number("verify", "fd_tol", c.fd_tol);
  ini.string("output", "dir", c.out_dir);
  if (ini.has_section("chain")) throw ConfigError(ini.where("chain", "") + ": this is a chain file; use the chain command");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return c;
}

/// Ordered column segments. Segment i+1 takes segment i's exit as its input.
struct ChainConfig {
  std::vector<RunConfig> segments;
  std::string out_dir = "out";
};

/// A chain INI ([chain] segments = a.ini, b.ini; [output] dir), or a chain manifest.
inline ChainConfig load_chain(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  ChainConfig chain;
  if (path.extension() == ".json") {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.contains("segments") || !j["segments"].is_array())
      throw ConfigError(path.string() + ": not a chain manifest (no segments array)");
    for (const auto& s : j["segments"]) {
      chain.segments.push_back(config_from_json(s.at("config")));
      chain.segments.back().validate();
    }
  } else {
    detail::IniReader ini(path);
    if (!ini.has("chain", "segments")) throw ConfigError(ini.where("chain", "") + ": missing segments");
    for (const auto& s : detail::split_list(ini.text("chain", "segments"))) {
      auto p = std::filesystem::path(s);
      if (p.is_relative()) p = path.parent_path() / p;
      chain.segments.push_back(load_config(p.lexically_normal()));
    }
    ini.string("output", "dir", chain.out_dir);
  }
  if (chain.segments.empty()) throw ConfigError(path.string() + ": a chain needs at least one segment");
  return chain;
}

// ---- CSV ----

/// Shortest text that round-trips is not needed; 17 significant digits always do.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << format_double(v);
      first = false;
    }
    out_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

}  // namespace robincol

#endif  // ROBINCOL_IO_HPP
