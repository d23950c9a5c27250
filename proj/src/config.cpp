#include "rodspec/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "rodspec/errors.hpp"

namespace rodspec::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(int line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

struct RawEntry {
  std::string value;
  bool quoted = false;
  int line = 0;
  bool used = false;
};

struct RawConfig {
  std::map<std::string, RawEntry> entries;  // "section.key"

  const RawEntry* find(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }
};

double parse_number(const RawEntry& e, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    fail(e.line, "expected a number for '" + key + "', got '" + e.value + "'");
  }
}

long long parse_integer(const RawEntry& e, const std::string& key) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(e.value, &pos);
    if (pos != e.value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    fail(e.line, "expected an integer for '" + key + "', got '" + e.value + "'");
  }
}

bool parse_bool(const RawEntry& e, const std::string& key) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  fail(e.line, "expected true/false for '" + key + "', got '" + e.value + "'");
}

std::shared_ptr<const expr::Expr> parse_expression(const RawEntry& e, const std::string& key) {
  if (!e.quoted) fail(e.line, "expression '" + key + "' must be a quoted string");
  try {
    return std::make_shared<expr::Expr>(expr::parse(e.value));
  } catch (const expr::ParseError& err) {
    fail(e.line, "in expression '" + key + "': " + err.what());
  }
}

const std::map<std::string, std::vector<std::string>> kKnownKeys = {
    {"geometry", {"F", "half_width", "n_cells", "epsilon_ladder"}},
    {"coefficients", {"a11", "a12", "a22", "c", "lambda0"}},
    {"mode", {"beta", "flatness_override"}},
    {"solver",
     {"h", "h_y", "tol", "seed", "j_max", "truncation_L", "grid_n", "cell_slices",
      "example1d_epsilons"}},
    {"output", {"directory", "svg"}},
    {"mvt", {"w", "v"}},
};

}  // namespace

Config parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(lineno, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!kKnownKeys.count(section)) fail(lineno, "unknown section [" + section + "]");
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    if (section.empty()) fail(lineno, "key outside of a section");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    const auto& known = kKnownKeys.at(section);
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(lineno, "unknown key '" + key + "' in section [" + section + "]");

    RawEntry entry;
    entry.line = lineno;
    if (!value.empty() && value.front() == '"') {
      auto close = value.find('"', 1);
      if (close == std::string::npos) fail(lineno, "unterminated string");
      std::string rest = trim(value.substr(close + 1));
      if (!rest.empty() && rest[0] != '#' && rest[0] != ';')
        fail(lineno, "trailing characters after string value");
      entry.value = value.substr(1, close - 1);
      entry.quoted = true;
    } else {
      auto comment = value.find_first_of("#;");
      if (comment != std::string::npos) value = trim(value.substr(0, comment));
      if (value.empty()) fail(lineno, "missing value for '" + key + "'");
      entry.value = value;
    }
    std::string full = section + "." + key;
    if (raw.entries.count(full)) fail(lineno, "duplicate key '" + full + "'");
    raw.entries.emplace(full, std::move(entry));
  }

  Config cfg;
  cfg.raw_text = text;

  auto geometry = std::make_shared<geom::CellGeometry>();
  if (const RawEntry* e = raw.find("geometry.F")) {
    geometry->level_set = parse_expression(*e, "F");
    geometry->hole_present = true;
  }
  if (const RawEntry* e = raw.find("geometry.half_width")) {
    geometry->cross_section.half_width = parse_number(*e, "half_width");
    if (!(geometry->cross_section.half_width > 0))
      fail(e->line, "half_width must be positive");
  }
  cfg.geometry = geometry;

  if (const RawEntry* e = raw.find("geometry.n_cells")) {
    long long n = parse_integer(*e, "n_cells");
    if (n < 1) fail(e->line, "n_cells must be >= 1");
    cfg.n_cells_ladder.push_back(static_cast<int>(n));
  }
  if (const RawEntry* e = raw.find("geometry.epsilon_ladder")) {
    if (!cfg.n_cells_ladder.empty())
      fail(e->line, "give either n_cells or epsilon_ladder, not both");
    std::istringstream ls(e->value);
    std::string item;
    while (std::getline(ls, item, ',')) {
      std::string t = trim(item);
      if (t.rfind("1/", 0) != 0)
        fail(e->line, "epsilon ladder entries look like 1/9 (odd denominators)");
      long long den = 0;
      try {
        den = std::stoll(t.substr(2));
      } catch (...) {
        fail(e->line, "bad ladder entry '" + t + "'");
      }
      if (den < 3 || den % 2 == 0)
        fail(e->line, "epsilon must be 1/(2N+1) with N >= 1, got '" + t + "'");
      cfg.n_cells_ladder.push_back(static_cast<int>((den - 1) / 2));
    }
    if (cfg.n_cells_ladder.empty()) fail(e->line, "empty epsilon ladder");
  }

  auto require_expression = [&](const std::string& key,
                                const char* fallback) -> std::shared_ptr<const expr::Expr> {
    if (const RawEntry* e = raw.find("coefficients." + key))
      return parse_expression(*e, key);
    if (fallback) return std::make_shared<expr::Expr>(expr::parse(fallback));
    throw ConfigError("config: missing required key coefficients." + key);
  };
  cfg.coefficients.a11 = require_expression("a11", "1");
  cfg.coefficients.a12 = require_expression("a12", "0");
  cfg.coefficients.a22 = require_expression("a22", "1");
  cfg.coefficients.c = require_expression("c", nullptr);
  cfg.coefficients.ellipticity_floor = 0.01;
  if (const RawEntry* e = raw.find("coefficients.lambda0")) {
    cfg.coefficients.ellipticity_floor = parse_number(*e, "lambda0");
    if (!(cfg.coefficients.ellipticity_floor > 0)) fail(e->line, "lambda0 must be positive");
  }

  if (const RawEntry* e = raw.find("mode.beta")) {
    long long b = parse_integer(*e, "beta");
    if (b < 0 || b > 2) fail(e->line, "beta must be 0, 1 or 2");
    cfg.beta = static_cast<int>(b);
  }
  if (const RawEntry* e = raw.find("mode.flatness_override")) {
    long long k = parse_integer(*e, "flatness_override");
    if (k != 0 && (k < 2 || k % 2 != 0)) fail(e->line, "flatness override must be even >= 2");
    cfg.flatness_override = static_cast<int>(k);
  }

  if (const RawEntry* e = raw.find("solver.h")) {
    cfg.h = parse_number(*e, "h");
    if (!(cfg.h > 0) || cfg.h > 0.125 + 1e-12) fail(e->line, "h must be in (0, 1/8]");
  }
  if (const RawEntry* e = raw.find("solver.h_y")) {
    cfg.h_y = parse_number(*e, "h_y");
    if (!(cfg.h_y > 0) || cfg.h_y > 0.125 + 1e-12) fail(e->line, "h_y must be in (0, 1/8]");
  }
  if (const RawEntry* e = raw.find("solver.tol")) {
    cfg.tol = parse_number(*e, "tol");
    if (!(cfg.tol > 0)) fail(e->line, "tol must be positive");
  }
  if (const RawEntry* e = raw.find("solver.seed"))
    cfg.seed = static_cast<std::uint64_t>(parse_integer(*e, "seed"));
  if (const RawEntry* e = raw.find("solver.j_max")) {
    long long j = parse_integer(*e, "j_max");
    if (j < 1 || j > 12) fail(e->line, "j_max must be in [1, 12]");
    cfg.j_max = static_cast<int>(j);
  }
  if (const RawEntry* e = raw.find("solver.truncation_L")) {
    cfg.truncation_L = parse_number(*e, "truncation_L");
    if (cfg.truncation_L < 0) fail(e->line, "truncation_L must be >= 0");
  }
  if (const RawEntry* e = raw.find("solver.grid_n")) {
    long long n = parse_integer(*e, "grid_n");
    if (n < 0) fail(e->line, "grid_n must be >= 0");
    cfg.grid_n = static_cast<int>(n);
  }
  if (const RawEntry* e = raw.find("solver.cell_slices")) {
    long long n = parse_integer(*e, "cell_slices");
    if (n < 1) fail(e->line, "cell_slices must be >= 1");
    cfg.cell_slices = static_cast<int>(n);
  }
  if (const RawEntry* e = raw.find("solver.example1d_epsilons")) {
    cfg.example1d_epsilons.clear();
    std::istringstream ls(e->value);
    std::string item;
    while (std::getline(ls, item, ',')) {
      std::string t = trim(item);
      try {
        double eps = std::stod(t);
        if (!(eps > 0) || eps >= 1) throw std::invalid_argument("range");
        cfg.example1d_epsilons.push_back(eps);
      } catch (...) {
        fail(e->line, "bad epsilon '" + t + "' in example1d_epsilons");
      }
    }
    if (cfg.example1d_epsilons.empty()) fail(e->line, "empty example1d_epsilons");
  }

  if (const RawEntry* e = raw.find("output.directory")) {
    if (!e->quoted) fail(e->line, "output directory must be a quoted string");
    cfg.output_dir = e->value;
  }
  if (const RawEntry* e = raw.find("output.svg")) cfg.svg = parse_bool(*e, "svg");

  if (const RawEntry* e = raw.find("mvt.w"))
    cfg.mvt_w = parse_expression(*e, "w");
  else
    cfg.mvt_w = std::make_shared<expr::Expr>(expr::parse("cos(2*pi*y1)"));
  if (const RawEntry* e = raw.find("mvt.v"))
    cfg.mvt_v = parse_expression(*e, "v");
  else
    cfg.mvt_v = std::make_shared<expr::Expr>(expr::parse("cos(pi*x1)*(1 + 0.5*x1)"));

  for (const auto& [key, entry] : raw.entries)
    if (!entry.used) fail(entry.line, "internal: unconsumed key '" + key + "'");

  return cfg;
}

Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

}  // namespace rodspec::cli
