#include "delocal/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "delocal/errors.hpp"

namespace delocal {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool known_key(const std::string& key) {
  const auto& schema = config_schema();
  return std::any_of(schema.begin(), schema.end(), [&](const auto& kv) { return kv.first == key; });
}

double to_double(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(key, key + ": expected a finite number, got '" + s + "'");
  return v;
}

long long to_integer(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key, key + ": expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t to_unsigned(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key, key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

bool to_bool(const ConfigMap& m, const std::string& key) {
  const std::string& s = m.at(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(key, key + ": expected true or false, got '" + s + "'");
}

std::vector<double> to_list(const ConfigMap& m, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(m.at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    ConfigMap one{{key, trim(item)}};
    out.push_back(to_double(one, key));
  }
  if (out.empty()) throw ConfigError(key, key + ": expected a comma-separated list of numbers");
  return out;
}

void require(bool ok, const std::string& key, const std::string& rule) {
  if (!ok) throw ConfigError(key, key + ": " + rule);
}

}  // namespace

const std::vector<std::pair<std::string, std::string>>& config_schema() {
  static const std::vector<std::pair<std::string, std::string>> schema = {
      {"model", "island"},
      {"seed", "1"},
      {"output", "out"},
      {"plot", "false"},
      {"threads", "1"},
      {"geometry.kind", "annular"},
      {"geometry.R", "1"},
      {"geometry.k_max", "3"},
      {"geometry.alpha", "0"},
      {"geometry.beta", "1"},
      {"geometry.gamma", "1"},
      {"geometry.extent", "32"},
      {"geometry.radius_constant", "0.3333333333333333"},
      {"geometry.spacing", "1"},
      {"profile.sharpness", "1"},
      {"distribution.kind", "uniform"},
      {"distribution.a", "-1"},
      {"distribution.b", "1"},
      {"distribution.shape_p", "2"},
      {"distribution.shape_q", "2"},
      {"distribution.prob_upper", "0.5"},
      {"grid.d", "2"},
      {"grid.L", "16"},
      {"grid.N", "128"},
      {"grid.boundary", "dirichlet"},
      {"solver.e_lo", "-10"},
      {"solver.e_hi", "10"},
      {"solver.k_max", "50"},
      {"solver.tol", "1e-8"},
      {"solver.chunk", "24"},
      {"mourre.offset", "1"},
      {"mourre.width", "1"},
      {"evolve.t_lo", "10"},
      {"evolve.t_hi", "100"},
      {"evolve.points", "16"},
      {"evolve.centers", "1.5"},
      {"evolve.width", "0.5"},
      {"evolve.envelope_tol", "1e-6"},
      {"evolve.bound", "false"},
      {"wavelet.d", "2"},
      {"wavelet.K", "4"},
      {"wavelet.bounded_axis", "0"},
      {"wavelet.n1_lo", "-3"},
      {"wavelet.n1_hi", "-1"},
      {"wavelet.n2_bound", "64"},
      {"wavelet.translations", "auto"},
      {"wavelet.pad", "8"},
      {"density.samples", "1000000"},
      {"ids.bins", "40"},
  };
  return schema;
}

std::string environment_name(const std::string& key) {
  std::string out = "DELOCAL_";
  for (char ch : key) out += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return out;
}

ConfigMap environment_overrides() {
  ConfigMap out;
  for (const auto& [key, def] : config_schema()) {
    if (const char* v = std::getenv(environment_name(key).c_str())) out[key] = v;
  }
  return out;
}

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number), "line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!known_key(key)) throw ConfigError(key, "unknown key '" + key + "'");
    if (out.count(key)) throw ConfigError(key, "duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string canonical_text(const ConfigMap& values) {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

RunConfig make_run_config(const ConfigMap& raw) {
  ConfigMap m;
  for (const auto& [key, def] : config_schema()) m[key] = def;
  for (const auto& [key, value] : raw) {
    if (!known_key(key)) throw ConfigError(key, "unknown key '" + key + "'");
    m[key] = value;
  }

  RunConfig c;
  c.values = m;

  const std::string& model = m.at("model");
  require(model == "island" || model == "wavelet", "model", "must be island or wavelet");
  c.model = model == "island" ? ModelKind::island : ModelKind::wavelet;
  c.seed = to_unsigned(m, "seed");
  c.output = m.at("output");
  require(!c.output.empty(), "output", "must not be empty");
  c.plot = to_bool(m, "plot");
  c.threads = static_cast<int>(to_integer(m, "threads"));
  require(c.threads >= 1, "threads", "must be >= 1");

  const std::string& kind = m.at("geometry.kind");
  if (kind == "annular") c.geometry = GeometryKind::annular;
  else if (kind == "greedy") c.geometry = GeometryKind::greedy;
  else if (kind == "none") c.geometry = GeometryKind::none;
  else throw ConfigError("geometry.kind", "geometry.kind: must be annular, greedy or none");
  c.R = to_double(m, "geometry.R");
  require(c.R > 0, "geometry.R", "must be positive");
  const long long k_max = to_integer(m, "geometry.k_max");
  require(k_max >= 0 && k_max <= 30, "geometry.k_max", "must lie in 0..30");
  c.k_max = static_cast<int>(k_max);
  c.alpha = to_double(m, "geometry.alpha");
  require(c.alpha >= 0, "geometry.alpha", "must be >= 0");
  c.beta = to_double(m, "geometry.beta");
  require(c.beta >= 0, "geometry.beta", "must be >= 0");
  c.gamma = to_double(m, "geometry.gamma");
  require(c.gamma > 0 && c.gamma <= 1, "geometry.gamma", "must lie in (0, 1]");
  c.extent = to_double(m, "geometry.extent");
  require(c.extent > 0, "geometry.extent", "must be positive");
  c.radius_constant = to_double(m, "geometry.radius_constant");
  require(c.radius_constant > 0, "geometry.radius_constant", "must be positive");
  c.lattice_spacing = to_double(m, "geometry.spacing");
  require(c.lattice_spacing > 0, "geometry.spacing", "must be positive");
  c.sharpness = to_double(m, "profile.sharpness");
  require(c.sharpness > 0, "profile.sharpness", "must be positive");

  const double a = to_double(m, "distribution.a"), b = to_double(m, "distribution.b");
  require(a <= b, "distribution.b", "must be >= distribution.a");
  const std::string& dist = m.at("distribution.kind");
  if (dist == "uniform") {
    c.distribution = CompactDistribution::uniform(a, b);
  } else if (dist == "beta" || dist == "scaled-beta") {
    const double p = to_double(m, "distribution.shape_p"), q = to_double(m, "distribution.shape_q");
    require(p > 0, "distribution.shape_p", "must be positive");
    require(q > 0, "distribution.shape_q", "must be positive");
    c.distribution = CompactDistribution::scaled_beta(a, b, p, q);
  } else if (dist == "two-point") {
    const double p = to_double(m, "distribution.prob_upper");
    require(p >= 0 && p <= 1, "distribution.prob_upper", "must lie in [0, 1]");
    c.distribution = CompactDistribution::two_point(a, b, p);
  } else {
    throw ConfigError("distribution.kind", "distribution.kind: must be uniform, beta or two-point");
  }

  const long long d = to_integer(m, "grid.d");
  require(d >= 1 && d <= 3, "grid.d", "must lie in 1..3");
  c.grid.dim = static_cast<int>(d);
  c.grid.half_length = to_double(m, "grid.L");
  require(c.grid.half_length > 0, "grid.L", "must be positive");
  const long long N = to_integer(m, "grid.N");
  require(N >= 4 && N % 2 == 0 && N <= (1 << 22), "grid.N", "must be an even integer >= 4");
  c.grid.points = static_cast<int>(N);
  const std::string& boundary = m.at("grid.boundary");
  require(boundary == "dirichlet" || boundary == "periodic", "grid.boundary", "must be dirichlet or periodic");
  c.grid.boundary = boundary_from_string(boundary);
  if (c.model == ModelKind::island && c.geometry == GeometryKind::annular)
    require(c.grid.dim == 2, "grid.d", "must be 2 for the annular geometry");

  c.e_lo = to_double(m, "solver.e_lo");
  c.e_hi = to_double(m, "solver.e_hi");
  require(c.e_lo <= c.e_hi, "solver.e_hi", "must be >= solver.e_lo");
  const long long sk = to_integer(m, "solver.k_max");
  require(sk >= 1, "solver.k_max", "must be >= 1");
  c.solver_k_max = static_cast<std::size_t>(sk);
  c.solver_tol = to_double(m, "solver.tol");
  require(c.solver_tol > 0 && c.solver_tol < 1, "solver.tol", "must lie in (0, 1)");
  c.solver_chunk = static_cast<int>(to_integer(m, "solver.chunk"));
  require(c.solver_chunk >= 4, "solver.chunk", "must be >= 4");

  c.mourre_offset = to_double(m, "mourre.offset");
  require(c.mourre_offset > 0, "mourre.offset", "must be positive (E1 > E0)");
  c.mourre_width = to_double(m, "mourre.width");
  require(c.mourre_width > 0, "mourre.width", "must be positive");

  c.t_lo = to_double(m, "evolve.t_lo");
  c.t_hi = to_double(m, "evolve.t_hi");
  require(c.t_lo > 0, "evolve.t_lo", "must be positive");
  require(c.t_hi > c.t_lo, "evolve.t_hi", "must exceed evolve.t_lo");
  const long long pts = to_integer(m, "evolve.points");
  require(pts >= 2, "evolve.points", "must be >= 2");
  c.time_points = static_cast<std::size_t>(pts);
  c.centers = to_list(m, "evolve.centers");
  c.width = to_double(m, "evolve.width");
  require(c.width > 0, "evolve.width", "must be positive");
  c.envelope_tolerance = to_double(m, "evolve.envelope_tol");
  require(c.envelope_tolerance > 0 && c.envelope_tolerance < 1, "evolve.envelope_tol", "must lie in (0, 1)");
  c.cook_bound = to_bool(m, "evolve.bound");

  c.family.dim = static_cast<int>(to_integer(m, "wavelet.d"));
  require(c.family.dim >= 1 && c.family.dim <= 3, "wavelet.d", "must lie in 1..3");
  c.family.K = to_integer(m, "wavelet.K");
  require(c.family.K >= 0, "wavelet.K", "must be >= 0");
  c.family.bounded_axis = static_cast<int>(to_integer(m, "wavelet.bounded_axis"));
  require(c.family.bounded_axis >= 0 && c.family.bounded_axis < c.family.dim, "wavelet.bounded_axis",
          "must lie in 0..d-1");
  c.family.n1_lo = static_cast<int>(to_integer(m, "wavelet.n1_lo"));
  c.family.n1_hi = static_cast<int>(to_integer(m, "wavelet.n1_hi"));
  require(c.family.n1_lo <= c.family.n1_hi, "wavelet.n1_hi", "must be >= wavelet.n1_lo");
  c.family.n2_bound = to_integer(m, "wavelet.n2_bound");
  require(c.family.n2_bound >= 0, "wavelet.n2_bound", "must be >= 0");
  const std::string& tr = m.at("wavelet.translations");
  if (tr == "auto") {
    c.translations.fixed.reset();
  } else {
    const long long fixed = to_integer(m, "wavelet.translations");
    require(fixed >= 1, "wavelet.translations", "must be auto or a positive integer");
    c.translations.fixed = fixed;
  }
  c.translations.pad = to_integer(m, "wavelet.pad");
  require(c.translations.pad >= 0, "wavelet.pad", "must be >= 0");
  if (c.model == ModelKind::wavelet)
    require(c.family.dim == c.grid.dim, "wavelet.d", "must equal grid.d");

  const long long samples = to_integer(m, "density.samples");
  require(samples >= 1, "density.samples", "must be >= 1");
  c.density_samples = static_cast<std::size_t>(samples);
  const long long bins = to_integer(m, "ids.bins");
  require(bins >= 1, "ids.bins", "must be >= 1");
  c.ids_bins = static_cast<std::size_t>(bins);
  return c;
}

}  // namespace delocal
