#include "delocal/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <Eigen/Core>

#include "delocal/errors.hpp"
#include "delocal/evolution.hpp"
#include "delocal/io.hpp"
#include "delocal/potential.hpp"
#include "delocal/spectral.hpp"
#include "delocal/svg.hpp"
#include "delocal/wavelet.hpp"

namespace delocal {

namespace {

namespace fs = std::filesystem;

// Last pipeline stage entered; reported in error.json.
std::string current_stage = "config";

void stage(const std::string& name) { current_stage = name; }

struct IslandModel {
  IslandSet islands;
  std::optional<IslandPotential> potential;
  E0Result e0;
  double coupling_bound = 0.0;
};

IslandModel build_island_model(const RunConfig& cfg) {
  stage("geometry");
  IslandModel m;
  m.coupling_bound = cfg.distribution.sup_norm();
  switch (cfg.geometry) {
    case GeometryKind::none:
      m.islands.dim = cfg.grid.dim;
      return m;
    case GeometryKind::annular:
      m.islands = build_annular_islands(cfg.R, cfg.k_max);
      break;
    case GeometryKind::greedy: {
      GreedyPackingSpec spec;
      spec.dim = cfg.grid.dim;
      spec.beta = cfg.beta;
      spec.gamma = cfg.gamma;
      spec.radius_constant = cfg.radius_constant;
      spec.extent = cfg.extent;
      spec.lattice_spacing = cfg.lattice_spacing;
      m.islands = build_greedy_islands(spec);
      break;
    }
  }
  if (m.islands.empty()) return m;
  stage("potential");
  const BumpProfile profile(cfg.sharpness);
  m.potential.emplace(m.islands, sample_disorder(cfg.distribution, m.islands.size(), cfg.seed), cfg.alpha, profile);
  stage("E0");
  m.e0 = compute_E0(m.islands, cfg.alpha, m.coupling_bound, profile);
  return m;
}

Eigen::VectorXd potential_values(const IslandModel& m, const GridSpec& grid) {
  return m.potential ? potential_on_grid(grid, *m.potential) : Eigen::VectorXd::Zero(grid.size());
}

Eigen::VectorXd offset_values(const IslandModel& m, const GridSpec& grid) {
  return m.potential ? commutator_offset_on_grid(grid, *m.potential) : Eigen::VectorXd::Zero(grid.size());
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

nlohmann::json model_json(const RunConfig& cfg, const IslandModel& m, const Eigen::VectorXd& potential) {
  nlohmann::json j;
  j["geometry"] = cfg.values.at("geometry.kind");
  j["islands"] = m.islands.size();
  j["alpha"] = cfg.alpha;
  j["beta"] = m.islands.beta;
  j["gamma"] = m.islands.gamma;
  j["coupling_bound"] = m.coupling_bound;
  j["distribution"] = cfg.values.at("distribution.kind");
  j["profile_sharpness"] = cfg.sharpness;
  j["E0"] = m.e0.bounded ? nlohmann::json(m.e0.value) : nlohmann::json(nullptr);
  j["E0_probe_points_per_axis"] = m.e0.grid_points_per_axis;
  j["E0_probe_spacing"] = m.e0.grid_spacing;
  j["potential_hash"] = hex64(potential_hash(potential));
  j["stencil_order"] = 2;
  return j;
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.relative_tolerance = cfg.solver_tol;
  o.chunk = cfg.solver_chunk;
  o.seed = cfg.seed;
  return o;
}

CommandResult cmd_islands(const RunConfig& cfg) {
  IslandModel m;
  stage("geometry");
  if (cfg.geometry == GeometryKind::annular) {
    m.islands = build_annular_islands(cfg.R, cfg.k_max);
  } else if (cfg.geometry == GeometryKind::greedy) {
    m = build_island_model(cfg);
  } else {
    throw ConfigError("geometry.kind", "islands: geometry.kind must be annular or greedy");
  }
  CommandResult r;
  r.outputs.push_back(write_output(cfg.output, "islands.json", json_text(to_json(m.islands))));

  stage("validate");
  const auto violations = validate_island_set(m.islands);
  std::string lines;
  for (const auto& v : violations) lines += to_json(v).dump() + "\n";
  r.outputs.push_back(write_output(cfg.output, "violations.jsonl", lines));

  stage("density");
  std::string csv = "k,fraction,std_error,samples,exact\n";
  if (cfg.geometry == GeometryKind::annular) {
    for (int k = 1; k <= cfg.k_max; ++k) {
      const auto d = island_density(m.islands, k, cfg.density_samples, cfg.seed);
      csv += std::to_string(k) + "," + format_number(d.fraction) + "," + format_number(d.std_error) + "," +
             std::to_string(d.samples) + "," + format_number(std::atan(1.0)) + "\n";
    }
  }
  r.outputs.push_back(write_output(cfg.output, "density.csv", csv));

  if (cfg.plot && !m.islands.empty() && m.islands.dim == 2) {
    std::vector<double> x, y;
    for (const auto& isl : m.islands.islands) x.push_back(isl.center[0]), y.push_back(isl.center[1]);
    r.outputs.push_back(
        write_output(cfg.output, "islands.svg", svg_plot(x, y, labelled("island centres", "x1", "x2"))));
  }
  r.summary = {{"islands", m.islands.size()}, {"violations", violations.size()}};
  if (!violations.empty())
    throw PreconditionError("islands: " + std::to_string(violations.size()) + " invariant violation(s), see violations.jsonl");
  return r;
}

SpectralReport solve_report(const RunConfig& cfg, const IslandModel& m, const DiscreteHamiltonian& H,
                            const Eigen::VectorXd& offset, double lo, double hi, std::vector<EigenPair>* keep) {
  SpectralReport report;
  report.grid = cfg.grid;
  report.E0 = m.e0.value;
  report.window_lo = lo;
  report.window_hi = hi;
  report.requested = cfg.solver_k_max;
  stage("solve_window");
  auto pairs = solve_window(H, lo, hi, cfg.solver_k_max, solver_options(cfg), &report.provenance);
  stage("diagnostics");
  for (const auto& p : pairs) report.states.push_back(diagnose_state(p, cfg.grid, offset));
  if (keep) *keep = std::move(pairs);
  return report;
}

CommandResult cmd_spectrum(const RunConfig& cfg) {
  const IslandModel m = build_island_model(cfg);
  stage("assemble");
  const Eigen::VectorXd V = potential_values(m, cfg.grid);
  const auto H = assemble_hamiltonian(cfg.grid, V);
  const Eigen::VectorXd offset = offset_values(m, cfg.grid);
  const SpectralReport report = solve_report(cfg, m, H, offset, cfg.e_lo, cfg.e_hi, nullptr);

  // States that look localised: little boundary weight and a small virial
  // residual. Their largest energy above E0 is the empirical margin.
  std::optional<double> margin;
  std::size_t localised = 0;
  for (const auto& s : report.states) {
    if (s.boundary_weight < 1e-6 && s.virial_residual < 0.05 * std::max(std::abs(s.eigenvalue), 1.0)) {
      ++localised;
      margin = std::max(margin.value_or(-std::numeric_limits<double>::infinity()), s.eigenvalue - m.e0.value);
    }
  }
  nlohmann::json j = to_json(report);
  j["model"] = model_json(cfg, m, V);
  j["localised_states"] = localised;
  j["localised_max_energy_above_E0"] = margin ? nlohmann::json(*margin) : nlohmann::json(nullptr);

  CommandResult r;
  r.outputs.push_back(write_output(cfg.output, "report.json", json_text(j)));
  r.outputs.push_back(write_output(cfg.output, "states.csv", states_csv(report)));
  if (cfg.plot) {
    std::vector<double> e, q;
    for (const auto& s : report.states) e.push_back(s.eigenvalue), q.push_back(s.ipr);
    PlotSpec spec = labelled("IPR against energy", "energy", "IPR");
    spec.log_y = true;
    spec.vertical = m.e0.value;
    spec.vertical_label = "E0";
    r.outputs.push_back(write_output(cfg.output, "ipr.svg", svg_plot(e, q, spec)));
  }
  r.summary = {{"states", report.states.size()}, {"E0", m.e0.value}};
  return r;
}

CommandResult cmd_mourre(const RunConfig& cfg) {
  const IslandModel m = build_island_model(cfg);
  stage("assemble");
  const auto H = assemble_hamiltonian(cfg.grid, potential_values(m, cfg.grid));
  const Eigen::VectorXd offset = offset_values(m, cfg.grid);
  const double E1 = m.e0.value + cfg.mourre_offset;
  std::vector<EigenPair> pairs;
  SpectralReport report = solve_report(cfg, m, H, offset, E1, E1 + cfg.mourre_width, &pairs);
  report.E1 = E1;
  if (pairs.size() >= cfg.solver_k_max)
    throw PreconditionError("mourre: window holds at least solver.k_max = " + std::to_string(cfg.solver_k_max) +
                            " states; raise solver.k_max so the whole window is resolved");
  stage("mourre_gap");
  const double gap = mourre_gap(pairs, offset);
  nlohmann::json j;
  j["schema_version"] = 1;
  j["E0"] = m.e0.value;
  j["E1"] = E1;
  j["window"] = {E1, E1 + cfg.mourre_width};
  j["states"] = pairs.size();
  j["min_eigenvalue"] = gap;
  j["lower_bound"] = 2 * (E1 - m.e0.value);
  j["margin"] = gap - 2 * (E1 - m.e0.value);
  j["model"] = model_json(cfg, m, H.potential());
  CommandResult r;
  r.outputs.push_back(write_output(cfg.output, "mourre.json", json_text(j)));
  r.outputs.push_back(write_output(cfg.output, "states.csv", states_csv(report)));
  r.summary = {{"min_eigenvalue", gap}, {"lower_bound", 2 * (E1 - m.e0.value)}};
  return r;
}

CommandResult cmd_ids(const RunConfig& cfg) {
  const IslandModel m = build_island_model(cfg);
  stage("assemble");
  const auto H = assemble_hamiltonian(cfg.grid, potential_values(m, cfg.grid));
  stage("solve_window");
  const auto pairs = solve_window(H, cfg.e_lo, cfg.e_hi, cfg.solver_k_max, solver_options(cfg));
  if (pairs.empty()) throw PreconditionError("ids: no eigenvalues in [" + format_number(cfg.e_lo) + ", " + format_number(cfg.e_hi) + ")");
  std::vector<double> eigs;
  for (const auto& p : pairs) eigs.push_back(p.eigenvalue);
  stage("ids_histogram");
  const auto table = ids_histogram(eigs, cfg.ids_bins, cfg.e_lo, cfg.e_hi);
  std::string csv = "bin_lo,bin_hi,count,fraction,density\n";
  for (std::size_t b = 0; b < table.counts.size(); ++b)
    csv += format_number(table.edges[b]) + "," + format_number(table.edges[b + 1]) + "," + std::to_string(table.counts[b]) +
           "," + format_number(table.fraction[b]) + "," + format_number(table.density[b]) + "\n";
  nlohmann::json j;
  j["schema_version"] = 1;
  j["eigenvalues"] = eigs.size();
  j["window"] = {cfg.e_lo, cfg.e_hi};
  j["truncated"] = eigs.size() >= cfg.solver_k_max;
  j["E0"] = m.e0.value;
  j["spacing_ratio"] = eigs.size() >= 10 ? nlohmann::json(spacing_ratio_stats(eigs)) : nlohmann::json(nullptr);
  j["negative_eigenvalues"] = std::count_if(eigs.begin(), eigs.end(), [](double e) { return e < 0; });
  CommandResult r;
  r.outputs.push_back(write_output(cfg.output, "ids.csv", csv));
  r.outputs.push_back(write_output(cfg.output, "ids.json", json_text(j)));
  r.summary = {{"eigenvalues", eigs.size()}};
  return r;
}

GridSpec periodic(GridSpec g) {
  g.boundary = Boundary::periodic;
  return g;
}

// A single entry is broadcast to every axis.
Eigen::VectorXd centers_vector(const RunConfig& cfg, int dim) {
  if (cfg.centers.size() == 1) return Eigen::VectorXd::Constant(dim, cfg.centers[0]);
  if (static_cast<int>(cfg.centers.size()) != dim)
    throw ConfigError("evolve.centers", "evolve.centers: needs " + std::to_string(dim) + " entries");
  return Eigen::Map<const Eigen::VectorXd>(cfg.centers.data(), dim);
}

CommandResult cmd_cook(const RunConfig& cfg) {
  if (cfg.time_points < 8)
    throw PreconditionError("cook: the decay fit needs at least 8 time points, evolve.points = " +
                            std::to_string(cfg.time_points));
  if (cfg.grid.boundary != Boundary::periodic)
    throw ConfigError("grid.boundary", "grid.boundary: cook needs a periodic grid");
  stage("test_function");
  const auto f = make_test_function(cfg.grid, centers_vector(cfg, cfg.grid.dim), cfg.width, 0.05, cfg.envelope_tolerance);
  const auto ts = geometric_times(cfg.t_lo, cfg.t_hi, cfg.time_points);
  stage("box");
  require_inside_box(f, cfg.t_hi);

  std::vector<double> values(ts.size());
  std::vector<CookSum> bounds;
  CommandResult r;
  if (cfg.model == ModelKind::wavelet) {
    const auto omega = WaveletCouplings::random(cfg.distribution, cfg.seed);
    stage("cook_integrand");
    for (std::size_t i = 0; i < ts.size(); ++i) values[i] = cook_integrand(cfg.family, omega, f, ts[i], cfg.translations);
    if (cfg.cook_bound) {
      stage("cook_sum");
      for (double t : ts) bounds.push_back(cook_sum(cfg.family, omega, f, t, cfg.translations));
    }
  } else {
    const IslandModel m = build_island_model(cfg);
    const Eigen::VectorXd V = potential_values(m, cfg.grid);
    stage("cook_integrand");
    for (std::size_t i = 0; i < ts.size(); ++i) values[i] = cook_integrand(V, f, ts[i]);
  }

  const auto cumulative = cumulative_trapezoid(ts, values);
  std::string csv = "t,integrand,cumulative\n";
  for (std::size_t i = 0; i < ts.size(); ++i)
    csv += format_number(ts[i]) + "," + format_number(values[i]) + "," + format_number(cumulative[i]) + "\n";
  r.outputs.push_back(write_output(cfg.output, "cook.csv", csv));

  stage("decay_slope");
  nlohmann::json j;
  j["schema_version"] = 1;
  const bool positive = std::all_of(values.begin(), values.end(), [](double v) { return v > 0; });
  if (positive) {
    const auto fit = decay_slope(ts, values);
    j["fit"] = to_json(fit);
    j["slope"] = fit.slope;
    j["confidence_half_width"] = fit.half_width;
  } else {
    j["fit"] = nullptr;
    j["slope"] = nullptr;
    j["confidence_half_width"] = nullptr;
    j["reason"] = "integrand is not positive at every time";
  }
  // Increments of the cumulative integral over [T, 2T], by linear interpolation.
  auto cumulative_at = [&](double t) {
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin()) return cumulative.front();
    if (it == ts.end()) return cumulative.back();
    const std::size_t k = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1 - w) * cumulative[k - 1] + w * cumulative[k];
  };
  nlohmann::json increments = nlohmann::json::array();
  bool shrinking = true;
  double previous = std::numeric_limits<double>::infinity();
  for (double T = cfg.t_lo; 2 * T <= cfg.t_hi * (1 + 1e-12); T *= 2) {
    const double inc = cumulative_at(std::min(2 * T, cfg.t_hi)) - cumulative_at(T);
    increments.push_back({{"T", T}, {"increment", inc}});
    shrinking = shrinking && inc < previous;
    previous = inc;
  }
  j["increments"] = increments;
  j["increments_shrinking"] = shrinking;
  j["box"] = {{"L", cfg.grid.half_length},
              {"N", cfg.grid.points},
              {"required_L_at_t_hi", f.required_half_length(cfg.t_hi)},
              {"envelope_radius", f.envelope_radius()},
              {"max_frequency", f.max_frequency()}};
  j["model"] = cfg.values.at("model");
  r.outputs.push_back(write_output(cfg.output, "slope.json", json_text(j)));

  if (!bounds.empty()) {
    std::string b = "t,partial,tail,total,flagged,terms\n";
    for (std::size_t i = 0; i < ts.size(); ++i)
      b += format_number(ts[i]) + "," + format_number(bounds[i].partial) + "," + format_number(bounds[i].tail) + "," +
           format_number(bounds[i].total) + "," + (bounds[i].flagged ? "1" : "0") + "," + std::to_string(bounds[i].terms) + "\n";
    r.outputs.push_back(write_output(cfg.output, "cook_bound.csv", b));
  }
  if (cfg.plot) {
    PlotSpec spec = labelled("Cook integrand", "t", "integrand");
    spec.log_x = spec.log_y = true;
    spec.connect = true;
    r.outputs.push_back(write_output(cfg.output, "cook.svg", svg_plot(ts, values, spec)));
  }
  r.summary = {{"slope", j["slope"]}};
  return r;
}

std::string corner_string(const std::vector<int>& c) {
  std::string s;
  for (int v : c) s += std::to_string(v);
  return s;
}

CommandResult cmd_wavelet_check(const RunConfig& cfg) {
  stage("family");
  cfg.family.validate();
  const auto indices = cfg.family.indices();
  constexpr std::size_t kLimit = 1500;
  if (indices.size() > kLimit)
    throw PreconditionError("wavelet-check: family has " + std::to_string(indices.size()) +
                            " indices; the Gram check is limited to " + std::to_string(kLimit));
  stage("gram");
  const Eigen::MatrixXcd G = gram_matrix(indices);
  const Eigen::Index n = G.rows();

  std::string idx = "row,c,n1,n2\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = indices[static_cast<std::size_t>(i)];
    std::string n2;
    for (std::size_t k = 0; k < w.n2.size(); ++k) n2 += (k ? " " : "") + std::to_string(w.n2[k]);
    idx += std::to_string(i) + "," + corner_string(w.c) + "," + std::to_string(w.n1) + "," + n2 + "\n";
  }
  std::string csv = "row,col,re,im\n";
  double max_dev = 0.0, diag_dev = 0.0, off = 0.0, cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::complex<double> g = G(i, j);
      csv += std::to_string(i) + "," + std::to_string(j) + "," + format_number(g.real()) + "," + format_number(g.imag()) + "\n";
      const double dev = std::abs(g - (i == j ? 1.0 : 0.0));
      max_dev = std::max(max_dev, dev);
      if (i == j) diag_dev = std::max(diag_dev, dev);
      else off = std::max(off, dev);
      if (indices[static_cast<std::size_t>(i)].c != indices[static_cast<std::size_t>(j)].c) cross = std::max(cross, dev);
    }
  std::map<std::string, std::size_t> blocks;
  for (const auto& w : indices) ++blocks[corner_string(w.c)];

  CommandResult r;
  r.outputs.push_back(write_output(cfg.output, "indices.csv", idx));
  r.outputs.push_back(write_output(cfg.output, "gram.csv", csv));

  nlohmann::json j;
  j["schema_version"] = 1;
  j["family"] = to_json(cfg.family);
  j["indices"] = indices.size();
  j["max_deviation"] = max_dev;
  j["max_diagonal_deviation"] = diag_dev;
  j["max_offdiagonal"] = off;
  j["max_cross_block"] = cross;
  j["blocks"] = blocks;

  // Selection-rule audit against the packet described by evolve.centers/width.
  stage("selection_rule");
  GridSpec grid = periodic(cfg.grid);
  grid.dim = cfg.family.dim;  // the grid only hosts the packet here
  const auto f = make_test_function(grid, centers_vector(cfg, cfg.family.dim), cfg.width, 0.05, cfg.envelope_tolerance);
  OverlapEngine engine(f, 0.0, 2);
  std::string audit = "c,n1,admissible,max_abs_overlap\n";
  bool holds = true;
  nlohmann::json windows = nlohmann::json::object();
  for (const auto& c : corner_set(cfg.family.dim)) {
    const auto adm = admissible_scales(c, f);
    windows[corner_string(c)] = adm;
    int lo = cfg.family.n1_lo, hi = cfg.family.n1_hi;
    if (!adm.empty()) lo = std::min(lo, adm.front()), hi = std::max(hi, adm.back());
    for (int n1 = lo - 2; n1 <= hi + 2; ++n1) {
      const bool admissible = std::find(adm.begin(), adm.end(), n1) != adm.end();
      double largest = 0.0;
      std::vector<long long> m(static_cast<std::size_t>(cfg.family.dim), -2);
      while (true) {
        largest = std::max(largest, std::abs(engine.overlap({c, n1, m})));
        std::size_t k = 0;
        while (k < m.size() && ++m[k] > 2) m[k++] = -2;
        if (k == m.size()) break;
      }
      if (!admissible && largest != 0.0) holds = false;
      audit += corner_string(c) + "," + std::to_string(n1) + "," + (admissible ? "1" : "0") + "," + format_number(largest) + "\n";
    }
  }
  r.outputs.push_back(write_output(cfg.output, "support_audit.csv", audit));
  j["selection_rule_holds"] = holds;
  j["admissible_scales"] = windows;
  r.outputs.push_back(write_output(cfg.output, "wavelet_check.json", json_text(j)));
  r.summary = {{"indices", indices.size()}, {"max_deviation", max_dev}, {"selection_rule_holds", holds}};
  return r;
}

std::string config_hash(const ConfigMap& values) {
  ConfigMap hashed = values;
  hashed.erase("output");
  hashed.erase("threads");
  return sha256_hex(canonical_text(hashed));
}

void write_error(const std::string& dir, const std::string& command, int code, const std::exception& e) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["command"] = command;
  j["exit_code"] = code;
  j["stage"] = current_stage;
  j["message"] = e.what();
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field();
  std::string kind = "error";
  if (dynamic_cast<const ConfigError*>(&e)) kind = "config";
  else if (dynamic_cast<const DomainError*>(&e)) kind = "domain";
  else if (dynamic_cast<const RangeError*>(&e)) kind = "range";
  else if (dynamic_cast<const ResourceError*>(&e)) kind = "resource";
  else if (dynamic_cast<const InvalidIndexError*>(&e)) kind = "invalid_index";
  else if (dynamic_cast<const PreconditionError*>(&e)) kind = "precondition";
  else if (dynamic_cast<const SolverError*>(&e)) kind = "solver";
  j["kind"] = kind;
  try {
    write_output(dir, "error.json", json_text(j));
  } catch (const std::exception&) {
    // The output directory itself may be the problem; stderr still has it.
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"islands", "spectrum", "mourre", "cook", "wavelet-check", "ids"};
  return names;
}

CommandResult run_command(const std::string& name, const RunConfig& cfg) {
  stage("start");
  Eigen::setNbThreads(cfg.threads);
  if (name == "islands") return cmd_islands(cfg);
  if (name == "spectrum") return cmd_spectrum(cfg);
  if (name == "mourre") return cmd_mourre(cfg);
  if (name == "cook") return cmd_cook(cfg);
  if (name == "wavelet-check") return cmd_wavelet_check(cfg);
  if (name == "ids") return cmd_ids(cfg);
  throw ConfigError("command", "unknown command '" + name + "'");
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const PreconditionError*>(&e)) return 3;
  if (dynamic_cast<const SolverError*>(&e)) return 4;
  return 1;
}

int report_failure(const std::string& dir, const std::string& command, const std::exception& e,
                   std::ostream& log) {
  const int code = exit_code_for(e);
  write_error(dir, command, code, e);
  log << command << ": error (" << current_stage << "): " << e.what() << "\n";
  return code;
}

int execute(const std::string& name, const ConfigMap& raw, std::ostream& log) {
  std::string out = raw.count("output") ? raw.at("output") : "out";
  stage("config");
  try {
    const RunConfig cfg = make_run_config(raw);
    out = cfg.output;
    fs::remove(fs::path(out) / "error.json");
    const auto start = std::chrono::steady_clock::now();
    CommandResult result = run_command(name, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json m;
    m["schema_version"] = 1;
    m["tool"] = "delocal";
    m["command"] = name;
    m["config"] = cfg.values;
    m["config_sha256"] = config_hash(cfg.values);
    m["seed"] = cfg.seed;
    m["versions"] = {{"delocal", kToolVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    m["wall_clock_seconds"] = seconds;
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& o : result.outputs) outputs.push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}});
    m["outputs"] = outputs;
    m["summary"] = result.summary;
    write_output(cfg.output, "manifest.json", json_text(m));
    log << name << ": wrote " << result.outputs.size() << " file(s) to " << cfg.output << "\n";
    return 0;
  } catch (const std::exception& e) {
    return report_failure(out, name, e, log);
  }
}

ReplayOutcome replay_manifest(const std::string& manifest_path, std::optional<std::string> output) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("manifest", "cannot read manifest '" + manifest_path + "'");
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest", std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!m.contains("command") || !m.contains("config") || !m.contains("outputs"))
    throw ConfigError("manifest", "manifest lacks command, config or outputs");
  ConfigMap raw = m.at("config").get<ConfigMap>();
  const std::string target = output.value_or((fs::path(manifest_path).parent_path() / "replay").string());
  raw["output"] = target;
  const RunConfig cfg = make_run_config(raw);
  const CommandResult result = run_command(m.at("command").get<std::string>(), cfg);

  std::map<std::string, std::string> fresh;
  for (const auto& o : result.outputs) fresh[o.file] = o.sha256;
  ReplayOutcome outcome;
  outcome.output = target;
  for (const auto& o : m.at("outputs")) {
    const std::string file = o.at("file");
    const auto it = fresh.find(file);
    if (it == fresh.end() || it->second != o.at("sha256").get<std::string>()) outcome.mismatched.push_back(file);
    if (it != fresh.end()) fresh.erase(it);
  }
  for (const auto& [file, sha] : fresh) outcome.mismatched.push_back(file);
  outcome.identical = outcome.mismatched.empty();
  return outcome;
}

int execute_replay(const std::string& manifest_path, std::optional<std::string> output, std::ostream& log) {
  stage("replay");
  const std::string fallback = output.value_or((fs::path(manifest_path).parent_path() / "replay").string());
  try {
    const ReplayOutcome r = replay_manifest(manifest_path, output);
    nlohmann::json j;
    j["schema_version"] = 1;
    j["manifest"] = manifest_path;
    j["identical"] = r.identical;
    j["mismatched"] = r.mismatched;
    write_output(r.output, "replay.json", json_text(j));
    log << "replay: " << (r.identical ? "byte-identical" : "MISMATCH") << " (" << r.output << ")\n";
    return r.identical ? 0 : 5;
  } catch (const std::exception& e) {
    return report_failure(fallback, "replay", e, log);
  }
}

}  // namespace delocal
