#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "delocal/commands.hpp"
#include "delocal/config.hpp"
#include "delocal/errors.hpp"

namespace {

// Precedence: config file < DELOCAL_* environment < --set < dedicated flags.
delocal::ConfigMap gather(const std::string& config_path, const std::vector<std::string>& sets,
                          const std::optional<std::string>& seed, const std::optional<std::string>& out,
                          const std::optional<std::string>& threads, bool plot) {
  delocal::ConfigMap raw;
  if (!config_path.empty()) raw = delocal::read_config_file(config_path);
  for (const auto& [k, v] : delocal::environment_overrides()) raw[k] = v;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw delocal::ConfigError(s, "--set expects key=value, got '" + s + "'");
    const auto extra = delocal::parse_config_text(s);
    for (const auto& [k, v] : extra) raw[k] = v;
  }
  if (seed) raw["seed"] = *seed;
  if (out) raw["output"] = *out;
  if (threads) raw["threads"] = *threads;
  if (plot) raw["plot"] = "true";
  return raw;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Schrodinger operator diagnostics: island and wavelet models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(delocal::kToolVersion));

  struct Options {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::string> seed, out, threads;
    bool plot = false;
  };
  std::vector<std::pair<std::string, Options>> commands;
  commands.reserve(delocal::command_names().size());
  const std::map<std::string, std::string> help = {
      {"islands", "build and validate an island set; islands.json, violations.jsonl, density.csv"},
      {"spectrum", "windowed eigenpairs with localisation diagnostics; report.json, states.csv"},
      {"mourre", "commutator matrix on the window (E0 + offset, E0 + offset + width); mourre.json"},
      {"cook", "Cook integrand over a geometric time grid; cook.csv, slope.json"},
      {"wavelet-check", "Gram matrix and selection-rule audit; gram.csv, wavelet_check.json"},
      {"ids", "integrated density of states and spacing ratio; ids.csv, ids.json"},
  };
  for (const auto& name : delocal::command_names()) {
    commands.emplace_back(name, Options{});
    auto& o = commands.back().second;
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", o.sets, "override one key (key=value); repeatable");
    sub->add_option("--seed", o.seed, "64-bit seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads");
    sub->add_flag("--plot", o.plot, "also write SVG plots");
  }
  std::string manifest;
  std::optional<std::string> replay_out;
  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare payload checksums");
  replay->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
  replay->add_option("--out", replay_out, "output directory (default: <run>/replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (replay->parsed()) return delocal::execute_replay(manifest, replay_out, std::cerr);
  for (const auto& [name, o] : commands) {
    if (!app.got_subcommand(name)) continue;
    delocal::ConfigMap raw;
    try {
      raw = gather(o.config, o.sets, o.seed, o.out, o.threads, o.plot);
    } catch (const std::exception& e) {
      return delocal::report_failure(o.out.value_or("out"), name, e, std::cerr);
    }
    return delocal::execute(name, raw, std::cerr);
  }
  return 2;
}
