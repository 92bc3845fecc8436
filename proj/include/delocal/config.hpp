#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "delocal/geometry.hpp"
#include "delocal/grid.hpp"
#include "delocal/wavelet.hpp"

namespace delocal {

/// Raw key = value pairs. Keys are dotted ("grid.N").
using ConfigMap = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment. Duplicate or unknown
/// keys and malformed lines raise ConfigError naming the key (or line).
ConfigMap parse_config_text(const std::string& text);
ConfigMap read_config_file(const std::string& path);

/// Every accepted key with its default value, in schema order.
const std::vector<std::pair<std::string, std::string>>& config_schema();

/// DELOCAL_GRID_N style environment overrides for every schema key.
ConfigMap environment_overrides();
std::string environment_name(const std::string& key);

enum class ModelKind { island, wavelet };
enum class GeometryKind { annular, greedy, none };

struct RunConfig {
  ModelKind model = ModelKind::island;
  std::uint64_t seed = 1;
  std::string output = "out";
  bool plot = false;
  int threads = 1;

  GeometryKind geometry = GeometryKind::annular;
  double R = 1.0;
  int k_max = 3;
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 1.0;
  double extent = 32.0;
  double radius_constant = 1.0 / 3.0;
  double lattice_spacing = 1.0;
  double sharpness = 1.0;

  CompactDistribution distribution = CompactDistribution::uniform(-1.0, 1.0);
  GridSpec grid{2, 16.0, 128, Boundary::dirichlet};

  double e_lo = -10.0;
  double e_hi = 10.0;
  std::size_t solver_k_max = 50;
  double solver_tol = 1e-8;
  int solver_chunk = 24;

  double mourre_offset = 1.0;
  double mourre_width = 1.0;

  double t_lo = 10.0;
  double t_hi = 100.0;
  std::size_t time_points = 16;
  std::vector<double> centers{1.5};
  double width = 0.5;
  double envelope_tolerance = 1e-6;
  bool cook_bound = false;

  WaveletFamily family;
  TranslationPolicy translations;

  std::size_t density_samples = 1'000'000;
  std::size_t ids_bins = 40;

  /// Canonical "key = value" text over every schema key (defaults filled in),
  /// sorted by key; hashing it identifies the run.
  ConfigMap values;
};

/// Fills defaults, converts and validates. Throws ConfigError naming the field.
RunConfig make_run_config(const ConfigMap& raw);
std::string canonical_text(const ConfigMap& values);

}  // namespace delocal
