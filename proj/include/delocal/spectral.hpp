#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "delocal/grid.hpp"

namespace delocal {

struct EigenPair {
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;  // unit l2 norm on the grid
  double residual = 0.0;        // ||H f - lambda f||
};

struct SolverOptions {
  // Sub-windows are bisected (by inertia count) until they hold at most this
  // many eigenvalues; each is then resolved by one shift-invert Lanczos run.
  int chunk = 24;
  // Acceptance threshold for ||Hf - lambda f|| relative to H.scale().
  double relative_tolerance = 1e-8;
  int max_restarts = 8;
  std::uint64_t seed = 0x5EED;
};

struct SolverProvenance {
  std::string method = "shift-invert Lanczos with inertia-count bisection";
  std::size_t factorizations = 0;
  std::size_t shift_retries = 0;
  std::size_t lanczos_steps = 0;
  double max_residual = 0.0;
};

/// Number of eigenvalues of H strictly below sigma (Sylvester inertia of an
/// LDL^T factorization of H - sigma).
std::size_t count_below(const DiscreteHamiltonian& H, double sigma);

/// Lowest k_max eigenpairs with E_lo <= lambda < E_hi, ascending.
std::vector<EigenPair> solve_window(const DiscreteHamiltonian& H, double E_lo, double E_hi,
                                    std::size_t k_max, const SolverOptions& options = {},
                                    SolverProvenance* provenance = nullptr);

/// sum |f|^4 / (sum |f|^2)^2: 1 for a delta, 1/#cells for a uniform vector.
double ipr(const Eigen::Ref<const Eigen::VectorXd>& f);

struct VirialResult {
  double value = 0.0;           // |2 lambda + <f, B f>|
  double boundary_weight = 0.0;
  bool caveat = false;          // boundary weight above 1e-6
};

/// Finite-volume surrogate of <f, i[H, A] f> = 0 for an eigenpair.
VirialResult virial_residual(const EigenPair& pair, const GridSpec& grid,
                             const Eigen::VectorXd& offset);

/// Smallest eigenvalue of M_jk = <f_j, (2H + B) f_k> on the window eigenbasis.
double mourre_gap(const std::vector<EigenPair>& pairs, const Eigen::VectorXd& offset);

struct DecayFit {
  double rate = 0.0;      // > 0 for exponential localisation
  double goodness = 0.0;  // R^2 of the log-linear fit
  std::size_t shells = 0;
};

/// Least-squares fit of log(max |f| per distance shell) against distance from
/// `center`. Shells have width `shell_width` (default: two grid spacings);
/// shells below 1e-14 of the peak are ignored.
DecayFit decay_fit(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                   const Eigen::VectorXd& center, std::optional<double> shell_width = {});

struct DensityTable {
  std::vector<double> edges;       // bins + 1 edges
  std::vector<std::size_t> counts;
  std::vector<double> fraction;    // count / total eigenvalues
  std::vector<double> density;     // fraction / bin width
  std::size_t total = 0;
};

/// Normalised counting measure on [lo, hi] split into `bins` bins. Defaults
/// to the eigenvalue range. Values outside [lo, hi] count in `total` only.
DensityTable ids_histogram(const std::vector<double>& eigenvalues, std::size_t bins,
                           std::optional<double> lo = {}, std::optional<double> hi = {});

/// Mean of min(s_i, s_{i+1}) / max(s_i, s_{i+1}) over consecutive spacings.
double spacing_ratio_stats(std::vector<double> eigenvalues);

struct StateDiagnostics {
  double eigenvalue = 0.0;
  double ipr = 0.0;
  double decay_rate = 0.0;
  double decay_goodness = 0.0;
  double boundary_weight = 0.0;
  double virial_residual = 0.0;
  double residual = 0.0;
  bool virial_caveat = false;
};

StateDiagnostics diagnose_state(const EigenPair& pair, const GridSpec& grid,
                                const Eigen::VectorXd& offset);

struct SpectralReport {
  GridSpec grid;
  double E0 = 0.0;
  std::optional<double> E1;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t requested = 0;
  SolverProvenance provenance;
  std::vector<StateDiagnostics> states;
};

nlohmann::json to_json(const SpectralReport& report);
/// eigenvalue,ipr,decay_rate,boundary_weight,virial_residual
std::string states_csv(const SpectralReport& report);

}  // namespace delocal
