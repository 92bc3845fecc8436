#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "delocal/rng.hpp"

namespace delocal {

struct Island {
  Eigen::VectorXd center;
  double radius = 0.0;
};

/// Finite set of disjoint balls whose radii scale like |center|^beta.
/// c1 and c2 are the recorded comparability constants
/// c1 |x|^beta <= r(x) <= c2 |x|^beta.
struct IslandSet {
  int dim = 2;
  double beta = 0.0;
  double gamma = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;
  std::vector<Island> islands;

  std::size_t size() const noexcept { return islands.size(); }
  bool empty() const noexcept { return islands.empty(); }
};

/// Dyadic square-annulus packing of the plane: annulus k carries 12 discs of
/// radius 2^(k-1) R centred at the square centres of its 12-square cover.
IslandSet build_annular_islands(double R, int k_max);

struct GreedyPackingSpec {
  int dim = 1;
  double beta = 1.0;
  double gamma = 1.0;
  double radius_constant = 1.0 / 3.0;  // r(x) = radius_constant * |x|^beta
  double extent = 32.0;                // keep centres with |x| <= extent
  double lattice_spacing = 1.0;
};

/// Scans lattice points by increasing |x| and keeps a point when its
/// gamma-scaled ball avoids every ball already kept. The origin is skipped.
IslandSet build_greedy_islands(const GreedyPackingSpec& spec);

struct Violation {
  enum class Kind { disjointness, comparability };
  Kind kind = Kind::disjointness;
  std::size_t first = 0;
  std::optional<std::size_t> second;
  // disjointness: |x_i - x_j| - gamma (r_i + r_j); comparability: the signed
  // distance of r to the nearer admissible bound (negative = violated).
  double margin = 0.0;
};

/// Returns the list of invariant violations; empty iff the set is valid.
/// Tangent balls (interiors disjoint) are accepted.
std::vector<Violation> validate_island_set(const IslandSet& set);

struct DensityEstimate {
  double fraction = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo fraction of the square annulus A_k = B_{k+1} \ B_k covered by
/// discs of an annular set (B_k = [-2^k R, 2^k R]^2).
DensityEstimate island_density(const IslandSet& set, int k, std::size_t samples,
                               std::uint64_t seed);

struct CompactDistribution {
  enum class Kind { uniform, scaled_beta, two_point };
  Kind kind = Kind::uniform;
  double lower = 0.0;
  double upper = 0.0;
  // scaled_beta: Beta(shape_p, shape_q) mapped onto [lower, upper].
  // two_point: shape_p is the probability of `upper`.
  double shape_p = 0.5;
  double shape_q = 0.5;

  static CompactDistribution uniform(double a, double b);
  static CompactDistribution scaled_beta(double a, double b, double p, double q);
  static CompactDistribution two_point(double a, double b, double prob_upper = 0.5);

  /// M = max(|a|, |b|).
  double sup_norm() const noexcept;
  double sample(CounterEngine& engine) const;
};

std::string to_string(CompactDistribution::Kind kind);
CompactDistribution::Kind distribution_kind_from_string(const std::string& name);

/// Coupling for `index` under (seed, dist); pure function of its arguments.
double draw_coupling(const CompactDistribution& dist, std::uint64_t seed,
                     std::uint64_t index);

struct DisorderRealization {
  std::vector<double> couplings;
  std::uint64_t seed = 0;
  CompactDistribution distribution;

  double operator[](std::size_t i) const { return couplings[i]; }
  std::size_t size() const noexcept { return couplings.size(); }
};

DisorderRealization sample_disorder(const CompactDistribution& dist,
                                    std::size_t index_count, std::uint64_t seed);

// JSON: {d, beta, gamma, c1, c2, islands:[{center:[...], radius}]}
nlohmann::json to_json(const IslandSet& set);
IslandSet island_set_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Violation& v);

}  // namespace delocal
