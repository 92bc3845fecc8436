#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "delocal/bump.hpp"
#include "delocal/geometry.hpp"

namespace delocal {

/// V(x) = sum_n w_n phi((x - n) / r(n)) with w_n = omega_n |n|^-alpha over a
/// disjoint island set. Each evaluation touches at most one island, found
/// through a per-radius-level cell index.
class IslandPotential {
 public:
  IslandPotential(IslandSet islands, std::vector<double> couplings, double alpha,
                  BumpProfile profile = BumpProfile{});
  IslandPotential(IslandSet islands, const DisorderRealization& realization, double alpha,
                  BumpProfile profile = BumpProfile{});

  const IslandSet& islands() const noexcept { return islands_; }
  const std::vector<double>& couplings() const noexcept { return couplings_; }
  double alpha() const noexcept { return alpha_; }
  const BumpProfile& profile() const noexcept { return profile_; }
  int dim() const noexcept { return islands_.dim; }

  /// omega_n |n|^-alpha
  double weight(std::size_t i) const { return weights_[i]; }
  double coupling_bound() const noexcept;

  /// Index of the island whose open support ball contains x.
  std::optional<std::size_t> locate(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  using CellKey = std::vector<long long>;
  struct Level {
    double cell = 1.0;
    std::map<CellKey, std::vector<std::size_t>> cells;
  };

  CellKey cell_of(const Eigen::Ref<const Eigen::VectorXd>& x, double cell) const;
  void build_index();

  IslandSet islands_;
  std::vector<double> couplings_;
  double alpha_;
  BumpProfile profile_;
  std::vector<double> weights_;
  std::map<int, Level> levels_;
};

double eval_potential(const IslandPotential& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// b1(x) = -(x . grad V)(x), the multiplication operator i[V, A].
double eval_commutator_field(const IslandPotential& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// (x . grad)(x . grad) V(x) from the profile gradient and hessian.
double eval_double_commutator_field(const IslandPotential& p,
                                    const Eigen::Ref<const Eigen::VectorXd>& x);

/// b1(x) - 2 V(x): the bounded part B of i[H, A] = 2H + B.
inline double eval_commutator_offset(const IslandPotential& p,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) {
  return eval_commutator_field(p, x) - 2.0 * eval_potential(p, x);
}

struct E0Options {
  int points_per_unit_radius = 64;
  bool richardson = true;
  // Treat the island set as the truncation of an infinite family and add the
  // analytic tail bound for islands beyond the largest |n| (alpha > 0 only).
  bool infinite_family = false;
};

struct E0Result {
  double value = 0.0;            // +inf when the family violates alpha + beta >= 1
  bool bounded = true;
  int grid_points_per_axis = 0;  // probe points per axis on the coarse pass
  double grid_spacing = 0.0;     // probe spacing in units of the island radius
  double island_sup = 0.0;       // max over islands of the unit-coupling sup
  std::optional<double> tail_bound;
};

/// E0 = M/2 * max_n sup_x |-x . grad v_n - 2 v_n| with v_n the unit-coupling
/// summand; per-island sup on a probe grid with one Richardson step.
E0Result compute_E0(const IslandSet& islands, double alpha, double coupling_bound,
                    const BumpProfile& profile = BumpProfile{}, const E0Options& options = {});

}  // namespace delocal
