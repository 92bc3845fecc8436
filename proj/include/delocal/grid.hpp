#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "delocal/potential.hpp"

namespace delocal {

enum class Boundary { periodic, dirichlet };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& name);

inline constexpr std::size_t kDefaultUnknownBudget = std::size_t{1} << 24;

/// Origin-centred box [-L, L]^d with N intervals per axis, h = 2L/N.
/// Periodic: nodes x_i = -L + i h, i = 0..N-1.
/// Dirichlet: interior nodes x_i = -L + i h, i = 1..N-1 (the two boundary
/// nodes carry the zero boundary value and are eliminated).
struct GridSpec {
  int dim = 1;
  double half_length = 1.0;
  int points = 64;
  Boundary boundary = Boundary::dirichlet;

  double spacing() const noexcept { return 2.0 * half_length / points; }
  int nodes_per_axis() const noexcept {
    return boundary == Boundary::periodic ? points : points - 1;
  }
  Eigen::Index size() const noexcept;
  double coordinate(int axis_index) const noexcept {
    const int offset = boundary == Boundary::periodic ? 0 : 1;
    return -half_length + (axis_index + offset) * spacing();
  }
  /// Axis 0 varies fastest.
  Eigen::VectorXd point(Eigen::Index flat) const;
  /// Flat index -> per-axis indices.
  Eigen::VectorXi unflatten(Eigen::Index flat) const;

  void validate(std::size_t budget = kDefaultUnknownBudget) const;
};

nlohmann::json to_json(const GridSpec& grid);

/// Values of a callable at every node.
template <typename Fn>
Eigen::VectorXd sample_on_grid(const GridSpec& grid, Fn&& fn) {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = fn(grid.point(i));
  return out;
}

Eigen::VectorXd potential_on_grid(const GridSpec& grid, const IslandPotential& p);
/// B = b1 - 2V at every node.
Eigen::VectorXd commutator_offset_on_grid(const GridSpec& grid, const IslandPotential& p);

/// -Delta_h + V with the second-order central stencil.
class DiscreteHamiltonian {
 public:
  DiscreteHamiltonian(GridSpec grid, Eigen::VectorXd potential);

  const GridSpec& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& potential() const noexcept { return potential_; }
  const Eigen::SparseMatrix<double>& matrix() const noexcept { return matrix_; }
  Eigen::Index size() const noexcept { return potential_.size(); }

  /// Matrix-free stencil apply.
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> apply(
      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f) const;

  /// max absolute row sum.
  double scale() const noexcept { return scale_; }

 private:
  GridSpec grid_;
  Eigen::VectorXd potential_;
  Eigen::SparseMatrix<double> matrix_;
  double scale_ = 0.0;
};

DiscreteHamiltonian assemble_hamiltonian(const GridSpec& grid, Eigen::VectorXd potential,
                                         std::size_t budget = kDefaultUnknownBudget);
DiscreteHamiltonian assemble_hamiltonian(const GridSpec& grid, const IslandPotential& p,
                                         std::size_t budget = kDefaultUnknownBudget);

/// Stencil eigenvalue (2/h^2) sum_j (1 - cos(k_j h)).
double stencil_symbol(const Eigen::VectorXd& wavevector, double h);

/// A_h f = -(i/2) sum_j (x_j D_j f + D_j (x_j f)), D_j the central
/// difference. The discrete operator is Hermitian.
Eigen::VectorXcd apply_dilation_generator(const GridSpec& grid, const Eigen::VectorXcd& f);

/// Fraction of |f|^2 on nodes with max_j |x_j| > (1 - band) L.
double boundary_weight(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXcd>& f,
                       double band = 0.1);
double boundary_weight(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                       double band = 0.1);

/// || i[H, A] f - (2H + B) f || / ||f||; B is the multiplication operator
/// with values `offset` (b1 - 2V). Requires boundary weight of f < 1e-8.
double commutator_residual(const DiscreteHamiltonian& H, const Eigen::VectorXd& offset,
                           const Eigen::VectorXcd& f);

/// Stable 64-bit digest of a potential vector, used in run manifests.
std::uint64_t potential_hash(const Eigen::VectorXd& v);

}  // namespace delocal
