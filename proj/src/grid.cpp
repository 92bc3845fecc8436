#include "delocal/grid.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "delocal/errors.hpp"

namespace delocal {

std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "dirichlet"; }

Boundary boundary_from_string(const std::string& name) {
  if (name == "periodic") return Boundary::periodic;
  if (name == "dirichlet") return Boundary::dirichlet;
  throw PreconditionError("unknown boundary '" + name + "'");
}

Eigen::Index GridSpec::size() const noexcept {
  Eigen::Index n = 1;
  for (int j = 0; j < dim; ++j) n *= nodes_per_axis();
  return n;
}

Eigen::VectorXi GridSpec::unflatten(Eigen::Index flat) const {
  Eigen::VectorXi idx(dim);
  const int n = nodes_per_axis();
  for (int j = 0; j < dim; ++j) {
    idx[j] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

Eigen::VectorXd GridSpec::point(Eigen::Index flat) const {
  Eigen::VectorXd x(dim);
  const int n = nodes_per_axis();
  for (int j = 0; j < dim; ++j) {
    x[j] = coordinate(static_cast<int>(flat % n));
    flat /= n;
  }
  return x;
}

void GridSpec::validate(std::size_t budget) const {
  if (dim < 1) throw PreconditionError("grid: dimension must be >= 1");
  if (!(half_length > 0.0)) throw PreconditionError("grid: half-length must be positive");
  if (points < 2 || points % 2 != 0)
    throw PreconditionError("grid: points per axis must be a positive even integer");
  double unknowns = 1.0;
  for (int j = 0; j < dim; ++j) unknowns *= nodes_per_axis();
  if (unknowns > static_cast<double>(budget)) {
    throw ResourceError("grid: N^d = " + std::to_string(points) + "^" + std::to_string(dim) +
                        " exceeds the unknown budget of " + std::to_string(budget));
  }
}

nlohmann::json to_json(const GridSpec& grid) {
  return {{"d", grid.dim},
          {"L", grid.half_length},
          {"N", grid.points},
          {"boundary", to_string(grid.boundary)},
          {"stencil_order", 2},
          {"h", grid.spacing()}};
}

Eigen::VectorXd potential_on_grid(const GridSpec& grid, const IslandPotential& p) {
  if (p.dim() != grid.dim) throw PreconditionError("potential dimension does not match grid");
  return sample_on_grid(grid, [&](const Eigen::VectorXd& x) { return eval_potential(p, x); });
}

Eigen::VectorXd commutator_offset_on_grid(const GridSpec& grid, const IslandPotential& p) {
  if (p.dim() != grid.dim) throw PreconditionError("potential dimension does not match grid");
  return sample_on_grid(grid,
                        [&](const Eigen::VectorXd& x) { return eval_commutator_offset(p, x); });
}

namespace {

// Calls visit(neighbour_flat_index) for the +e_j and -e_j neighbours of
// `flat` that exist under the boundary rule.
template <typename Visit>
void for_each_axis_neighbour(const GridSpec& grid, Eigen::Index flat, int axis, Visit&& visit) {
  const int n = grid.nodes_per_axis();
  Eigen::Index stride = 1;
  for (int j = 0; j < axis; ++j) stride *= n;
  const int i = static_cast<int>((flat / stride) % n);
  const bool periodic = grid.boundary == Boundary::periodic;
  if (i + 1 < n) visit(flat + stride, +1);
  else if (periodic) visit(flat - (n - 1) * stride, +1);
  if (i > 0) visit(flat - stride, -1);
  else if (periodic) visit(flat + (n - 1) * stride, -1);
}

}  // namespace

DiscreteHamiltonian::DiscreteHamiltonian(GridSpec grid, Eigen::VectorXd potential)
    : grid_(grid), potential_(std::move(potential)) {
  const Eigen::Index n = grid_.size();
  if (potential_.size() != n) throw PreconditionError("potential size does not match grid");
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n) * (2 * grid_.dim + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, 2.0 * grid_.dim * inv_h2 + potential_[i]);
    for (int axis = 0; axis < grid_.dim; ++axis) {
      for_each_axis_neighbour(grid_, i, axis, [&](Eigen::Index nb, int) {
        triplets.emplace_back(i, nb, -inv_h2);
      });
    }
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(triplets.begin(), triplets.end());
  matrix_.makeCompressed();
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < matrix_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(matrix_, k); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  scale_ = n > 0 ? row_sums.maxCoeff() : 0.0;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> DiscreteHamiltonian::apply(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f) const {
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    Scalar acc = (2.0 * grid_.dim * inv_h2 + potential_[i]) * f[i];
    for (int axis = 0; axis < grid_.dim; ++axis) {
      for_each_axis_neighbour(grid_, i, axis, [&](Eigen::Index nb, int) { acc -= inv_h2 * f[nb]; });
    }
    out[i] = acc;
  }
  return out;
}

template Eigen::VectorXd DiscreteHamiltonian::apply<double>(const Eigen::VectorXd&) const;
template Eigen::VectorXcd DiscreteHamiltonian::apply<std::complex<double>>(
    const Eigen::VectorXcd&) const;

DiscreteHamiltonian assemble_hamiltonian(const GridSpec& grid, Eigen::VectorXd potential,
                                         std::size_t budget) {
  grid.validate(budget);
  return DiscreteHamiltonian(grid, std::move(potential));
}

DiscreteHamiltonian assemble_hamiltonian(const GridSpec& grid, const IslandPotential& p,
                                         std::size_t budget) {
  grid.validate(budget);
  return DiscreteHamiltonian(grid, potential_on_grid(grid, p));
}

double stencil_symbol(const Eigen::VectorXd& wavevector, double h) {
  return (2.0 / (h * h)) * (1.0 - (wavevector.array() * h).cos()).sum();
}

Eigen::VectorXcd apply_dilation_generator(const GridSpec& grid, const Eigen::VectorXcd& f) {
  if (f.size() != grid.size()) throw PreconditionError("grid function size mismatch");
  const double inv_2h = 1.0 / (2.0 * grid.spacing());
  const int n = grid.nodes_per_axis();
  Eigen::VectorXcd sym = Eigen::VectorXcd::Zero(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Eigen::VectorXi idx = grid.unflatten(i);
    for (int axis = 0; axis < grid.dim; ++axis) {
      const double xi = grid.coordinate(idx[axis]);
      std::complex<double> acc = 0.0;
      Eigen::Index stride = 1;
      for (int j = 0; j < axis; ++j) stride *= n;
      for_each_axis_neighbour(grid, i, axis, [&](Eigen::Index nb, int sign) {
        const double xn = grid.coordinate(static_cast<int>((nb / stride) % n));
        acc += static_cast<double>(sign) * (xi + xn) * f[nb];
      });
      sym[i] += acc * inv_2h;
    }
  }
  return std::complex<double>(0.0, -0.5) * sym;
}

namespace {

template <typename Vec>
double boundary_weight_impl(const GridSpec& grid, const Vec& f, double band) {
  if (f.size() != grid.size()) throw PreconditionError("grid function size mismatch");
  const double cut = (1.0 - band) * grid.half_length;
  double edge = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double w = std::norm(f[i]);
    total += w;
    if (grid.point(i).cwiseAbs().maxCoeff() > cut) edge += w;
  }
  if (total == 0.0) throw PreconditionError("boundary_weight: zero vector");
  return edge / total;
}

}  // namespace

double boundary_weight(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXcd>& f,
                       double band) {
  return boundary_weight_impl(grid, f, band);
}

double boundary_weight(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                       double band) {
  return boundary_weight_impl(grid, f, band);
}

double commutator_residual(const DiscreteHamiltonian& H, const Eigen::VectorXd& offset,
                           const Eigen::VectorXcd& f) {
  const auto& grid = H.grid();
  if (offset.size() != f.size() || f.size() != H.size())
    throw PreconditionError("commutator_residual: size mismatch");
  const double bw = boundary_weight(grid, f);
  if (!(bw < 1e-8)) {
    throw PreconditionError("commutator_residual: test function boundary weight " +
                            std::to_string(bw) + " is not below 1e-8");
  }
  const Eigen::VectorXcd Hf = H.apply(f);
  const Eigen::VectorXcd HAf = H.apply(apply_dilation_generator(grid, f));
  const Eigen::VectorXcd AHf = apply_dilation_generator(grid, Hf);
  const Eigen::VectorXcd lhs = std::complex<double>(0.0, 1.0) * (HAf - AHf);
  const Eigen::VectorXcd rhs = 2.0 * Hf + offset.cwiseProduct(f);
  return (lhs - rhs).norm() / f.norm();
}

std::uint64_t potential_hash(const Eigen::VectorXd& v) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    unsigned char bytes[sizeof(double)];
    const double x = v[i] == 0.0 ? 0.0 : v[i];  // fold -0.0
    std::memcpy(bytes, &x, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

}  // namespace delocal
