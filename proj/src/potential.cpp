#include "delocal/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "delocal/errors.hpp"

namespace delocal {

IslandPotential::IslandPotential(IslandSet islands, std::vector<double> couplings, double alpha,
                                 BumpProfile profile)
    : islands_(std::move(islands)),
      couplings_(std::move(couplings)),
      alpha_(alpha),
      profile_(profile) {
  if (couplings_.size() != islands_.size())
    throw PreconditionError("IslandPotential: one coupling per island required");
  if (alpha_ < 0.0) throw PreconditionError("IslandPotential: alpha must be >= 0");
  weights_.resize(islands_.size());
  for (std::size_t i = 0; i < islands_.size(); ++i) {
    const double norm = islands_.islands[i].center.norm();
    if (norm == 0.0 && alpha_ > 0.0)
      throw PreconditionError("IslandPotential: island at the origin with alpha > 0");
    weights_[i] = couplings_[i] * (alpha_ > 0.0 ? std::pow(norm, -alpha_) : 1.0);
  }
  build_index();
}

IslandPotential::IslandPotential(IslandSet islands, const DisorderRealization& realization,
                                 double alpha, BumpProfile profile)
    : IslandPotential(std::move(islands), realization.couplings, alpha, profile) {}

double IslandPotential::coupling_bound() const noexcept {
  double m = 0.0;
  for (double w : couplings_) m = std::max(m, std::abs(w));
  return m;
}

IslandPotential::CellKey IslandPotential::cell_of(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                  double cell) const {
  CellKey key(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j)
    key[j] = static_cast<long long>(std::floor(x[j] / cell));
  return key;
}

void IslandPotential::build_index() {
  const int d = islands_.dim;
  for (std::size_t i = 0; i < islands_.size(); ++i) {
    const auto& isl = islands_.islands[i];
    if (!(isl.radius > 0.0)) continue;
    const int level = static_cast<int>(std::floor(std::log2(isl.radius)));
    auto& lvl = levels_[level];
    // Ball diameter < 2^(level+2), so it spans at most two cells per axis.
    lvl.cell = std::ldexp(1.0, level + 2);
    const CellKey lo = cell_of((isl.center.array() - isl.radius).matrix(), lvl.cell);
    const CellKey hi = cell_of((isl.center.array() + isl.radius).matrix(), lvl.cell);
    CellKey key = lo;
    while (true) {
      lvl.cells[key].push_back(i);
      int j = 0;
      for (; j < d; ++j) {
        if (key[j] < hi[j]) {
          ++key[j];
          break;
        }
        key[j] = lo[j];
      }
      if (j == d) break;
    }
  }
}

std::optional<std::size_t> IslandPotential::locate(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  for (const auto& [level, lvl] : levels_) {
    auto it = lvl.cells.find(cell_of(x, lvl.cell));
    if (it == lvl.cells.end()) continue;
    for (std::size_t i : it->second) {
      const auto& isl = islands_.islands[i];
      if ((x - isl.center).squaredNorm() < isl.radius * isl.radius) return i;
    }
  }
  return std::nullopt;
}

double eval_potential(const IslandPotential& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto hit = p.locate(x);
  if (!hit) return 0.0;
  const auto& isl = p.islands().islands[*hit];
  return p.weight(*hit) * p.profile().value((x - isl.center) / isl.radius);
}

double eval_commutator_field(const IslandPotential& p,
                             const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto hit = p.locate(x);
  if (!hit) return 0.0;
  const auto& isl = p.islands().islands[*hit];
  const Eigen::VectorXd u = (x - isl.center) / isl.radius;
  return -p.weight(*hit) / isl.radius * x.dot(p.profile().gradient(u));
}

double eval_double_commutator_field(const IslandPotential& p,
                                    const Eigen::Ref<const Eigen::VectorXd>& x) {
  const auto hit = p.locate(x);
  if (!hit) return 0.0;
  const auto& isl = p.islands().islands[*hit];
  const double r = isl.radius;
  const Eigen::VectorXd u = (x - isl.center) / r;
  const double first = x.dot(p.profile().gradient(u)) / r;
  const double second = x.dot(p.profile().hessian(u) * x) / (r * r);
  return p.weight(*hit) * (first + second);
}

namespace {

// sup over the unit ball of |-(n/r + u) . grad phi(u) - 2 phi(u)| on a grid of
// spacing 1/points_per_unit in u.
double unit_offset_sup(const Island& isl, const BumpProfile& profile, int points_per_unit) {
  const int d = static_cast<int>(isl.center.size());
  const int side = 2 * points_per_unit + 1;
  const double step = 1.0 / points_per_unit;
  const Eigen::VectorXd ratio = isl.center / isl.radius;
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(d);
  Eigen::VectorXd u(d);
  double best = 0.0;
  while (true) {
    for (int j = 0; j < d; ++j) u[j] = -1.0 + idx[j] * step;
    if (u.squaredNorm() < 1.0) {
      const double phi = profile.value(u);
      const double val = std::abs(-(ratio + u).dot(profile.gradient(u)) - 2.0 * phi);
      best = std::max(best, val);
    }
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[j] < side) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }
  return best;
}

}  // namespace

E0Result compute_E0(const IslandSet& islands, double alpha, double coupling_bound,
                    const BumpProfile& profile, const E0Options& options) {
  if (coupling_bound < 0.0) throw PreconditionError("compute_E0: coupling bound must be >= 0");
  if (options.points_per_unit_radius < 1)
    throw PreconditionError("compute_E0: probe resolution must be >= 1");

  E0Result result;
  result.grid_points_per_axis = 2 * options.points_per_unit_radius + 1;
  result.grid_spacing = 1.0 / options.points_per_unit_radius;

  double island_sup = 0.0;
  double rho = 0.0;
  for (const auto& isl : islands.islands) {
    const double norm = isl.center.norm();
    rho = std::max(rho, norm);
    if (norm == 0.0 && alpha > 0.0)
      throw PreconditionError("compute_E0: island at the origin with alpha > 0");
    const double w = alpha > 0.0 ? std::pow(norm, -alpha) : 1.0;
    double s = unit_offset_sup(isl, profile, options.points_per_unit_radius);
    if (options.richardson) {
      const double fine = unit_offset_sup(isl, profile, 2 * options.points_per_unit_radius);
      s = fine + (fine - s) / 3.0;
    }
    island_sup = std::max(island_sup, w * s);
  }
  result.island_sup = island_sup;

  double sup = island_sup;
  if (options.infinite_family) {
    if (alpha + islands.beta < 1.0 && coupling_bound > 0.0 && !islands.empty()) {
      result.bounded = false;
      result.value = std::numeric_limits<double>::infinity();
      return result;
    }
    if (alpha > 0.0 && rho > 0.0) {
      const double grad = profile.gradient_sup();
      const double tail = std::pow(rho, 1.0 - alpha - islands.beta) * grad / islands.c1 +
                          std::pow(rho, -alpha) * (grad + 2.0);
      result.tail_bound = tail;
      sup = std::max(sup, tail);
    }
  }
  result.value = 0.5 * coupling_bound * sup;
  return result;
}

}  // namespace delocal
