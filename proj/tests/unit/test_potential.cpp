#include <doctest.h>

#include <cmath>

#include "delocal/errors.hpp"
#include "delocal/geometry.hpp"
#include "delocal/potential.hpp"

using namespace delocal;

namespace {

IslandSet single_island(Eigen::VectorXd centre, double radius) {
  IslandSet s;
  s.dim = static_cast<int>(centre.size());
  s.beta = 1.0;
  s.c1 = s.c2 = radius / centre.norm();
  s.islands.push_back({std::move(centre), radius});
  return s;
}

IslandPotential example_potential(int k_max, double alpha, std::uint64_t seed) {
  const auto islands = build_annular_islands(1.0, k_max);
  return IslandPotential(islands, sample_disorder(CompactDistribution::uniform(-1.0, 1.0), islands.size(), seed),
                         alpha);
}

double central_radial_derivative(const IslandPotential& p, const Eigen::VectorXd& x, double h) {
  // d/ds V(s x) at s = 1 equals x . grad V(x).
  return (eval_potential(p, (1 + h) * x) - eval_potential(p, (1 - h) * x)) / (2 * h);
}

}  // namespace

TEST_CASE("bump profile: normalisation, support and derivatives") {
  const BumpProfile phi;
  CHECK(phi.value(Eigen::Vector2d(0, 0)) == 1.0);
  CHECK(phi.value(Eigen::Vector2d(1, 0)) == 0.0);
  CHECK(phi.value(Eigen::Vector2d(0.8, 0.8)) == 0.0);
  CHECK(phi.gradient(Eigen::Vector2d(0.6, 0.9)).norm() == 0.0);
  CHECK(phi.hessian(Eigen::Vector2d(0.6, 0.9)).norm() == 0.0);
  const Eigen::Vector2d u(0.3, -0.4);
  CHECK(phi.value(u) == doctest::Approx(std::exp(1 - 1 / (1 - 0.25))));
  const double h = 1e-5;
  for (int j = 0; j < 2; ++j) {
    Eigen::Vector2d e = Eigen::Vector2d::Zero();
    e[j] = h;
    CHECK(phi.gradient(u)[j] == doctest::Approx((phi.value(u + e) - phi.value(u - e)) / (2 * h)).epsilon(1e-8));
    const Eigen::Vector2d dg = (phi.gradient(u + e) - phi.gradient(u - e)) / (2 * h);
    for (int i = 0; i < 2; ++i) CHECK(phi.hessian(u)(i, j) == doctest::Approx(dg[i]).epsilon(1e-7));
  }
  // Small sharpness pushes the descent against the boundary.
  CHECK(BumpProfile(0.25).gradient_sup() > phi.gradient_sup());
  // Brute-force radial maximum of |grad phi|.
  double best = 0.0;
  for (double r = 0.0; r < 1.0; r += 1e-5) best = std::max(best, phi.gradient(Eigen::Vector2d(r, 0)).norm());
  CHECK(phi.gradient_sup() == doctest::Approx(best).epsilon(1e-8));
}

TEST_CASE("potential values") {
  const auto s = single_island(Eigen::Vector2d(3, 0), 1.0);
  const IslandPotential p(s, std::vector<double>{2.0}, 1.0);
  CHECK(eval_potential(p, Eigen::Vector2d(3.5, 0)) == doctest::Approx(2.0 / 3.0 * std::exp(1 - 1 / 0.75)));
  CHECK(eval_potential(p, Eigen::Vector2d(3, 0)) == doctest::Approx(2.0 / 3.0));
  CHECK(eval_potential(p, Eigen::Vector2d(0, 0)) == 0.0);
  CHECK(eval_potential(p, Eigen::Vector2d(4, 0)) == 0.0);

  const auto q = example_potential(3, 0.5, 4);
  for (std::size_t i = 0; i < q.islands().size(); ++i) {
    const auto& isl = q.islands().islands[i];
    CHECK(q.locate(isl.center) == std::optional<std::size_t>(i));
    CHECK(eval_potential(q, isl.center) == doctest::Approx(q.couplings()[i] * std::pow(isl.center.norm(), -0.5)));
  }
  // Sup bound M max |n|^-alpha on a probe grid.
  const double bound = q.coupling_bound() * std::pow(std::sqrt(10.0), -0.5);
  for (double x = -16; x <= 16; x += 0.37)
    for (double y = -16; y <= 16; y += 0.41) {
      const Eigen::Vector2d z(x, y);
      CHECK(std::abs(eval_potential(q, z)) <= bound + 1e-15);
      if (!q.locate(z)) {
        CHECK(eval_potential(q, z) == 0.0);
        CHECK(eval_commutator_field(q, z) == 0.0);
        CHECK(eval_double_commutator_field(q, z) == 0.0);
      }
    }

  CHECK_THROWS_AS(IslandPotential(single_island(Eigen::Vector2d(3, 0), 1.0), std::vector<double>{1.0, 2.0}, 0.0),
                  PreconditionError);
  IslandSet origin;
  origin.islands.push_back({Eigen::Vector2d(0, 0), 1.0});
  CHECK_THROWS_AS(IslandPotential(origin, std::vector<double>{1.0}, 1.0), PreconditionError);
  CHECK_NOTHROW(IslandPotential(origin, std::vector<double>{1.0}, 0.0));
}

TEST_CASE("commutator field against a radial finite difference") {
  const auto p = example_potential(2, 0.3, 11);
  const Eigen::Vector2d x(3.4, 0.6);  // inside the island at (3, 1)
  REQUIRE(p.locate(x));
  const double exact = eval_commutator_field(p, x);
  const double e1 = std::abs(-central_radial_derivative(p, x, 1e-3) - exact);
  const double e2 = std::abs(-central_radial_derivative(p, x, 5e-4) - exact);
  CHECK(e1 < 1e-5);
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(eval_commutator_offset(p, x) == doctest::Approx(exact - 2 * eval_potential(p, x)));
}

TEST_CASE("double commutator field against nested differences") {
  const auto p = example_potential(2, 0.3, 12);
  const Eigen::Vector2d x(-2.7, 3.2);
  REQUIRE(p.locate(x));
  // (x.grad)^2 V = d^2/du^2 V(e^u x) at u = 0.
  auto second = [&](double h) {
    auto v = [&](double u) { return eval_potential(p, std::exp(u) * x); };
    return (v(h) - 2 * v(0) + v(-h)) / (h * h);
  };
  const double exact = eval_double_commutator_field(p, x);
  const double e1 = std::abs(second(2e-3) - exact), e2 = std::abs(second(1e-3) - exact);
  CHECK(e1 < 1e-3 * (1 + std::abs(exact)));
  CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("commutator fields stay bounded as the family grows") {
  // alpha + beta >= 1 and alpha + 2 beta >= 2: the running sup stabilises.
  double previous = 0.0;
  for (int k_max : {2, 4, 6}) {
    const auto islands = build_annular_islands(1.0, k_max);
    const IslandPotential p(islands, std::vector<double>(islands.size(), 1.0), 0.0);
    double sup1 = 0.0, sup2 = 0.0;
    for (const auto& isl : islands.islands)
      for (double a = -0.95; a <= 0.95; a += 0.05)
        for (double b = -0.95; b <= 0.95; b += 0.05) {
          const Eigen::Vector2d x = isl.center + isl.radius * Eigen::Vector2d(a, b);
          sup1 = std::max(sup1, std::abs(eval_commutator_field(p, x)));
          sup2 = std::max(sup2, std::abs(eval_double_commutator_field(p, x)));
        }
    const BumpProfile phi;
    // |x.grad v| <= (|n|/r + 1) |grad phi|_inf with |n|/r <= 1/c1.
    CHECK(sup1 <= (1 / islands.c1 + 1) * phi.gradient_sup());
    CHECK(std::isfinite(sup2));
    if (previous > 0) CHECK(sup1 == doctest::Approx(previous).epsilon(1e-12));
    previous = sup1;
  }
}

TEST_CASE("E0: trivial cases, homogeneity, monotonicity") {
  const auto islands = build_annular_islands(1.0, 3);
  CHECK(compute_E0(islands, 0.0, 0.0).value == 0.0);
  CHECK(compute_E0(IslandSet{}, 0.0, 1.0).value == 0.0);
  const double one = compute_E0(islands, 0.0, 1.0).value;
  CHECK(one > 0);
  CHECK(compute_E0(islands, 0.0, 2.0).value == 2.0 * one);
  CHECK(compute_E0(islands, 0.0, 0.5).value == 0.5 * one);
  CHECK(compute_E0(islands, 0.0, 1.5).value > one);
  // E0 depends on the whole profile, not on |grad phi| alone; it is bounded by
  // M/2 ((1/c1 + 1) |grad phi| + 2) for every profile.
  for (double k : {0.25, 0.5, 1.0, 2.0, 5.0}) {
    const BumpProfile phi(k);
    CHECK(compute_E0(islands, 0.0, 1.0, phi).value <= 0.5 * ((1 / islands.c1 + 1) * phi.gradient_sup() + 2));
  }
  CHECK_THROWS_AS(compute_E0(islands, 0.0, -1.0), PreconditionError);

  E0Options infinite;
  infinite.infinite_family = true;
  GreedyPackingSpec spec;
  spec.dim = 1;
  spec.beta = 0.5;
  spec.extent = 50;
  const auto weak = build_greedy_islands(spec);
  const auto unbounded = compute_E0(weak, 0.2, 1.0, BumpProfile{}, infinite);
  CHECK_FALSE(unbounded.bounded);
  CHECK(std::isinf(unbounded.value));
  const auto tail = compute_E0(weak, 0.6, 1.0, BumpProfile{}, infinite);
  CHECK(tail.bounded);
  REQUIRE(tail.tail_bound.has_value());
  CHECK(tail.value >= 0.5 * *tail.tail_bound);
}

TEST_CASE("E0 agrees with a refined brute-force maximisation") {
  // With alpha = 0 every annulus repeats the first one up to scale.
  const auto islands = build_annular_islands(1.0, 1);
  const auto est = compute_E0(islands, 0.0, 1.0);
  // 10x finer probe without extrapolation, evaluated from the profile directly.
  const BumpProfile phi;
  const int n = 640;
  double sup = 0.0;
  for (const auto& isl : islands.islands)
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j) {
        const Eigen::Vector2d u(static_cast<double>(i) / n, static_cast<double>(j) / n);
        if (u.squaredNorm() >= 1) continue;
        const Eigen::Vector2d x = isl.center + isl.radius * u;
        const double b = -x.dot(phi.gradient(u)) / isl.radius - 2 * phi.value(u);
        sup = std::max(sup, std::abs(b));
      }
  CHECK(est.value == doctest::Approx(0.5 * sup).epsilon(0.01));
  CHECK(est.grid_points_per_axis == 129);
}
