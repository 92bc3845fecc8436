#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "delocal/errors.hpp"
#include "delocal/grid.hpp"
#include "delocal/rng.hpp"

using namespace delocal;
using cplx = std::complex<double>;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::VectorXcd gaussian(const GridSpec& g, double sigma, const Eigen::VectorXd& centre) {
  Eigen::VectorXcd f(g.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = std::exp(-(g.point(i) - centre).squaredNorm() / (2 * sigma * sigma));
  return f;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  CounterEngine e(seed, 0);
  Eigen::VectorXd v(n);
  for (auto& x : v) x = uniform01(e) - 0.5;
  return v;
}

}  // namespace

TEST_CASE("grid geometry and budget") {
  const GridSpec p{2, 3.0, 8, Boundary::periodic};
  CHECK(p.size() == 64);
  CHECK(p.spacing() == 0.75);
  CHECK(p.point(0) == Eigen::Vector2d(-3.0, -3.0));
  CHECK(p.point(1) == Eigen::Vector2d(-2.25, -3.0));
  CHECK(p.unflatten(9) == Eigen::Vector2i(1, 1));
  const GridSpec d{1, 1.0, 8, Boundary::dirichlet};
  CHECK(d.size() == 7);
  CHECK(d.coordinate(0) == -0.75);
  CHECK(d.coordinate(6) == 0.75);

  CHECK_THROWS_AS((GridSpec{1, 1.0, 7, Boundary::dirichlet}.validate()), PreconditionError);
  CHECK_THROWS_AS((GridSpec{1, -1.0, 8, Boundary::dirichlet}.validate()), PreconditionError);
  try {
    assemble_hamiltonian(GridSpec{3, 1.0, 512, Boundary::periodic}, Eigen::VectorXd());
    FAIL("expected a resource error");
  } catch (const ResourceError& e) {
    CHECK(std::string(e.what()).find("512^3") != std::string::npos);
  }
  CHECK(boundary_from_string(to_string(Boundary::dirichlet)) == Boundary::dirichlet);
  CHECK_THROWS_AS(boundary_from_string("open"), PreconditionError);
}

TEST_CASE("periodic plane waves are eigenvectors with the stencil symbol") {
  for (int dim : {1, 2}) {
    const GridSpec g{dim, 2.0, 16, Boundary::periodic};
    const auto H = assemble_hamiltonian(g, Eigen::VectorXd::Zero(g.size()));
    for (int m : {0, 1, 3, 8}) {
      Eigen::VectorXd k = Eigen::VectorXd::Constant(dim, 2 * pi * m / (2 * g.half_length));
      if (dim == 2) k[1] = 2 * pi * (m + 2) / (2 * g.half_length);
      Eigen::VectorXcd wave(g.size());
      for (Eigen::Index i = 0; i < wave.size(); ++i) wave[i] = std::polar(1.0, k.dot(g.point(i)));
      const double lambda = stencil_symbol(k, g.spacing());
      CHECK((H.apply(wave) - lambda * wave).norm() < 1e-10 * (1 + lambda) * wave.norm());
    }
  }
}

TEST_CASE("matrix is exactly symmetric and agrees with the matrix-free apply") {
  for (auto b : {Boundary::periodic, Boundary::dirichlet}) {
    const GridSpec g{2, 4.0, 12, b};
    const auto H = assemble_hamiltonian(g, random_vector(g.size(), 1));
    const Eigen::MatrixXd dense = Eigen::MatrixXd(H.matrix());
    CHECK(dense == dense.transpose());
    const Eigen::VectorXd f = random_vector(g.size(), 2), h = random_vector(g.size(), 3);
    CHECK(std::abs((H.matrix() * f).dot(h) - f.dot(H.matrix() * h)) < 1e-12 * (H.matrix() * f).norm() * h.norm());
    CHECK((H.apply(f) - H.matrix() * f).norm() < 1e-12 * H.scale() * f.norm());
    CHECK(H.scale() == doctest::Approx(dense.cwiseAbs().rowwise().sum().maxCoeff()));
  }
}

TEST_CASE("Dirichlet eigenvalues: closed form and dense diagonalisation") {
  const GridSpec g{1, 1.0, 64, Boundary::dirichlet};
  const auto H = assemble_hamiltonian(g, Eigen::VectorXd::Zero(g.size()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(H.matrix()));
  const double h = g.spacing();
  for (int j = 1; j <= 63; ++j) {
    const double exact = 4 / (h * h) * std::pow(std::sin(j * pi / (2 * 64)), 2);
    CHECK(std::abs(es.eigenvalues()[j - 1] - exact) < 1e-10 * H.scale());
  }
}

TEST_CASE("potential diagonal matches pointwise evaluation") {
  const auto islands = build_annular_islands(0.5, 2);
  const IslandPotential p(islands, sample_disorder(CompactDistribution::uniform(-2.0, 2.0), islands.size(), 8), 0.0);
  const GridSpec g{2, 4.0, 64, Boundary::dirichlet};
  const auto H = assemble_hamiltonian(g, p);
  for (Eigen::Index i = 0; i < g.size(); ++i) CHECK(H.potential()[i] == eval_potential(p, g.point(i)));
  const Eigen::VectorXd b = commutator_offset_on_grid(g, p);
  for (Eigen::Index i = 0; i < g.size(); i += 7) CHECK(b[i] == eval_commutator_offset(p, g.point(i)));

  CHECK(potential_hash(H.potential()) == potential_hash(potential_on_grid(g, p)));
  Eigen::VectorXd changed = H.potential();
  changed[100] += 1e-15;
  CHECK(potential_hash(changed) != potential_hash(H.potential()));
  CHECK(potential_hash(Eigen::VectorXd::Constant(3, -0.0)) == potential_hash(Eigen::VectorXd::Zero(3)));
}

TEST_CASE("dilation generator") {
  SUBCASE("Hermitian on functions away from the boundary") {
    const GridSpec g{2, 10.0, 64, Boundary::dirichlet};
    const Eigen::VectorXcd f = gaussian(g, 1.0, Eigen::Vector2d(1, -0.5));
    Eigen::VectorXcd u = gaussian(g, 1.5, Eigen::Vector2d(-0.3, 0.2));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] *= std::polar(1.0, g.point(i)[0]);
    const cplx lhs = apply_dilation_generator(g, f).dot(u);
    const cplx rhs = f.dot(apply_dilation_generator(g, u));
    CHECK(std::abs(lhs - rhs) < 1e-12 * f.norm() * u.norm());
  }
  SUBCASE("Gaussian: second-order agreement with -i (x f' + f / 2)") {
    double previous = 0.0;
    for (int n : {64, 128, 256}) {
      const GridSpec g{1, 8.0, n, Boundary::dirichlet};
      const Eigen::VectorXcd f = gaussian(g, 1.0, Eigen::VectorXd::Zero(1));
      const Eigen::VectorXcd Af = apply_dilation_generator(g, f);
      double err = 0.0;
      for (Eigen::Index i = 0; i < f.size(); ++i) {
        const double x = g.point(i)[0];
        const cplx exact = cplx(0, -1) * (x * (-x) * f[i] + 0.5 * f[i]);
        err = std::max(err, std::abs(Af[i] - exact));
      }
      if (previous > 0) CHECK(std::log2(previous / err) == doctest::Approx(2.0).epsilon(0.1));
      previous = err;
    }
  }
  SUBCASE("constant function: -(i d / 2) f in the interior") {
    const GridSpec g{2, 5.0, 40, Boundary::periodic};
    const Eigen::VectorXcd f = Eigen::VectorXcd::Ones(g.size());
    const Eigen::VectorXcd Af = apply_dilation_generator(g, f);
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (g.point(i).cwiseAbs().maxCoeff() < 4.5) CHECK(std::abs(Af[i] - cplx(0, -1)) < 1e-12);
  }
}

TEST_CASE("free commutator residual converges at second order") {
  std::vector<double> residuals;
  for (int n : {64, 128, 256}) {
    const GridSpec g{1, 12.0, n, Boundary::dirichlet};
    const auto H = assemble_hamiltonian(g, Eigen::VectorXd::Zero(g.size()));
    residuals.push_back(commutator_residual(H, Eigen::VectorXd::Zero(g.size()), gaussian(g, 1.0, Eigen::VectorXd::Zero(1))));
  }
  CHECK(residuals[2] < residuals[1]);
  CHECK(std::log2(residuals[0] / residuals[1]) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(std::log2(residuals[1] / residuals[2]) == doctest::Approx(2.0).epsilon(0.1));

  const GridSpec g{1, 4.0, 64, Boundary::dirichlet};
  const auto H = assemble_hamiltonian(g, Eigen::VectorXd::Zero(g.size()));
  CHECK_THROWS_AS(commutator_residual(H, Eigen::VectorXd::Zero(g.size()), gaussian(g, 2.0, Eigen::VectorXd::Zero(1))),
                  PreconditionError);
}

TEST_CASE("commutator residual with an island potential is small and decreasing") {
  IslandSet s;
  s.dim = 1;
  s.beta = 1.0;
  s.c1 = s.c2 = 0.5;
  s.islands.push_back({Eigen::VectorXd::Constant(1, 2.0), 1.0});
  const IslandPotential p(s, std::vector<double>{-3.0}, 0.0);
  double previous = 0.0;
  for (int n : {128, 256, 512}) {
    const GridSpec g{1, 12.0, n, Boundary::dirichlet};
    const auto H = assemble_hamiltonian(g, p);
    const double r = commutator_residual(H, commutator_offset_on_grid(g, p), gaussian(g, 1.0, Eigen::VectorXd::Constant(1, 1.0)));
    if (previous > 0) CHECK(r < previous);
    previous = r;
  }
  CHECK(previous < 0.1);
}

TEST_CASE("boundary weight") {
  const GridSpec g{1, 10.0, 100, Boundary::periodic};
  Eigen::VectorXd f = Eigen::VectorXd::Zero(g.size());
  f[50] = 1.0;
  CHECK(boundary_weight(g, f) == 0.0);
  f[0] = 1.0;
  CHECK(boundary_weight(g, f) == 0.5);
  CHECK(boundary_weight(g, Eigen::VectorXd::Ones(g.size()).eval()) == doctest::Approx(0.1).epsilon(0.11));
  CHECK_THROWS_AS(boundary_weight(g, Eigen::VectorXd::Zero(g.size()).eval()), PreconditionError);
}
