#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "delocal/errors.hpp"
#include "delocal/geometry.hpp"

using namespace delocal;

namespace {

// Independent pairwise check: closed gamma-balls must not overlap beyond tangency.
bool pairwise_disjoint(const IslandSet& s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double gap = (s.islands[i].center - s.islands[j].center).norm() -
                         s.gamma * (s.islands[i].radius + s.islands[j].radius);
      if (gap < -1e-12) return false;
    }
  return true;
}

}  // namespace

TEST_CASE("first annulus: twelve unit discs at two moduli") {
  const auto s = build_annular_islands(1.0, 1);
  REQUIRE(s.size() == 12);
  int short_count = 0, long_count = 0;
  std::set<std::pair<double, double>> centres;
  for (const auto& isl : s.islands) {
    CHECK(isl.radius == 1.0);
    const double m = isl.center.norm();
    if (std::abs(m - std::sqrt(10.0)) < 1e-14) ++short_count;
    if (std::abs(m - std::sqrt(18.0)) < 1e-14) ++long_count;
    centres.insert({isl.center[0], isl.center[1]});
  }
  CHECK(short_count == 8);
  CHECK(long_count == 4);
  CHECK(centres.size() == 12);
}

TEST_CASE("annulus k scales by 2^(k-1) R") {
  const double R = 0.75;
  const auto s = build_annular_islands(R, 5);
  REQUIRE(s.size() == 60);
  for (int k = 1; k <= 5; ++k) {
    const double a = std::ldexp(R, k - 1);
    int count = 0;
    for (const auto& isl : s.islands) {
      if (isl.radius != a) continue;
      ++count;
      const double m = isl.center.norm() / a;
      CHECK((std::abs(m - std::sqrt(10.0)) < 1e-12 || std::abs(m - std::sqrt(18.0)) < 1e-12));
      // Inside the square annulus 2^k R <= |x|_inf <= 2^{k+1} R.
      CHECK(isl.center.cwiseAbs().maxCoeff() + a <= std::ldexp(R, k + 1) + 1e-12);
      CHECK(isl.center.cwiseAbs().maxCoeff() - a >= std::ldexp(R, k) - 1e-12);
    }
    CHECK(count == 12);
  }
}

TEST_CASE("annular sets are valid and satisfy the radius bounds") {
  CHECK(build_annular_islands(1.0, 0).empty());
  CHECK(validate_island_set(build_annular_islands(1.0, 0)).empty());
  const auto three = build_annular_islands(1.0, 3);
  CHECK(three.size() == 36);
  CHECK(pairwise_disjoint(three));
  for (int k_max : {4, 6}) {
    const auto s = build_annular_islands(1.0, k_max);
    CHECK(validate_island_set(s).empty());
    CHECK(pairwise_disjoint(s));
    for (const auto& isl : s.islands) {
      const double m = isl.center.norm();
      CHECK(isl.radius >= m / (3.0 * std::sqrt(2.0)) * (1 - 1e-12));
      CHECK(isl.radius <= m / std::sqrt(10.0) * (1 + 1e-12));
    }
  }
  CHECK_THROWS_AS(build_annular_islands(0.0, 2), PreconditionError);
}

TEST_CASE("violations name the offending islands") {
  IslandSet s;
  s.dim = 2;
  s.beta = 1.0;
  s.c1 = 0.2;
  s.c2 = 0.4;
  s.islands = {{Eigen::Vector2d(10, 0), 2.0}, {Eigen::Vector2d(10, 0), 2.0}};
  auto v = validate_island_set(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::disjointness);
  CHECK(v[0].first == 0);
  CHECK(v[0].second == std::optional<std::size_t>(1));
  CHECK(v[0].margin == doctest::Approx(-4.0));

  s.islands = {{Eigen::Vector2d(10, 0), 10 * 0.4 * 10}};
  v = validate_island_set(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::comparability);
  CHECK(v[0].margin < 0);

  // Tangent balls are accepted; the origin is exempt from comparability.
  s.islands = {{Eigen::Vector2d(10, 0), 2.5}, {Eigen::Vector2d(15, 0), 2.5}, {Eigen::Vector2d(0, 0), 1.0}};
  s.c1 = 0.1;
  CHECK(validate_island_set(s).empty());
}

TEST_CASE("covered fraction of each annulus is pi/4") {
  const auto s = build_annular_islands(1.0, 3);
  for (int k : {1, 2}) {
    const auto d = island_density(s, k, 1'000'000, 17);
    // Exact ratio: 12 pi a^2 / (16 a^2 * 4 - 16 a^2) with a = 2^{k-1}.
    CHECK(std::abs(d.fraction - std::numbers::pi / 4) < 3 * d.std_error);
    CHECK(d.samples == 1'000'000);
  }
  CHECK(island_density(IslandSet{}, 1, 100, 1).fraction == 0.0);
  CHECK_THROWS_AS(island_density(s, 4, 100, 1), RangeError);
  CHECK_THROWS_AS(island_density(s, 0, 100, 1), RangeError);
  CHECK(island_density(s, 2, 5000, 3).fraction == island_density(s, 2, 5000, 3).fraction);
}

TEST_CASE("greedy packings are valid in one and two dimensions") {
  for (int d : {1, 2}) {
    GreedyPackingSpec spec;
    spec.dim = d;
    spec.beta = 1.0;
    spec.gamma = 0.8;
    spec.extent = d == 1 ? 200.0 : 40.0;
    const auto s = build_greedy_islands(spec);
    CHECK(s.size() > 3);
    CHECK(validate_island_set(s).empty());
    CHECK(pairwise_disjoint(s));
    for (const auto& isl : s.islands) {
      CHECK(isl.center.norm() > 0);
      CHECK(isl.center.norm() <= spec.extent + 1e-12);
      CHECK(isl.radius == doctest::Approx(spec.radius_constant * std::pow(isl.center.norm(), spec.beta)));
    }
  }
  GreedyPackingSpec bad;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(build_greedy_islands(bad), PreconditionError);
}

TEST_CASE("distributions stay in their support") {
  CounterEngine e(5, 0);
  const auto u = CompactDistribution::uniform(-1.0, 2.0);
  const auto b = CompactDistribution::scaled_beta(0.5, 1.5, 2.0, 3.0);
  const auto t = CompactDistribution::two_point(-0.3, 0.7, 0.25);
  int upper = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u.sample(e), y = b.sample(e), z = t.sample(e);
    CHECK((x >= -1.0 && x <= 2.0));
    CHECK((y >= 0.5 && y <= 1.5));
    CHECK((z == -0.3 || z == 0.7));
    upper += z == 0.7;
  }
  // Binomial(20000, 1/4): sd ~ 61.
  CHECK(std::abs(upper - 5000) < 5 * 62);
  CHECK(u.sup_norm() == 2.0);
  CHECK(CompactDistribution::uniform(-3.0, 1.0).sup_norm() == 3.0);
  CHECK_THROWS_AS(CompactDistribution::uniform(1.0, 0.0), PreconditionError);
  CHECK(distribution_kind_from_string(to_string(CompactDistribution::Kind::scaled_beta)) ==
        CompactDistribution::Kind::scaled_beta);
  CHECK_THROWS_AS(distribution_kind_from_string("gaussian"), PreconditionError);
}

TEST_CASE("disorder is reproducible per index") {
  const auto zero = sample_disorder(CompactDistribution::uniform(0.0, 0.0), 50, 3);
  for (double w : zero.couplings) CHECK(w == 0.0);

  const auto dist = CompactDistribution::uniform(-1.0, 1.0);
  const auto a = sample_disorder(dist, 100'000, 99);
  const auto b = sample_disorder(dist, 100'000, 99);
  CHECK(a.couplings == b.couplings);
  double mean = 0.0;
  for (double w : a.couplings) {
    CHECK(std::abs(w) <= 1.0);
    mean += w;
  }
  mean /= static_cast<double>(a.size());
  CHECK(std::abs(mean) < 0.02);

  // A shorter realization is a prefix, and each entry is the per-index draw.
  const auto short_run = sample_disorder(dist, 10, 99);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(short_run[i] == a[i]);
    CHECK(draw_coupling(dist, 99, i) == a[i]);
  }
  CHECK(sample_disorder(dist, 10, 100).couplings != short_run.couplings);
  CHECK_THROWS_AS(sample_disorder(dist, 0, 1), PreconditionError);
}

TEST_CASE("island sets round-trip through JSON") {
  const auto s = build_annular_islands(1.5, 2);
  const auto j = to_json(s);
  CHECK(j.at("d") == 2);
  CHECK(j.at("islands").size() == 24);
  const auto back = island_set_from_json(j);
  REQUIRE(back.size() == s.size());
  CHECK(back.c1 == s.c1);
  CHECK(back.c2 == s.c2);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(back.islands[i].center == s.islands[i].center);
    CHECK(back.islands[i].radius == s.islands[i].radius);
  }
}
