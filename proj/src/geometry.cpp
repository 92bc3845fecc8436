#include "delocal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "delocal/errors.hpp"

namespace delocal {

namespace {

// Relative slack for tangency and comparability bounds; the annular set
// constants are met with equality.
constexpr double kRelativeSlack = 1e-12;

}  // namespace

IslandSet build_annular_islands(double R, int k_max) {
  if (!(R > 0.0)) throw PreconditionError("build_annular_islands: R must be positive");
  if (k_max < 0) throw PreconditionError("build_annular_islands: k_max must be non-negative");

  IslandSet set;
  set.dim = 2;
  set.beta = 1.0;
  set.gamma = 1.0;
  set.c1 = 1.0 / (3.0 * std::sqrt(2.0));
  set.c2 = 1.0 / std::sqrt(10.0);

  for (int k = 1; k <= k_max; ++k) {
    const double a = std::ldexp(R, k - 1);
    const double offsets[] = {-3.0 * a, -a, a, 3.0 * a};
    // Horizontal rows x2 = +-3a, all four x1 offsets.
    for (double x2 : {-3.0 * a, 3.0 * a}) {
      for (double x1 : offsets) {
        set.islands.push_back({Eigen::Vector2d(x1, x2), a});
      }
    }
    // Vertical columns x1 = +-3a; the corners are already present.
    for (double x1 : {-3.0 * a, 3.0 * a}) {
      for (double x2 : {-a, a}) {
        set.islands.push_back({Eigen::Vector2d(x1, x2), a});
      }
    }
  }
  return set;
}

IslandSet build_greedy_islands(const GreedyPackingSpec& spec) {
  if (spec.dim < 1) throw PreconditionError("greedy packing: dimension must be >= 1");
  if (!(spec.radius_constant > 0.0) || !(spec.lattice_spacing > 0.0) || !(spec.extent > 0.0))
    throw PreconditionError("greedy packing: radius constant, spacing and extent must be positive");
  if (!(spec.gamma > 0.0) || spec.gamma > 1.0)
    throw PreconditionError("greedy packing: gamma must lie in (0, 1]");

  const int per_axis = static_cast<int>(std::floor(spec.extent / spec.lattice_spacing));
  const int side = 2 * per_axis + 1;
  std::size_t total = 1;
  for (int j = 0; j < spec.dim; ++j) total *= static_cast<std::size_t>(side);

  std::vector<Eigen::VectorXd> candidates;
  Eigen::VectorXi digits = Eigen::VectorXi::Zero(spec.dim);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int j = 0; j < spec.dim; ++j) {
      digits[j] = static_cast<int>(rest % side) - per_axis;
      rest /= side;
    }
    Eigen::VectorXd x = digits.cast<double>() * spec.lattice_spacing;
    const double norm = x.norm();
    if (norm == 0.0 || norm > spec.extent) continue;
    candidates.push_back(std::move(x));
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
                     const double na = a.squaredNorm(), nb = b.squaredNorm();
                     if (na != nb) return na < nb;
                     return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
                   });

  IslandSet set;
  set.dim = spec.dim;
  set.beta = spec.beta;
  set.gamma = spec.gamma;
  set.c1 = spec.radius_constant;
  set.c2 = spec.radius_constant;
  for (auto& x : candidates) {
    const double r = spec.radius_constant * std::pow(x.norm(), spec.beta);
    bool fits = true;
    for (const auto& other : set.islands) {
      const double gap = spec.gamma * (r + other.radius);
      if ((x - other.center).squaredNorm() < gap * gap * (1.0 - kRelativeSlack)) {
        fits = false;
        break;
      }
    }
    if (fits) set.islands.push_back({std::move(x), r});
  }
  return set;
}

std::vector<Violation> validate_island_set(const IslandSet& set) {
  std::vector<Violation> out;
  const auto n = set.islands.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = set.islands[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& b = set.islands[j];
      const double reach = set.gamma * (a.radius + b.radius);
      const double dist2 = (a.center - b.center).squaredNorm();
      if (dist2 < reach * reach * (1.0 - kRelativeSlack)) {
        out.push_back({Violation::Kind::disjointness, i, j, std::sqrt(dist2) - reach});
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = set.islands[i];
    const double norm = a.center.norm();
    if (norm == 0.0) continue;
    const double scale = std::pow(norm, set.beta);
    const double lo = set.c1 * scale;
    const double hi = set.c2 * scale;
    const bool bad = !(a.radius > 0.0) || a.radius < lo * (1.0 - kRelativeSlack) ||
                     a.radius > hi * (1.0 + kRelativeSlack);
    if (bad) {
      out.push_back({Violation::Kind::comparability, i, std::nullopt,
                     std::min(a.radius - lo, hi - a.radius)});
    }
  }
  return out;
}

DensityEstimate island_density(const IslandSet& set, int k, std::size_t samples,
                               std::uint64_t seed) {
  if (samples == 0) throw PreconditionError("island_density: samples must be positive");
  if (set.empty()) return {0.0, 0.0, samples};
  if (set.dim != 2) throw PreconditionError("island_density: needs a planar annular set");

  double r_min = set.islands.front().radius;
  double r_max = r_min;
  for (const auto& isl : set.islands) {
    r_min = std::min(r_min, isl.radius);
    r_max = std::max(r_max, isl.radius);
  }
  const double R = r_min;
  const int k_max = static_cast<int>(std::lround(std::log2(r_max / R))) + 1;
  if (k < 1 || k > k_max) {
    throw RangeError("island_density: annulus k=" + std::to_string(k) + " outside 1.." +
                     std::to_string(k_max));
  }

  const double inner = std::ldexp(R, k);
  const double outer = std::ldexp(R, k + 1);
  CounterEngine engine(seed, static_cast<std::uint64_t>(k));
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::Vector2d x;
    do {
      x << (2.0 * uniform01(engine) - 1.0) * outer, (2.0 * uniform01(engine) - 1.0) * outer;
    } while (x.cwiseAbs().maxCoeff() <= inner);
    for (const auto& isl : set.islands) {
      if ((x - isl.center).squaredNorm() < isl.radius * isl.radius) {
        ++hits;
        break;
      }
    }
  }
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples};
}

CompactDistribution CompactDistribution::uniform(double a, double b) {
  if (!(a <= b)) throw PreconditionError("uniform distribution needs a <= b");
  return {Kind::uniform, a, b, 0.5, 0.5};
}

CompactDistribution CompactDistribution::scaled_beta(double a, double b, double p, double q) {
  if (!(a <= b)) throw PreconditionError("beta distribution needs a <= b");
  if (!(p > 0.0) || !(q > 0.0)) throw PreconditionError("beta shapes must be positive");
  return {Kind::scaled_beta, a, b, p, q};
}

CompactDistribution CompactDistribution::two_point(double a, double b, double prob_upper) {
  if (!(a <= b)) throw PreconditionError("two-point distribution needs a <= b");
  if (!(prob_upper >= 0.0 && prob_upper <= 1.0))
    throw PreconditionError("two-point probability must lie in [0, 1]");
  return {Kind::two_point, a, b, prob_upper, 0.0};
}

double CompactDistribution::sup_norm() const noexcept {
  return std::max(std::abs(lower), std::abs(upper));
}

double CompactDistribution::sample(CounterEngine& engine) const {
  double value = lower;
  switch (kind) {
    case Kind::uniform:
      value = lower + (upper - lower) * uniform01(engine);
      break;
    case Kind::scaled_beta: {
      std::gamma_distribution<double> gp(shape_p, 1.0), gq(shape_q, 1.0);
      const double x = gp(engine);
      const double y = gq(engine);
      const double frac = (x + y) > 0.0 ? x / (x + y) : 0.5;
      value = lower + (upper - lower) * frac;
      break;
    }
    case Kind::two_point:
      value = uniform01(engine) < shape_p ? upper : lower;
      break;
  }
  return std::clamp(value, lower, upper);
}

std::string to_string(CompactDistribution::Kind kind) {
  switch (kind) {
    case CompactDistribution::Kind::uniform: return "uniform";
    case CompactDistribution::Kind::scaled_beta: return "beta";
    case CompactDistribution::Kind::two_point: return "two-point";
  }
  return "uniform";
}

CompactDistribution::Kind distribution_kind_from_string(const std::string& name) {
  if (name == "uniform") return CompactDistribution::Kind::uniform;
  if (name == "beta" || name == "scaled-beta") return CompactDistribution::Kind::scaled_beta;
  if (name == "two-point") return CompactDistribution::Kind::two_point;
  throw PreconditionError("unknown distribution kind '" + name + "'");
}

double draw_coupling(const CompactDistribution& dist, std::uint64_t seed, std::uint64_t index) {
  CounterEngine engine(seed, index);
  return dist.sample(engine);
}

DisorderRealization sample_disorder(const CompactDistribution& dist, std::size_t index_count,
                                    std::uint64_t seed) {
  if (index_count == 0) throw PreconditionError("sample_disorder: index_count must be >= 1");
  DisorderRealization out;
  out.seed = seed;
  out.distribution = dist;
  out.couplings.resize(index_count);
  for (std::size_t i = 0; i < index_count; ++i) out.couplings[i] = draw_coupling(dist, seed, i);
  return out;
}

nlohmann::json to_json(const IslandSet& set) {
  nlohmann::json islands = nlohmann::json::array();
  for (const auto& isl : set.islands) {
    islands.push_back({{"center", std::vector<double>(isl.center.begin(), isl.center.end())},
                       {"radius", isl.radius}});
  }
  return {{"d", set.dim},   {"beta", set.beta}, {"gamma", set.gamma},
          {"c1", set.c1},   {"c2", set.c2},     {"islands", islands}};
}

IslandSet island_set_from_json(const nlohmann::json& j) {
  IslandSet set;
  set.dim = j.at("d").get<int>();
  set.beta = j.at("beta").get<double>();
  set.gamma = j.at("gamma").get<double>();
  set.c1 = j.at("c1").get<double>();
  set.c2 = j.at("c2").get<double>();
  for (const auto& item : j.at("islands")) {
    const auto c = item.at("center").get<std::vector<double>>();
    if (static_cast<int>(c.size()) != set.dim)
      throw PreconditionError("island centre dimension does not match d");
    set.islands.push_back({Eigen::Map<const Eigen::VectorXd>(c.data(), set.dim),
                           item.at("radius").get<double>()});
  }
  return set;
}

nlohmann::json to_json(const Violation& v) {
  nlohmann::json j;
  j["kind"] = v.kind == Violation::Kind::disjointness ? "disjointness" : "comparability";
  j["first"] = v.first;
  if (v.second) j["second"] = *v.second;
  j["margin"] = v.margin;
  return j;
}

}  // namespace delocal
