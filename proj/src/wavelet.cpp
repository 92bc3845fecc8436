#include "delocal/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <memory>
#include <sstream>

#include "delocal/errors.hpp"
#include "delocal/fourier.hpp"
#include "delocal/quadrature.hpp"
#include "delocal/rng.hpp"

namespace delocal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoThirdsPi = 2.0 * kPi / 3.0;

double mollifier(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return std::exp(-1.0 / (s * (1.0 - s)));
}

// G(t) for t in [0, 1/2].
double ramp_integral(double t) {
  static const GaussLegendre rule(24);
  double acc = 0.0;
  for_each_panel_node(rule, 0.0, t, 6, [&](double s, double w) { acc += w * mollifier(s); });
  return acc;
}

double ramp_half() {
  static const double g = ramp_integral(0.5);
  return g;
}

// Pieces of the profile band on the real line.
std::vector<std::pair<double, double>> band_pieces(int type) {
  if (type == 0) return {{-2.0 * kTwoThirdsPi, 2.0 * kTwoThirdsPi}};
  return {{-4.0 * kTwoThirdsPi, -kTwoThirdsPi}, {kTwoThirdsPi, 4.0 * kTwoThirdsPi}};
}

std::vector<double> band_breaks(int type) {
  if (type == 0) return {-2.0 * kTwoThirdsPi, -kTwoThirdsPi, kTwoThirdsPi, 2.0 * kTwoThirdsPi};
  return {-4.0 * kTwoThirdsPi, -2.0 * kTwoThirdsPi, -kTwoThirdsPi,
          kTwoThirdsPi,        2.0 * kTwoThirdsPi,  4.0 * kTwoThirdsPi};
}

void check_type(int type) {
  if (type != 0 && type != 1) throw InvalidIndexError("profile type must be 0 or 1");
}

// Positive-length intersection of [a, b] and [c, d].
std::optional<std::pair<double, double>> intersect(double a, double b, double c, double d) {
  const double lo = std::max(a, c), hi = std::min(b, d);
  const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
  if (hi - lo <= 1e-14 * scale) return std::nullopt;
  return std::make_pair(lo, hi);
}

// Segments of [lo, hi] split at the given break points.
std::vector<std::pair<double, double>> split(double lo, double hi, std::vector<double> breaks) {
  std::sort(breaks.begin(), breaks.end());
  std::vector<std::pair<double, double>> out;
  double start = lo;
  for (double b : breaks) {
    if (b > start && b < hi) {
      out.emplace_back(start, b);
      start = b;
    }
  }
  out.emplace_back(start, hi);
  return out;
}

int panels_for_phase(double phase) {
  return std::max(1, static_cast<int>(std::ceil(phase / 8.0)));
}

double pow2(int e) { return std::ldexp(1.0, e); }

}  // namespace

double meyer_ramp(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  if (t <= 0.5) return 0.5 * ramp_integral(t) / ramp_half();
  return 1.0 - meyer_ramp(1.0 - t);
}

double meyer_scaling_hat(double xi) {
  const double a = std::abs(xi);
  if (a <= kTwoThirdsPi) return 1.0;
  if (a >= 2.0 * kTwoThirdsPi) return 0.0;
  return std::cos(0.5 * kPi * meyer_ramp(3.0 * a / (2.0 * kPi) - 1.0));
}

double meyer_wavelet_modulus(double xi) {
  const double a = std::abs(xi);
  if (a <= kTwoThirdsPi || a >= 4.0 * kTwoThirdsPi) return 0.0;
  if (a <= 2.0 * kTwoThirdsPi) return std::sin(0.5 * kPi * meyer_ramp(3.0 * a / (2.0 * kPi) - 1.0));
  return std::cos(0.5 * kPi * meyer_ramp(3.0 * a / (4.0 * kPi) - 1.0));
}

cplx meyer_wavelet_hat(double xi) {
  const double m = meyer_wavelet_modulus(xi);
  if (m == 0.0) return 0.0;
  return std::polar(m, 0.5 * xi);
}

cplx profile_hat(int type, double xi) {
  check_type(type);
  return type == 0 ? cplx(meyer_scaling_hat(xi)) : meyer_wavelet_hat(xi);
}

std::string to_string(const WaveletIndex& n) {
  std::ostringstream out;
  out << "c=(";
  for (std::size_t j = 0; j < n.c.size(); ++j) out << (j ? "," : "") << n.c[j];
  out << ") n1=" << n.n1 << " n2=(";
  for (std::size_t j = 0; j < n.n2.size(); ++j) out << (j ? "," : "") << n.n2[j];
  out << ")";
  return out.str();
}

std::uint64_t index_key(const WaveletIndex& n) {
  std::uint64_t h = splitmix64(0x57A7E1u + n.c.size());
  for (int c : n.c) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(n.n1)));
  for (long long m : n.n2) h = splitmix64(h ^ static_cast<std::uint64_t>(m));
  return h;
}

std::vector<std::vector<int>> corner_set(int dim) {
  if (dim < 1 || dim > 20) throw PreconditionError("corner_set: dimension out of range");
  std::vector<std::vector<int>> out;
  for (unsigned mask = 1; mask < (1u << dim); ++mask) {
    std::vector<int> c(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) c[static_cast<std::size_t>(j)] = (mask >> (dim - 1 - j)) & 1u;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end());
  return out;
}

cplx psi_c_hat(const std::vector<int>& c, const Eigen::VectorXd& xi) {
  if (static_cast<Eigen::Index>(c.size()) != xi.size())
    throw InvalidIndexError("psi_c_hat: dimension mismatch");
  if (std::none_of(c.begin(), c.end(), [](int v) { return v != 0; }))
    throw InvalidIndexError("psi_c_hat: c = 0 is not in F");
  cplx v = 1.0;
  for (std::size_t j = 0; j < c.size() && v != 0.0; ++j)
    v *= profile_hat(c[j], xi[static_cast<Eigen::Index>(j)]);
  return v;
}

cplx phi_n_hat(const WaveletIndex& n, const Eigen::VectorXd& xi) {
  if (n.c.size() != n.n2.size()) throw InvalidIndexError("phi_n_hat: c and n2 sizes differ");
  const double s = pow2(-n.n1);
  const cplx base = psi_c_hat(n.c, s * xi);
  if (base == 0.0) return 0.0;
  double phase = 0.0;
  for (std::size_t j = 0; j < n.n2.size(); ++j)
    phase -= s * static_cast<double>(n.n2[j]) * xi[static_cast<Eigen::Index>(j)];
  return std::pow(s, 0.5 * n.dim()) * base * std::polar(1.0, phase);
}

void WaveletFamily::validate() const {
  if (dim < 1) throw PreconditionError("wavelet family: dimension must be >= 1");
  if (bounded_axis < 0 || bounded_axis >= dim)
    throw PreconditionError("wavelet family: bounded axis out of range");
  if (K < 0) throw PreconditionError("wavelet family: K must be >= 0");
  if (n1_lo > n1_hi) throw PreconditionError("wavelet family: empty scale window");
  if (n2_bound < 0) throw PreconditionError("wavelet family: n2 bound must be >= 0");
}

bool WaveletFamily::contains(const WaveletIndex& n) const {
  if (n.dim() != dim || static_cast<int>(n.n2.size()) != dim) return false;
  if (std::none_of(n.c.begin(), n.c.end(), [](int v) { return v != 0; })) return false;
  if (n.n1 < n1_lo || n.n1 > n1_hi) return false;
  for (int j = 0; j < dim; ++j) {
    const long long bound = j == bounded_axis ? K : n2_bound;
    if (std::llabs(n.n2[static_cast<std::size_t>(j)]) > bound) return false;
  }
  return true;
}

std::size_t WaveletFamily::size() const {
  std::size_t translations = 1;
  for (int j = 0; j < dim; ++j)
    translations *= static_cast<std::size_t>(2 * (j == bounded_axis ? K : n2_bound) + 1);
  return ((std::size_t{1} << dim) - 1) * static_cast<std::size_t>(n1_hi - n1_lo + 1) * translations;
}

std::vector<WaveletIndex> WaveletFamily::indices() const {
  validate();
  std::vector<WaveletIndex> out;
  out.reserve(size());
  for (const auto& c : corner_set(dim)) {
    for (int n1 = n1_lo; n1 <= n1_hi; ++n1) {
      std::vector<long long> n2(static_cast<std::size_t>(dim));
      for (int j = 0; j < dim; ++j) n2[static_cast<std::size_t>(j)] = -(j == bounded_axis ? K : n2_bound);
      while (true) {
        out.push_back({c, n1, n2});
        int j = 0;
        for (; j < dim; ++j) {
          const long long bound = j == bounded_axis ? K : n2_bound;
          auto& v = n2[static_cast<std::size_t>(j)];
          if (v < bound) {
            ++v;
            break;
          }
          v = -bound;
        }
        if (j == dim) break;
      }
    }
  }
  return out;
}

nlohmann::json to_json(const WaveletFamily& family) {
  return {{"d", family.dim},           {"bounded_axis", family.bounded_axis},
          {"K", family.K},             {"n1_window", {family.n1_lo, family.n1_hi}},
          {"n2_bound", family.n2_bound}, {"size", family.size()}};
}

WaveletCouplings WaveletCouplings::random(CompactDistribution dist, std::uint64_t seed) {
  WaveletCouplings w;
  w.mode_ = Mode::random;
  w.dist_ = dist;
  w.seed_ = seed;
  return w;
}

WaveletCouplings WaveletCouplings::constant(double value) {
  WaveletCouplings w;
  w.mode_ = Mode::constant;
  w.value_ = value;
  return w;
}

WaveletCouplings WaveletCouplings::single(WaveletIndex index, double value) {
  WaveletCouplings w;
  w.mode_ = Mode::single;
  w.only_ = std::move(index);
  w.value_ = value;
  return w;
}

double WaveletCouplings::operator()(const WaveletIndex& n) const {
  switch (mode_) {
    case Mode::random: return draw_coupling(dist_, seed_, index_key(n));
    case Mode::constant: return value_;
    case Mode::single: return n == only_ ? value_ : 0.0;
  }
  return 0.0;
}

double WaveletCouplings::sup_bound() const {
  return mode_ == Mode::random ? dist_.sup_norm() : std::abs(value_);
}

bool WaveletCouplings::identically_zero() const { return sup_bound() == 0.0; }

std::optional<WaveletIndex> WaveletCouplings::single_index() const {
  if (mode_ != Mode::single) return std::nullopt;
  return only_;
}

std::vector<int> admissible_scales(const std::vector<int>& c, const BandLimitedTestFunction& f) {
  if (static_cast<int>(c.size()) != f.dim()) throw InvalidIndexError("admissible_scales: dimension mismatch");
  if (std::none_of(c.begin(), c.end(), [](int v) { return v != 0; }))
    throw InvalidIndexError("admissible_scales: c = 0 is not in F");
  std::vector<int> out;
  for (int n1 = -60; n1 <= 60; ++n1) {
    const double stretch = pow2(n1);
    bool all = true;
    for (int j = 0; j < f.dim() && all; ++j) {
      check_type(c[static_cast<std::size_t>(j)]);
      const auto [a, b] = f.axis_support(j);
      bool any = false;
      for (const auto& [p, q] : band_pieces(c[static_cast<std::size_t>(j)]))
        any = any || intersect(a, b, stretch * p, stretch * q).has_value();
      all = any;
    }
    if (all) out.push_back(n1);
  }
  return out;
}

// ---------------------------------------------------------------------------

OverlapEngine::OverlapEngine(const BandLimitedTestFunction& f, double t, long long max_translation,
                             QuadratureOptions options)
    : f_(f), t_(t), max_translation_(max_translation), options_(options) {
  if (max_translation_ < 0) throw PreconditionError("OverlapEngine: negative translation bound");
}

OverlapEngine::Base OverlapEngine::build_base(int axis, int type, int n1, int level) const {
  static thread_local std::map<int, GaussLegendre> rules;
  auto it = rules.find(options_.rule_points);
  if (it == rules.end()) it = rules.emplace(options_.rule_points, GaussLegendre(options_.rule_points)).first;
  const GaussLegendre& rule = it->second;

  Base b;
  b.scale = pow2(-n1);
  const double stretch = pow2(n1);
  const auto [fa, fb] = f_.axis_support(axis);
  const double shift = b.scale * static_cast<double>(max_translation_);
  std::vector<double> breaks;
  for (double x : band_breaks(type)) breaks.push_back(stretch * x);
  const double norm = std::sqrt(b.scale) / (2.0 * kPi);
  for (const auto& [p, q] : band_pieces(type)) {
    const auto piece = intersect(fa, fb, stretch * p, stretch * q);
    if (!piece) continue;
    b.empty = false;
    for (const auto& [u, v] : split(piece->first, piece->second, breaks)) {
      const double phase = std::abs(t_) * std::abs(v * v - u * u) + (shift + 0.5 * b.scale) * (v - u);
      const int panels = panels_for_phase(phase) * level;
      for_each_panel_node(rule, u, v, panels, [&](double xi, double w) {
        const cplx val = norm * std::conj(profile_hat(type, b.scale * xi)) * f_.axis_spectrum(axis, xi) *
                         std::polar(1.0, -xi * xi * t_);
        b.nodes.push_back(xi);
        b.weighted.push_back(w * val);
      });
    }
  }
  return b;
}

cplx OverlapEngine::apply_translation(const Base& b, long long m) {
  cplx acc = 0.0;
  const double k = b.scale * static_cast<double>(m);
  for (std::size_t i = 0; i < b.nodes.size(); ++i) acc += b.weighted[i] * std::polar(1.0, k * b.nodes[i]);
  return acc;
}

const OverlapEngine::Base& OverlapEngine::base(int axis, int type, int n1) {
  check_type(type);
  if (axis < 0 || axis >= f_.dim()) throw PreconditionError("OverlapEngine: axis out of range");
  const auto key = std::make_tuple(axis, type, n1);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  Base coarse = build_base(axis, type, n1, 1);
  if (!coarse.empty) {
    const long long probes[] = {0, max_translation_ / 2, -max_translation_ / 2, max_translation_,
                                -max_translation_};
    // Convergence is judged against the larger of the integrand's l1 mass and
    // its magnitude bound over the support, so slivers where both factors
    // are vanishingly small do not demand relative accuracy.
    const auto [fa, fb] = f_.axis_support(axis);
    const double bound = std::sqrt(coarse.scale) / (2.0 * kPi) * f_.axis_spectrum(axis, f_.centers()[axis]) * (fb - fa);
    for (int level = 2, doublings = 0;; level *= 2, ++doublings) {
      Base fine = build_base(axis, type, n1, level);
      double l1 = 0.0;
      for (const auto& w : fine.weighted) l1 += std::abs(w);
      l1 = std::max(l1, bound);
      double diff = 0.0;
      for (long long m : probes)
        diff = std::max(diff, std::abs(apply_translation(fine, m) - apply_translation(coarse, m)));
      coarse = std::move(fine);
      if (diff <= options_.relative_tolerance * l1) break;
      if (doublings >= options_.max_doublings) {
        throw SolverError("overlap quadrature did not converge for axis " + std::to_string(axis) +
                          ", n1 = " + std::to_string(n1));
      }
    }
  }
  return cache_.emplace(key, std::move(coarse)).first->second;
}

cplx OverlapEngine::axis_factor(int axis, int type, int n1, long long m) {
  if (std::llabs(m) > max_translation_)
    throw PreconditionError("OverlapEngine: translation beyond the configured bound");
  const Base& b = base(axis, type, n1);
  if (b.empty) return 0.0;
  return apply_translation(b, m);
}

std::vector<cplx> OverlapEngine::axis_factors(int axis, int type, int n1, long long bound) {
  if (bound > max_translation_)
    throw PreconditionError("OverlapEngine: translation beyond the configured bound");
  const Base& b = base(axis, type, n1);
  std::vector<cplx> out(static_cast<std::size_t>(2 * bound + 1), 0.0);
  if (b.empty) return out;
  const std::size_t nodes = b.nodes.size();
  std::vector<cplx> step(nodes), phase(nodes);
  for (std::size_t i = 0; i < nodes; ++i) step[i] = std::polar(1.0, b.scale * b.nodes[i]);
  for (long long m = -bound; m <= bound; ++m) {
    // Re-anchor the recurrence every 32 steps to cap rounding drift.
    if ((m + bound) % 32 == 0) {
      for (std::size_t i = 0; i < nodes; ++i)
        phase[i] = std::polar(1.0, b.scale * static_cast<double>(m) * b.nodes[i]);
    }
    cplx acc = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      acc += b.weighted[i] * phase[i];
      phase[i] *= step[i];
    }
    out[static_cast<std::size_t>(m + bound)] = acc;
  }
  return out;
}

cplx OverlapEngine::overlap(const WaveletIndex& n) {
  if (n.dim() != f_.dim() || n.n2.size() != n.c.size())
    throw InvalidIndexError("overlap: index dimension does not match the test function");
  if (std::none_of(n.c.begin(), n.c.end(), [](int v) { return v != 0; }))
    throw InvalidIndexError("overlap: c = 0 is not in F");
  cplx v = 1.0;
  for (int j = 0; j < f_.dim(); ++j) {
    v *= axis_factor(j, n.c[static_cast<std::size_t>(j)], n.n1, n.n2[static_cast<std::size_t>(j)]);
    if (v == 0.0) return 0.0;
  }
  return v;
}

cplx overlap(const WaveletIndex& n, const BandLimitedTestFunction& f, double t) {
  long long bound = 0;
  for (long long m : n.n2) bound = std::max(bound, std::llabs(m));
  OverlapEngine engine(f, t, bound);
  return engine.overlap(n);
}

EnvelopeFit n2_envelope(const std::vector<cplx>& sweep) {
  if (sweep.size() % 2 == 0 || sweep.size() < 7)
    throw PreconditionError("n2_envelope: need an odd sweep with |m| <= B, B >= 3");
  const auto B = static_cast<long long>(sweep.size() / 2);
  auto at = [&](long long m) { return std::abs(sweep[static_cast<std::size_t>(m + B)]); };
  EnvelopeFit fit;
  for (long long m = -2; m <= 2; ++m) fit.C = std::max(fit.C, (1.0 + double(m * m)) * at(m));
  fit.bounded = true;
  double peak = 0.0;
  for (long long m = -B; m <= B; ++m) {
    peak = std::max(peak, at(m));
    if (at(m) > fit.C / (1.0 + double(m * m)) * (1.0 + 1e-12)) fit.bounded = false;
  }
  std::vector<double> env(static_cast<std::size_t>(B + 1), 0.0);
  double running = 0.0;
  for (long long m = B; m >= 0; --m) {
    running = std::max({running, at(m), at(-m)});
    env[static_cast<std::size_t>(m)] = running;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  double n = 0.0;
  for (long long m = 0; m <= B; ++m) {
    const double e = env[static_cast<std::size_t>(m)];
    if (!(e > 1e-14 * peak)) continue;
    const double x = std::log1p(double(m * m)), y = std::log(e);
    sx += x, sy += y, sxx += x * x, sxy += x * y, syy += y * y, n += 1.0;
  }
  if (n >= 3.0) {
    const double cxx = sxx - sx * sx / n, cxy = sxy - sx * sy / n, cyy = syy - sy * sy / n;
    fit.slope = cxx > 0.0 ? cxy / cxx : 0.0;
    fit.r_squared = cxx > 0.0 && cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
  }
  return fit;
}

// ---------------------------------------------------------------------------

cplx axis_inner(int type_a, int n1_a, long long m_a, int type_b, int n1_b, long long m_b,
                const QuadratureOptions& options) {
  check_type(type_a);
  check_type(type_b);
  const double sa = pow2(-n1_a), sb = pow2(-n1_b);
  const double freq = sa * static_cast<double>(m_a) - sb * static_cast<double>(m_b);
  const double norm = std::sqrt(sa * sb) / (2.0 * kPi);
  std::vector<double> breaks;
  for (double x : band_breaks(type_a)) breaks.push_back(x / sa);
  for (double x : band_breaks(type_b)) breaks.push_back(x / sb);
  const GaussLegendre rule(options.rule_points);

  std::vector<std::pair<double, double>> segments;
  for (const auto& [p, q] : band_pieces(type_a)) {
    for (const auto& [r, s] : band_pieces(type_b)) {
      if (auto piece = intersect(p / sa, q / sa, r / sb, s / sb)) {
        for (const auto& seg : split(piece->first, piece->second, breaks)) segments.push_back(seg);
      }
    }
  }
  if (segments.empty()) return 0.0;

  auto integrate = [&](int level, double& l1) {
    cplx acc = 0.0;
    l1 = 0.0;
    for (const auto& [u, v] : segments) {
      const double phase = (std::abs(freq) + 0.5 * (sa + sb)) * (v - u);
      for_each_panel_node(rule, u, v, panels_for_phase(phase) * level, [&](double xi, double w) {
        const cplx val = norm * std::conj(profile_hat(type_a, sa * xi)) * profile_hat(type_b, sb * xi) *
                         std::polar(1.0, freq * xi);
        acc += w * val;
        l1 += w * std::abs(val);
      });
    }
    return acc;
  };
  double l1 = 0.0, length = 0.0;
  for (const auto& [u, v] : segments) length += v - u;
  const double bound = norm * length;
  cplx coarse = integrate(1, l1);
  for (int level = 2, doublings = 0;; level *= 2, ++doublings) {
    const cplx fine = integrate(level, l1);
    const bool done = std::abs(fine - coarse) <= options.relative_tolerance * std::max(l1, bound);
    coarse = fine;
    if (done) break;
    if (doublings >= options.max_doublings) throw SolverError("axis_inner: quadrature did not converge");
  }
  return coarse;
}

cplx gram_entry(const WaveletIndex& a, const WaveletIndex& b, const QuadratureOptions& options) {
  if (a.dim() != b.dim() || a.n2.size() != a.c.size() || b.n2.size() != b.c.size())
    throw InvalidIndexError("gram_entry: dimension mismatch");
  cplx v = 1.0;
  for (std::size_t j = 0; j < a.c.size() && v != 0.0; ++j)
    v *= axis_inner(a.c[j], a.n1, a.n2[j], b.c[j], b.n1, b.n2[j], options);
  return v;
}

Eigen::MatrixXcd gram_matrix(const std::vector<WaveletIndex>& indices, const QuadratureOptions& options) {
  const auto n = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXcd G(n, n);
  std::map<std::tuple<int, int, long long, int, int, long long>, cplx> cache;
  auto factor = [&](int ta, int na, long long ma, int tb, int nb, long long mb) {
    const auto key = std::make_tuple(ta, na, ma, tb, nb, mb);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const cplx v = axis_inner(ta, na, ma, tb, nb, mb, options);
    cache.emplace(key, v);
    return v;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i; k < n; ++k) {
      const auto& a = indices[static_cast<std::size_t>(i)];
      const auto& b = indices[static_cast<std::size_t>(k)];
      if (a.dim() != b.dim()) throw InvalidIndexError("gram_matrix: mixed dimensions");
      cplx v = 1.0;
      for (std::size_t j = 0; j < a.c.size() && v != 0.0; ++j)
        v *= factor(a.c[j], a.n1, a.n2[j], b.c[j], b.n1, b.n2[j]);
      G(i, k) = v;
      G(k, i) = std::conj(v);
    }
  }
  return G;
}

// ---------------------------------------------------------------------------

long long TranslationPolicy::bound(const BandLimitedTestFunction& f, int n1, double t) const {
  if (fixed) return *fixed;
  const double reach = f.centre_offset() + 2.0 * f.max_frequency() * std::abs(t) + 2.0 * f.envelope_radius();
  return static_cast<long long>(std::ceil(pow2(n1) * reach)) + pad;
}

namespace {

struct ScaleTables {
  std::vector<int> c;
  int n1 = 0;
  std::vector<long long> bounds;           // per axis
  std::vector<std::vector<cplx>> factors;  // per axis, index m + bound
};

// 1-d factor tables for every admissible (c, n1); the bounded axis uses K.
std::vector<ScaleTables> scale_tables(const WaveletFamily& family, const BandLimitedTestFunction& f,
                                      double t, const TranslationPolicy& policy) {
  family.validate();
  if (family.dim != f.dim()) throw PreconditionError("wavelet family and test function dimensions differ");
  std::vector<std::pair<std::vector<int>, int>> work;
  for (const auto& c : corner_set(family.dim))
    for (int n1 : admissible_scales(c, f)) work.emplace_back(c, n1);
  std::vector<ScaleTables> out;
  // One engine per distinct scale so the quadrature resolves exactly the
  // translations that scale needs.
  std::map<int, std::unique_ptr<OverlapEngine>> engines;
  for (const auto& [c, n1] : work) {
    ScaleTables s;
    s.c = c;
    s.n1 = n1;
    const long long b = policy.bound(f, n1, t);
    auto& engine = engines[n1];
    if (!engine) engine = std::make_unique<OverlapEngine>(f, t, std::max(b, family.K));
    for (int j = 0; j < family.dim; ++j) {
      const long long bj = j == family.bounded_axis ? family.K : b;
      s.bounds.push_back(bj);
      s.factors.push_back(engine->axis_factors(j, c[static_cast<std::size_t>(j)], n1, bj));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Visits every translation vector of the table with the product of factors.
template <typename Visit>
void for_each_translation(const ScaleTables& s, Visit&& visit) {
  const std::size_t d = s.bounds.size();
  std::vector<long long> m(d);
  for (std::size_t j = 0; j < d; ++j) m[j] = -s.bounds[j];
  while (true) {
    cplx v = 1.0;
    for (std::size_t j = 0; j < d && v != 0.0; ++j)
      v *= s.factors[j][static_cast<std::size_t>(m[j] + s.bounds[j])];
    if (v != 0.0) visit(m, v);
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (m[j] < s.bounds[j]) {
        ++m[j];
        break;
      }
      m[j] = -s.bounds[j];
    }
    if (j == d) break;
  }
}

}  // namespace

CookSum cook_sum(const WaveletFamily& family, const WaveletCouplings& omega,
                 const BandLimitedTestFunction& f, double t, const TranslationPolicy& policy) {
  require_inside_box(f, t);
  CookSum out;
  if (omega.identically_zero()) return out;
  if (const auto only = omega.single_index()) {
    // One term, no truncation.
    out.partial = std::abs(omega(*only)) * std::abs(overlap(*only, f, t));
    out.terms = 1;
    out.total = out.partial;
    return out;
  }
  const double M = omega.sup_bound();
  for (const auto& s : scale_tables(family, f, t, policy)) {
    for_each_translation(s, [&](const std::vector<long long>& m, cplx v) {
      out.partial += std::abs(omega({s.c, s.n1, m})) * std::abs(v);
      ++out.terms;
    });
    double inside = 1.0, padded = 1.0;
    for (std::size_t j = 0; j < s.bounds.size(); ++j) {
      double sum = 0.0;
      for (const auto& v : s.factors[j]) sum += std::abs(v);
      double tail = 0.0;
      const long long B = s.bounds[j];
      if (static_cast<int>(j) != family.bounded_axis && B > 0) {
        double C = 0.0;
        for (long long m = -B; m <= B; ++m) {
          if (4 * std::llabs(m) <= 3 * B) continue;
          const double mm = static_cast<double>(m);
          C = std::max(C, std::abs(s.factors[j][static_cast<std::size_t>(m + B)]) * (1.0 + mm * mm));
        }
        tail = C * 2.0 / static_cast<double>(B);
      }
      inside *= sum;
      padded *= sum + tail;
    }
    out.tail += M * (padded - inside);
  }
  out.total = out.partial + out.tail;
  out.flagged = out.tail > 0.1 * out.partial;
  return out;
}

double cook_integrand(const WaveletFamily& family, const WaveletCouplings& omega,
                      const BandLimitedTestFunction& f, double t, const TranslationPolicy& policy) {
  require_inside_box(f, t);
  if (omega.identically_zero()) return 0.0;
  double acc = 0.0;
  for (const auto& s : scale_tables(family, f, t, policy)) {
    for_each_translation(s, [&](const std::vector<long long>& m, cplx v) {
      const double w = omega({s.c, s.n1, m});
      acc += w * w * std::norm(v);
    });
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------

namespace {

// Nonzero samples of one axis factor of Phi^_n on the grid frequencies.
struct AxisSamples {
  std::vector<int> k;
  std::vector<cplx> value;
};

AxisSamples axis_samples(const GridSpec& grid, int type, int n1, long long m) {
  AxisSamples out;
  const double s = pow2(-n1);
  for (int k = 0; k < grid.points; ++k) {
    const double xi = grid_frequency(grid, k);
    const cplx p = profile_hat(type, s * xi);
    if (p == 0.0) continue;
    out.k.push_back(k);
    out.value.push_back(std::sqrt(s) * p * std::polar(1.0, -s * static_cast<double>(m) * xi));
  }
  return out;
}

template <typename Visit>
void for_each_sample(const GridSpec& grid, const std::vector<AxisSamples>& axes, Visit&& visit) {
  const std::size_t d = axes.size();
  for (const auto& a : axes)
    if (a.k.empty()) return;
  std::vector<std::size_t> pos(d, 0);
  while (true) {
    Eigen::Index flat = 0, stride = 1;
    cplx v = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      flat += stride * axes[j].k[pos[j]];
      stride *= grid.points;
      v *= axes[j].value[pos[j]];
    }
    visit(flat, v);
    std::size_t j = 0;
    for (; j < d; ++j) {
      if (++pos[j] < axes[j].k.size()) break;
      pos[j] = 0;
    }
    if (j == d) break;
  }
}

std::vector<AxisSamples> index_samples(const GridSpec& grid, const WaveletIndex& n) {
  std::vector<AxisSamples> axes;
  for (std::size_t j = 0; j < n.c.size(); ++j) axes.push_back(axis_samples(grid, n.c[j], n.n1, n.n2[j]));
  return axes;
}

}  // namespace

Eigen::VectorXcd wavelet_on_grid(const WaveletIndex& n, const GridSpec& grid) {
  if (n.dim() != grid.dim) throw InvalidIndexError("wavelet_on_grid: dimension mismatch");
  Eigen::VectorXcd samples = Eigen::VectorXcd::Zero(grid.size());
  for_each_sample(grid, index_samples(grid, n), [&](Eigen::Index flat, cplx v) { samples[flat] = v; });
  return from_spectral_samples(grid, samples);
}

Eigen::VectorXcd apply_projection_potential(const WaveletFamily& family, const WaveletCouplings& omega,
                                            const GridSpec& grid, const Eigen::VectorXcd& g) {
  family.validate();
  if (family.dim != grid.dim) throw PreconditionError("projection potential: dimension mismatch");
  const Eigen::VectorXcd samples = to_spectral_samples(grid, g);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(grid.size());
  const double cell = std::pow(1.0 / (grid.points * grid.spacing()), grid.dim);  // (dxi / 2pi)^d
  for (const auto& n : family.indices()) {
    const double w = omega(n);
    if (w == 0.0) continue;
    const auto axes = index_samples(grid, n);
    cplx coeff = 0.0;
    for_each_sample(grid, axes, [&](Eigen::Index flat, cplx v) { coeff += std::conj(v) * samples[flat]; });
    coeff *= cell * w;
    if (coeff == 0.0) continue;
    for_each_sample(grid, axes, [&](Eigen::Index flat, cplx v) { out[flat] += coeff * v; });
  }
  return from_spectral_samples(grid, out);
}

double projection_norm_estimate(const WaveletFamily& family, const WaveletCouplings& omega,
                                const GridSpec& grid, int iterations, std::uint64_t seed) {
  CounterEngine engine(seed, 0);
  Eigen::VectorXcd v(grid.size());
  for (auto& x : v) x = cplx(uniform01(engine) - 0.5, uniform01(engine) - 0.5);
  v /= l2_norm(grid, v);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXcd w = apply_projection_potential(family, omega, grid, v);
    estimate = l2_norm(grid, w);
    if (estimate == 0.0) return 0.0;
    v = w / estimate;
  }
  return estimate;
}

}  // namespace delocal
