#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "delocal/evolution.hpp"
#include "delocal/geometry.hpp"

namespace delocal {

using cplx = std::complex<double>;

/// C-infinity ramp: 0 for t <= 0, 1 for t >= 1, nu(t) + nu(1 - t) = 1.
/// nu(t) = G(t) / G(1), G(t) = integral_0^t exp(-1 / (s (1 - s))) ds.
double meyer_ramp(double t);

/// Scaling profile: 1 on |xi| <= 2pi/3, 0 on |xi| >= 4pi/3.
double meyer_scaling_hat(double xi);
/// |psi^(xi)|, supported in 2pi/3 <= |xi| <= 8pi/3.
double meyer_wavelet_modulus(double xi);
/// psi^(xi) = e^{i xi/2} |psi^(xi)|.
cplx meyer_wavelet_hat(double xi);

/// 1-d factor of type c_j in {0, 1}: scaling profile for 0, wavelet for 1.
cplx profile_hat(int type, double xi);

/// Element of F = {0,1}^d \ {0}, a scale and a translation.
struct WaveletIndex {
  std::vector<int> c;
  int n1 = 0;
  std::vector<long long> n2;

  int dim() const noexcept { return static_cast<int>(c.size()); }
  auto operator<=>(const WaveletIndex&) const = default;
};

std::string to_string(const WaveletIndex& n);
/// Stable 64-bit key used to draw the coupling of an index.
std::uint64_t index_key(const WaveletIndex& n);

/// All of F in lexicographic order.
std::vector<std::vector<int>> corner_set(int dim);

/// Psi_c^(xi) = prod_j profile_hat(c_j, xi_j); throws InvalidIndexError for c = 0.
cplx psi_c_hat(const std::vector<int>& c, const Eigen::VectorXd& xi);
/// 2^{-d n1/2} Psi_c^(2^{-n1} xi) e^{-i 2^{-n1} n2.xi}.
cplx phi_n_hat(const WaveletIndex& n, const Eigen::VectorXd& xi);

/// Truncated I_Lambda: |n2[bounded_axis]| <= K, n1 in [n1_lo, n1_hi],
/// |n2_j| <= n2_bound on the other axes.
struct WaveletFamily {
  int dim = 2;
  int bounded_axis = 0;
  long long K = 4;
  int n1_lo = -2;
  int n1_hi = 2;
  long long n2_bound = 64;

  void validate() const;
  bool contains(const WaveletIndex& n) const;
  std::size_t size() const;
  std::vector<WaveletIndex> indices() const;
};

nlohmann::json to_json(const WaveletFamily& family);

/// Couplings omega_n over wavelet indices.
class WaveletCouplings {
 public:
  static WaveletCouplings random(CompactDistribution dist, std::uint64_t seed);
  static WaveletCouplings constant(double value);
  static WaveletCouplings single(WaveletIndex index, double value);

  double operator()(const WaveletIndex& n) const;
  /// Upper bound on |omega_n| over all indices.
  double sup_bound() const;
  bool identically_zero() const;
  /// The one index carrying a nonzero coupling, for `single`.
  std::optional<WaveletIndex> single_index() const;

 private:
  enum class Mode { random, constant, single } mode_ = Mode::constant;
  CompactDistribution dist_;
  std::uint64_t seed_ = 0;
  double value_ = 0.0;
  WaveletIndex only_;
};

/// Scales n1 whose band 2^{n1} x (profile band) meets supp f^ with positive
/// length on every axis. Outside this set every overlap is exactly zero.
std::vector<int> admissible_scales(const std::vector<int>& c, const BandLimitedTestFunction& f);

struct QuadratureOptions {
  int rule_points = 20;
  double relative_tolerance = 1e-9;
  int max_doublings = 12;
};

/// Overlaps <Phi_n, e^{i Delta t} f> for one test function and one time.
/// The integrand separates over axes; each 1-d factor is a Gauss-Legendre
/// sum over supp f^_j intersected with the scaled profile band, cached per
/// (axis, type, n1) so sweeping n2 costs one dot product per value.
class OverlapEngine {
 public:
  OverlapEngine(const BandLimitedTestFunction& f, double t, long long max_translation = 64,
                QuadratureOptions options = {});

  cplx axis_factor(int axis, int type, int n1, long long m);
  /// All translations |m| <= bound at once (phase recurrence).
  std::vector<cplx> axis_factors(int axis, int type, int n1, long long bound);
  cplx overlap(const WaveletIndex& n);
  double time() const noexcept { return t_; }
  const BandLimitedTestFunction& function() const noexcept { return f_; }

 private:
  struct Base {
    bool empty = true;
    double scale = 1.0;  // 2^{-n1}
    std::vector<double> nodes;
    std::vector<cplx> weighted;  // w_k * integrand_k without the translation phase
  };
  const Base& base(int axis, int type, int n1);
  Base build_base(int axis, int type, int n1, int panels_per_segment) const;
  static cplx apply_translation(const Base& b, long long m);

  const BandLimitedTestFunction& f_;
  double t_;
  long long max_translation_;
  QuadratureOptions options_;
  std::map<std::tuple<int, int, int>, Base> cache_;
};

cplx overlap(const WaveletIndex& n, const BandLimitedTestFunction& f, double t);

struct EnvelopeFit {
  double C = 0.0;         // max (1 + m^2) |a_m| over |m| <= 2
  bool bounded = false;   // |a_m| <= C / (1 + m^2) for every m
  double slope = 0.0;     // of log envelope against log(1 + m^2)
  double r_squared = 0.0;
};

/// Envelope check of a translation sweep a_m, m = -B..B (index m + B). The
/// envelope is the outer running maximum of |a_m|; entries below 1e-14 of
/// the peak are left out of the log-log fit.
EnvelopeFit n2_envelope(const std::vector<cplx>& sweep);

/// (1/2pi) integral conj(a^(xi)) b^(xi) dxi for two 1-d factors.
cplx axis_inner(int type_a, int n1_a, long long m_a, int type_b, int n1_b, long long m_b,
                const QuadratureOptions& options = {});
/// <Phi_a, Phi_b> as a product of 1-d inner products.
cplx gram_entry(const WaveletIndex& a, const WaveletIndex& b, const QuadratureOptions& options = {});
Eigen::MatrixXcd gram_matrix(const std::vector<WaveletIndex>& indices,
                             const QuadratureOptions& options = {});

struct CookSum {
  double partial = 0.0;
  double tail = 0.0;
  double total = 0.0;
  bool flagged = false;  // tail above 10% of the partial sum
  std::size_t terms = 0;
};

/// Translation bound per scale: fixed, or kinematic ("auto"), which covers
/// the packet up to time t with `pad` extra translations.
struct TranslationPolicy {
  std::optional<long long> fixed = 64;
  long long pad = 8;
  long long bound(const BandLimitedTestFunction& f, int n1, double t) const;
};

/// sum over the truncated I_Lambda of |omega_n| |<Phi_n, e^{i Delta t} f>| plus a
/// tail bound from an envelope C / (1 + m^2) fitted on 3B/4 < |m| <= B per
/// unbounded axis. Scales are the admissible ones of f; translations follow
/// `policy` on unbounded axes and K on the bounded axis.
CookSum cook_sum(const WaveletFamily& family, const WaveletCouplings& omega,
                 const BandLimitedTestFunction& f, double t, const TranslationPolicy& policy = {});

/// || sum omega_n P_n e^{i Delta t} f || = sqrt(sum omega_n^2 |overlap|^2) by
/// orthonormality. The n1 range of `family` is replaced by the admissible
/// scales of f; the n2 range follows `policy`. Box precondition as evolve_free.
double cook_integrand(const WaveletFamily& family, const WaveletCouplings& omega,
                      const BandLimitedTestFunction& f, double t,
                      const TranslationPolicy& policy = {});

/// Sum omega_n <Phi_n, g> Phi_n on a periodic grid, with inner products as
/// Riemann sums over the grid's spectral samples. Exactly self-adjoint in
/// the grid inner product.
Eigen::VectorXcd apply_projection_potential(const WaveletFamily& family,
                                            const WaveletCouplings& omega, const GridSpec& grid,
                                            const Eigen::VectorXcd& g);

/// Phi_n sampled on a periodic grid.
Eigen::VectorXcd wavelet_on_grid(const WaveletIndex& n, const GridSpec& grid);

/// Largest |eigenvalue| of the projection potential by power iteration.
double projection_norm_estimate(const WaveletFamily& family, const WaveletCouplings& omega,
                                const GridSpec& grid, int iterations = 60,
                                std::uint64_t seed = 1);

}  // namespace delocal
