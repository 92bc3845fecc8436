#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "delocal/bump.hpp"
#include "delocal/grid.hpp"

namespace delocal {

/// f^(xi) = A prod_j bump((xi_j - c_j) / w) on a periodic grid. The support
/// box stays a margin away from every coordinate axis and inside the Nyquist
/// band. Grid values carry unit norm in sqrt(h^d sum |f|^2).
class BandLimitedTestFunction {
 public:
  BandLimitedTestFunction(const GridSpec& grid, Eigen::VectorXd centers, double width,
                          double margin = 0.05, double envelope_tolerance = 1e-6,
                          BumpProfile profile = BumpProfile{});

  const GridSpec& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& centers() const noexcept { return centers_; }
  double width() const noexcept { return width_; }
  int dim() const noexcept { return grid_.dim; }
  const BumpProfile& profile() const noexcept { return profile_; }

  /// Continuum spectral factor on one axis: A_j bump((xi - c_j)/w); the
  /// product over axes is unit-normalised in (2 pi)^{-d} integral |f^|^2.
  double axis_spectrum(int axis, double xi) const;
  double spectrum(const Eigen::VectorXd& xi) const;
  std::pair<double, double> axis_support(int axis) const {
    return {centers_[axis] - width_, centers_[axis] + width_};
  }

  const Eigen::VectorXcd& values() const noexcept { return values_; }
  /// max_j (|c_j| + w).
  double max_frequency() const;
  /// Sup-norm distance of the |f|^2 centroid from the origin.
  double centre_offset() const noexcept { return centre_offset_; }
  /// Smallest r with all but `envelope_tolerance` of |f|^2 inside the sup-norm
  /// ball of radius r. The tails of a bump spectrum are only stretched-
  /// exponential, so tighter tolerances inflate the box quickly.
  double envelope_radius() const noexcept { return envelope_radius_; }
  /// L needed for the packet to stay inside the box up to time |t|.
  double required_half_length(double t) const;

 private:
  GridSpec grid_;
  Eigen::VectorXd centers_;
  double width_;
  BumpProfile profile_;
  double axis_amplitude_ = 0.0;
  Eigen::VectorXcd values_;
  double centre_offset_ = 0.0;
  double envelope_radius_ = 0.0;
};

BandLimitedTestFunction make_test_function(const GridSpec& grid, const Eigen::VectorXd& centers,
                                           double width, double margin = 0.05,
                                           double envelope_tolerance = 1e-6);

/// Multiplier e^{-i |xi|^2 t} on the DFT of g (continuum symbol).
Eigen::VectorXcd propagate_free(const GridSpec& grid, const Eigen::VectorXcd& g, double t);

/// Throws DomainError naming the needed L when f's packet leaves its box by time t.
void require_inside_box(const BandLimitedTestFunction& f, double t);

/// e^{i Delta t} f; throws DomainError naming the needed L when the packet
/// would leave the box.
Eigen::VectorXcd evolve_free(const BandLimitedTestFunction& f, double t);

/// || V e^{i Delta t} f || for a multiplication potential sampled on f's grid.
double cook_integrand(const Eigen::VectorXd& potential, const BandLimitedTestFunction& f, double t);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;  // 95% confidence half-width of the slope
  std::size_t points = 0;
};

/// Least-squares slope of log(value) against log(t).
SlopeFit decay_slope(const std::vector<double>& ts, const std::vector<double>& values);

/// n log-uniform points on [lo, hi].
std::vector<double> geometric_times(double lo, double hi, std::size_t n);
/// Running trapezoid integral, starting at 0.
std::vector<double> cumulative_trapezoid(const std::vector<double>& ts,
                                         const std::vector<double>& values);

nlohmann::json to_json(const SlopeFit& fit);

}  // namespace delocal
