#include "delocal/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>

#include "delocal/errors.hpp"
#include "delocal/fourier.hpp"
#include "delocal/io.hpp"
#include "delocal/quadrature.hpp"

namespace delocal {

namespace {

double bump_1d(const BumpProfile& p, double s) { return p.radial_value(s * s); }

double bump_square_integral(const BumpProfile& p) {
  static const GaussLegendre rule(48);
  double acc = 0.0;
  for_each_panel_node(rule, -1.0, 1.0, 8, [&](double x, double w) {
    const double b = bump_1d(p, x);
    acc += w * b * b;
  });
  return acc;
}

}  // namespace

BandLimitedTestFunction::BandLimitedTestFunction(const GridSpec& grid, Eigen::VectorXd centers,
                                                 double width, double margin,
                                                 double envelope_tolerance, BumpProfile profile)
    : grid_(grid), centers_(std::move(centers)), width_(width), profile_(profile) {
  if (grid_.boundary != Boundary::periodic)
    throw PreconditionError("test function: the grid must be periodic");
  grid_.validate();
  if (centers_.size() != grid_.dim) throw PreconditionError("test function: one centre per axis");
  if (!(width_ > 0.0)) throw PreconditionError("test function: width must be positive");
  if (!(margin > 0.0)) throw PreconditionError("test function: margin must be positive");
  if (!(envelope_tolerance > 0.0 && envelope_tolerance < 1.0))
    throw PreconditionError("test function: envelope tolerance must lie in (0, 1)");
  const double nyquist = std::numbers::pi / grid_.spacing();
  for (int j = 0; j < grid_.dim; ++j) {
    if (std::abs(centers_[j]) - width_ < margin) {
      throw PreconditionError("test function: support on axis " + std::to_string(j) +
                              " comes within " + format_number(margin) + " of a coordinate axis");
    }
    if (!(std::abs(centers_[j]) + width_ < nyquist)) {
      throw PreconditionError("test function: support on axis " + std::to_string(j) +
                              " exceeds the Nyquist frequency " + format_number(nyquist));
    }
  }
  axis_amplitude_ = std::sqrt(2.0 * std::numbers::pi / (width_ * bump_square_integral(profile_)));

  Eigen::VectorXcd samples(grid_.size());
  for (Eigen::Index i = 0; i < samples.size(); ++i) samples[i] = spectrum(wavevector(grid_, i));
  values_ = from_spectral_samples(grid_, samples);
  values_ /= l2_norm(grid_, values_);

  const Eigen::VectorXd mass = values_.cwiseAbs2() / values_.squaredNorm();
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(grid_.dim);
  std::vector<std::pair<double, double>> by_radius;
  by_radius.reserve(static_cast<std::size_t>(mass.size()));
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    const Eigen::VectorXd x = grid_.point(i);
    centroid += mass[i] * x;
    by_radius.emplace_back(x.cwiseAbs().maxCoeff(), mass[i]);
  }
  centre_offset_ = centroid.cwiseAbs().maxCoeff();
  std::sort(by_radius.begin(), by_radius.end(), [](auto& a, auto& b) { return a.first > b.first; });
  double outside = 0.0;
  envelope_radius_ = 0.0;
  for (const auto& [r, m] : by_radius) {
    if (outside + m >= envelope_tolerance) {
      envelope_radius_ = r;
      break;
    }
    outside += m;
  }
}

double BandLimitedTestFunction::axis_spectrum(int axis, double xi) const {
  return axis_amplitude_ * bump_1d(profile_, (xi - centers_[axis]) / width_);
}

double BandLimitedTestFunction::spectrum(const Eigen::VectorXd& xi) const {
  double v = 1.0;
  for (int j = 0; j < grid_.dim && v != 0.0; ++j) v *= axis_spectrum(j, xi[j]);
  return v;
}

double BandLimitedTestFunction::max_frequency() const {
  return centers_.cwiseAbs().maxCoeff() + width_;
}

double BandLimitedTestFunction::required_half_length(double t) const {
  return centre_offset_ + 2.0 * max_frequency() * std::abs(t) + envelope_radius_;
}

BandLimitedTestFunction make_test_function(const GridSpec& grid, const Eigen::VectorXd& centers,
                                           double width, double margin,
                                           double envelope_tolerance) {
  return BandLimitedTestFunction(grid, centers, width, margin, envelope_tolerance);
}

Eigen::VectorXcd propagate_free(const GridSpec& grid, const Eigen::VectorXcd& g, double t) {
  Eigen::VectorXcd data = g;
  if (t == 0.0) return data;
  dft_inplace(grid, data, false);
  for (Eigen::Index i = 0; i < data.size(); ++i)
    data[i] *= std::polar(1.0, -wavevector(grid, i).squaredNorm() * t);
  dft_inplace(grid, data, true);
  return data;
}

void require_inside_box(const BandLimitedTestFunction& f, double t) {
  const double needed = f.required_half_length(t);
  if (f.grid().half_length < needed) {
    throw DomainError("free evolution to t = " + format_number(t) + " leaves the box: need L >= " +
                      format_number(needed) + ", have L = " + format_number(f.grid().half_length));
  }
}

Eigen::VectorXcd evolve_free(const BandLimitedTestFunction& f, double t) {
  require_inside_box(f, t);
  return propagate_free(f.grid(), f.values(), t);
}

double cook_integrand(const Eigen::VectorXd& potential, const BandLimitedTestFunction& f, double t) {
  if (potential.size() != f.grid().size()) throw PreconditionError("cook_integrand: size mismatch");
  const Eigen::VectorXcd g = evolve_free(f, t);
  return l2_norm(f.grid(), (potential.cast<std::complex<double>>().array() * g.array()).matrix());
}

SlopeFit decay_slope(const std::vector<double>& ts, const std::vector<double>& values) {
  if (ts.size() != values.size()) throw PreconditionError("decay_slope: size mismatch");
  if (ts.size() < 8) throw PreconditionError("decay_slope: needs at least 8 time points");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!(ts[i] > 0.0)) throw PreconditionError("decay_slope: nonpositive time t = " + format_number(ts[i]));
    if (!(values[i] > 0.0)) {
      throw PreconditionError("decay_slope: nonpositive value " + format_number(values[i]) +
                              " at t = " + format_number(ts[i]));
    }
  }
  const auto n = static_cast<double>(ts.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mx += std::log(ts[i]);
    my += std::log(values[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double dx = std::log(ts[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(values[i]) - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("decay_slope: times must not all coincide");
  SlopeFit fit;
  fit.points = ts.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = std::log(values[i]) - (fit.intercept + fit.slope * std::log(ts[i]));
    ss_res += r * r;
  }
  const double se = std::sqrt(ss_res / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  fit.half_width = boost::math::quantile(dist, 0.975) * se;
  return fit;
}

std::vector<double> geometric_times(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw PreconditionError("geometric_times: need 0 < lo < hi, n >= 2");
  std::vector<double> ts(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) ts[i] = lo * std::exp(step * static_cast<double>(i));
  ts.back() = hi;
  return ts;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& ts,
                                         const std::vector<double>& values) {
  if (ts.size() != values.size()) throw PreconditionError("cumulative_trapezoid: size mismatch");
  std::vector<double> out(ts.size(), 0.0);
  for (std::size_t i = 1; i < ts.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (values[i] + values[i - 1]);
  return out;
}

nlohmann::json to_json(const SlopeFit& fit) {
  return {{"slope", fit.slope},
          {"intercept", fit.intercept},
          {"confidence_half_width", fit.half_width},
          {"points", fit.points}};
}

}  // namespace delocal
