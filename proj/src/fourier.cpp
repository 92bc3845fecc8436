#include "delocal/fourier.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "delocal/errors.hpp"

namespace delocal {

double grid_frequency(const GridSpec& grid, int k) noexcept {
  const int n = grid.points;
  const int m = k < n / 2 ? k : k - n;
  return 2.0 * std::numbers::pi * m / (n * grid.spacing());
}

void dft_inplace(const GridSpec& grid, Eigen::VectorXcd& data, bool inverse) {
  if (grid.boundary != Boundary::periodic) throw PreconditionError("DFT requires a periodic grid");
  if (data.size() != grid.size()) throw PreconditionError("DFT: size mismatch");
  const int n = grid.points;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> line(static_cast<std::size_t>(n)), out;
  Eigen::Index stride = 1;
  for (int axis = 0; axis < grid.dim; ++axis) {
    const Eigen::Index block = stride * n;
    for (Eigen::Index base = 0; base < data.size(); base += block) {
      for (Eigen::Index off = 0; off < stride; ++off) {
        for (int k = 0; k < n; ++k) line[static_cast<std::size_t>(k)] = data[base + off + k * stride];
        if (inverse) fft.inv(out, line);
        else fft.fwd(out, line);
        for (int k = 0; k < n; ++k) data[base + off + k * stride] = out[static_cast<std::size_t>(k)];
      }
    }
    stride = block;
  }
}

Eigen::VectorXd wavevector(const GridSpec& grid, Eigen::Index flat) {
  Eigen::VectorXd xi(grid.dim);
  const int n = grid.points;
  for (int j = 0; j < grid.dim; ++j) {
    xi[j] = grid_frequency(grid, static_cast<int>(flat % n));
    flat /= n;
  }
  return xi;
}

namespace {

// e^{i s xi.L} per flat index, s = +1 or -1.
Eigen::VectorXcd corner_phase(const GridSpec& grid, double sign) {
  Eigen::VectorXcd phase(grid.size());
  for (Eigen::Index i = 0; i < phase.size(); ++i)
    phase[i] = std::polar(1.0, sign * wavevector(grid, i).sum() * grid.half_length);
  return phase;
}

}  // namespace

Eigen::VectorXcd to_spectral_samples(const GridSpec& grid, const Eigen::VectorXcd& g) {
  Eigen::VectorXcd out = g;
  dft_inplace(grid, out, false);
  out = out.cwiseProduct(corner_phase(grid, 1.0)) * std::pow(grid.spacing(), grid.dim);
  return out;
}

Eigen::VectorXcd from_spectral_samples(const GridSpec& grid, const Eigen::VectorXcd& samples) {
  if (samples.size() != grid.size()) throw PreconditionError("spectral samples: size mismatch");
  Eigen::VectorXcd out = samples.cwiseProduct(corner_phase(grid, -1.0));
  dft_inplace(grid, out, true);
  return out / std::pow(grid.spacing(), grid.dim);
}

double l2_norm(const GridSpec& grid, const Eigen::VectorXcd& g) {
  return std::sqrt(std::pow(grid.spacing(), grid.dim) * g.squaredNorm());
}

std::complex<double> inner(const GridSpec& grid, const Eigen::VectorXcd& a,
                           const Eigen::VectorXcd& b) {
  return std::pow(grid.spacing(), grid.dim) * a.dot(b);
}

}  // namespace delocal
