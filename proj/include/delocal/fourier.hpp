#pragma once

#include <Eigen/Dense>

#include "delocal/grid.hpp"

namespace delocal {

/// Signed wavenumber 2 pi m / (N h) of DFT index k (m = k for k < N/2, else k - N).
double grid_frequency(const GridSpec& grid, int k) noexcept;

/// In-place d-dimensional DFT over a periodic grid (axis 0 fastest).
/// The inverse includes the 1/N^d factor.
void dft_inplace(const GridSpec& grid, Eigen::VectorXcd& data, bool inverse);

/// Samples of the continuum transform g^(xi_m) = integral g(x) e^{-i xi.x} dx,
/// approximated by h^d e^{i xi_m.L} DFT(g)_m (exact for band-limited g).
Eigen::VectorXcd to_spectral_samples(const GridSpec& grid, const Eigen::VectorXcd& g);
/// Inverse of to_spectral_samples.
Eigen::VectorXcd from_spectral_samples(const GridSpec& grid, const Eigen::VectorXcd& samples);

/// Wavevector of flat spectral index.
Eigen::VectorXd wavevector(const GridSpec& grid, Eigen::Index flat);

/// sqrt(h^d sum |g|^2).
double l2_norm(const GridSpec& grid, const Eigen::VectorXcd& g);
/// h^d sum conj(a) b.
std::complex<double> inner(const GridSpec& grid, const Eigen::VectorXcd& a,
                           const Eigen::VectorXcd& b);

}  // namespace delocal
