#include "delocal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "delocal/errors.hpp"
#include "delocal/io.hpp"
#include "delocal/rng.hpp"

namespace delocal {

namespace {

struct ShiftedFactor {
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt;
  double sigma = 0.0;
  std::size_t negatives = 0;
};

std::optional<ShiftedFactor> try_factor(const DiscreteHamiltonian& H, double sigma) {
  Eigen::SparseMatrix<double> shifted = H.matrix();
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= sigma;
  ShiftedFactor f;
  f.sigma = sigma;
  f.ldlt = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  f.ldlt->compute(shifted);
  if (f.ldlt->info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd d = f.ldlt->vectorD();
  const double floor = 1e-14 * std::max(H.scale(), 1.0);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i]) || std::abs(d[i]) <= floor) return std::nullopt;
    if (d[i] < 0.0) ++f.negatives;
  }
  return f;
}

ShiftedFactor factor_with_retry(const DiscreteHamiltonian& H, double sigma,
                                SolverProvenance& prov) {
  const double step = 1e-7 * std::max(H.scale(), 1.0);
  for (int attempt = 0; attempt < 4; ++attempt) {
    const double shift = attempt == 0 ? sigma : sigma + (attempt % 2 ? 1.0 : -1.0) * attempt * step;
    ++prov.factorizations;
    if (auto f = try_factor(H, shift)) return std::move(*f);
    ++prov.shift_retries;
  }
  throw SolverError("LDL^T factorization of H - sigma failed at sigma = " + format_number(sigma) +
                    " after shift perturbation");
}

void canonical_sign(Eigen::VectorXd& v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
}

class WindowSolver {
 public:
  WindowSolver(const DiscreteHamiltonian& H, const SolverOptions& opt, SolverProvenance& prov)
      : H_(H), opt_(opt), prov_(prov) {}

  std::size_t count(double sigma) { return factor_with_retry(H_, sigma, prov_).negatives; }

  void process(double a, double b, std::size_t ca, std::size_t cb, std::size_t need) {
    if (cb <= ca || found_.size() >= need) return;
    const std::size_t c = cb - ca;
    const double width = b - a;
    if (c <= static_cast<std::size_t>(opt_.chunk) || width < 1e-10 * std::max(H_.scale(), 1.0)) {
      resolve(a, b, c);
      return;
    }
    const double mid = 0.5 * (a + b);
    const std::size_t cm = count(mid);
    process(a, mid, ca, std::clamp(cm, ca, cb), need);
    process(mid, b, std::clamp(cm, ca, cb), cb, need);
  }

  std::vector<EigenPair> take() { return std::move(found_); }

 private:
  // All `expected` eigenpairs in [a, b) via shift-invert Lanczos at the
  // midpoint: they are exactly the `expected` eigenvalues nearest to it.
  void resolve(double a, double b, std::size_t expected) {
    const Eigen::Index n = H_.size();
    ShiftedFactor fac = factor_with_retry(H_, 0.5 * (a + b), prov_);
    const double sigma = fac.sigma;
    const double tol = opt_.relative_tolerance * std::max(H_.scale(), 1.0);

    std::vector<Eigen::VectorXd> locked;
    std::vector<double> locked_values;
    std::vector<double> locked_residuals;
    Eigen::Index krylov = std::max<Eigen::Index>(2 * static_cast<Eigen::Index>(expected) + 20, 40);

    for (int attempt = 0; attempt <= opt_.max_restarts + static_cast<int>(expected); ++attempt) {
      if (locked.size() >= expected) break;
      const Eigen::Index free_dim = n - static_cast<Eigen::Index>(locked.size());
      if (free_dim <= 0) break;
      const Eigen::Index m = std::min(krylov, free_dim);

      Eigen::MatrixXd V(n, m);
      Eigen::VectorXd alpha(m), beta(m);
      CounterEngine engine(opt_.seed, (static_cast<std::uint64_t>(attempt) << 32) ^
                                          static_cast<std::uint64_t>(prov_.factorizations));
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform01(engine) - 0.5;
      orthogonalize(v, locked, V, 0);
      v.normalize();

      Eigen::Index steps = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        V.col(j) = v;
        Eigen::VectorXd w = fac.ldlt->solve(v);
        alpha[j] = v.dot(w);
        orthogonalize(w, locked, V, j + 1);
        ++steps;
        const double bnorm = w.norm();
        beta[j] = bnorm;
        if (j + 1 == m) break;
        if (bnorm <= 1e-13 * std::abs(alpha[j]) || bnorm == 0.0) break;
        v = w / bnorm;
      }
      prov_.lanczos_steps += static_cast<std::size_t>(steps);

      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
      for (Eigen::Index j = 0; j < steps; ++j) {
        T(j, j) = alpha[j];
        if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(T);
      const Eigen::MatrixXd ritz = V.leftCols(steps) * tri.eigenvectors();

      // Most dominant (nearest to sigma) first.
      std::vector<Eigen::Index> order(static_cast<std::size_t>(steps));
      for (Eigen::Index i = 0; i < steps; ++i) order[static_cast<std::size_t>(i)] = i;
      std::sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
        return std::abs(tri.eigenvalues()[x]) > std::abs(tri.eigenvalues()[y]);
      });

      for (Eigen::Index i : order) {
        if (locked.size() >= expected) break;
        const double theta = tri.eigenvalues()[i];
        if (theta == 0.0) continue;
        const double guess = sigma + 1.0 / theta;
        if (!(guess >= a && guess < b)) continue;
        Eigen::VectorXd y = ritz.col(i);
        for (const auto& q : locked) y -= q.dot(y) * q;
        const double ynorm = y.norm();
        if (ynorm < 0.5) continue;
        y /= ynorm;
        const Eigen::VectorXd Hy = H_.matrix() * y;
        const double lambda = y.dot(Hy);
        const double res = (Hy - lambda * y).norm();
        if (res > tol || !(lambda >= a && lambda < b)) continue;
        canonical_sign(y);
        locked.push_back(std::move(y));
        locked_values.push_back(lambda);
        locked_residuals.push_back(res);
      }
      krylov *= 2;
    }

    if (locked.size() < expected) {
      throw SolverError("shift-invert Lanczos resolved " + std::to_string(locked.size()) + " of " +
                        std::to_string(expected) + " eigenvalues in [" + format_number(a) + ", " +
                        format_number(b) + ")");
    }
    for (std::size_t i = 0; i < locked.size(); ++i) {
      prov_.max_residual = std::max(prov_.max_residual, locked_residuals[i]);
      found_.push_back({locked_values[i], std::move(locked[i]), locked_residuals[i]});
    }
  }

  // Two passes of classical Gram-Schmidt against locked vectors and the first
  // `cols` Lanczos vectors.
  static void orthogonalize(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& locked,
                            const Eigen::MatrixXd& V, Eigen::Index cols) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : locked) w -= q.dot(w) * q;
      if (cols > 0) {
        const Eigen::VectorXd coeff = V.leftCols(cols).transpose() * w;
        w -= V.leftCols(cols) * coeff;
      }
    }
  }

  const DiscreteHamiltonian& H_;
  const SolverOptions& opt_;
  SolverProvenance& prov_;
  std::vector<EigenPair> found_;
};

}  // namespace

std::size_t count_below(const DiscreteHamiltonian& H, double sigma) {
  SolverProvenance prov;
  return factor_with_retry(H, sigma, prov).negatives;
}

std::vector<EigenPair> solve_window(const DiscreteHamiltonian& H, double E_lo, double E_hi,
                                    std::size_t k_max, const SolverOptions& options,
                                    SolverProvenance* provenance) {
  SolverProvenance local;
  SolverProvenance& prov = provenance ? *provenance : local;
  if (!(E_hi > E_lo) || k_max == 0) return {};

  WindowSolver solver(H, options, prov);
  const std::size_t c_lo = solver.count(E_lo);
  const std::size_t c_hi = solver.count(E_hi);
  if (c_hi <= c_lo) return {};
  const std::size_t need = std::min(c_hi - c_lo, k_max);
  solver.process(E_lo, E_hi, c_lo, c_hi, need);

  auto pairs = solver.take();
  std::sort(pairs.begin(), pairs.end(),
            [](const EigenPair& x, const EigenPair& y) { return x.eigenvalue < y.eigenvalue; });
  if (pairs.size() > need) pairs.resize(need);
  return pairs;
}

double ipr(const Eigen::Ref<const Eigen::VectorXd>& f) {
  const double norm2 = f.squaredNorm();
  if (!(norm2 > 0.0)) throw PreconditionError("ipr: zero vector");
  return f.array().square().square().sum() / (norm2 * norm2);
}

VirialResult virial_residual(const EigenPair& pair, const GridSpec& grid,
                             const Eigen::VectorXd& offset) {
  const auto& f = pair.eigenvector;
  if (offset.size() != f.size()) throw PreconditionError("virial_residual: size mismatch");
  const double norm2 = f.squaredNorm();
  if (!(norm2 > 0.0)) throw PreconditionError("virial_residual: zero eigenvector");
  VirialResult r;
  const double expectation = (offset.array() * f.array().square()).sum() / norm2;
  r.value = std::abs(2.0 * pair.eigenvalue + expectation);
  r.boundary_weight = boundary_weight(grid, f);
  r.caveat = !(r.boundary_weight < 1e-6);
  return r;
}

double mourre_gap(const std::vector<EigenPair>& pairs, const Eigen::VectorXd& offset) {
  if (pairs.empty()) throw PreconditionError("mourre_gap: empty window");
  const auto n = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd F(offset.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (pairs[static_cast<std::size_t>(j)].eigenvector.size() != offset.size())
      throw PreconditionError("mourre_gap: size mismatch");
    F.col(j) = pairs[static_cast<std::size_t>(j)].eigenvector;
  }
  Eigen::MatrixXd M = F.transpose() * offset.asDiagonal() * F;
  for (Eigen::Index j = 0; j < n; ++j) M(j, j) += 2.0 * pairs[static_cast<std::size_t>(j)].eigenvalue;
  M = 0.5 * (M + M.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

DecayFit decay_fit(const GridSpec& grid, const Eigen::Ref<const Eigen::VectorXd>& f,
                   const Eigen::VectorXd& center, std::optional<double> shell_width) {
  if (f.size() != grid.size()) throw PreconditionError("decay_fit: size mismatch");
  if (!(f.squaredNorm() > 0.0)) throw PreconditionError("decay_fit: zero vector");
  const double width = shell_width.value_or(2.0 * grid.spacing());
  if (!(width > 0.0)) throw PreconditionError("decay_fit: shell width must be positive");

  struct Shell {
    double amplitude = 0.0;
    double distance = 0.0;
  };
  std::vector<Shell> shells;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double r = (grid.point(i) - center).norm();
    const auto k = static_cast<std::size_t>(r / width);
    if (k >= shells.size()) shells.resize(k + 1);
    const double a = std::abs(f[i]);
    if (a > shells[k].amplitude) shells[k] = {a, r};
  }
  const double peak = f.cwiseAbs().maxCoeff();
  std::vector<double> xs, ys;
  for (const auto& s : shells) {
    if (s.amplitude > 1e-14 * peak) {
      xs.push_back(s.distance);
      ys.push_back(std::log(s.amplitude));
    }
  }
  if (xs.size() < 4) throw PreconditionError("decay_fit: fewer than 4 shells");

  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  DecayFit fit;
  fit.shells = xs.size();
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.rate = -slope;
  const double ss_res = std::max(syy - slope * sxy, 0.0);
  fit.goodness = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

DensityTable ids_histogram(const std::vector<double>& eigenvalues, std::size_t bins,
                           std::optional<double> lo, std::optional<double> hi) {
  if (bins == 0) throw PreconditionError("ids_histogram: zero bins");
  if (eigenvalues.empty()) throw PreconditionError("ids_histogram: no eigenvalues");
  const auto [mn, mx] = std::minmax_element(eigenvalues.begin(), eigenvalues.end());
  double a = lo.value_or(*mn);
  double b = hi.value_or(*mx);
  if (!(b > a)) {
    a -= 0.5;
    b += 0.5;
  }
  DensityTable t;
  t.total = eigenvalues.size();
  t.counts.assign(bins, 0);
  t.edges.resize(bins + 1);
  const double width = (b - a) / static_cast<double>(bins);
  for (std::size_t k = 0; k <= bins; ++k) t.edges[k] = a + width * static_cast<double>(k);
  t.edges.back() = b;
  for (double e : eigenvalues) {
    if (e < a || e > b) continue;
    auto k = static_cast<std::size_t>((e - a) / width);
    k = std::min(k, bins - 1);
    ++t.counts[k];
  }
  for (std::size_t k = 0; k < bins; ++k) {
    const double frac = static_cast<double>(t.counts[k]) / static_cast<double>(t.total);
    t.fraction.push_back(frac);
    t.density.push_back(frac / (t.edges[k + 1] - t.edges[k]));
  }
  return t;
}

double spacing_ratio_stats(std::vector<double> eigenvalues) {
  if (eigenvalues.size() < 10) throw PreconditionError("spacing_ratio_stats: needs >= 10 levels");
  std::sort(eigenvalues.begin(), eigenvalues.end());
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i + 2 < eigenvalues.size(); ++i) {
    const double s1 = eigenvalues[i + 1] - eigenvalues[i];
    const double s2 = eigenvalues[i + 2] - eigenvalues[i + 1];
    const double hi = std::max(s1, s2);
    if (hi <= 0.0) continue;
    sum += std::min(s1, s2) / hi;
    ++used;
  }
  if (used == 0) throw PreconditionError("spacing_ratio_stats: fully degenerate spectrum");
  return sum / static_cast<double>(used);
}

StateDiagnostics diagnose_state(const EigenPair& pair, const GridSpec& grid,
                                const Eigen::VectorXd& offset) {
  StateDiagnostics s;
  s.eigenvalue = pair.eigenvalue;
  s.residual = pair.residual;
  s.ipr = ipr(pair.eigenvector);
  Eigen::Index peak = 0;
  pair.eigenvector.cwiseAbs().maxCoeff(&peak);
  try {
    const auto fit = decay_fit(grid, pair.eigenvector, grid.point(peak));
    s.decay_rate = fit.rate;
    s.decay_goodness = fit.goodness;
  } catch (const PreconditionError&) {
    s.decay_rate = std::numeric_limits<double>::quiet_NaN();
  }
  const auto v = virial_residual(pair, grid, offset);
  s.boundary_weight = v.boundary_weight;
  s.virial_residual = v.value;
  s.virial_caveat = v.caveat;
  return s;
}

nlohmann::json to_json(const SpectralReport& report) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : report.states) {
    states.push_back({{"eigenvalue", s.eigenvalue},
                      {"ipr", s.ipr},
                      {"decay_rate", s.decay_rate},
                      {"decay_goodness", s.decay_goodness},
                      {"boundary_weight", s.boundary_weight},
                      {"virial_residual", s.virial_residual},
                      {"virial_caveat", s.virial_caveat},
                      {"residual", s.residual}});
  }
  nlohmann::json j;
  j["schema_version"] = 1;
  j["grid"] = to_json(report.grid);
  j["E0"] = report.E0;
  j["E1"] = report.E1 ? nlohmann::json(*report.E1) : nlohmann::json(nullptr);
  j["window"] = {report.window_lo, report.window_hi};
  j["requested"] = report.requested;
  j["solver"] = {{"method", report.provenance.method},
                 {"factorizations", report.provenance.factorizations},
                 {"shift_retries", report.provenance.shift_retries},
                 {"lanczos_steps", report.provenance.lanczos_steps},
                 {"max_residual", report.provenance.max_residual}};
  j["states"] = std::move(states);
  return j;
}

std::string states_csv(const SpectralReport& report) {
  std::ostringstream out;
  out << "eigenvalue,ipr,decay_rate,boundary_weight,virial_residual\n";
  for (const auto& s : report.states) {
    out << format_number(s.eigenvalue) << ',' << format_number(s.ipr) << ','
        << format_number(s.decay_rate) << ',' << format_number(s.boundary_weight) << ','
        << format_number(s.virial_residual) << '\n';
  }
  return out.str();
}

}  // namespace delocal
