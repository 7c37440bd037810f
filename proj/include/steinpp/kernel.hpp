#ifndef STEINPP_KERNEL_HPP
#define STEINPP_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "steinpp/error.hpp"
#include "steinpp/geometry.hpp"

namespace steinpp {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Hermitian kernel of a determinantal process on the sites of a grid space.
///
/// Stored in weighted form M_ij = K(x_i, x_j) sqrt(w_i w_j), which is the
/// matrix of the integral operator in the orthonormal basis of site
/// indicators; its spectrum is the operator spectrum. `superposition` n
/// encodes alpha = -1/n (n = 1 is the determinantal case).
class Kernel {
 public:
  static constexpr double kSpectrumCeiling = 1.0 - 1e-6;
  static constexpr double kSymmetryTolerance = 1e-10;

  using Fn = std::function<cplx(const Point&, const Point&)>;

  /// Evaluates k at every pair of sites. Throws SpectrumError when the
  /// spectrum leaves [0, 1 - 1e-6].
  static Kernel from_function(const Space& grid, const Fn& k, unsigned superposition = 1) {
    const auto n = grid.num_sites();
    const auto& w = grid.as_grid().weights;
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = k(grid.site(i), grid.site(j)) * std::sqrt(w[i] * w[j]);
    return from_weighted(grid, std::move(m), superposition);
  }

  //! Kernel values K(x_i, x_j) given as a matrix.
  static Kernel from_values(const Space& grid, const CMatrix& values, unsigned superposition = 1) {
    const auto n = grid.num_sites();
    if (values.rows() != static_cast<Eigen::Index>(n) || values.cols() != static_cast<Eigen::Index>(n))
      throw std::invalid_argument("kernel: matrix size does not match grid");
    const auto& w = grid.as_grid().weights;
    CMatrix m = values;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) *= std::sqrt(w[i] * w[j]);
    return from_weighted(grid, std::move(m), superposition);
  }

  static Kernel from_weighted(const Space& grid, CMatrix weighted, unsigned superposition = 1) {
    Kernel k(grid, superposition);
    k.init(std::move(weighted), /*clip=*/false);
    return k;
  }

  /// Like from_function, but eigenvalues outside [0, 1 - 1e-6] are clipped
  /// into range; the clipped spectral mass is kept in clipped_mass().
  static Kernel from_function_clipped(const Space& grid, const Fn& k, unsigned superposition = 1) {
    const auto n = grid.num_sites();
    const auto& w = grid.as_grid().weights;
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = k(grid.site(i), grid.site(j)) * std::sqrt(w[i] * w[j]);
    Kernel out(grid, superposition);
    out.init(std::move(m), /*clip=*/true);
    return out;
  }

  [[nodiscard]] const Space& space() const noexcept { return *space_; }
  [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(weighted_.rows()); }
  [[nodiscard]] const CMatrix& weighted() const noexcept { return weighted_; }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  [[nodiscard]] const CMatrix& eigenvectors() const noexcept { return eigenvectors_; }
  [[nodiscard]] unsigned superposition() const noexcept { return superposition_; }
  [[nodiscard]] double alpha() const noexcept { return -1.0 / static_cast<double>(superposition_); }
  [[nodiscard]] double clipped_mass() const noexcept { return clipped_mass_; }

  //! K(x_i, x_j).
  [[nodiscard]] cplx value(std::size_t i, std::size_t j) const {
    const auto& w = space_->as_grid().weights;
    return weighted_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / std::sqrt(w[i] * w[j]);
  }

  //! rho(x_i) = K(x_i, x_i).
  [[nodiscard]] double diagonal_density(std::size_t i) const { return value(i, i).real(); }

  //! Integral of K(x, x), i.e. the expected number of points.
  [[nodiscard]] double trace() const { return weighted_.diagonal().real().sum(); }

  /// Weighted form of J = (I + alpha K)^{-1} K, computed spectrally as
  /// sum_n lambda_n / (1 + alpha lambda_n) h_n h_n^*.
  [[nodiscard]] const CMatrix& associated() const { return associated_; }

  //! J(x_i, x_j).
  [[nodiscard]] cplx associated_value(std::size_t i, std::size_t j) const {
    const auto& w = space_->as_grid().weights;
    return associated()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / std::sqrt(w[i] * w[j]);
  }

  //! beta K for a constant beta in [0, 1].
  [[nodiscard]] Kernel scaled(double beta) const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("kernel: scale must lie in [0, 1]");
    Kernel k(*this);
    k.weighted_ *= beta;
    k.eigenvalues_ *= beta;
    k.refresh_associated();
    return k;
  }

  //! Same kernel with alpha = -1/n.
  [[nodiscard]] Kernel with_superposition(unsigned n) const {
    if (n == 0) throw std::invalid_argument("kernel: superposition count must be >= 1");
    Kernel k(*this);
    k.superposition_ = n;
    k.refresh_associated();
    return k;
  }

  //! K 1_{A x A} where A is the set of sites with keep[i] true.
  [[nodiscard]] Kernel restricted(const std::vector<bool>& keep) const {
    if (keep.size() != size()) throw std::invalid_argument("kernel: restriction mask size mismatch");
    CMatrix m = weighted_;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (!keep[i] || !keep[j]) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
    return from_weighted(*space_, std::move(m), superposition_);
  }

  /// Kernel on the grid rescaled by x -> eps^{1/d} x, whose values are
  /// K(eps^{-1/d} x, eps^{-1/d} y) / eps. Weights scale by eps, so the
  /// weighted matrix and the spectrum are unchanged; the spectral bound is
  /// still re-checked.
  [[nodiscard]] Kernel rescaled(double eps) const {
    if (!(std::isfinite(eps) && eps > 0.0)) throw std::invalid_argument("kernel: rescaling factor must be > 0");
    const auto& g = space_->as_grid();
    const double f = std::pow(eps, 1.0 / g.dim);
    std::vector<Coords> sites = g.sites;
    for (auto& c : sites)
      for (int a = 0; a < g.dim; ++a) c[a] *= f;
    std::vector<double> weights = g.weights;
    for (double& v : weights) v *= eps;
    return from_weighted(Space::grid(g.dim, std::move(sites), std::move(weights)), weighted_, superposition_);
  }

 private:
  Kernel(const Space& grid, unsigned superposition)
      : space_(std::make_shared<Space>(grid)), superposition_(superposition) {
    if (!grid.is_grid()) throw std::invalid_argument("kernel: determinantal kernels live on grid spaces");
    if (superposition == 0) throw std::invalid_argument("kernel: superposition count must be >= 1");
  }

  void init(CMatrix m, bool clip) {
    const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (asym > kSymmetryTolerance * scale) throw SpectrumError("kernel: matrix is not Hermitian");
    m = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    if (es.info() != Eigen::Success) throw SpectrumError("kernel: eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
    bool changed = false;
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
      double& l = eigenvalues_(i);
      if (l < -1e-10 || l > kSpectrumCeiling) {
        if (!clip)
          throw SpectrumError("kernel: eigenvalue " + std::to_string(l) + " outside [0, 1 - 1e-6]");
        const double target = std::clamp(l, 0.0, kSpectrumCeiling);
        clipped_mass_ += std::abs(l - target);
        l = target;
        changed = true;
      } else if (l < 0.0) {
        l = 0.0;
      }
    }
    weighted_ = changed ? CMatrix(eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.adjoint()) : std::move(m);
    refresh_associated();
  }

  void refresh_associated() {
    Eigen::VectorXd mu(eigenvalues_.size());
    for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) mu(i) = eigenvalues_(i) / (1.0 + alpha() * eigenvalues_(i));
    associated_ = eigenvectors_ * mu.asDiagonal() * eigenvectors_.adjoint();
  }

  std::shared_ptr<const Space> space_;
  CMatrix weighted_;
  Eigen::VectorXd eigenvalues_;
  CMatrix eigenvectors_;
  unsigned superposition_ = 1;
  double clipped_mass_ = 0.0;
  CMatrix associated_;
};

// ---------------------------------------------------------------------------
// Stock kernels

/// Gaussian kernel K(x, y) = intensity * exp(-|x - y|^2 / scale^2) on a grid.
inline Kernel gaussian_kernel(const Space& grid, double intensity, double scale, unsigned superposition = 1) {
  if (!(intensity >= 0.0 && scale > 0.0)) throw std::invalid_argument("gaussian kernel: need intensity >= 0, scale > 0");
  return Kernel::from_function(grid, [=](const Point& a, const Point& b) {
    const double r = distance(a, b);
    return cplx(intensity * std::exp(-r * r / (scale * scale)), 0.0);
  }, superposition);
}

/// Polar grid over a disk: `rings` equal-width annuli split into `sectors`
/// equal angular sectors; sites at the (radius, angle) midpoints, weights
/// equal to the annular-sector areas.
inline Space polar_grid(const DiskSpace& disk, int rings, int sectors) {
  if (rings < 1 || sectors < 1) throw std::invalid_argument("polar grid: need rings >= 1 and sectors >= 1");
  std::vector<Coords> sites;
  std::vector<double> weights;
  const double dr = disk.radius / rings;
  const double dt = 2.0 * std::numbers::pi / sectors;
  for (int r = 0; r < rings; ++r) {
    const double r0 = r * dr, r1 = (r + 1) * dr;
    const double rm = 0.5 * (r0 + r1);
    const double area = 0.5 * (r1 * r1 - r0 * r0) * dt;
    for (int s = 0; s < sectors; ++s) {
      const double t = (s + 0.5) * dt;
      sites.push_back({disk.center[0] + rm * std::cos(t), disk.center[1] + rm * std::sin(t), 0.0});
      weights.push_back(area);
    }
  }
  return Space::grid(2, std::move(sites), std::move(weights));
}

struct GinibreKernel {
  Kernel kernel;
  //! Spectral mass moved by clipping, relative to the trace.
  double clipped_fraction = 0.0;
  //! Set when more than 1% of the trace had to be clipped.
  bool warning = false;
};

/// beta-Ginibre kernel (gamma/pi) exp(-(gamma/2beta)(|x|^2+|y|^2)) exp((gamma/beta) x conj(y))
/// restricted to a disk and discretized on a polar grid (coordinates taken
/// relative to the origin of C).
inline GinibreKernel ginibre_kernel(double gamma, double beta, const DiskSpace& disk, int rings, int sectors) {
  if (!(gamma > 0.0)) throw std::invalid_argument("ginibre: gamma must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("ginibre: beta must lie in (0, 1]");
  const Space grid = polar_grid(disk, rings, sectors);
  const Kernel::Fn k = [=](const Point& a, const Point& b) {
    const cplx x(a.x[0], a.x[1]);
    const cplx y(b.x[0], b.x[1]);
    const double gauss = std::exp(-(gamma / (2.0 * beta)) * (std::norm(x) + std::norm(y)));
    return (gamma / std::numbers::pi) * gauss * std::exp((gamma / beta) * x * std::conj(y));
  };
  GinibreKernel out{Kernel::from_function_clipped(grid, k), 0.0, false};
  const double tr = out.kernel.trace();
  out.clipped_fraction = tr > 0.0 ? out.kernel.clipped_mass() / tr : 0.0;
  out.warning = out.clipped_fraction > 0.01;
  return out;
}

}  // namespace steinpp

#endif  // STEINPP_KERNEL_HPP
