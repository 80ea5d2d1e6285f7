#pragma once

#include "renormalens/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <utility>
#include <vector>

namespace renormalens {

// ---------------------------------------------------------------------------
// Classical states on uniform (product) grids

struct UniformGrid {
  double min = 0.0;
  double max = 1.0;
  int n = 2;

  double step() const { return (max - min) / (n - 1); }
  double point(int i) const { return min + i * step(); }
  Vec points() const { return Vec::LinSpaced(n, min, max); }
  bool operator==(const UniformGrid& o) const { return min == o.min && max == o.max && n == o.n; }
};

// Density values on a row-major product of uniform axes. Values are densities
// (not masses): every sum over the grid carries the cell volume.
class GridDistribution {
 public:
  GridDistribution() = default;
  GridDistribution(double grid_min, double grid_max, Vec values);
  GridDistribution(std::vector<UniformGrid> axes, Vec values);

  const std::vector<UniformGrid>& axes() const { return axes_; }
  const Vec& values() const { return values_; }
  int n_axes() const { return static_cast<int>(axes_.size()); }
  Eigen::Index size() const { return values_.size(); }

  // 1D accessors; throw DimensionMismatch on multi-axis grids.
  double grid_min() const;
  double grid_max() const;
  int n_points() const;
  double dx() const { return cell_; }
  Vec points() const;

  // Coordinate of flat index i along axis a.
  double coordinate(Eigen::Index i, int a) const;
  // All coordinates along axis a as a vector over the flat index.
  Vec coordinates(int a) const;

 private:
  std::vector<UniformGrid> axes_;
  Vec values_;
  double cell_ = 1.0;
};

double cell_volume(const std::vector<UniformGrid>& axes);
Eigen::Index grid_size(const std::vector<UniformGrid>& axes);
// Coordinates along axis a for every flat (row-major) grid index.
Vec axis_coordinates(const std::vector<UniformGrid>& axes, int a);

// c2 x^2 + c4 x^4 + c6 x^6
struct EffectiveHamiltonian1D {
  std::map<int, double> coefficients;

  EffectiveHamiltonian1D() = default;
  explicit EffectiveHamiltonian1D(std::map<int, double> c) : coefficients(std::move(c)) {}
  static EffectiveHamiltonian1D from_tau(double tau, double lambda = 0.0, double inv_cutoff = 0.0);

  double c(int degree) const;
  double operator()(double x) const;
  int leading_degree() const;
  void validate() const;
};

GridDistribution build_gibbs_1d(const EffectiveHamiltonian1D& h, double grid_min, double grid_max,
                                int n_points);

// Expectation of x^k; 1D only.
double moment(const GridDistribution& p, int k);

double expectation(const GridDistribution& rho, const Vec& a);
double relative_entropy(const GridDistribution& rho_prime, const GridDistribution& rho);
Vec omega_inv(const GridDistribution& rho, const Vec& y);
Vec omega(const GridDistribution& rho, const Vec& b);
double metric_inner(const GridDistribution& rho, const Vec& x, const Vec& y);
// <A,B> for observables: sum rho A B dx
double observable_inner(const GridDistribution& rho, const Vec& a, const Vec& b);
void check_feature(const GridDistribution& rho, const Vec& x, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Classical and quantum Gaussian states

struct ClassicalGaussianState {
  Mat A;
  int n_modes() const { return static_cast<int>(A.rows()); }
  void validate() const;
};

struct QuantumGaussianState {
  Mat A;
  Mat Delta;
  int n_modes() const { return static_cast<int>(A.rows() / 2); }
  void validate() const;
};

// Standard symplectic form diag(J, ..., J), J = [[0, 1], [-1, 0]].
Mat standard_symplectic(int n_modes);

// ---------------------------------------------------------------------------
// Finite-dimensional quantum states

constexpr double kDegeneracyRel = 1e-12;
constexpr double kRankRel = 1e-12;

template <class Scalar>
struct DensityMatrix {
  using Matrix = MatrixX<Scalar>;
  Matrix entries;

  DensityMatrix() = default;
  explicit DensityMatrix(Matrix m) : entries(std::move(m)) {}

  int dim() const { return static_cast<int>(entries.rows()); }

  void validate(double tol = 1e-12) const {
    require(entries.rows() == entries.cols() && entries.rows() > 0, Errc::InvalidState,
            "density matrix must be square and nonempty");
    require((entries - entries.adjoint()).cwiseAbs().maxCoeff() <= tol, Errc::InvalidState,
            "density matrix not Hermitian");
    require(std::abs(real_part(entries.trace()) - 1.0) <= tol, Errc::InvalidState,
            "density matrix trace != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(entries, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -tol, Errc::InvalidState,
            "density matrix not positive semidefinite");
  }
};

using DensityMatrixR = DensityMatrix<double>;
using DensityMatrixC = DensityMatrix<cplx>;

// Eigen-decomposition of a faithful state, rho = U diag(p) U^*.
template <class Scalar>
struct StateSpectrum {
  Vec p;
  MatrixX<Scalar> U;
};

template <class Scalar>
StateSpectrum<Scalar> faithful_spectrum(const DensityMatrix<Scalar>& rho) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> es(rho.entries);
  require(es.info() == Eigen::Success, Errc::InvalidState, "eigensolver failed on state");
  StateSpectrum<Scalar> s{es.eigenvalues(), es.eigenvectors()};
  const double pmax = s.p.maxCoeff();
  const double tol = kRankRel * rho.dim() * std::max(pmax, 0.0);
  require(s.p.minCoeff() > tol, Errc::NonPositiveState,
          "state eigenvalue below rank tolerance");
  return s;
}

// Inverse BKM kernel entry (log a - log b)/(a - b), with the 1/a limit.
inline double bkm_inverse_kernel(double a, double b, double pmax) {
  const double d = a - b;
  if (std::abs(d) < kDegeneracyRel * pmax) return 2.0 / (a + b);
  return std::log1p(d / b) / d;
}

template <class Scalar>
Mat bkm_inverse_kernel_matrix(const Vec& p) {
  const Eigen::Index d = p.size();
  const double pmax = p.maxCoeff();
  Mat k(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) k(i, j) = bkm_inverse_kernel(p(i), p(j), pmax);
  return k;
}

template <class Scalar>
MatrixX<Scalar> apply_function(const StateSpectrum<Scalar>& s, double (*fn)(double)) {
  Vec f = s.p.unaryExpr([fn](double v) { return fn(v); });
  return s.U * f.asDiagonal() * s.U.adjoint();
}

template <class Scalar>
MatrixX<Scalar> omega_inv(const DensityMatrix<Scalar>& rho, const MatrixX<Scalar>& y) {
  require(y.rows() == rho.dim() && y.cols() == rho.dim(), Errc::DimensionMismatch,
          "omega_inv: operand dimension");
  const auto s = faithful_spectrum(rho);
  MatrixX<Scalar> yp = s.U.adjoint() * y * s.U;
  yp = yp.cwiseProduct(bkm_inverse_kernel_matrix<Scalar>(s.p).template cast<Scalar>());
  return s.U * yp * s.U.adjoint();
}

template <class Scalar>
MatrixX<Scalar> omega(const DensityMatrix<Scalar>& rho, const MatrixX<Scalar>& b) {
  require(b.rows() == rho.dim() && b.cols() == rho.dim(), Errc::DimensionMismatch,
          "omega: operand dimension");
  const auto s = faithful_spectrum(rho);
  MatrixX<Scalar> bp = s.U.adjoint() * b * s.U;
  const Mat k = bkm_inverse_kernel_matrix<Scalar>(s.p).cwiseInverse();
  bp = bp.cwiseProduct(k.template cast<Scalar>());
  return s.U * bp * s.U.adjoint();
}

template <class Scalar>
double metric_inner(const DensityMatrix<Scalar>& rho, const MatrixX<Scalar>& x,
                    const MatrixX<Scalar>& y) {
  require(x.rows() == rho.dim() && y.rows() == rho.dim() && x.cols() == rho.dim() &&
              y.cols() == rho.dim(),
          Errc::DimensionMismatch, "metric_inner: operand dimension");
  return real_part((x.adjoint() * omega_inv(rho, y)).trace());
}

// tr(Omega(A) B), the metric on observables.
template <class Scalar>
double observable_inner(const DensityMatrix<Scalar>& rho, const MatrixX<Scalar>& a,
                        const MatrixX<Scalar>& b) {
  return real_part((omega(rho, a).adjoint() * b).trace());
}

template <class Scalar>
double expectation(const DensityMatrix<Scalar>& rho, const MatrixX<Scalar>& a) {
  return real_part((rho.entries * a).trace());
}

template <class Scalar>
double relative_entropy(const DensityMatrix<Scalar>& rho_prime, const DensityMatrix<Scalar>& rho) {
  require(rho_prime.dim() == rho.dim(), Errc::DimensionMismatch, "relative_entropy: dims");
  const auto a = faithful_spectrum(rho);
  const auto b = faithful_spectrum(rho_prime);
  const MatrixX<Scalar> diff =
      apply_function<Scalar>(a, [](double v) { return std::log(v); }) -
      apply_function<Scalar>(b, [](double v) { return std::log(v); });
  return real_part((rho.entries * diff).trace());
}

template <class Scalar>
void check_feature(const DensityMatrix<Scalar>& rho, const MatrixX<Scalar>& x, double tol = 1e-10) {
  require(x.rows() == rho.dim() && x.cols() == rho.dim(), Errc::DimensionMismatch,
          "feature dimension");
  require((x - x.adjoint()).cwiseAbs().maxCoeff() <= tol, Errc::InvalidParameter,
          "feature not Hermitian");
  require(std::abs(x.trace()) <= tol * std::max(1.0, x.cwiseAbs().maxCoeff()),
          Errc::InvalidParameter, "feature not traceless");
}

}  // namespace renormalens
