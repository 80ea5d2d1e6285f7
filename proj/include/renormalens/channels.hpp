#pragma once

#include "renormalens/statespace.hpp"

#include <vector>

namespace renormalens {

// Column-stochastic kernel, entry (y, x) = p(y|x) as a density in y.
struct StochasticChannel {
  Mat kernel;
  std::vector<UniformGrid> in_axes;
  std::vector<UniformGrid> out_axes;

  Eigen::Index n_in() const { return kernel.cols(); }
  Eigen::Index n_out() const { return kernel.rows(); }
  double dx_in() const { return cell_volume(in_axes); }
  double dx_out() const { return cell_volume(out_axes); }
  void validate(double tol = 1e-10) const;
};

// Wraps a raw kernel; renormalizes columns when `normalize` is set.
StochasticChannel make_stochastic_channel(Mat kernel, std::vector<UniformGrid> in_axes,
                                          std::vector<UniformGrid> out_axes,
                                          bool normalize = false);

StochasticChannel identity_channel(const std::vector<UniformGrid>& axes);

StochasticChannel gaussian_convolution_channel(double grid_min, double grid_max, int n_points,
                                               double sigma);

// psi = X^T phi + noise(Y) on product grids, column-renormalized.
StochasticChannel gaussian_kernel_channel(const std::vector<UniformGrid>& in_axes,
                                          const std::vector<UniformGrid>& out_axes, const Mat& X,
                                          const Mat& Y);

template <class Scalar>
struct QuantumChannel {
  std::vector<MatrixX<Scalar>> kraus;

  int dim_in() const { return kraus.empty() ? 0 : static_cast<int>(kraus.front().cols()); }
  int dim_out() const { return kraus.empty() ? 0 : static_cast<int>(kraus.front().rows()); }

  void validate(double tol = 1e-10) const {
    require(!kraus.empty(), Errc::InvalidChannel, "Kraus list is empty");
    MatrixX<Scalar> s = MatrixX<Scalar>::Zero(dim_in(), dim_in());
    for (const auto& k : kraus) {
      require(k.rows() == dim_out() && k.cols() == dim_in(), Errc::InvalidChannel,
              "Kraus operators differ in shape");
      s += k.adjoint() * k;
    }
    require((s - MatrixX<Scalar>::Identity(dim_in(), dim_in())).cwiseAbs().maxCoeff() <= tol,
            Errc::InvalidChannel, "Kraus set is not trace preserving");
  }
};

template <class Scalar>
QuantumChannel<Scalar> identity_kraus(int dim) {
  return {{MatrixX<Scalar>::Identity(dim, dim)}};
}

QuantumChannel<cplx> depolarizing_channel(int dim, double p);

struct GaussianChannelSpec {
  Mat X;
  Mat Y;
  bool quantum = false;
  Mat Delta;  // ambient symplectic form, quantum only

  void validate() const;
};

// ---------------------------------------------------------------------------
// Classical action. The *_values overloads are the linear maps on raw vectors.

Vec apply_values(const StochasticChannel& e, const Vec& rho);
GridDistribution apply(const StochasticChannel& e, const GridDistribution& rho);
Vec apply_adjoint(const StochasticChannel& e, const Vec& a);

// p(x|y) as an n_in x n_out matrix (columns are posterior densities in x).
Mat bayes_posterior(const StochasticChannel& e, const GridDistribution& rho);
Vec transpose_channel_apply(const StochasticChannel& e, const GridDistribution& rho, const Vec& y);
Vec transpose_channel_apply_composed(const StochasticChannel& e, const GridDistribution& rho,
                                     const Vec& y);
Vec heisenberg_transpose_apply(const StochasticChannel& e, const GridDistribution& rho,
                               const Vec& f);

// ---------------------------------------------------------------------------
// Quantum action

template <class Scalar>
MatrixX<Scalar> apply_values(const QuantumChannel<Scalar>& e, const MatrixX<Scalar>& rho) {
  require(rho.rows() == e.dim_in() && rho.cols() == e.dim_in(), Errc::DimensionMismatch,
          "channel input dimension");
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(e.dim_out(), e.dim_out());
  for (const auto& k : e.kraus) out += k * rho * k.adjoint();
  return out;
}

template <class Scalar>
DensityMatrix<Scalar> apply(const QuantumChannel<Scalar>& e, const DensityMatrix<Scalar>& rho) {
  MatrixX<Scalar> out = apply_values(e, rho.entries);
  out = 0.5 * (out + out.adjoint()).eval();
  out /= real_part(out.trace());
  return DensityMatrix<Scalar>(out);
}

template <class Scalar>
MatrixX<Scalar> apply_adjoint(const QuantumChannel<Scalar>& e, const MatrixX<Scalar>& a) {
  require(a.rows() == e.dim_out() && a.cols() == e.dim_out(), Errc::DimensionMismatch,
          "channel output dimension");
  MatrixX<Scalar> out = MatrixX<Scalar>::Zero(e.dim_in(), e.dim_in());
  for (const auto& k : e.kraus) out += k.adjoint() * a * k;
  return out;
}

// R_rho = Omega_rho E^dagger Omega_{E(rho)}^{-1}
template <class Scalar>
MatrixX<Scalar> transpose_channel_apply(const QuantumChannel<Scalar>& e,
                                        const DensityMatrix<Scalar>& rho,
                                        const MatrixX<Scalar>& y) {
  const DensityMatrix<Scalar> out = apply(e, rho);
  return omega(rho, apply_adjoint(e, omega_inv(out, y)));
}

// R_rho^dagger = Omega_{E(rho)}^{-1} E Omega_rho
template <class Scalar>
MatrixX<Scalar> heisenberg_transpose_apply(const QuantumChannel<Scalar>& e,
                                           const DensityMatrix<Scalar>& rho,
                                           const MatrixX<Scalar>& f) {
  const DensityMatrix<Scalar> out = apply(e, rho);
  return omega_inv(out, apply_values(e, omega(rho, f)));
}

}  // namespace renormalens
