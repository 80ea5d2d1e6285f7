#include "renormalens/channels.hpp"

#include <cmath>
#include <limits>

namespace renormalens {

namespace {

// Gibbs tails on wide grids are legitimately tiny; only values close to
// underflow make the Bayes division meaningless.
constexpr double kClassicalFloor = 1e-250;

void check_positive_output(const Vec& out) {
  require(out.allFinite() && out.minCoeff() > kClassicalFloor, Errc::NonPositiveState,
          "E(rho) underflows on the output grid");
}

void normalize_columns(Mat& k, double dx_out) {
  for (Eigen::Index x = 0; x < k.cols(); ++x) {
    const double s = k.col(x).sum() * dx_out;
    require(s > 0.0 && std::isfinite(s), Errc::InvalidChannel, "kernel column has no mass");
    k.col(x) /= s;
  }
}

}  // namespace

void StochasticChannel::validate(double tol) const {
  require(kernel.rows() == grid_size(out_axes) && kernel.cols() == grid_size(in_axes),
          Errc::InvalidChannel, "kernel shape does not match grids");
  require(kernel.allFinite() && kernel.minCoeff() >= 0.0, Errc::InvalidChannel,
          "kernel entries must be nonnegative");
  const Eigen::RowVectorXd mass = kernel.colwise().sum() * dx_out();
  require((mass.array() - 1.0).abs().maxCoeff() <= tol, Errc::InvalidChannel,
          "kernel columns must integrate to one");
}

StochasticChannel make_stochastic_channel(Mat kernel, std::vector<UniformGrid> in_axes,
                                          std::vector<UniformGrid> out_axes, bool normalize) {
  StochasticChannel e{std::move(kernel), std::move(in_axes), std::move(out_axes)};
  require(e.kernel.rows() == grid_size(e.out_axes) && e.kernel.cols() == grid_size(e.in_axes),
          Errc::InvalidChannel, "kernel shape does not match grids");
  if (normalize) normalize_columns(e.kernel, e.dx_out());
  e.validate();
  return e;
}

StochasticChannel identity_channel(const std::vector<UniformGrid>& axes) {
  const Eigen::Index n = grid_size(axes);
  Mat k = Mat::Identity(n, n) / cell_volume(axes);
  return make_stochastic_channel(std::move(k), axes, axes);
}

StochasticChannel gaussian_convolution_channel(double grid_min, double grid_max, int n_points,
                                               double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, Errc::InvalidSigma, "sigma must be positive");
  require(n_points >= 3, Errc::InvalidParameter, "n_points must be >= 3");
  require(grid_max > grid_min, Errc::InvalidParameter, "grid_max must exceed grid_min");
  const Vec x = Vec::LinSpaced(n_points, grid_min, grid_max);
  Mat k(n_points, n_points);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int j = 0; j < n_points; ++j)
    for (int i = 0; i < n_points; ++i) {
      const double d = x(i) - x(j);
      k(i, j) = std::exp(-d * d * inv);
    }
  // the diagonal term keeps every column nonzero even for sigma << dx
  std::vector<UniformGrid> axes{{grid_min, grid_max, n_points}};
  return make_stochastic_channel(std::move(k), axes, axes, true);
}

StochasticChannel gaussian_kernel_channel(const std::vector<UniformGrid>& in_axes,
                                          const std::vector<UniformGrid>& out_axes, const Mat& X,
                                          const Mat& Y) {
  const Eigen::Index n_in = static_cast<Eigen::Index>(in_axes.size());
  const Eigen::Index n_out = static_cast<Eigen::Index>(out_axes.size());
  require(X.rows() == n_in && X.cols() == n_out, Errc::DimensionMismatch,
          "X must be n_in_axes x n_out_axes");
  require(Y.rows() == n_out && Y.cols() == n_out, Errc::DimensionMismatch, "Y must be square");
  Eigen::LLT<Mat> llt(Y);
  require(llt.info() == Eigen::Success, Errc::InvalidChannel,
          "grid kernel needs positive definite noise Y");
  const Mat yinv = llt.solve(Mat::Identity(n_out, n_out));

  Mat phi(grid_size(in_axes), n_in);
  for (int a = 0; a < n_in; ++a) phi.col(a) = axis_coordinates(in_axes, a);
  Mat psi(grid_size(out_axes), n_out);
  for (int a = 0; a < n_out; ++a) psi.col(a) = axis_coordinates(out_axes, a);

  const Mat mean = phi * X;  // row x: (X^T phi_x)^T
  Mat k(psi.rows(), phi.rows());
  parallel_for(static_cast<std::size_t>(phi.rows()), [&](std::size_t xi) {
    const Eigen::RowVectorXd m = mean.row(static_cast<Eigen::Index>(xi));
    for (Eigen::Index y = 0; y < psi.rows(); ++y) {
      const Eigen::RowVectorXd d = psi.row(y) - m;
      k(y, static_cast<Eigen::Index>(xi)) = std::exp(-0.5 * (d * yinv * d.transpose())(0, 0));
    }
  });
  return make_stochastic_channel(std::move(k), in_axes, out_axes, true);
}

QuantumChannel<cplx> depolarizing_channel(int dim, double p) {
  require(dim >= 1 && p >= 0.0 && p <= 1.0, Errc::InvalidParameter,
          "depolarizing channel needs dim >= 1 and p in [0, 1]");
  QuantumChannel<cplx> e;
  e.kraus.push_back(std::sqrt(1.0 - p) * CMat::Identity(dim, dim));
  const double w = std::sqrt(p / dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      CMat k = CMat::Zero(dim, dim);
      k(i, j) = w;
      e.kraus.push_back(k);
    }
  return e;
}

void GaussianChannelSpec::validate() const {
  require(X.rows() > 0 && X.rows() == X.cols(), Errc::InvalidChannel, "X must be square");
  require(Y.rows() == X.rows() && Y.cols() == X.cols(), Errc::DimensionMismatch,
          "Y must match X");
  const double scale = std::max(1.0, Y.cwiseAbs().maxCoeff());
  require((Y - Y.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, Errc::InvalidChannel,
          "Y must be symmetric");
  if (!quantum) {
    Eigen::SelfAdjointEigenSolver<Mat> es(Y, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -1e-10 * scale, Errc::InvalidChannel,
            "Y must be positive semidefinite");
    return;
  }
  require(Delta.rows() == X.rows() && Delta.cols() == X.cols(), Errc::DimensionMismatch,
          "Delta must match X");
  const Mat skew = Delta - X.transpose() * Delta * X;
  const CMat m = Y.cast<cplx>() + cplx(0.0, 0.5) * skew.cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10, Errc::InvalidChannel,
          "Y - (i/2) X^T Delta X + (i/2) Delta is not positive semidefinite");
}

Vec apply_values(const StochasticChannel& e, const Vec& rho) {
  require(rho.size() == e.n_in(), Errc::DimensionMismatch, "channel input size");
  return e.kernel * rho * e.dx_in();
}

GridDistribution apply(const StochasticChannel& e, const GridDistribution& rho) {
  require(rho.size() == e.n_in(), Errc::DimensionMismatch, "channel input size");
  Vec out = apply_values(e, rho.values());
  out /= out.sum() * e.dx_out();
  return GridDistribution(e.out_axes, std::move(out));
}

Vec apply_adjoint(const StochasticChannel& e, const Vec& a) {
  require(a.size() == e.n_out(), Errc::DimensionMismatch, "channel output size");
  return e.kernel.transpose() * a * e.dx_out();
}

Mat bayes_posterior(const StochasticChannel& e, const GridDistribution& rho) {
  require(rho.size() == e.n_in(), Errc::DimensionMismatch, "channel input size");
  const Vec out = apply_values(e, rho.values());
  check_positive_output(out);
  // p(x|y) = p(y|x) rho(x) / E(rho)(y)
  return (rho.values().asDiagonal() * e.kernel.transpose()) * out.cwiseInverse().asDiagonal();
}

Vec transpose_channel_apply(const StochasticChannel& e, const GridDistribution& rho,
                            const Vec& y) {
  require(y.size() == e.n_out(), Errc::DimensionMismatch, "feature size at E(rho)");
  return bayes_posterior(e, rho) * y * e.dx_out();
}

Vec transpose_channel_apply_composed(const StochasticChannel& e, const GridDistribution& rho,
                                     const Vec& y) {
  require(y.size() == e.n_out(), Errc::DimensionMismatch, "feature size at E(rho)");
  const Vec out = apply_values(e, rho.values());
  check_positive_output(out);
  return omega(rho, apply_adjoint(e, y.cwiseQuotient(out)));
}

Vec heisenberg_transpose_apply(const StochasticChannel& e, const GridDistribution& rho,
                               const Vec& f) {
  require(f.size() == e.n_in(), Errc::DimensionMismatch, "observable size");
  return bayes_posterior(e, rho).transpose() * f * e.dx_in();
}

}  // namespace renormalens
