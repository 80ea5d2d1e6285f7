#include "renormalens/statespace.hpp"

#include <cmath>
#include <string>

namespace renormalens {

namespace {

void check_axes(const std::vector<UniformGrid>& axes) {
  require(!axes.empty(), Errc::InvalidState, "grid needs at least one axis");
  for (const auto& ax : axes) {
    require(ax.n >= 2, Errc::InvalidState, "grid axis needs n_points >= 2");
    require(std::isfinite(ax.min) && std::isfinite(ax.max) && ax.max > ax.min,
            Errc::InvalidState, "grid axis needs grid_max > grid_min");
  }
}

}  // namespace

double cell_volume(const std::vector<UniformGrid>& axes) {
  double v = 1.0;
  for (const auto& ax : axes) v *= ax.step();
  return v;
}

Eigen::Index grid_size(const std::vector<UniformGrid>& axes) {
  Eigen::Index n = 1;
  for (const auto& ax : axes) n *= ax.n;
  return n;
}

GridDistribution::GridDistribution(double grid_min, double grid_max, Vec values) {
  const int n = static_cast<int>(values.size());
  *this = GridDistribution(std::vector<UniformGrid>{{grid_min, grid_max, n}}, std::move(values));
}

GridDistribution::GridDistribution(std::vector<UniformGrid> axes, Vec values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  check_axes(axes_);
  require(values_.size() == grid_size(axes_), Errc::DimensionMismatch,
          "grid values do not match axes");
  cell_ = cell_volume(axes_);
  require(values_.allFinite() && values_.minCoeff() > 0.0, Errc::NonPositiveState,
          "grid density must be strictly positive");
  const double mass = values_.sum() * cell_;
  require(std::abs(mass - 1.0) <= 1e-12 * std::max<double>(1.0, values_.size() * 1e-2),
          Errc::InvalidState, "grid density not normalized (mass " + std::to_string(mass) + ")");
}

double GridDistribution::grid_min() const {
  require(axes_.size() == 1, Errc::DimensionMismatch, "grid_min on multi-axis grid");
  return axes_[0].min;
}
double GridDistribution::grid_max() const {
  require(axes_.size() == 1, Errc::DimensionMismatch, "grid_max on multi-axis grid");
  return axes_[0].max;
}
int GridDistribution::n_points() const {
  require(axes_.size() == 1, Errc::DimensionMismatch, "n_points on multi-axis grid");
  return axes_[0].n;
}
Vec GridDistribution::points() const {
  require(axes_.size() == 1, Errc::DimensionMismatch, "points on multi-axis grid");
  return axes_[0].points();
}

double GridDistribution::coordinate(Eigen::Index i, int a) const {
  Eigen::Index stride = 1;
  for (int b = n_axes() - 1; b > a; --b) stride *= axes_[b].n;
  return axes_[a].point(static_cast<int>((i / stride) % axes_[a].n));
}

Vec GridDistribution::coordinates(int a) const { return axis_coordinates(axes_, a); }

Vec axis_coordinates(const std::vector<UniformGrid>& axes, int a) {
  require(a >= 0 && a < static_cast<int>(axes.size()), Errc::DimensionMismatch, "axis index");
  Eigen::Index stride = 1;
  for (int b = static_cast<int>(axes.size()) - 1; b > a; --b) stride *= axes[b].n;
  Vec c(grid_size(axes));
  for (Eigen::Index i = 0; i < c.size(); ++i)
    c(i) = axes[a].point(static_cast<int>((i / stride) % axes[a].n));
  return c;
}

EffectiveHamiltonian1D EffectiveHamiltonian1D::from_tau(double tau, double lambda,
                                                        double inv_cutoff) {
  require(tau > 0.0, Errc::InvalidParameter, "tau must be positive");
  std::map<int, double> c{{2, 1.0 / (2.0 * tau * tau)}};
  if (lambda != 0.0) c[4] = lambda;
  if (inv_cutoff != 0.0) c[6] = inv_cutoff;
  return EffectiveHamiltonian1D(c);
}

double EffectiveHamiltonian1D::c(int degree) const {
  auto it = coefficients.find(degree);
  return it == coefficients.end() ? 0.0 : it->second;
}

double EffectiveHamiltonian1D::operator()(double x) const {
  const double x2 = x * x;
  return x2 * (c(2) + x2 * (c(4) + x2 * c(6)));
}

int EffectiveHamiltonian1D::leading_degree() const {
  for (int d : {6, 4, 2})
    if (c(d) != 0.0) return d;
  return 0;
}

void EffectiveHamiltonian1D::validate() const {
  for (const auto& [deg, val] : coefficients) {
    require(deg == 2 || deg == 4 || deg == 6, Errc::InvalidParameter,
            "Hamiltonian degrees must be 2, 4 or 6");
    require(std::isfinite(val), Errc::InvalidParameter, "Hamiltonian coefficient not finite");
  }
  const int lead = leading_degree();
  require(lead != 0 && c(lead) > 0.0, Errc::NonNormalizable,
          "leading Hamiltonian coefficient must be positive");
}

GridDistribution build_gibbs_1d(const EffectiveHamiltonian1D& h, double grid_min, double grid_max,
                                int n_points) {
  h.validate();
  require(n_points >= 3, Errc::InvalidParameter, "n_points must be >= 3");
  require(grid_max > grid_min, Errc::InvalidParameter, "grid_max must exceed grid_min");
  const Vec x = Vec::LinSpaced(n_points, grid_min, grid_max);
  Vec hv = x.unaryExpr([&h](double v) { return h(v); });
  const double hmin = hv.minCoeff();
  Vec rho = (-(hv.array() - hmin)).exp().matrix();
  const double peak = rho.maxCoeff();
  require(rho(0) < 1e-12 * peak && rho(n_points - 1) < 1e-12 * peak, Errc::GridTooNarrow,
          "boundary density exceeds 1e-12 of the peak");
  const double dx = (grid_max - grid_min) / (n_points - 1);
  rho /= rho.sum() * dx;
  return GridDistribution(grid_min, grid_max, rho);
}

double moment(const GridDistribution& p, int k) {
  require(k >= 0, Errc::InvalidParameter, "moment order must be >= 0");
  const Vec x = p.points();
  return (x.array().pow(k) * p.values().array()).sum() * p.dx();
}

double expectation(const GridDistribution& rho, const Vec& a) {
  require(a.size() == rho.size(), Errc::DimensionMismatch, "observable size");
  return rho.values().dot(a) * rho.dx();
}

double relative_entropy(const GridDistribution& rho_prime, const GridDistribution& rho) {
  require(rho_prime.size() == rho.size() && rho_prime.dx() == rho.dx(), Errc::DimensionMismatch,
          "relative_entropy: grids differ");
  const auto& p = rho.values().array();
  const auto& q = rho_prime.values().array();
  return (p * (p.log() - q.log())).sum() * rho.dx();
}

Vec omega_inv(const GridDistribution& rho, const Vec& y) {
  require(y.size() == rho.size(), Errc::DimensionMismatch, "omega_inv: size");
  return y.cwiseQuotient(rho.values());
}

Vec omega(const GridDistribution& rho, const Vec& b) {
  require(b.size() == rho.size(), Errc::DimensionMismatch, "omega: size");
  return b.cwiseProduct(rho.values());
}

double metric_inner(const GridDistribution& rho, const Vec& x, const Vec& y) {
  require(x.size() == rho.size() && y.size() == rho.size(), Errc::DimensionMismatch,
          "metric_inner: size");
  return (x.array() * y.array() / rho.values().array()).sum() * rho.dx();
}

double observable_inner(const GridDistribution& rho, const Vec& a, const Vec& b) {
  require(a.size() == rho.size() && b.size() == rho.size(), Errc::DimensionMismatch,
          "observable_inner: size");
  return (a.array() * b.array() * rho.values().array()).sum() * rho.dx();
}

void check_feature(const GridDistribution& rho, const Vec& x, double tol) {
  require(x.size() == rho.size(), Errc::DimensionMismatch, "feature size");
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  require(std::abs(x.sum() * rho.dx()) <= tol * scale, Errc::InvalidParameter,
          "grid feature does not integrate to zero");
}

void ClassicalGaussianState::validate() const {
  require(A.rows() == A.cols() && A.rows() > 0, Errc::InvalidState, "A must be square");
  require((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()),
          Errc::InvalidState, "A must be symmetric");
  Eigen::LLT<Mat> llt(A);
  require(llt.info() == Eigen::Success, Errc::InvalidState, "A must be positive definite");
}

void QuantumGaussianState::validate() const {
  require(A.rows() == A.cols() && A.rows() > 0 && A.rows() % 2 == 0, Errc::InvalidState,
          "A must be square with even dimension");
  require(Delta.rows() == A.rows() && Delta.cols() == A.cols(), Errc::DimensionMismatch,
          "Delta must match A");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  require((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, Errc::InvalidState,
          "A must be symmetric");
  require((Delta + Delta.transpose()).cwiseAbs().maxCoeff() <= 1e-12, Errc::InvalidState,
          "Delta must be antisymmetric");
  require(std::abs(Delta.determinant()) > 1e-12, Errc::InvalidState, "Delta must be nondegenerate");
  const CMat m = A.cast<cplx>() + cplx(0.0, 0.5) * Delta.cast<cplx>();
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10 * scale, Errc::InvalidState,
          "A + (i/2) Delta must be positive semidefinite");
}

Mat standard_symplectic(int n_modes) {
  Mat d = Mat::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    d(2 * k, 2 * k + 1) = 1.0;
    d(2 * k + 1, 2 * k) = -1.0;
  }
  return d;
}

}  // namespace renormalens
