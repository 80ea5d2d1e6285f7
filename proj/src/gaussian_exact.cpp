#include "renormalens/gaussian_exact.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace renormalens {

void KleinGordonModel::validate() const {
  require(m > 0.0 && beta > 0.0 && sigma > 0.0, Errc::InvalidParameter,
          "Klein-Gordon model needs m, beta, sigma > 0");
  require(y_phi > 0.0 && y_pi > 0.0, Errc::InvalidParameter, "field resolutions must be positive");
  require(y_phi * y_pi >= 1.0 - 1e-12, Errc::InvalidParameter,
          "uncertainty relation violated: y_phi * y_pi must be >= 1");
  require(!k_grid.empty(), Errc::InvalidParameter, "k_grid must be nonempty");
  for (double k : k_grid) require(std::isfinite(k), Errc::InvalidParameter, "k_grid not finite");
}

Vec hermite_he_coefficients(int n) {
  require(n >= 0, Errc::InvalidParameter, "Hermite degree must be >= 0");
  Vec prev = Vec::Zero(n + 1), cur = Vec::Zero(n + 1);
  cur(0) = 1.0;
  for (int j = 0; j < n; ++j) {
    // He_{j+1} = x He_j - j He_{j-1}
    Vec next = Vec::Zero(n + 1);
    next.segment(1, j + 1) = cur.head(j + 1);
    next -= j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

Vec hermite_he_all(int n, double x) {
  Vec he(n + 1);
  he(0) = 1.0;
  if (n >= 1) he(1) = x;
  for (int j = 1; j < n; ++j) he(j + 1) = x * he(j) - j * he(j - 1);
  return he;
}

double hermite_he(int n, double x) {
  require(n >= 0, Errc::InvalidParameter, "Hermite degree must be >= 0");
  return hermite_he_all(n, x)(n);
}

std::vector<HermiteRelevance> single_mode_relevances(double tau, double sigma, int n_max) {
  require(tau > 0.0 && sigma > 0.0 && n_max >= 1, Errc::InvalidParameter,
          "need tau, sigma > 0 and n_max >= 1");
  const double eta = tau * tau / (sigma * sigma + tau * tau);
  std::vector<HermiteRelevance> out;
  for (int n = 1; n <= n_max; ++n) out.push_back({n, std::pow(eta, n), hermite_he_coefficients(n)});
  return out;
}

ClassicalSpectrum hermite_spectrum(const GridDistribution& rho, double tau, double sigma,
                                   int n_max) {
  const auto rel = single_mode_relevances(tau, sigma, n_max);
  require(n_max <= rho.size() - 1, Errc::InvalidParameter, "n_max exceeds tangent dimension");
  const Vec x = rho.points() / tau;
  ClassicalSpectrum s;
  s.eta.resize(n_max);
  s.observables.resize(rho.size(), n_max);
  double fact = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    fact *= n;
    s.eta(n - 1) = rel[n - 1].eta;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      s.observables(i, n - 1) = hermite_he(n, x(i)) / std::sqrt(fact);
  }
  s.features = rho.values().asDiagonal() * s.observables;
  s.rho_ref = rho;
  return s;
}

HMatrix classical_H(const ClassicalGaussianState& state, const GaussianChannelSpec& chan) {
  state.validate();
  chan.validate();
  const Mat& A = state.A;
  const Eigen::Index n = A.rows();
  require(chan.X.rows() == n && chan.Y.rows() == n, Errc::DimensionMismatch,
          "channel does not match the number of modes");
  Eigen::JacobiSVD<Mat> svd(chan.X);
  const Vec sv = svd.singularValues();
  require(sv(n - 1) > 0.0 && sv(0) / sv(n - 1) <= 1e12, Errc::SingularX,
          "X is singular or condition number exceeds 1e12");

  // H = (1 + A^{-1} X^{-T} Y X^{-1})^{-1} = X B^{-1} X^T A, B = X^T A X + Y
  Mat B = chan.X.transpose() * A * chan.X + chan.Y;
  B = (0.5 * (B + B.transpose())).eval();
  Eigen::LDLT<Mat> ldlt(B);
  require(ldlt.info() == Eigen::Success, Errc::NoConvergence, "output covariance factorization");
  HMatrix h;
  h.A = A;
  h.H = chan.X * ldlt.solve(chan.X.transpose() * A);

  Mat S = A * h.H;
  S = (0.5 * (S + S.transpose())).eval();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(S, A);
  require(ges.info() == Eigen::Success, Errc::NoConvergence, "generalized eigensolver failed");
  h.eta = ges.eigenvalues().reverse();
  h.modes = ges.eigenvectors().rowwise().reverse();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index i = 0;
    h.modes.col(k).cwiseAbs().maxCoeff(&i);
    if (h.modes(i, k) < 0) h.modes.col(k) *= -1.0;
  }
  return h;
}

int PrincipalPolynomial::degree() const {
  return std::accumulate(occupation.begin(), occupation.end(), 0);
}

double PrincipalPolynomial::evaluate(const HMatrix& h, const Vec& phi) const {
  require(phi.size() == h.n_modes(), Errc::DimensionMismatch, "field configuration size");
  double v = 1.0;
  for (std::size_t k = 0; k < occupation.size(); ++k)
    if (occupation[k] > 0) v *= hermite_he(occupation[k], h.modes.col(k).dot(phi));
  return v;
}

double PrincipalPolynomial::norm2() const {
  double v = 1.0;
  for (int n : occupation) v *= std::tgamma(n + 1.0);
  return v;
}

std::string PrincipalPolynomial::label() const {
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = 0; k < occupation.size(); ++k) {
    if (occupation[k] == 0) continue;
    if (!first) os << '*';
    os << "He" << occupation[k] << "(z" << k << ')';
    first = false;
  }
  return os.str();
}

namespace {

void enumerate_occupations(int n_modes, int degree, std::vector<int>& cur, int mode,
                           std::vector<std::vector<int>>& out) {
  if (mode == n_modes) {
    if (degree == 0) out.push_back(cur);
    return;
  }
  for (int c = degree; c >= 0; --c) {
    cur[mode] = c;
    enumerate_occupations(n_modes, degree - c, cur, mode + 1, out);
  }
  cur[mode] = 0;
}

}  // namespace

std::vector<std::vector<int>> occupations_of_degree(int n_modes, int degree) {
  require(n_modes >= 1 && degree >= 0, Errc::InvalidParameter, "occupations: bad sizes");
  std::vector<std::vector<int>> occs;
  std::vector<int> cur(n_modes, 0);
  enumerate_occupations(n_modes, degree, cur, 0, occs);
  return occs;
}

std::vector<PrincipalPolynomial> principal_polynomials(const HMatrix& h, int degree) {
  require(degree >= 1, Errc::InvalidParameter, "degree must be >= 1");
  std::vector<PrincipalPolynomial> out;
  for (int d = 1; d <= degree; ++d) {
    for (auto& occ : occupations_of_degree(h.n_modes(), d)) {
      PrincipalPolynomial p{occ, 1.0};
      for (int k = 0; k < h.n_modes(); ++k) p.relevance *= std::pow(h.eta(k), occ[k]);
      out.push_back(std::move(p));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct ModeTwoPoint {
  double theta;
  CMat plus;   // coefficient of exp(+s theta)
  CMat minus;  // coefficient of exp(-s theta)
};

// tr(rho^{1-s} Phi_a rho^s Phi_b) = plus e^{s theta} + minus e^{-s theta}
ModeTwoPoint mode_two_point(const Mat& a, const Mat& delta) {
  const double d = delta(0, 1);
  require(std::abs(d) > 0.0 && std::abs(delta(1, 0) + d) <= 1e-12 * std::abs(d),
          Errc::InvalidState, "mode symplectic block must be d * J");
  const double nu = std::sqrt(a.determinant()) / std::abs(d);
  require(nu > 0.5 * (1.0 + 1e-12), Errc::NonPositiveState,
          "mode is pure; the BKM metric needs a faithful state");
  const double theta = std::log((2.0 * nu + 1.0) / (2.0 * nu - 1.0));
  const CMat c = a.cast<cplx>() + cplx(0.0, 0.5) * delta.cast<cplx>();
  const CMat s = a.cast<cplx>() / (2.0 * nu) + cplx(0.0, nu) * delta.cast<cplx>();
  return {theta, 0.5 * (c - s), 0.5 * (c + s)};
}

double exp_integral(double c) {
  // int_0^1 e^{c s} ds
  return std::abs(c) < 1e-8 ? 1.0 + 0.5 * c : std::expm1(c) / c;
}

CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Mat kron(const Mat& a, const Mat& b) { return kron(CMat(a.cast<cplx>()), CMat(b.cast<cplx>())).real(); }

Mat product_gram(const std::vector<Mat>& a_blocks, const std::vector<Mat>& d_blocks) {
  const std::size_t n = a_blocks.size();
  std::vector<ModeTwoPoint> tp;
  for (std::size_t i = 0; i < n; ++i) tp.push_back(mode_two_point(a_blocks[i], d_blocks[i]));
  const Eigen::Index dim = Eigen::Index(1) << n;
  CMat total = CMat::Zero(dim, dim);
  for (std::size_t pattern = 0; pattern < (std::size_t(1) << n); ++pattern) {
    CMat term = CMat::Ones(1, 1);
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool plus = (pattern >> i) & 1U;
      term = kron(term, plus ? tp[i].plus : tp[i].minus);
      c += plus ? tp[i].theta : -tp[i].theta;
    }
    total += exp_integral(c) * term;
  }
  Mat k = total.real();
  return 0.5 * (k + k.transpose());
}

Mat mode_block(const Mat& m, int mode) { return m.block(2 * mode, 2 * mode, 2, 2); }

void check_decoupled(const Mat& m, const std::vector<int>& modes, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (int i : modes)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c / 2 == i) continue;
      for (int r = 2 * i; r < 2 * i + 2; ++r)
        require(std::abs(m(r, c)) <= 1e-8 * scale && std::abs(m(c, r)) <= 1e-8 * scale,
                Errc::ModeCouplingDetected, std::string(what) + " couples a selected mode");
    }
}

}  // namespace

Mat bkm_mode_gram(const Mat& A_mode, const Mat& Delta_mode) {
  return product_gram({A_mode}, {Delta_mode});
}

QuadraticSector quantum_quadratic_sector(const QuantumGaussianState& state,
                                         const GaussianChannelSpec& chan,
                                         const std::vector<int>& modes, SectorMetric metric) {
  state.validate();
  require(chan.quantum, Errc::InvalidChannel, "quantum sector needs a quantum Gaussian channel");
  GaussianChannelSpec c = chan;
  if (c.Delta.size() == 0) c.Delta = state.Delta;
  c.validate();
  const int n_modes = state.n_modes();
  require(c.X.rows() == 2 * n_modes, Errc::DimensionMismatch, "channel does not match state");
  require(!modes.empty(), Errc::InvalidParameter, "select at least one mode");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    require(modes[i] >= 0 && modes[i] < n_modes, Errc::InvalidParameter, "mode index out of range");
    for (std::size_t j = 0; j < i; ++j)
      require(modes[i] != modes[j], Errc::InvalidParameter, "modes must be distinct");
  }
  require(modes.size() <= 10, Errc::DimensionTooLarge, "sector dimension 2^n capped at n = 10");

  const Mat B = c.X.transpose() * state.A * c.X + c.Y;
  check_decoupled(state.A, modes, "A");
  check_decoupled(state.Delta, modes, "Delta");
  check_decoupled(c.X, modes, "X");
  check_decoupled(B, modes, "X^T A X + Y");

  std::vector<Mat> a_blocks, b_blocks, d_blocks;
  QuadraticSector s;
  s.modes = modes;
  s.E_sector = Mat::Ones(1, 1);
  for (int i : modes) {
    a_blocks.push_back(mode_block(state.A, i));
    b_blocks.push_back(mode_block(B, i));
    d_blocks.push_back(mode_block(state.Delta, i));
    s.E_sector = kron(s.E_sector, mode_block(c.X, i));
  }
  s.K = product_gram(a_blocks, d_blocks);
  if (metric == SectorMetric::Exact) {
    s.K_prime = product_gram(b_blocks, d_blocks);
  } else {
    s.K_prime = Mat::Ones(1, 1);
    for (const Mat& b : b_blocks) s.K_prime = kron(s.K_prime, Mat(0.5 * (b + b.transpose())));
  }

  Eigen::LLT<Mat> lk(s.K);
  Eigen::LLT<Mat> lkp(s.K_prime);
  require(lk.info() == Eigen::Success && lkp.info() == Eigen::Success, Errc::NonPositiveState,
          "sector Gram matrix not positive definite");
  const Mat L = lk.matrixL();
  const Mat T = L.transpose() * s.E_sector;
  Mat S = T * lkp.solve(T.transpose());
  S = (0.5 * (S + S.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  s.eta = es.eigenvalues().reverse();
  return s;
}

QuantumGaussianState kg_mode_state(const KleinGordonModel& model, double k) {
  model.validate();
  const double w = model.omega(k);
  const double c = 0.5 / std::tanh(0.5 * model.beta * w);
  Mat a(2, 2);
  a << c / w, 0.0, 0.0, c * w;
  return {a, standard_symplectic(1)};
}

GaussianChannelSpec kg_mode_channel(const KleinGordonModel& model, double k) {
  model.validate();
  const double x = std::exp(-0.5 * k * k * model.sigma * model.sigma);
  Mat y(2, 2);
  y << model.y_phi * model.y_phi, 0.0, 0.0, model.y_pi * model.y_pi;
  return {x * Mat::Identity(2, 2), y, true, standard_symplectic(1)};
}

QuantumGaussianState kg_state(const KleinGordonModel& model) {
  const int n = static_cast<int>(model.k_grid.size());
  QuantumGaussianState s{Mat::Zero(2 * n, 2 * n), standard_symplectic(n)};
  for (int i = 0; i < n; ++i) s.A.block(2 * i, 2 * i, 2, 2) = kg_mode_state(model, model.k_grid[i]).A;
  return s;
}

GaussianChannelSpec kg_channel(const KleinGordonModel& model) {
  const int n = static_cast<int>(model.k_grid.size());
  GaussianChannelSpec c{Mat::Zero(2 * n, 2 * n), Mat::Zero(2 * n, 2 * n), true,
                        standard_symplectic(n)};
  for (int i = 0; i < n; ++i) {
    const auto m = kg_mode_channel(model, model.k_grid[i]);
    c.X.block(2 * i, 2 * i, 2, 2) = m.X;
    c.Y.block(2 * i, 2 * i, 2, 2) = m.Y;
  }
  return c;
}

double eta_kg_phi(const KleinGordonModel& model, double k) {
  const double w = model.omega(k);
  const double bw = model.beta * w;
  return 1.0 / (0.5 * bw / std::tanh(0.5 * bw) +
                model.beta * w * w * model.y_phi * model.y_phi * std::exp(k * k * model.sigma * model.sigma));
}

double eta_kg_pi(const KleinGordonModel& model, double k) {
  const double w = model.omega(k);
  const double bw = model.beta * w;
  return 1.0 / (0.5 * bw / std::tanh(0.5 * bw) +
                model.beta * model.y_pi * model.y_pi * std::exp(k * k * model.sigma * model.sigma));
}

double kg_field_norm(const KleinGordonModel& model, double k) {
  const double w = model.omega(k);
  return 1.0 / (model.beta * w * w);
}

double euclidean_eta(double m, double beta, double sigma, double y, double k) {
  require(m > 0.0 && beta > 0.0 && sigma >= 0.0 && y >= 0.0, Errc::InvalidParameter,
          "euclidean_eta needs m, beta > 0 and sigma, y >= 0");
  const double w2 = k * k + m * m;
  return 1.0 / (1.0 + beta * y * y * w2 * std::exp(sigma * sigma * k * k));
}

Lattice kg_lattice(const KleinGordonModel& model) {
  model.validate();
  const int n = static_cast<int>(model.k_grid.size());
  double dk = 1.0;
  if (n > 1) {
    auto [lo, hi] = std::minmax_element(model.k_grid.begin(), model.k_grid.end());
    dk = (*hi - *lo) / (n - 1);
    require(dk > 0.0, Errc::InvalidParameter, "k_grid must contain distinct momenta");
  }
  Lattice lat;
  lat.spacing = 2.0 * std::numbers::pi / (n * dk);
  lat.covariance = Mat::Zero(n, n);
  lat.X = Mat::Zero(n, n);
  for (double k : model.k_grid) {
    const double a = kg_field_norm(model, k);
    const double x = std::exp(-0.5 * k * k * model.sigma * model.sigma);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double c = std::cos(k * (i - j) * lat.spacing) / n;
        lat.covariance(i, j) += a * c;
        lat.X(i, j) += x * c;
      }
  }
  lat.Y = model.y_phi * model.y_phi * Mat::Identity(n, n);
  return lat;
}

}  // namespace renormalens
