#include "renormalens/invariants.hpp"

#include "renormalens/gaussian_exact.hpp"
#include "renormalens/perturbation.hpp"
#include "renormalens/rgflow.hpp"
#include "renormalens/spectra.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <functional>

namespace renormalens {

GridDistribution random_grid_state(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  v /= v.sum();
  return GridDistribution({UniformGrid{0.0, n - 1.0, n}}, v);
}

StochasticChannel random_stochastic_channel(std::mt19937_64& rng, int n_in, int n_out) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat k(n_out, n_in);
  for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = u(rng) * u(rng);
  return make_stochastic_channel(k, {UniformGrid{0.0, n_in - 1.0, n_in}},
                                 {UniformGrid{0.0, n_out - 1.0, n_out}}, true);
}

namespace {

CMat random_complex(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> g;
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cplx(g(rng), g(rng));
  return m;
}

Vec uniform_vec(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace

CMat random_hermitian(std::mt19937_64& rng, int dim) {
  const CMat g = random_complex(rng, dim, dim);
  return 0.5 * (g + g.adjoint());
}

DensityMatrixC random_density_matrix(std::mt19937_64& rng, int dim) {
  const CMat g = random_complex(rng, dim, dim);
  CMat r = g * g.adjoint() + 0.05 * dim * CMat::Identity(dim, dim);
  r /= r.trace().real();
  return DensityMatrixC(0.5 * (r + r.adjoint()));
}

QuantumChannel<cplx> random_kraus_channel(std::mt19937_64& rng, int dim_in, int dim_out, int n_kraus) {
  const CMat v = random_complex(rng, n_kraus * dim_out, dim_in);
  Eigen::SelfAdjointEigenSolver<CMat> es(v.adjoint() * v);
  const CMat inv_sqrt =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  const CMat w = v * inv_sqrt;
  QuantumChannel<cplx> c;
  for (int k = 0; k < n_kraus; ++k) c.kraus.push_back(w.middleRows(k * dim_out, dim_out));
  return c;
}

namespace {

struct Suite {
  std::vector<InvariantResult> results;

  // measured <= tolerance passes
  void add(const std::string& module, const std::string& name, double measured, double tolerance) {
    results.push_back({module, name, measured, tolerance, std::isfinite(measured) && measured <= tolerance});
  }

  void guarded(const std::string& module, const std::string& name, double tolerance,
               const std::function<double()>& f) {
    try {
      add(module, name, f(), tolerance);
    } catch (const std::exception& e) {
      results.push_back({module, name, std::nan(""), tolerance, false, e.what()});
    }
  }
};

CMat matrix_power(const DensityMatrixC& rho, double s) {
  const auto sp = faithful_spectrum(rho);
  return sp.U * sp.p.array().pow(s).matrix().asDiagonal() * sp.U.adjoint();
}

void statespace_suite(Suite& s, std::mt19937_64& rng) {
  s.guarded("statespace", "relative entropy quadratic expansion (halving ratio - 2)", 0.2, [] {
    const GridDistribution rho = build_gibbs_1d(EffectiveHamiltonian1D::from_tau(1.0), -8.0, 8.0, 201);
    const Vec x = rho.points();
    const Vec a = x.array().square() - moment(rho, 2);
    const Vec feat = rho.values().cwiseProduct(a);
    const double g = 0.5 * metric_inner(rho, feat, feat);
    std::vector<double> err;
    for (double eps : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
      const GridDistribution rp(rho.axes(), rho.values() + eps * feat);
      err.push_back(std::abs(relative_entropy(rp, rho) / (eps * eps) - g));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < err.size(); ++i) worst = std::max(worst, std::abs(err[i] / err[i + 1] - 2.0));
    return worst;
  });

  s.guarded("statespace", "omega round trip", 1e-10, [&] {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const DensityMatrixC rho = random_density_matrix(rng, 4);
      const CMat b = random_hermitian(rng, 4);
      worst = std::max(worst, (omega(rho, omega_inv(rho, b)) - b).cwiseAbs().maxCoeff());
      const GridDistribution g = random_grid_state(rng, 8);
      const Vec y = uniform_vec(rng, 8);
      worst = std::max(worst, (omega(g, omega_inv(g, y)) - y).cwiseAbs().maxCoeff());
    }
    return worst;
  });

  s.guarded("statespace", "BKM kernel vs 32-node Gauss-Legendre", 1e-8, [&] {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const DensityMatrixC rho = random_density_matrix(rng, 4);
      const CMat b = random_hermitian(rng, 4);
      CMat quad = CMat::Zero(4, 4);
      const auto& nodes = boost::math::quadrature::gauss<double, 32>::abscissa();
      const auto& weights = boost::math::quadrature::gauss<double, 32>::weights();
      for (std::size_t i = 0; i < nodes.size(); ++i)
        for (double sgn : {-1.0, 1.0}) {
          if (sgn < 0 && nodes[i] == 0.0) continue;
          const double sv = 0.5 * (1.0 + sgn * nodes[i]);
          quad += 0.5 * weights[i] * matrix_power(rho, sv) * b * matrix_power(rho, 1.0 - sv);
        }
      worst = std::max(worst, (omega(rho, b) - quad).cwiseAbs().maxCoeff());
    }
    return worst;
  });

  s.guarded("statespace", "relative entropy non-negativity (negated minimum)", 1e-12, [&] {
    double lowest = 0.0;
    for (int t = 0; t < 20; ++t) {
      lowest = std::min(lowest, relative_entropy(random_density_matrix(rng, 5), random_density_matrix(rng, 5)));
      lowest = std::min(lowest, relative_entropy(random_grid_state(rng, 9), random_grid_state(rng, 9)));
    }
    return -lowest;
  });
}

void channels_suite(Suite& s, std::mt19937_64& rng) {
  s.guarded("channels", "duality tr(rho E^dag A) = tr(E(rho) A)", 1e-10, [&] {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const auto e = random_kraus_channel(rng, 4, 3, 3);
      const DensityMatrixC rho = random_density_matrix(rng, 4);
      const CMat a = random_hermitian(rng, 3);
      const cplx l = (rho.entries * apply_adjoint(e, a)).trace();
      const cplx r = (apply_values(e, rho.entries) * a).trace();
      worst = std::max(worst, std::abs(l - r));
      const auto c = random_stochastic_channel(rng, 7, 5);
      const GridDistribution g = random_grid_state(rng, 7);
      const Vec ac = uniform_vec(rng, 5);
      worst = std::max(worst, std::abs(expectation(g, apply_adjoint(c, ac)) -
                                       apply_values(c, g.values()).dot(ac) * c.dx_out()));
    }
    return worst;
  });

  s.guarded("channels", "Bayes posterior normalization", 1e-10, [&] {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const auto c = random_stochastic_channel(rng, 6, 9);
      const GridDistribution g = random_grid_state(rng, 6);
      const Mat post = bayes_posterior(c, g);
      worst = std::max(worst, ((post.colwise().sum() * g.dx()).array() - 1.0).abs().maxCoeff());
    }
    return worst;
  });

  s.guarded("channels", "metric adjointness of the transpose channel", 1e-9, [&] {
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const auto c = random_stochastic_channel(rng, 6, 5);
      const GridDistribution g = random_grid_state(rng, 6);
      const GridDistribution out = apply(c, g);
      Vec x = uniform_vec(rng, 6);
      x.array() -= x.mean();
      Vec y = uniform_vec(rng, 5);
      y.array() -= y.mean();
      worst = std::max(worst, std::abs(metric_inner(g, x, transpose_channel_apply(c, g, y)) -
                                       metric_inner(out, apply_values(c, x), y)));
      const auto e = random_kraus_channel(rng, 3, 3, 2);
      const DensityMatrixC rho = random_density_matrix(rng, 3);
      const DensityMatrixC eo = apply(e, rho);
      const CMat xq = random_hermitian(rng, 3), yq = random_hermitian(rng, 3);
      worst = std::max(worst, std::abs(metric_inner(rho, xq, transpose_channel_apply(e, rho, yq)) -
                                       metric_inner(eo, CMat(apply_values(e, xq)), yq)));
    }
    return worst;
  });

  s.guarded("channels", "uncertainty relation enforced (0 = rejected)", 0.0, [] {
    KleinGordonModel m;
    m.y_phi = 0.5;
    m.y_pi = 1.5;
    m.k_grid = {0.0};
    try {
      m.validate();
    } catch (const Error& e) {
      return e.code() == Errc::InvalidParameter ? 0.0 : 1.0;
    }
    return 1.0;
  });
}

void spectra_suite(Suite& s, std::mt19937_64& rng) {
  s.guarded("spectra", "0 <= eta <= 1 over 100 random pairs (excess)", 1e-9, [&] {
    std::uniform_int_distribution<int> dim(2, 4), grid(3, 16);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      Vec eta;
      if (t % 2 == 0) {
        const int n = grid(rng), m = grid(rng);
        const auto c = random_stochastic_channel(rng, n, m);
        eta = principal_spectrum(c, random_grid_state(rng, n), n - 1).eta;
      } else {
        const int d = dim(rng);
        const auto e = random_kraus_channel(rng, d, dim(rng), 2);
        eta = principal_spectrum(e, random_density_matrix(rng, d), d * d - 1).eta;
      }
      worst = std::max({worst, -eta.minCoeff(), eta.maxCoeff() - 1.0});
    }
    return worst;
  });

  s.guarded("spectra", "feature orthonormality", 1e-8, [&] {
    const auto c = random_stochastic_channel(rng, 12, 10);
    const GridDistribution g = random_grid_state(rng, 12);
    const auto sp = principal_spectrum(c, g, 11);
    double worst = 0.0;
    for (int i = 0; i < sp.size(); ++i)
      for (int j = 0; j < sp.size(); ++j)
        worst = std::max(worst, std::abs(metric_inner(g, Vec(sp.features.col(i)), Vec(sp.features.col(j))) -
                                         (i == j ? 1.0 : 0.0)));
    return worst;
  });

  s.guarded("spectra", "R E X_j = eta_j X_j", 1e-7, [&] {
    const auto c = random_stochastic_channel(rng, 10, 8);
    const GridDistribution g = random_grid_state(rng, 10);
    const auto sp = principal_spectrum(c, g, 9);
    double worst = 0.0;
    for (int j = 0; j < sp.size(); ++j) {
      const Vec x = sp.features.col(j);
      const Vec rex = transpose_channel_apply(c, g, apply_values(c, x));
      worst = std::max(worst, (rex - sp.eta(j) * x).cwiseAbs().maxCoeff());
    }
    const auto e = random_kraus_channel(rng, 3, 3, 2);
    const DensityMatrixC rho = random_density_matrix(rng, 3);
    const auto sq = principal_spectrum(e, rho, 8);
    for (int j = 0; j < sq.size(); ++j) {
      const CMat rex = transpose_channel_apply(e, rho, CMat(apply_values(e, sq.features[j])));
      worst = std::max(worst, (rex - sq.eta(j) * sq.features[j]).cwiseAbs().maxCoeff());
    }
    return worst;
  });

  s.guarded("spectra", "identity channel gives eta = 1", 1e-9, [&] {
    const GridDistribution g = random_grid_state(rng, 16);
    const auto sp = principal_spectrum(identity_channel(g.axes()), g, 15);
    return (sp.eta.array() - 1.0).abs().maxCoeff();
  });

  s.guarded("spectra", "distinguishability bounded by the observable norm (excess)", 1e-12, [&] {
    double worst = -1.0;
    for (int t = 0; t < 10; ++t) {
      const auto c = random_stochastic_channel(rng, 8, 6);
      const GridDistribution g = random_grid_state(rng, 8);
      const auto sp = principal_spectrum(c, g, 7);
      const Vec a = uniform_vec(rng, 8);
      const Vec a0 = a.array() - expectation(g, a);
      worst = std::max(worst, distinguishability(c, g, a, sp) - observable_inner(g, a0, a0));
    }
    return std::max(worst, 0.0);
  });
}

void gaussian_suite(Suite& s, std::mt19937_64& rng) {
  s.guarded("gaussian_exact", "AH = H^T A", 1e-12, [&] {
    std::normal_distribution<double> n;
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      Mat g(2, 2), x(2, 2), y(2, 2);
      for (int i = 0; i < 4; ++i) {
        g.data()[i] = n(rng);
        x.data()[i] = n(rng);
        y.data()[i] = n(rng);
      }
      const Mat a = g * g.transpose() + 0.5 * Mat::Identity(2, 2);
      const Mat yy = y * y.transpose() + 0.1 * Mat::Identity(2, 2);
      const HMatrix h = classical_H(ClassicalGaussianState{a}, GaussianChannelSpec{x, yy, false, Mat()});
      worst = std::max(worst, (h.A * h.H - h.H.transpose() * h.A).cwiseAbs().maxCoeff() /
                                  std::max(1.0, (h.A * h.H).cwiseAbs().maxCoeff()));
      worst = std::max({worst, -h.eta.minCoeff() - 1e-9, h.eta.maxCoeff() - 1.0 - 1e-9});
    }
    return worst;
  });

  s.guarded("gaussian_exact", "KG relevances decreasing in |k| (violations)", 0.0, [] {
    KleinGordonModel m;
    m.y_phi = 3.0;
    m.y_pi = 3.0;
    double violations = 0.0;
    double prev_phi = 2.0, prev_pi = 2.0;
    for (int i = 0; i <= 50; ++i) {
      const double k = 0.1 * i;
      const double ep = eta_kg_phi(m, k), eq = eta_kg_pi(m, k);
      if (!(ep < prev_phi && eq < prev_pi && ep <= 1.0 && eq <= 1.0)) violations += 1.0;
      prev_phi = ep;
      prev_pi = eq;
    }
    return violations;
  });

  s.guarded("gaussian_exact", "closed-form single-mode relevances vs grid (relative)", 1e-3, [] {
    // the window must hold the degree-4 tails of E(rho), which reach well past 4 sigma
    const GridDistribution rho = build_gibbs_1d(EffectiveHamiltonian1D::from_tau(1.0), -15.0, 15.0, 301);
    const auto sp = principal_spectrum(gaussian_convolution_channel(-15.0, 15.0, 301, 2.0), rho, 4);
    const auto hr = single_mode_relevances(1.0, 2.0, 4);
    double worst = 0.0;
    for (int j = 0; j < 4; ++j) worst = std::max(worst, std::abs(sp.eta(j) / hr[j].eta - 1.0));
    return worst;
  });
}

void perturbation_suite(Suite& s) {
  const HMatrix h = classical_H(ClassicalGaussianState{Mat::Identity(2, 2)},
                                GaussianChannelSpec{Mat::Identity(2, 2), Mat(Vec(Eigen::Vector2d(1.0, 2.0)).asDiagonal()),
                                                    false, Mat()});
  s.guarded("perturbation", "[a, a^dag] = 1 on the truncation interior", 1e-14, [] {
    const FockBasis b = fock_basis(2, 5);
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      const Mat c = Mat(b.a[k] * b.adag[k] - b.adag[k] * b.a[k]);
      for (int i = 0; i < b.size(); ++i)
        if (b.degree(i) < b.max_degree)
          for (int j = 0; j < b.size(); ++j)
            if (b.degree(j) < b.max_degree) worst = std::max(worst, std::abs(c(i, j) - (i == j ? 1.0 : 0.0)));
    }
    return worst;
  });

  s.guarded("perturbation", "V1 parity selection rule", 1e-12, [&] {
    QuarticInteraction q;
    q.sites = {Vec(Eigen::Vector2d(1.0, 0.3)), Vec(Eigen::Vector2d(-0.4, 1.0))};
    const int d = 6;
    const FockOperator v1 = build_V1(kernel_K1(q, h, d), kernel_L1(q, h, d), e_diag(h, d));
    const FockBasis b = fock_basis(2, d);
    double worst = 0.0;
    for (int i = 0; i < b.size(); ++i)
      for (int j = 0; j < b.size(); ++j)
        if ((b.degree(i) + b.degree(j)) % 2 == 1) worst = std::max(worst, std::abs(v1.m(i, j)));
    return worst;
  });

  s.guarded("perturbation", "K1 symmetry", 1e-12, [&] {
    QuarticInteraction q;
    q.sites = {Vec(Eigen::Vector2d(0.7, -0.2))};
    const FockOperator k1 = kernel_K1(q, h, 6);
    return (k1.m - k1.m.transpose()).cwiseAbs().maxCoeff();
  });
}

void rgflow_suite(Suite& s) {
  std::vector<FlowPoint> traj;
  s.guarded("rgflow", "regulator trajectory moment residuals", 1e-8, [&] {
    traj = regulator_trajectory(EffectiveHamiltonian1D::from_tau(1.0, -0.02), {10.0, 20.0, 40.0});
    double worst = 0.0;
    for (const auto& p : traj) worst = std::max({worst, std::abs(p.residual2), std::abs(p.residual4)});
    return worst;
  });

  s.guarded("rgflow", "relevant observables invariant along the trajectory", 1e-6, [&] {
    require(!traj.empty(), Errc::NoConvergence, "no trajectory");
    const double tau1 = std::sqrt(traj.front().matched_moments.front().second);
    const GridDistribution rho = build_gibbs_1d(EffectiveHamiltonian1D::from_tau(tau1), -10.0, 10.0, 601);
    const auto sp = hermite_spectrum(rho, tau1, 1.0, 4);
    return flow_invariance_report(traj, sp, 4).max_deviation;
  });

  s.guarded("rgflow", "second-moment match passes equivalence at n = 2", 1e-6, [] {
    const auto h0 = EffectiveHamiltonian1D::from_tau(1.0, 0.05);
    const auto h1 = match_second_moment(h0);
    const double tau1 = 1.0 / std::sqrt(2.0 * h1.c(2));
    const GridDistribution a = build_gibbs_1d(h0, -10.0, 10.0, 601);
    const GridDistribution b = build_gibbs_1d(h1, -10.0, 10.0, 601);
    return equivalence_test(a, b, hermite_spectrum(b, tau1, 1.0, 2), 2, 1e-6).max_gap;
  });
}

}  // namespace

std::vector<InvariantResult> run_invariants(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Suite s;
  statespace_suite(s, rng);
  channels_suite(s, rng);
  spectra_suite(s, rng);
  gaussian_suite(s, rng);
  perturbation_suite(s);
  rgflow_suite(s);
  return s.results;
}

}  // namespace renormalens
