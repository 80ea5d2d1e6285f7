#include "gauss2d.hpp"
#include "oracles.hpp"

#include "renormalens/gaussian_exact.hpp"
#include "renormalens/invariants.hpp"
#include "renormalens/perturbation.hpp"
#include "renormalens/rgflow.hpp"
#include "renormalens/spectra.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace renormalens;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  const char* id;
  const char* title;
  double time_limit;  // seconds, 0 = none
  std::function<void(Outcome&)> run;
};

GridDistribution standard_normal(double lo, double hi, int n) {
  const Vec x = Vec::LinSpaced(n, lo, hi);
  Vec v = x.unaryExpr([](double t) { return oracle::gaussian_pdf(t, 0.0, 1.0); });
  v /= v.sum() * (x(1) - x(0));
  return GridDistribution(lo, hi, v);
}

double overlap(const GridDistribution& rho, const Vec& a, const Vec& b) {
  const Vec w = rho.values() * rho.dx();
  const Vec a0 = a.array() - w.dot(a), b0 = b.array() - w.dot(b);
  return std::abs(w.dot(a0.cwiseProduct(b0))) / std::sqrt(w.dot(a0.cwiseProduct(a0)) * w.dot(b0.cwiseProduct(b0)));
}

// top four eta and worst Hermite overlap of the brute-force spectrum
std::pair<Vec, double> hermite_check(double lim, int n) {
  const auto rho = standard_normal(-lim, lim, n);
  const auto sp = principal_spectrum(gaussian_convolution_channel(-lim, lim, n, 2.0), rho, 4);
  double worst = 1.0;
  for (int j = 0; j < 4; ++j) {
    const Vec he = rho.points().unaryExpr([j](double t) { return oracle::he(j + 1, t); });
    worst = std::min(worst, overlap(rho, sp.observable(j), he));
  }
  return {sp.eta, worst};
}

void a1(Outcome& o) {
  const auto [eta, ov] = hermite_check(10.0, 601);
  double worst = 0.0;
  for (int j = 0; j < 4; ++j) {
    const double expect = std::pow(0.2, j + 1);
    worst = std::max(worst, std::abs(eta(j) - expect) / expect);
  }
  o.detail << "eta=" << eta.transpose() << " max_rel_err=" << worst << " min_overlap=" << ov;
  o.require(worst < 1e-3, "eta within 1e-3 relative");
  o.require(ov >= 0.999, "overlap >= 0.999");

  const auto [wide, wov] = hermite_check(15.0, 601);
  double wworst = 0.0;
  for (int j = 0; j < 4; ++j) wworst = std::max(wworst, std::abs(wide(j) - std::pow(0.2, j + 1)) / std::pow(0.2, j + 1));
  o.detail << " | diagnostic [-15,15]: max_rel_err=" << wworst << " min_overlap=" << wov;
}

void a2(Outcome& o) {
  std::mt19937_64 rng(2024);
  const auto s = gauss2d::random_instance(rng);
  const auto h = classical_H({s.A}, {s.X, s.Y});
  const double sym = (s.A * h.H - h.H.transpose() * s.A).cwiseAbs().maxCoeff();
  o.detail << "|AH-H^TA|=" << sym;
  o.require(sym < 1e-12, "AH = H^T A to 1e-12");

  const auto d = gauss2d::discretize(s, 7.0, 61);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    const Vec f = 0.4 * Vec(Eigen::Vector2d(g(rng), g(rng)));
    worst = std::max(worst, gauss2d::generating_identity_error(d, s, h, f, 2.0));
  }
  o.detail << " generating_identity_max_err=" << worst;
  o.require(worst < 2e-2, "generating identity within 2e-2");
}

void a3(Outcome& o) {
  // nbar = 1: A = (nbar + 1/2) 1; classical noise y^2 = 9
  const QuantumGaussianState st{Mat(1.5 * Mat::Identity(2, 2)), standard_symplectic(1)};
  const GaussianChannelSpec c{Mat::Identity(2, 2), Mat(9.0 * Mat::Identity(2, 2)), true, standard_symplectic(1)};
  const Vec eta = quantum_quadratic_sector(st, c, {0}).eta;
  const Vec ref = oracle::fock_field_relevances(1.0, 3.0, 60);
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(eta(i) - ref(i)) / ref(i));
  o.detail << "sector=" << eta.transpose() << " fock60=" << ref.transpose() << " max_rel_err=" << worst;
  o.require(worst < 2e-2, "within 2e-2 of the Fock oracle");
}

KleinGordonModel kg(double y_phi, double y_pi, double sigma) {
  KleinGordonModel m;
  m.y_phi = y_phi;
  m.y_pi = y_pi;
  m.sigma = sigma;
  m.k_grid = {0.0};
  return m;
}

Vec sector_eta(const KleinGordonModel& m, double k) {
  return quantum_quadratic_sector(kg_mode_state(m, k), kg_mode_channel(m, k), {0}).eta;
}

void a4(Outcome& o) {
  const auto m = kg(3.0, 3.0, 0.7);
  bool mono = true, bounded = true;
  double prev_phi = 2.0, prev_pi = 2.0;
  for (double k = 0.0; k <= 5.0; k += 0.1) {
    const double p = eta_kg_phi(m, k), q = eta_kg_pi(m, k);
    bounded = bounded && p <= 1.0 && q <= 1.0 && eta_kg_phi(m, -k) == p && eta_kg_pi(m, -k) == q;
    mono = mono && p < prev_phi && q < prev_pi;
    prev_phi = p;
    prev_pi = q;
  }
  o.require(mono, "monotone decreasing in |k|");
  o.require(bounded, "eta <= 1");

  const Vec a = sector_eta(kg(10.0, 10.0, 0.5), 0.8);
  const Vec b = sector_eta(kg(20.0, 20.0, 0.5), 0.8);
  double scale = 0.0;
  for (int i = 0; i < 2; ++i) scale = std::max(scale, std::abs(b(i) / a(i) / 0.25 - 1.0));
  o.detail << "y-doubling ratio dev=" << scale;
  o.require(scale < 0.05, "y doubling scales by 1/4 within 5%");

  const double k = 1.2;
  const Vec s1 = sector_eta(kg(10.0, 10.0, 1.0), k);
  const Vec s2 = sector_eta(kg(10.0, 10.0, 1.2), k);
  const double expect = std::exp(-k * k * (1.44 - 1.0));
  double sig = 0.0;
  for (int i = 0; i < 2; ++i) sig = std::max(sig, std::abs(s2(i) / s1(i) / expect - 1.0));
  o.detail << " sigma ratio dev=" << sig;
  o.require(sig < 0.05, "sigma ratio within 5%");
}

void a5(Outcome& o) {
  const auto h0 = EffectiveHamiltonian1D::from_tau(1.0, 0.05);
  const auto h1 = match_second_moment(h0);
  const double tau1 = 1.0 / std::sqrt(2.0 * h1.c(2));
  const auto qa = build_gibbs_1d(h0, -10.0, 10.0, 601);
  const auto qb = build_gibbs_1d(h1, -10.0, 10.0, 601);
  const auto sp = hermite_spectrum(qb, tau1, 1.0, 4);
  const auto r2 = equivalence_test(qa, qb, sp, 2, 1e-6);
  const auto r4 = equivalence_test(qa, qb, sp, 4, 1e-6);
  o.detail << "gap2=" << r2.max_gap << " gap4=" << r4.max_gap;
  o.require(r2.equivalent, "equivalent at n=2");
  o.require(!r4.equivalent, "not equivalent at n=4");

  const auto ref = EffectiveHamiltonian1D::from_tau(1.0, -0.02);
  const auto traj = regulator_trajectory(ref, {10.0, 20.0, 40.0});
  double res = 0.0;
  for (const auto& p : traj) res = std::max({res, std::abs(p.residual2), std::abs(p.residual4)});
  const double t1 = std::sqrt(traj.front().matched_moments.front().second);
  const auto rho = build_gibbs_1d(EffectiveHamiltonian1D::from_tau(t1), -10.0, 10.0, 601);
  const auto rep = flow_invariance_report(traj, hermite_spectrum(rho, t1, 1.0, 4), 4);
  o.detail << " residual=" << res << " deviation=" << rep.max_deviation;
  o.require(res < 1e-8, "moments 2 and 4 within 1e-8");
  o.require(rep.max_deviation < 1e-6, "relevant deviation < 1e-6");
}

HMatrix one_mode(double tau, double sigma) {
  return classical_H({Mat::Constant(1, 1, tau * tau)},
                     {Mat::Identity(1, 1), Mat::Constant(1, 1, sigma * sigma), false, Mat()});
}

QuarticInteraction single_site() {
  QuarticInteraction q;
  q.sites = {Vec::Ones(1)};
  q.coupling = 1.0;
  return q;
}

void a6(Outcome& o) {
  const auto h = one_mode(1.0, 1.0);
  const int deg = 10;
  const auto v1 = build_V1(kernel_K1(single_site(), h, deg), kernel_L1(single_site(), h, deg), e_diag(h, deg));
  std::vector<double> err;
  for (double g : {1e-2, 2e-2}) {
    const auto fo = first_order_spectrum(h, v1, -g);
    const auto rho = build_gibbs_1d(EffectiveHamiltonian1D({{2, 0.5}, {4, g / 24.0}}), -12.0, 12.0, 401);
    const auto sp = principal_spectrum(gaussian_convolution_channel(-12.0, 12.0, 401, 1.0), rho, 2);
    err.push_back(std::abs(sp.eta(0) - fo[0].eta) + std::abs(sp.eta(1) - fo[1].eta));
  }
  const double ratio = err[1] / err[0];
  o.detail << "error ratio=" << ratio;
  o.require(ratio >= 3.5 && ratio <= 4.5, "error ratio in [3.5, 4.5]");

  const auto hp = one_mode(1.2, 0.7);
  const auto vp = build_V1(kernel_K1(single_site(), hp, 8), kernel_L1(single_site(), hp, 8), e_diag(hp, 8));
  double odd = 0.0;
  for (int i = 0; i <= 8; ++i)
    for (int j = 0; j <= 8; ++j)
      if ((i + j) % 2 == 1) odd = std::max(odd, std::abs(vp.m(i, j)));
  o.detail << " parity=" << odd;
  o.require(odd <= 1e-12, "parity to 1e-12");

  const double tau = 1.3;
  const int kdeg = 4, n = kdeg + 1;
  const auto k1 = kernel_K1(single_site(), one_mode(tau, 0.8), kdeg);
  const double mean = 3.0 * std::pow(tau, 4) / 24.0;
  const long samples = 10'000'000;
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> gd(0.0, tau);
  Mat sum = Mat::Zero(n, n), sum2 = Mat::Zero(n, n);
  Vec bn(n);
  for (long t = 0; t < samples; ++t) {
    const double x = gd(rng);
    const double x1 = std::pow(x, 4) / 24.0 - mean;
    double fact = 1.0;
    for (int j = 0; j < n; ++j) {
      if (j > 0) fact *= j;
      bn(j) = oracle::he(j, x / tau) / std::sqrt(fact);
    }
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = x1 * bn(i) * bn(j);
        sum(i, j) += v;
        sum2(i, j) += v * v;
      }
  }
  double worst_z = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double m = sum(i, j) / samples;
      const double se = std::sqrt((sum2(i, j) / samples - m * m) / samples);
      worst_z = std::max(worst_z, std::abs(k1.m(i, j) - m) / se);
    }
  o.detail << " max_z=" << worst_z;
  o.require(worst_z <= 3.0, "K1 within 3 SE of Monte Carlo");
}

void a7(Outcome& o) {
  std::mt19937_64 rng(7);

  const auto rho = build_gibbs_1d(EffectiveHamiltonian1D({{2, 0.5}, {4, 0.05}}), -9.0, 9.0, 301);
  const Vec x = rho.points();
  const Vec feat = rho.values().cwiseProduct(Vec(x.array().sin() + x.array().square() - moment(rho, 2)));
  const double half = 0.5 * metric_inner(rho, feat, feat);
  std::vector<double> ce;
  for (double eps : {1e-2, 5e-3, 2.5e-3, 1.25e-3})
    ce.push_back(std::abs(relative_entropy(GridDistribution(rho.axes(), rho.values() + eps * feat), rho) / (eps * eps) -
                          half));
  const DensityMatrixC qr(oracle::random_density(rng, 3, 1.0));
  CMat qx = oracle::random_hermitian(rng, 3);
  qx -= (qx.trace() / 3.0) * CMat::Identity(3, 3);
  const double qhalf = 0.5 * metric_inner(qr, qx, qx);
  std::vector<double> qe;
  for (double eps : {1e-3, 5e-4, 2.5e-4, 1.25e-4})
    qe.push_back(std::abs(relative_entropy(DensityMatrixC(CMat(qr.entries + eps * qx)), qr) / (eps * eps) - qhalf));
  bool halves = true;
  for (std::size_t i = 0; i + 1 < ce.size(); ++i) {
    const double rc = ce[i] / ce[i + 1], rq = qe[i] / qe[i + 1];
    o.detail << "ratio" << i << "=(" << rc << "," << rq << ") ";
    halves = halves && std::abs(rc - 2.0) < 0.2 && std::abs(rq - 2.0) < 0.2;
  }
  o.require(halves, "expansion error halves with eps");

  double rt = 0.0, bkm = 0.0;
  for (int t = 0; t < 10; ++t) {
    const DensityMatrixC r(oracle::random_density(rng, 4));
    const CMat y = oracle::random_hermitian(rng, 4);
    rt = std::max(rt, (omega(r, omega_inv(r, y)) - y).cwiseAbs().maxCoeff());
    bkm = std::max(bkm, (omega(r, y) - oracle::bkm_omega(r.entries, y)).cwiseAbs().maxCoeff());
    const auto g = random_grid_state(rng, 12);
    const Vec v = Vec::Random(12);
    rt = std::max(rt, (omega(g, omega_inv(g, v)) - v).cwiseAbs().maxCoeff());
  }
  o.detail << "roundtrip=" << rt << " bkm=" << bkm;
  o.require(rt < 1e-10, "Omega round trip to 1e-10");
  o.require(bkm < 1e-8, "BKM quadrature to 1e-8");

  std::uniform_int_distribution<int> cdim(2, 16), qdim(2, 4), kn(1, 3);
  double lo = 1.0, hi = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = cdim(rng), m = cdim(rng);
    const auto g = random_grid_state(rng, n);
    const auto sp = principal_spectrum(random_stochastic_channel(rng, n, m), g, n - 1);
    if (sp.size() > 0) lo = std::min(lo, sp.eta.minCoeff()), hi = std::max(hi, sp.eta.maxCoeff());
  }
  for (int t = 0; t < 50; ++t) {
    const int d = qdim(rng), dout = qdim(rng);
    // enough Kraus operators for an isometry and a faithful output state
    const int nk = std::max({kn(rng), (dout + d - 1) / d, (d + dout - 1) / dout});
    const DensityMatrixC r(random_density_matrix(rng, d));
    const auto sp = principal_spectrum(random_kraus_channel(rng, d, dout, nk), r, d * d - 1);
    if (sp.size() > 0) lo = std::min(lo, sp.eta.minCoeff()), hi = std::max(hi, sp.eta.maxCoeff());
  }
  o.detail << " eta range=[" << lo << "," << hi << "]";
  o.require(lo >= -1e-9 && hi <= 1.0 + 1e-9, "0 <= eta <= 1 over 100 pairs");
}

void a8(Outcome& o) {
  std::mt19937_64 rng(8);
  double excess = -1.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 4 + t % 10;
    const auto g = random_grid_state(rng, n);
    const auto e = random_stochastic_channel(rng, n, 3 + t % 7);
    const auto sp = principal_spectrum(e, g, n - 1);
    const Vec a = Vec::Random(n);
    const Vec a0 = a.array() - expectation(g, a);
    excess = std::max(excess, distinguishability(e, g, a, sp) - observable_inner(g, a0, a0));
  }
  for (int t = 0; t < 20; ++t) {
    const DensityMatrixC r(random_density_matrix(rng, 3));
    const auto e = random_kraus_channel(rng, 3, 2 + t % 3, 2);
    const auto sp = principal_spectrum(e, r, 8);
    const CMat a = random_hermitian(rng, 3);
    const CMat a0 = a - expectation(r, a) * CMat::Identity(3, 3);
    excess = std::max(excess, distinguishability(e, r, a, sp) - observable_inner(r, a0, a0));
  }
  o.detail << "max D-<A0,A0>=" << excess;
  o.require(excess <= 1e-9, "D(A) <= <A0,A0>");

  const auto g = random_grid_state(rng, 10);
  const auto id = identity_channel(g.axes());
  const Vec a = Vec::Random(10);
  const Vec a0 = a.array() - expectation(g, a);
  const double n2 = observable_inner(g, a0, a0);
  const double idgap = std::abs(distinguishability(id, g, a, principal_spectrum(id, g, 9)) - n2) / n2;
  o.detail << " identity_gap=" << idgap;
  o.require(idgap < 1e-10, "identity-channel equality");

  const auto rho = standard_normal(-15.0, 15.0, 601);
  const auto e = gaussian_convolution_channel(-15.0, 15.0, 601, 2.0);
  const double d1 = distinguishability(e, rho, rho.points(), principal_spectrum(e, rho, 6));
  o.detail << " D(He1)=" << d1;
  o.require(std::abs(d1 - 0.2) < 1e-3, "single-mode D(He1) = 0.2");

  // phi_k in the classical limit: mode variance 1/(beta w^2), noise rescaled onto the phi axis
  const auto m = kg(3.0, 3.0, 0.7);
  const double k = 0.5;
  const double var = kg_field_norm(m, k);
  const double s = m.y_phi / std::exp(-0.5 * k * k * m.sigma * m.sigma);
  const double lim = 8.0 * std::sqrt(var + s * s);
  const Vec pts = Vec::LinSpaced(801, -lim, lim);
  Vec v = pts.unaryExpr([var](double t) { return oracle::gaussian_pdf(t, 0.0, var); });
  v /= v.sum() * (pts(1) - pts(0));
  const GridDistribution phi(-lim, lim, v);
  const auto ek = gaussian_convolution_channel(-lim, lim, 801, s);
  const double dk = distinguishability(ek, phi, phi.points(), hermite_spectrum(phi, std::sqrt(var), s, 3));
  const double expect = eta_kg_phi(m, k) * kg_field_norm(m, k);
  const double rel = std::abs(dk - expect) / expect;
  o.detail << " KG D(phi_k) rel_err=" << rel;
  o.require(rel < 0.05, "KG cross-check within 5%");
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"A1", "Hermite spectrum", 30.0, a1},
      {"A2", "Gaussian generating-function identity", 60.0, a2},
      {"A3", "quantum sector vs Fock oracle", 120.0, a3},
      {"A4", "Klein-Gordon formulas", 0.0, a4},
      {"A5", "equivalence and flow", 0.0, a5},
      {"A6", "perturbation scaling", 0.0, a6},
      {"A7", "geometry suite", 0.0, a7},
      {"A8", "distinguishability", 0.0, a8},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0.0 && secs >= c.time_limit) o.require(false, "runtime limit");
    if (!o.pass) ++failed;
    std::printf("%s %s: %s (%.1fs) %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
