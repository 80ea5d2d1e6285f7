#include "oracles.hpp"

#include "renormalens/channels.hpp"
#include "renormalens/invariants.hpp"

#include <doctest.h>

using namespace renormalens;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::NoConvergence;
}

GridDistribution normal_on(const Vec& x, double var) {
  Vec v = x.unaryExpr([var](double t) { return oracle::gaussian_pdf(t, 0.0, var); });
  const double dx = x(1) - x(0);
  v /= v.sum() * dx;
  return GridDistribution(x(0), x(x.size() - 1), v);
}

double variance(const GridDistribution& g) {
  const Vec x = g.points();
  const double m1 = x.dot(g.values()) * g.dx();
  return x.array().square().matrix().dot(g.values()) * g.dx() - m1 * m1;
}

}  // namespace

TEST_CASE("convolution channel construction") {
  const auto e = gaussian_convolution_channel(-10.0, 10.0, 401, 2.0);
  CHECK_NOTHROW(e.validate(1e-10));
  const Eigen::RowVectorXd mass = e.kernel.colwise().sum() * e.dx_out();
  CHECK((mass.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(e.kernel.minCoeff() >= 0.0);

  const double dx = 20.0 / 400;
  const auto narrow = gaussian_convolution_channel(-10.0, 10.0, 401, dx / 100.0);
  CHECK((narrow.kernel - Mat::Identity(401, 401) / dx).cwiseAbs().maxCoeff() < 1e-9);

  CHECK(code_of([] { gaussian_convolution_channel(-1, 1, 11, 0.0); }) == Errc::InvalidSigma);
  CHECK(code_of([] { gaussian_convolution_channel(-1, 1, 11, -2.0); }) == Errc::InvalidSigma);
  CHECK(code_of([] { gaussian_convolution_channel(-1, 1, 2, 1.0); }) == Errc::InvalidParameter);
}

TEST_CASE("apply: variance addition") {
  SUBCASE("standard normal") {
    const auto e = gaussian_convolution_channel(-10.0, 10.0, 401, 2.0);
    const auto rho = normal_on(Vec::LinSpaced(401, -10.0, 10.0), 1.0);
    // truncation at |x| = 10 removes a little tail mass from the N(0, 5) output
    CHECK(std::abs(variance(apply(e, rho)) - 5.0) < 1e-3);
  }
  SUBCASE("quartic Gibbs state") {
    const auto h = [](double x) { return 0.5 * x * x + 0.1 * std::pow(x, 4); };
    const double v_in = oracle::gibbs_moment(h, 2);
    const auto rho = build_gibbs_1d(EffectiveHamiltonian1D({{2, 0.5}, {4, 0.1}}), -9.0, 9.0, 451);
    const auto e = gaussian_convolution_channel(-9.0, 9.0, 451, 1.5);
    CHECK(std::abs(variance(apply(e, rho)) - (v_in + 2.25)) < 2e-3);
  }
}

TEST_CASE("apply: identity and depolarizing") {
  std::mt19937_64 rng(2);
  const auto g = random_grid_state(rng, 30);
  const auto out = apply(identity_channel(g.axes()), g);
  CHECK((out.values() - g.values()).cwiseAbs().maxCoeff() < 1e-12);

  const auto dep = depolarizing_channel(2, 1.0);
  CHECK_NOTHROW(dep.validate());
  for (int t = 0; t < 3; ++t) {
    const DensityMatrixC rho(oracle::random_density(rng, 2));
    CHECK((apply(dep, rho).entries - CMat::Identity(2, 2) / 2.0).cwiseAbs().maxCoeff() < 1e-14);
  }
  const DensityMatrixC rho(oracle::random_density(rng, 3));
  CHECK((renormalens::apply(identity_kraus<cplx>(3), rho).entries - rho.entries).cwiseAbs().maxCoeff() < 1e-14);

  CHECK(code_of([&] { apply(dep, rho); }) == Errc::DimensionMismatch);
  CHECK(code_of([&] { apply_values(identity_channel(g.axes()), Vec(Vec::Ones(5))); }) ==
        Errc::DimensionMismatch);
}

TEST_CASE("Kraus validation") {
  QuantumChannel<cplx> bad{{CMat::Identity(2, 2), CMat::Identity(2, 2)}};
  CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidChannel);
  CHECK(code_of([] { QuantumChannel<cplx>{}.validate(); }) == Errc::InvalidChannel);
  std::mt19937_64 rng(8);
  CHECK_NOTHROW(random_kraus_channel(rng, 3, 2, 4).validate());
}

TEST_CASE("adjoint: unitality and duality") {
  std::mt19937_64 rng(41);
  const auto e = random_stochastic_channel(rng, 25, 18);
  CHECK((apply_adjoint(e, Vec::Ones(18)) - Vec::Ones(25)).cwiseAbs().maxCoeff() < 1e-10);
  for (int t = 0; t < 10; ++t) {
    const auto rho = random_grid_state(rng, 25);
    const Vec a = Vec::Random(18);
    const double lhs = rho.values().dot(apply_adjoint(e, a)) * e.dx_in();
    const double rhs = apply_values(e, rho.values()).dot(a) * e.dx_out();
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }

  const auto q = random_kraus_channel(rng, 3, 4, 3);
  CHECK((apply_adjoint(q, CMat(CMat::Identity(4, 4))) - CMat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
  for (int t = 0; t < 10; ++t) {
    const CMat rho = oracle::random_density(rng, 3);
    const CMat a = oracle::random_hermitian(rng, 4);
    const cplx lhs = (rho * apply_adjoint(q, a)).trace();
    const cplx rhs = (apply_values(q, rho) * a).trace();
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
  const CMat a = oracle::random_hermitian(rng, 3);
  CHECK((apply_adjoint(identity_kraus<cplx>(3), a) - a).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("transpose channel") {
  std::mt19937_64 rng(77);
  SUBCASE("identity leaves features unchanged") {
    const auto rho = random_grid_state(rng, 20);
    const auto id = identity_channel(rho.axes());
    Vec x = Vec::Random(20);
    x -= rho.values() * (x.sum() / rho.values().sum());
    CHECK((transpose_channel_apply(id, rho, x) - x).cwiseAbs().maxCoeff() < 1e-10);
    const Vec f = Vec::Random(20);
    CHECK((heisenberg_transpose_apply(id, rho, f) - f).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("binary symmetric channel with uniform prior") {
    const double p = 0.2;
    Mat k(2, 2);
    k << 1 - p, p, p, 1 - p;
    const std::vector<UniformGrid> ax{{0.0, 1.0, 2}};
    const auto e = make_stochastic_channel(k, ax, ax);
    const GridDistribution rho(ax, Vec::Constant(2, 0.5));
    // posterior p(x|y) = p(y|x) * 0.5 / 0.5
    CHECK((bayes_posterior(e, rho) - k.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("metric adjoint relation") {
    for (int t = 0; t < 5; ++t) {
      const auto e = random_stochastic_channel(rng, 15, 12);
      const auto rho = random_grid_state(rng, 15);
      const auto out = apply(e, rho);
      Vec x = Vec::Random(15), y = Vec::Random(12);
      x -= rho.values() * (x.sum() / rho.values().sum());
      y -= out.values() * (y.sum() / out.values().sum());
      const Vec ex = apply_values(e, x);
      const double lhs = metric_inner(rho, x, transpose_channel_apply(e, rho, y));
      const double rhs = metric_inner(out, ex, y);
      CHECK(std::abs(lhs - rhs) < 1e-9 * std::max(1.0, std::abs(rhs)));
      CHECK((transpose_channel_apply(e, rho, y) - transpose_channel_apply_composed(e, rho, y))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    }
  }
  SUBCASE("posterior positivity is required") {
    Mat k = Mat::Zero(2, 2);
    k(0, 0) = k(0, 1) = 1.0;
    const std::vector<UniformGrid> ax{{0.0, 1.0, 2}};
    const auto e = make_stochastic_channel(k, ax, ax);
    const GridDistribution rho(ax, Vec::Constant(2, 0.5));
    CHECK(code_of([&] { transpose_channel_apply(e, rho, Vec(Vec::Ones(2))); }) == Errc::NonPositiveState);
  }
}

TEST_CASE("Heisenberg transpose on the generating function") {
  // on [-10, 10] the cut tails of the N(0, 4) kernel already cost ~1e-4 at |x| = 3
  const Vec x = Vec::LinSpaced(601, -15.0, 15.0);
  const auto rho = normal_on(x, 1.0);
  const auto e = gaussian_convolution_channel(-15.0, 15.0, 601, 2.0);

  const Vec c = Vec::Constant(601, 1.7);
  CHECK((heisenberg_transpose_apply(e, rho, c) - c).cwiseAbs().maxCoeff() < 1e-10);

  const double t = 0.3, eta = 0.2;
  const auto gen = [](double s, double u) { return std::exp(s * u - 0.5 * s * s); };
  const Vec g = x.unaryExpr([&](double u) { return gen(t, u); });
  const Vec back = apply_adjoint(e, heisenberg_transpose_apply(e, rho, g));
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) <= 5.0) worst = std::max(worst, std::abs(back(i) - gen(eta * t, x(i))));
  CHECK(worst < 1e-4);
}

TEST_CASE("quantum transpose channel") {
  std::mt19937_64 rng(19);
  const auto e = random_kraus_channel(rng, 3, 3, 3);
  const DensityMatrixC rho(oracle::random_density(rng, 3, 0.5));
  const auto out = apply(e, rho);
  CMat x = oracle::random_hermitian(rng, 3), y = oracle::random_hermitian(rng, 3);
  x -= (x.trace() / 3.0) * CMat::Identity(3, 3);
  y -= (y.trace() / 3.0) * CMat::Identity(3, 3);
  const double lhs = metric_inner(rho, x, transpose_channel_apply(e, rho, y));
  const double rhs = metric_inner(out, CMat(apply_values(e, x)), y);
  CHECK(std::abs(lhs - rhs) < 1e-9);

  const CMat one = CMat::Identity(3, 3);
  CHECK((heisenberg_transpose_apply(e, rho, one) - one).cwiseAbs().maxCoeff() < 1e-10);
  const auto id = identity_kraus<cplx>(3);
  CHECK((heisenberg_transpose_apply(id, rho, x) - x).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Gaussian channel specifications") {
  GaussianChannelSpec c{Mat::Identity(2, 2), Mat::Identity(2, 2)};
  CHECK_NOTHROW(c.validate());
  c.Y(0, 0) = -1.0;
  CHECK(code_of([&] { c.validate(); }) == Errc::InvalidChannel);
  c.Y = Mat::Identity(2, 2);
  c.Y(0, 1) = 0.5;
  CHECK(code_of([&] { c.validate(); }) == Errc::InvalidChannel);

  // pure loss sqrt(t) needs (1 - t)/2 vacuum noise per quadrature
  const Mat d = standard_symplectic(1);
  const double tr = 0.6;
  GaussianChannelSpec q{std::sqrt(tr) * Mat::Identity(2, 2), 0.5 * (1 - tr) * Mat::Identity(2, 2), true, d};
  CHECK_NOTHROW(q.validate());
  q.Y *= 0.9;
  CHECK(code_of([&] { q.validate(); }) == Errc::InvalidChannel);
  q.Y = Mat::Zero(2, 2);
  q.X = Mat::Identity(2, 2);
  CHECK_NOTHROW(q.validate());
}
