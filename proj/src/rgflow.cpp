#include "renormalens/rgflow.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>

namespace renormalens {

namespace {

// Stationary points of H on x > 0 plus the origin.
std::vector<double> stationary_points(const EffectiveHamiltonian1D& h) {
  std::vector<double> xs{0.0};
  const double a = 6.0 * h.c(6), b = 4.0 * h.c(4), c = 2.0 * h.c(2);
  std::vector<double> ts;
  if (a != 0.0) {
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      ts = {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)};
    }
  } else if (b != 0.0) {
    ts = {-c / b};
  }
  for (double t : ts)
    if (t > 0.0) xs.push_back(std::sqrt(t));
  std::sort(xs.begin(), xs.end());
  return xs;
}

struct Support {
  double hmin;
  std::vector<double> breaks;  // [0, ..., cutoff]
};

Support integration_support(const EffectiveHamiltonian1D& h) {
  h.validate();
  Support s;
  s.breaks = stationary_points(h);
  s.hmin = 0.0;
  for (double x : s.breaks) s.hmin = std::min(s.hmin, h(x));
  double x = std::max(1.0, s.breaks.back() * 1.5);
  while (h(x) - s.hmin < 750.0) x *= 1.25;
  s.breaks.push_back(x);
  // refine so each piece holds a modest share of the decay
  std::vector<double> fine;
  for (std::size_t i = 0; i + 1 < s.breaks.size(); ++i)
    for (int j = 0; j < 8; ++j)
      fine.push_back(s.breaks[i] + (s.breaks[i + 1] - s.breaks[i]) * j / 8.0);
  fine.push_back(s.breaks.back());
  s.breaks = std::move(fine);
  return s;
}

double integrate(const Support& s, const std::function<double(double)>& f) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < s.breaks.size(); ++i)
    total += gauss_kronrod<double, 61>::integrate(f, s.breaks[i], s.breaks[i + 1], 10, 1e-12);
  return total;
}

}  // namespace

Vec gibbs_moments(const EffectiveHamiltonian1D& h, int k_max) {
  require(k_max >= 0, Errc::InvalidParameter, "k_max must be >= 0");
  const Support s = integration_support(h);
  const auto weight = [&](double x) { return std::exp(-(h(x) - s.hmin)); };
  const double z = integrate(s, weight);
  require(std::isfinite(z) && z > 0.0, Errc::NonNormalizable, "partition function is not finite");
  Vec m = Vec::Zero(k_max + 1);
  m(0) = 1.0;
  for (int k = 2; k <= k_max; k += 2)
    m(k) = integrate(s, [&](double x) { return std::pow(x, k) * weight(x); }) / z;
  return m;
}

EffectiveHamiltonian1D match_second_moment(const EffectiveHamiltonian1D& h0) {
  if (h0.leading_degree() == 2 && h0.coefficients.size() == 1) {
    h0.validate();
    return h0;
  }
  const double m2 = gibbs_moments(h0, 2)(2);
  return EffectiveHamiltonian1D({{2, 1.0 / (2.0 * m2)}});
}

std::pair<double, double> reference_moments(const EffectiveHamiltonian1D& reference) {
  const double c4 = reference.c(4);
  if (c4 < 0.0 && reference.c(6) == 0.0) {
    require(reference.c(2) > 0.0, Errc::NonNormalizable, "Gaussian part must be normalizable");
    const double t2 = 1.0 / (2.0 * reference.c(2));
    // Gaussian moments tau^k (k-1)!!
    const double g2 = t2, g4 = 3.0 * t2 * t2, g6 = 15.0 * t2 * t2 * t2, g8 = 105.0 * t2 * t2 * t2 * t2;
    return {g2 - c4 * (g6 - g2 * g4), g4 - c4 * (g8 - g4 * g4)};
  }
  const Vec m = gibbs_moments(reference, 4);
  return {m(2), m(4)};
}

namespace {

FlowPoint solve_point(double m2ref, double m4ref, double c2, double c4, double cutoff,
                      const FlowOptions& opts) {
  const double c6 = 1.0 / cutoff;
  const auto residual = [&](double a, double b, Vec* mom) {
    const Vec m = gibbs_moments(EffectiveHamiltonian1D({{2, a}, {4, b}, {6, c6}}), 8);
    if (mom) *mom = m;
    return Eigen::Vector2d(m(2) - m2ref, m(4) - m4ref);
  };
  Vec m;
  Eigen::Vector2d r = residual(c2, c4, &m);
  int it = 0;
  for (; it < opts.max_iter && r.lpNorm<Eigen::Infinity>() > opts.tolerance; ++it) {
    Eigen::Matrix2d j;
    j << -(m(4) - m(2) * m(2)), -(m(6) - m(2) * m(4)), -(m(6) - m(4) * m(2)), -(m(8) - m(4) * m(4));
    const Eigen::Vector2d step = j.fullPivLu().solve(-r);
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-10) {
      Vec mn;
      const Eigen::Vector2d rn = residual(c2 + t * step(0), c4 + t * step(1), &mn);
      if (rn.allFinite() && rn.norm() < r.norm()) {
        c2 += t * step(0);
        c4 += t * step(1);
        r = rn;
        m = mn;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }
  if (r.lpNorm<Eigen::Infinity>() > opts.tolerance) {
    std::ostringstream os;
    os.precision(3);
    os << "moment matching did not converge at Lambda=" << cutoff << " (residuals " << r(0) << ", "
       << r(1) << ")";
    fail(Errc::NoConvergence, os.str());
  }
  FlowPoint p;
  p.parameters = EffectiveHamiltonian1D({{2, c2}, {4, c4}, {6, c6}});
  p.matched_moments = {{2, m(2)}, {4, m(4)}};
  p.regulator = cutoff;
  p.residual2 = r(0);
  p.residual4 = r(1);
  p.iterations = it;
  return p;
}

}  // namespace

std::vector<FlowPoint> regulator_trajectory(const EffectiveHamiltonian1D& reference,
                                            const std::vector<double>& lambda_grid,
                                            const FlowOptions& opts) {
  require(!lambda_grid.empty(), Errc::InvalidParameter, "Lambda grid is empty");
  for (double l : lambda_grid)
    require(std::isfinite(l) && l > 0.0, Errc::InvalidParameter, "each Lambda must be positive");
  require(reference.c(6) == 0.0, Errc::InvalidParameter, "reference must not carry a sextic term");
  require(opts.max_iter >= 1 && opts.tolerance > 0.0, Errc::InvalidParameter, "bad solver options");
  const auto [m2, m4] = reference_moments(reference);

  std::vector<FlowPoint> out(lambda_grid.size());
  std::vector<std::exception_ptr> errors(lambda_grid.size());
  parallel_for(lambda_grid.size(), [&](std::size_t i) {
    try {
      out[i] = solve_point(m2, m4, reference.c(2), reference.c(4), lambda_grid[i], opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

FlowInvarianceReport flow_invariance_report(const std::vector<FlowPoint>& trajectory,
                                            const ClassicalSpectrum& spectrum, int n,
                                            double tolerance) {
  require(!trajectory.empty(), Errc::InvalidParameter, "trajectory is empty");
  require(n >= 0 && n <= spectrum.size(), Errc::InvalidParameter, "n exceeds spectrum length");
  require(spectrum.rho_ref.n_axes() == 1, Errc::InvalidParameter, "flow report needs a 1D spectrum");
  const Vec x = spectrum.rho_ref.points();

  FlowInvarianceReport rep;
  rep.tolerance = tolerance;
  for (const FlowPoint& p : trajectory) {
    p.parameters.validate();
    // weights can underflow far out; a plain normalized vector avoids the positivity check
    Vec hv = x.unaryExpr([&](double v) { return p.parameters(v); });
    Vec w = (-(hv.array() - hv.minCoeff())).exp().matrix();
    w /= w.sum();
    std::vector<double> row;
    for (int j = 0; j < n; ++j) row.push_back(w.dot(spectrum.observables.col(j)));
    rep.expectations.push_back(std::move(row));
  }
  for (const auto& row : rep.expectations) {
    double dev = 0.0;
    for (int j = 0; j < n; ++j) dev = std::max(dev, std::abs(row[j] - rep.expectations.front()[j]));
    rep.deviations.push_back(dev);
    rep.max_deviation = std::max(rep.max_deviation, dev);
  }
  rep.flagged = rep.max_deviation > tolerance;
  return rep;
}

}  // namespace renormalens
