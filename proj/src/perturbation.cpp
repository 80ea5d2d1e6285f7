#include "renormalens/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace renormalens {

std::size_t fock_dimension(int n_modes, int max_degree) {
  // binomial(n_modes + max_degree, max_degree)
  double v = 1.0;
  for (int i = 1; i <= max_degree; ++i) v = v * (n_modes + i) / i;
  return static_cast<std::size_t>(std::llround(v));
}

int FockBasis::find(const std::vector<int>& occupation) const {
  auto it = index.find(occupation);
  return it == index.end() ? -1 : it->second;
}

int FockBasis::degree(int i) const {
  return std::accumulate(states[i].begin(), states[i].end(), 0);
}

std::string FockBasis::label(int i) const {
  std::ostringstream os;
  os << '|';
  for (int k = 0; k < n_modes; ++k) os << (k ? "," : "") << states[i][k];
  os << '>';
  return os.str();
}

FockBasis fock_basis(int n_modes, int max_degree) {
  require(n_modes >= 1 && max_degree >= 1, Errc::InvalidParameter,
          "Fock basis needs n_modes >= 1 and max_degree >= 1");
  require(fock_dimension(n_modes, max_degree) <= kMaxFockBasis, Errc::BasisTooLarge,
          "truncated Fock basis exceeds 2000 states");
  FockBasis b;
  b.n_modes = n_modes;
  b.max_degree = max_degree;
  for (int d = 0; d <= max_degree; ++d)
    for (auto& occ : occupations_of_degree(n_modes, d)) {
      b.index[occ] = b.size();
      b.states.push_back(std::move(occ));
    }
  const int n = b.size();
  for (int k = 0; k < n_modes; ++k) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
      if (b.states[i][k] == 0) continue;
      auto lower = b.states[i];
      lower[k] -= 1;
      t.emplace_back(b.index.at(lower), i, std::sqrt(static_cast<double>(b.states[i][k])));
    }
    SpMat a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    b.adag.push_back(SpMat(a.transpose()));
    b.a.push_back(std::move(a));
  }
  return b;
}

FockBasis fock_basis(const HMatrix& h, int max_degree) { return fock_basis(h.n_modes(), max_degree); }

void QuarticInteraction::validate(int n_modes) const {
  require(type == "quartic", Errc::UnsupportedInteraction, "only quartic interactions are supported");
  require(!sites.empty(), Errc::InvalidParameter, "interaction needs at least one site");
  require(weights.empty() || weights.size() == sites.size(), Errc::DimensionMismatch,
          "weights must match sites");
  require(std::isfinite(coupling), Errc::InvalidParameter, "coupling not finite");
  for (const Vec& f : sites)
    require(f.size() == n_modes, Errc::DimensionMismatch, "site function has wrong length");
}

namespace {

// alpha_x = F^T A f_x: phi(f_x) = alpha_x . z with z independent standard normals
Vec site_alpha(const HMatrix& h, const Vec& f) { return h.modes.transpose() * (h.A * f); }

SpMat field_operator(const FockBasis& b, const Vec& alpha) {
  SpMat q(b.size(), b.size());
  for (int k = 0; k < b.n_modes; ++k)
    if (alpha(k) != 0.0) q += alpha(k) * (b.a[k] + b.adag[k]);
  return q;
}

// P [sum_x c_x/24 (Q_b^4 + 6 d Q_b^2 + 3 d^2)] P - <H_I>, with Q built from
// beta_x = scale o alpha_x and d_x = |alpha_x|^2 - |beta_x|^2.
FockOperator quartic_multiplication(const QuarticInteraction& inter, const HMatrix& h,
                                    int max_degree, const Vec& scale) {
  inter.validate(h.n_modes());
  const FockBasis ext = fock_basis(h.n_modes(), max_degree + 2);
  const int n = static_cast<int>(fock_dimension(h.n_modes(), max_degree));
  SpMat total(ext.size(), ext.size());
  SpMat id(ext.size(), ext.size());
  id.setIdentity();
  for (std::size_t x = 0; x < inter.sites.size(); ++x) {
    const Vec alpha = site_alpha(h, inter.sites[x]);
    const Vec beta = scale.cwiseProduct(alpha);
    const double d = alpha.squaredNorm() - beta.squaredNorm();
    const SpMat q = field_operator(ext, beta);
    const SpMat q2 = q * q;
    const SpMat q4 = q2 * q2;
    total += (inter.site_coupling(x) / 24.0) * (q4 + 6.0 * d * q2 + 3.0 * d * d * id);
  }
  FockOperator op;
  op.n_modes = h.n_modes();
  op.max_degree = max_degree;
  op.m = Mat(total).topLeftCorner(n, n);
  op.m.diagonal().array() -= quartic_mean(inter, h);
  return op;
}

}  // namespace

double quartic_mean(const QuarticInteraction& inter, const HMatrix& h) {
  inter.validate(h.n_modes());
  double m = 0.0;
  for (std::size_t x = 0; x < inter.sites.size(); ++x) {
    const double a2 = site_alpha(h, inter.sites[x]).squaredNorm();
    m += inter.site_coupling(x) * a2 * a2 / 8.0;
  }
  return m;
}

FockOperator kernel_K1(const QuarticInteraction& inter, const HMatrix& h, int max_degree) {
  return quartic_multiplication(inter, h, max_degree, Vec::Ones(h.n_modes()));
}

FockOperator kernel_L1(const QuarticInteraction& inter, const HMatrix& h, int max_degree) {
  return quartic_multiplication(inter, h, max_degree, h.eta.cwiseMax(0.0).cwiseSqrt());
}

Vec relation_exponent(const HMatrix& h, const Mat& X, double h2) {
  require(X.rows() == h.n_modes() && X.cols() == h.n_modes(), Errc::DimensionMismatch,
          "X does not match the modes");
  const Mat sf = h.modes * h.eta.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const Mat xi = X.inverse();
  const Mat g = h2 * (xi * sf).transpose() * (xi * sf);
  const Mat off = g - Mat(g.diagonal().asDiagonal());
  require(off.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff()),
          Errc::InvalidParameter, "relation exponent is not diagonal in the principal modes");
  return g.diagonal();
}

FockOperator l1_from_relation(const FockOperator& k1, const HMatrix& h, const Vec& g_diag) {
  require(g_diag.size() == h.n_modes() && k1.n_modes == h.n_modes(), Errc::TruncationMismatch,
          "relation inputs do not match");
  const FockBasis b = fock_basis(k1.n_modes, k1.max_degree);
  require(k1.m.rows() == b.size(), Errc::TruncationMismatch, "K1 does not match its truncation");
  const Vec se = h.eta.cwiseMax(0.0).cwiseSqrt();
  FockOperator out = k1;
  const int nm = b.n_modes;
  for (int p = 0; p < b.size(); ++p)
    for (int q = 0; q < b.size(); ++q) {
      const auto& P = b.states[p];
      const auto& Q = b.states[q];
      double sum = 0.0;
      std::vector<int> j(nm, 0);
      std::function<void(int)> rec = [&](int k) {
        if (k == nm) {
          std::vector<int> pj(nm), qj(nm);
          double w = 1.0;
          for (int i = 0; i < nm; ++i) {
            pj[i] = P[i] - j[i];
            qj[i] = Q[i] - j[i];
            w *= std::pow(se(i), pj[i] + qj[i]) * std::pow(g_diag(i), j[i]) / std::tgamma(j[i] + 1.0);
            w *= std::sqrt(std::tgamma(P[i] + 1.0) * std::tgamma(Q[i] + 1.0) /
                           (std::tgamma(pj[i] + 1.0) * std::tgamma(qj[i] + 1.0)));
          }
          sum += w * k1.m(b.index.at(pj), b.index.at(qj));
          return;
        }
        for (j[k] = 0; j[k] <= std::min(P[k], Q[k]); ++j[k]) rec(k + 1);
        j[k] = 0;
      };
      rec(0);
      out.m(p, q) = sum;
    }
  return out;
}

FockOperator e_diag(const HMatrix& h, int max_degree) {
  const FockBasis b = fock_basis(h.n_modes(), max_degree);
  FockOperator e;
  e.n_modes = h.n_modes();
  e.max_degree = max_degree;
  e.m = Mat::Zero(b.size(), b.size());
  const Vec se = h.eta.cwiseMax(0.0).cwiseSqrt();
  for (int i = 0; i < b.size(); ++i) {
    double v = 1.0;
    for (int k = 0; k < b.n_modes; ++k) v *= std::pow(se(k), b.states[i][k]);
    e.m(i, i) = v;
  }
  return e;
}

FockOperator build_V1(const FockOperator& k1, const FockOperator& l1, const FockOperator& e) {
  require(k1.n_modes == l1.n_modes && k1.n_modes == e.n_modes && k1.max_degree == l1.max_degree &&
              k1.max_degree == e.max_degree && k1.m.rows() == l1.m.rows() &&
              k1.m.rows() == e.m.rows(),
          Errc::TruncationMismatch, "K1, L1 and E use different truncations");
  const Mat off = e.m - Mat(e.m.diagonal().asDiagonal());
  require(off.size() == 0 || off.cwiseAbs().maxCoeff() == 0.0, Errc::InvalidParameter,
          "E must be diagonal");
  const auto d = e.m.diagonal().asDiagonal();
  FockOperator v = k1;
  v.m = d * (d * k1.m) - d * l1.m * d;
  return v;
}

std::vector<PerturbedMode> first_order_spectrum(const HMatrix& unperturbed, const FockOperator& v1,
                                                double lambda, double degeneracy_tol) {
  require(v1.n_modes == unperturbed.n_modes(), Errc::TruncationMismatch,
          "V1 does not match the number of modes");
  const FockBasis b = fock_basis(v1.n_modes, v1.max_degree);
  require(v1.m.rows() == b.size() && v1.m.cols() == b.size(), Errc::TruncationMismatch,
          "V1 does not match its truncation");
  const int n = b.size();
  Vec eta0(n);
  for (int i = 0; i < n; ++i) {
    double v = 1.0;
    for (int k = 0; k < b.n_modes; ++k) v *= std::pow(unperturbed.eta(k), b.states[i][k]);
    eta0(i) = v;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return eta0(a) > eta0(c); });

  const double vscale = std::max(1e-300, v1.m.cwiseAbs().maxCoeff());
  std::vector<PerturbedMode> out;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() &&
           eta0(order[end - 1]) - eta0(order[end]) <= degeneracy_tol * std::max(eta0(order[end - 1]), 1e-300))
      ++end;
    const std::vector<int> block(order.begin() + start, order.begin() + end);
    const int g = static_cast<int>(block.size());
    const double eb = eta0(block.front());
    Mat vb(g, g);
    for (int r = 0; r < g; ++r)
      for (int c = 0; c < g; ++c) vb(r, c) = v1.m(block[r], block[c]);
    vb = (0.5 * (vb + vb.transpose())).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(vb);
    Vec mu = es.eigenvalues();
    Mat u = es.eigenvectors();
    // order by perturbed relevance, descending
    if (lambda >= 0) {
      mu.reverseInPlace();
      u = u.rowwise().reverse().eval();
    }

    // lift the block vectors to the full basis
    Mat full = Mat::Zero(n, g);
    for (int r = 0; r < g; ++r) full.row(block[r]) = u.row(r);
    for (int c = 0; c < g; ++c) {
      Eigen::Index i = 0;
      full.col(c).cwiseAbs().maxCoeff(&i);
      if (full(i, c) < 0) full.col(c) *= -1.0;
    }
    const Mat coupling = v1.m * full;
    std::vector<bool> in_block(n, false);
    for (int i : block) in_block[i] = true;

    // degenerate first-order shifts leave the vectors undetermined
    for (int c = 0; c + 1 < g; ++c) {
      if (std::abs(mu(c) - mu(c + 1)) > 1e-12 * vscale) continue;
      double leak = 0.0;
      for (int m = 0; m < n; ++m)
        if (!in_block[m]) leak = std::max({leak, std::abs(coupling(m, c)), std::abs(coupling(m, c + 1))});
      require(leak <= 1e-12 * vscale, Errc::DegeneracyUnresolved,
              "degenerate block is not split at first order and couples to other states");
    }

    for (int c = 0; c < g; ++c) {
      Vec corr = Vec::Zero(n);
      for (int m = 0; m < n; ++m)
        if (!in_block[m]) corr(m) = coupling(m, c) / (eb - eta0(m));
      Eigen::Index dom = 0;
      full.col(c).cwiseAbs().maxCoeff(&dom);
      if (b.degree(static_cast<int>(dom)) == 0) continue;
      PerturbedMode pm;
      pm.occupation = b.states[dom];
      pm.eta0 = eb;
      pm.eta = eb + lambda * mu(c);
      pm.correction = corr;
      pm.vector = full.col(c) + lambda * corr;
      out.push_back(std::move(pm));
    }
    start = end;
  }
  return out;
}

}  // namespace renormalens
