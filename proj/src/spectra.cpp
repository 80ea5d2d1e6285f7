#include "renormalens/spectra.hpp"

#include "renormalens/gaussian_exact.hpp"

#include <Eigen/QR>

#include <cmath>
#include <numeric>

namespace renormalens {

std::pair<Vec, Mat> solve_on_complement(const Mat& W, const Vec& u) {
  const Eigen::Index n = W.rows();
  require(W.cols() == n && u.size() == n, Errc::DimensionMismatch, "solve_on_complement: shapes");
  require(n >= 2, Errc::InvalidParameter, "tangent space is empty");
  Eigen::HouseholderQR<Mat> qr(u);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat Qc = Q.rightCols(n - 1);
  Mat Wc = Qc.transpose() * W * Qc;
  Wc = (0.5 * (Wc + Wc.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(Wc);
  require(es.info() == Eigen::Success, Errc::NoConvergence, "symmetric eigensolver failed");
  Vec eta = es.eigenvalues().reverse();
  Mat vecs = Qc * es.eigenvectors().rowwise().reverse();
  return {std::move(eta), std::move(vecs)};
}

namespace {

// Rotation R of a cluster so that canon * R follows the pivot convention.
// Taking the unit vector that maximizes the first reachable coordinate and
// recursing on the complement is Gram-Schmidt over the rows of canon in order.
Mat cluster_rotation(const Mat& canon) {
  const Eigen::Index g = canon.cols();
  Mat q(g, g);
  Eigen::Index t = 0;
  const double scale = canon.rowwise().norm().maxCoeff();
  for (Eigen::Index i = 0; i < canon.rows() && t < g; ++i) {
    Vec v = canon.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass) v -= q.leftCols(t) * (q.leftCols(t).transpose() * v);
    const double nv = v.norm();
    if (nv > 1e-7 * scale) q.col(t++) = v / nv;
  }
  if (t < g) {
    // canon is rank deficient: complete with any orthonormal complement
    Eigen::HouseholderQR<Mat> qr(q.leftCols(t));
    const Mat full = qr.householderQ() * Mat::Identity(g, g);
    q.rightCols(g - t) = full.rightCols(g - t);
  }
  return q;
}

}  // namespace

void canonicalize_eigenspaces(Vec& eta, Mat& vecs, Mat& canon, double tol, Eigen::Index limit) {
  const Eigen::Index n = eta.size();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return eta(a) > eta(b); });
  Vec e2(n);
  Mat v2(vecs.rows(), n), c2(canon.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e2(j) = eta(order[j]);
    v2.col(j) = vecs.col(order[j]);
    c2.col(j) = canon.col(order[j]);
  }
  eta = std::move(e2);
  vecs = std::move(v2);
  canon = std::move(c2);

  Eigen::Index start = 0;
  if (limit < 0) limit = n;
  while (start < std::min(n, limit)) {
    Eigen::Index end = start + 1;
    while (end < n && eta(end - 1) - eta(end) <= tol) ++end;
    const Eigen::Index g = end - start;
    const Mat rot = cluster_rotation(canon.middleCols(start, g));
    vecs.middleCols(start, g) = (vecs.middleCols(start, g) * rot).eval();
    canon.middleCols(start, g) = (canon.middleCols(start, g) * rot).eval();
    start = end;
  }
}

ClassicalSpectrum principal_spectrum(const StochasticChannel& e, const GridDistribution& rho,
                                     int n_requested, const SpectrumOptions& opts) {
  e.validate();
  require(e.n_in() == rho.size(), Errc::DimensionMismatch, "channel input size");
  const Eigen::Index N = rho.size();
  require(N - 1 <= opts.max_tangent_dim, Errc::DimensionTooLarge, "tangent dimension exceeds cap");
  require(n_requested >= 1 && n_requested <= N - 1, Errc::InvalidParameter,
          "n_requested must be in [1, tangent dimension]");

  const Vec out = apply_values(e, rho.values());
  require(out.allFinite() && out.minCoeff() > 1e-250, Errc::NonPositiveState,
          "E(rho) underflows on the output grid");
  const Vec sqrt_rho = rho.values().cwiseSqrt();
  const double dx = rho.dx();

  // whitened coordinates x~ = X sqrt(dx / rho); C maps them to whitened outputs
  Mat C = std::sqrt(dx * e.dx_out()) * (out.cwiseSqrt().cwiseInverse().asDiagonal() * e.kernel *
                                        sqrt_rho.asDiagonal());
  const Mat W = C.transpose() * C;
  auto [eta, vecs] = solve_on_complement(W, sqrt_rho * std::sqrt(dx));

  const Vec to_feature = (rho.values() / dx).cwiseSqrt();
  Mat canon = to_feature.asDiagonal() * vecs;
  canonicalize_eigenspaces(eta, vecs, canon, opts.degeneracy_tol, n_requested);

  int keep = n_requested;
  if (opts.eta_threshold)
    while (keep > 0 && eta(keep - 1) < *opts.eta_threshold) --keep;

  ClassicalSpectrum s;
  s.eta = eta.head(keep);
  s.features = canon.leftCols(keep);
  s.observables = rho.values().cwiseInverse().asDiagonal() * s.features;
  s.rho_ref = rho;
  return s;
}

double relevance_of(const StochasticChannel& e, const GridDistribution& rho, const Vec& x) {
  const double nx = metric_inner(rho, x, x);
  require(nx > 0.0, Errc::ZeroFeature, "feature has zero norm");
  const GridDistribution out = apply(e, rho);
  const Vec ex = apply_values(e, x);
  return metric_inner(out, ex, ex) / nx;
}

double distinguishability(const StochasticChannel& e, const GridDistribution& rho, const Vec& a,
                          const ClassicalSpectrum& spectrum) {
  require(e.n_in() == rho.size() && a.size() == rho.size() &&
              spectrum.rho_ref.size() == rho.size(),
          Errc::DimensionMismatch, "distinguishability: sizes");
  const Vec a0 = a.array() - expectation(rho, a);
  const double norm2 = observable_inner(rho, a0, a0);
  double d = 0.0, captured = 0.0;
  for (int j = 0; j < spectrum.size(); ++j) {
    const double c = observable_inner(rho, a0, spectrum.observables.col(j));
    d += spectrum.eta(j) * c * c;
    captured += c * c;
  }
  require(norm2 == 0.0 || norm2 - captured <= kSpanTolerance * norm2, Errc::IncompleteSpan,
          "observable not spanned by the computed spectrum");
  return d;
}

std::vector<std::pair<int, double>> distinguishability_density(const KleinGordonModel& model,
                                                               double a_sigma_scaling,
                                                               const std::vector<int>& volumes) {
  model.validate();
  const int n = static_cast<int>(model.k_grid.size());
  require(!volumes.empty(), Errc::InvalidParameter, "volumes must be nonempty");
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    require(volumes[i] >= 1 && volumes[i] <= n, Errc::InvalidParameter,
            "volumes must lie in [1, number of modes]");
    require(i == 0 || volumes[i] > volumes[i - 1], Errc::InvalidParameter,
            "volumes must be ascending");
  }
  const Lattice lat = kg_lattice(model);
  const HMatrix h = classical_H(ClassicalGaussianState{lat.covariance},
                                GaussianChannelSpec{lat.X, lat.Y, false, Mat()});
  const Mat ah = lat.covariance * h.H;
  std::vector<std::pair<int, double>> out;
  for (int v : volumes) {
    // D(:phi^T S phi:) = 2 tr(S C H S H^T C) with S = a 1_Sigma; C H is symmetric
    const double d = 2.0 * a_sigma_scaling * a_sigma_scaling * ah.topLeftCorner(v, v).squaredNorm();
    out.emplace_back(v, model.sigma * d / (v * lat.spacing));
  }
  return out;
}

}  // namespace renormalens
