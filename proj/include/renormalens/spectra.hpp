#pragma once

#include "renormalens/channels.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace renormalens {

struct KleinGordonModel;

struct SpectrumOptions {
  int max_tangent_dim = 4096;
  std::optional<double> eta_threshold;
  double degeneracy_tol = 1e-9;
};

template <class State>
struct RelevanceSpectrum;

template <>
struct RelevanceSpectrum<GridDistribution> {
  Vec eta;
  Mat features;     // column j is X_j
  Mat observables;  // column j is A_j
  GridDistribution rho_ref;

  int size() const { return static_cast<int>(eta.size()); }
  Vec feature(int j) const { return features.col(j); }
  Vec observable(int j) const { return observables.col(j); }
};

template <class Scalar>
struct RelevanceSpectrum<DensityMatrix<Scalar>> {
  Vec eta;
  std::vector<MatrixX<Scalar>> features;
  std::vector<MatrixX<Scalar>> observables;
  DensityMatrix<Scalar> rho_ref;

  int size() const { return static_cast<int>(eta.size()); }
  const MatrixX<Scalar>& feature(int j) const { return features[j]; }
  const MatrixX<Scalar>& observable(int j) const { return observables[j]; }
};

using ClassicalSpectrum = RelevanceSpectrum<GridDistribution>;

// Orders eigenpairs by descending eigenvalue and fixes the basis inside every
// eigenvalue cluster (width tol): pivot on the first canonical coordinate that
// the cluster reaches, take the unit vector maximizing it, recurse on the
// orthogonal complement. `vecs` and `canon` are rotated together; canon is a
// linear image of vecs. Only clusters starting before `limit` are fixed
// (limit < 0: all of them).
void canonicalize_eigenspaces(Vec& eta, Mat& vecs, Mat& canon, double tol,
                              Eigen::Index limit = -1);

// Symmetric eigen-solve of W restricted to the complement of the unit vector u.
// Returns (eta, vectors) sorted descending, all of them.
std::pair<Vec, Mat> solve_on_complement(const Mat& W, const Vec& u);

ClassicalSpectrum principal_spectrum(const StochasticChannel& e, const GridDistribution& rho,
                                     int n_requested, const SpectrumOptions& opts = {});

double relevance_of(const StochasticChannel& e, const GridDistribution& rho, const Vec& x);

struct EquivalenceReport {
  bool equivalent = true;
  std::vector<double> gaps;
  double max_gap = 0.0;
};

double distinguishability(const StochasticChannel& e, const GridDistribution& rho, const Vec& a,
                          const ClassicalSpectrum& spectrum);

// Density sigma^d D(A_Sigma)/|Sigma| for A_Sigma = a * sum_{x in Sigma} :phi(x)^2:
std::vector<std::pair<int, double>> distinguishability_density(const KleinGordonModel& model,
                                                               double a_sigma_scaling,
                                                               const std::vector<int>& volumes);

// ---------------------------------------------------------------------------
// Quantum spectra

namespace detail {

// Real coordinates of a Hermitian matrix: diagonal, then Re/Im of the upper
// triangle row-major (Im omitted for real scalars).
template <class Scalar>
int real_coordinate_count(int d) {
  return is_complex_v<Scalar> ? d * d : d * (d + 1) / 2;
}

template <class Scalar>
Vec hermitian_coordinates(const MatrixX<Scalar>& m, const Mat* kernel = nullptr) {
  const int d = static_cast<int>(m.rows());
  Vec c(real_coordinate_count<Scalar>(d));
  int a = 0;
  for (int i = 0; i < d; ++i) c(a++) = std::real(m(i, i)) * (kernel ? std::sqrt((*kernel)(i, i)) : 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double w = kernel ? std::sqrt(2.0 * (*kernel)(i, j)) : 1.0;
      c(a++) = w * std::real(m(i, j));
      if constexpr (is_complex_v<Scalar>) c(a++) = w * std::imag(m(i, j));
    }
  return c;
}

template <class Scalar>
MatrixX<Scalar> hermitian_from_coordinates(const Vec& c, int d, const Mat* kernel = nullptr) {
  MatrixX<Scalar> m = MatrixX<Scalar>::Zero(d, d);
  int a = 0;
  for (int i = 0; i < d; ++i) m(i, i) = c(a++) / (kernel ? std::sqrt((*kernel)(i, i)) : 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double w = kernel ? std::sqrt(2.0 * (*kernel)(i, j)) : 1.0;
      Scalar v = c(a++) / w;
      if constexpr (is_complex_v<Scalar>) v += cplx(0.0, 1.0) * (c(a++) / w);
      m(i, j) = v;
      if constexpr (is_complex_v<Scalar>)
        m(j, i) = std::conj(v);
      else
        m(j, i) = v;
    }
  return m;
}

}  // namespace detail

template <class Scalar>
RelevanceSpectrum<DensityMatrix<Scalar>> principal_spectrum(const QuantumChannel<Scalar>& e,
                                                            const DensityMatrix<Scalar>& rho,
                                                            int n_requested,
                                                            const SpectrumOptions& opts = {}) {
  e.validate();
  require(e.dim_in() == rho.dim(), Errc::DimensionMismatch, "channel input dimension");
  const int d = rho.dim();
  const int m = detail::real_coordinate_count<Scalar>(d);
  require(m - 1 <= opts.max_tangent_dim, Errc::DimensionTooLarge, "tangent dimension exceeds cap");
  require(n_requested >= 1 && n_requested <= m - 1, Errc::InvalidParameter,
          "n_requested must be in [1, tangent dimension]");

  const auto s = faithful_spectrum(rho);
  const Mat k = bkm_inverse_kernel_matrix<Scalar>(s.p);
  const DensityMatrix<Scalar> out = apply(e, rho);
  const auto so = faithful_spectrum(out);
  const Mat ko = bkm_inverse_kernel_matrix<Scalar>(so.p);
  const int mo = detail::real_coordinate_count<Scalar>(out.dim());

  Mat C(mo, m);
  for (int a = 0; a < m; ++a) {
    const MatrixX<Scalar> xa =
        s.U * detail::hermitian_from_coordinates<Scalar>(Vec::Unit(m, a), d, &k) * s.U.adjoint();
    const MatrixX<Scalar> ya = so.U.adjoint() * apply_values(e, xa) * so.U;
    C.col(a) = detail::hermitian_coordinates<Scalar>(ya, &ko);
  }
  Vec u = Vec::Zero(m);
  u.head(d) = s.p.cwiseSqrt();
  auto [eta, vecs] = solve_on_complement(C.transpose() * C, u);

  Mat canon(m, eta.size());
  for (Eigen::Index j = 0; j < eta.size(); ++j)
    canon.col(j) = detail::hermitian_coordinates<Scalar>(
        s.U * detail::hermitian_from_coordinates<Scalar>(vecs.col(j), d, &k) * s.U.adjoint());
  canonicalize_eigenspaces(eta, vecs, canon, opts.degeneracy_tol, n_requested);

  int keep = n_requested;
  if (opts.eta_threshold)
    while (keep > 0 && eta(keep - 1) < *opts.eta_threshold) --keep;

  RelevanceSpectrum<DensityMatrix<Scalar>> out_spec;
  out_spec.eta = eta.head(keep);
  out_spec.rho_ref = rho;
  for (int j = 0; j < keep; ++j) {
    MatrixX<Scalar> x =
        s.U * detail::hermitian_from_coordinates<Scalar>(vecs.col(j), d, &k) * s.U.adjoint();
    x = (0.5 * (x + x.adjoint())).eval();
    out_spec.observables.push_back(omega_inv(rho, x));
    out_spec.features.push_back(std::move(x));
  }
  return out_spec;
}

template <class Scalar>
double relevance_of(const QuantumChannel<Scalar>& e, const DensityMatrix<Scalar>& rho,
                    const MatrixX<Scalar>& x) {
  const double nx = metric_inner(rho, x, x);
  require(nx > 0.0, Errc::ZeroFeature, "feature has zero norm");
  const DensityMatrix<Scalar> out = apply(e, rho);
  const MatrixX<Scalar> ex = apply_values(e, x);
  return metric_inner(out, ex, ex) / nx;
}

namespace detail {
template <class State, class Obs>
EquivalenceReport equivalence_impl(const State& rho_a, const State& rho_b,
                                   const RelevanceSpectrum<State>& spectrum, int n, double tol) {
  require(n >= 0 && n <= spectrum.size(), Errc::InvalidParameter, "n exceeds spectrum length");
  EquivalenceReport r;
  for (int j = 0; j < n; ++j) {
    const Obs a = spectrum.observable(j);
    const double gap = std::abs(expectation(rho_a, a) - expectation(rho_b, a));
    r.gaps.push_back(gap);
    r.max_gap = std::max(r.max_gap, gap);
    if (gap > tol) r.equivalent = false;
  }
  return r;
}
}  // namespace detail

inline EquivalenceReport equivalence_test(const GridDistribution& a, const GridDistribution& b,
                                          const ClassicalSpectrum& s, int n, double tol) {
  require(a.size() == b.size() && a.size() == s.rho_ref.size(), Errc::DimensionMismatch,
          "equivalence_test: grids differ");
  return detail::equivalence_impl<GridDistribution, Vec>(a, b, s, n, tol);
}

template <class Scalar>
EquivalenceReport equivalence_test(const DensityMatrix<Scalar>& a, const DensityMatrix<Scalar>& b,
                                   const RelevanceSpectrum<DensityMatrix<Scalar>>& s, int n,
                                   double tol) {
  require(a.dim() == b.dim() && a.dim() == s.rho_ref.dim(), Errc::DimensionMismatch,
          "equivalence_test: dimensions differ");
  return detail::equivalence_impl<DensityMatrix<Scalar>, MatrixX<Scalar>>(a, b, s, n, tol);
}

constexpr double kSpanTolerance = 1e-6;

template <class Scalar>
double distinguishability(const QuantumChannel<Scalar>& e, const DensityMatrix<Scalar>& rho,
                          const MatrixX<Scalar>& a,
                          const RelevanceSpectrum<DensityMatrix<Scalar>>& spectrum) {
  require(e.dim_in() == rho.dim() && a.rows() == rho.dim(), Errc::DimensionMismatch,
          "distinguishability: dimensions");
  const MatrixX<Scalar> a0 =
      a - expectation(rho, a) * MatrixX<Scalar>::Identity(rho.dim(), rho.dim());
  const double norm2 = observable_inner(rho, a0, a0);
  double d = 0.0, captured = 0.0;
  for (int j = 0; j < spectrum.size(); ++j) {
    const double c = observable_inner(rho, a0, spectrum.observable(j));
    d += spectrum.eta(j) * c * c;
    captured += c * c;
  }
  require(norm2 - captured <= kSpanTolerance * std::max(norm2, 1e-300) || norm2 == 0.0,
          Errc::IncompleteSpan, "observable not spanned by the computed spectrum");
  return d;
}

}  // namespace renormalens
