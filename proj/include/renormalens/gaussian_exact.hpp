#pragma once

#include "renormalens/channels.hpp"
#include "renormalens/spectra.hpp"

#include <string>
#include <vector>

namespace renormalens {

struct KleinGordonModel {
  double m = 1.0;
  double beta = 1.0;
  double y_phi = 1.0;
  double y_pi = 1.0;
  double sigma = 1.0;
  std::vector<double> k_grid;

  double omega(double k) const { return std::sqrt(k * k + m * m); }
  void validate() const;
};

struct HMatrix {
  Mat H;
  Mat A;
  Vec eta;    // descending
  Mat modes;  // column k is f_k, with (f_k, A f_l) = delta_kl

  int n_modes() const { return static_cast<int>(H.rows()); }
};

// Probabilists' Hermite polynomials He_n; coefficients in increasing degree.
Vec hermite_he_coefficients(int n);
double hermite_he(int n, double x);
// He_0..He_n at x
Vec hermite_he_all(int n, double x);

struct HermiteRelevance {
  int n = 0;
  double eta = 0.0;
  Vec coefficients;  // monomial coefficients of He_n
};

std::vector<HermiteRelevance> single_mode_relevances(double tau, double sigma, int n_max);

// Closed-form single-mode spectrum on a grid: observables He_n(x/tau)/sqrt(n!),
// features rho * A_n, relevances (tau^2/(tau^2+sigma^2))^n.
ClassicalSpectrum hermite_spectrum(const GridDistribution& rho, double tau, double sigma, int n_max);

HMatrix classical_H(const ClassicalGaussianState& state, const GaussianChannelSpec& chan);

struct PrincipalPolynomial {
  std::vector<int> occupation;  // n_k per mode
  double relevance = 1.0;

  int degree() const;
  // prod_k He_{n_k}(phi(f_k)) at the field configuration phi
  double evaluate(const HMatrix& h, const Vec& phi) const;
  // squared norm <P, P>_rho = prod_k n_k!
  double norm2() const;
  std::string label() const;
};

std::vector<PrincipalPolynomial> principal_polynomials(const HMatrix& h, int degree);

// Occupation vectors of total degree d, lexicographic in the sorted mode list
// (equivalently descending lexicographic in occupation numbers).
std::vector<std::vector<int>> occupations_of_degree(int n_modes, int degree);

// ---------------------------------------------------------------------------
// Quantum Gaussian sector

enum class SectorMetric { Exact, Asymptotic };

struct QuadraticSector {
  std::vector<int> modes;
  Mat E_sector;  // Heisenberg action on the product-of-fields basis
  Mat K;         // BKM Gram at rho
  Mat K_prime;   // BKM Gram at E(rho)
  Vec eta;       // descending eigenvalues of E K'^{-1} E^T K
};

// BKM Gram of the field operators of one mode: A / (nu ln((2nu+1)/(2nu-1))).
Mat bkm_mode_gram(const Mat& A_mode, const Mat& Delta_mode);

QuadraticSector quantum_quadratic_sector(const QuantumGaussianState& state,
                                         const GaussianChannelSpec& chan,
                                         const std::vector<int>& modes,
                                         SectorMetric metric = SectorMetric::Exact);

// Klein-Gordon mode model: coordinates (phi_k, pi_k).
QuantumGaussianState kg_state(const KleinGordonModel& model);
GaussianChannelSpec kg_channel(const KleinGordonModel& model);
QuantumGaussianState kg_mode_state(const KleinGordonModel& model, double k);
GaussianChannelSpec kg_mode_channel(const KleinGordonModel& model, double k);

double eta_kg_phi(const KleinGordonModel& model, double k);
double eta_kg_pi(const KleinGordonModel& model, double k);
double kg_field_norm(const KleinGordonModel& model, double k);
double euclidean_eta(double m, double beta, double sigma, double y, double k);

// Periodic lattice dual to the model's k-grid (high-temperature field sector):
// covariance 1/(beta w^2), smoothing exp(-k^2 sigma^2 / 2), noise y_phi^2.
struct Lattice {
  Mat covariance;
  Mat X;
  Mat Y;
  double spacing = 1.0;
};
Lattice kg_lattice(const KleinGordonModel& model);

}  // namespace renormalens
