#pragma once

#include "renormalens/gaussian_exact.hpp"

#include <Eigen/Sparse>

#include <map>
#include <string>
#include <vector>

namespace renormalens {

using SpMat = Eigen::SparseMatrix<double>;

constexpr int kMaxFockBasis = 2000;

// Truncated symmetric Fock space. Basis vectors are the orthonormal products
// prod_k He_{n_k}(z_k)/sqrt(n_k!), ordered degree-major then lexicographic.
struct FockBasis {
  int n_modes = 0;
  int max_degree = 0;
  std::vector<std::vector<int>> states;
  std::map<std::vector<int>, int> index;
  std::vector<SpMat> a;     // annihilation per mode
  std::vector<SpMat> adag;  // creation per mode

  int size() const { return static_cast<int>(states.size()); }
  int find(const std::vector<int>& occupation) const;
  int degree(int i) const;
  std::string label(int i) const;
};

std::size_t fock_dimension(int n_modes, int max_degree);
FockBasis fock_basis(int n_modes, int max_degree);
FockBasis fock_basis(const HMatrix& h, int max_degree);

struct FockOperator {
  Mat m;
  int n_modes = 0;
  int max_degree = 0;
};

// H_I = (1/4!) sum_x c_x phi(f_x)^4, with f_x given in the field coordinates.
struct QuarticInteraction {
  std::string type = "quartic";
  std::vector<Vec> sites;
  double coupling = 1.0;
  std::vector<double> weights;  // optional per-site factors; empty means all 1

  double site_coupling(std::size_t x) const { return coupling * (weights.empty() ? 1.0 : weights[x]); }
  void validate(int n_modes) const;
};

// <H_I>_rho for the Gaussian state of h.
double quartic_mean(const QuarticInteraction& inter, const HMatrix& h);

FockOperator kernel_K1(const QuarticInteraction& inter, const HMatrix& h, int max_degree);

// First-order metric perturbation at E(rho'), as the multiplication operator of
// Gamma(sqrt(H)) X_1 in the coarse-grained Fock basis.
FockOperator kernel_L1(const QuarticInteraction& inter, const HMatrix& h, int max_degree);

// L(s,t) = K(sqrt(eta) s, sqrt(eta) t) exp(s^T G t) with G diagonal.
FockOperator l1_from_relation(const FockOperator& k1, const HMatrix& h, const Vec& g_diag);
// G = h2 (H^{1/2} f_k, X^{-T} X^{-1} H^{1/2} f_l); must come out diagonal.
Vec relation_exponent(const HMatrix& h, const Mat& X, double h2);

FockOperator e_diag(const HMatrix& h, int max_degree);
FockOperator build_V1(const FockOperator& k1, const FockOperator& l1, const FockOperator& e);

struct PerturbedMode {
  std::vector<int> occupation;
  double eta0 = 0.0;
  double eta = 0.0;
  Vec vector;      // zeroth-order vector plus lambda times the first-order correction
  Vec correction;  // first-order correction alone
};

// Rayleigh-Schroedinger corrections for E^2 + lambda V_1 over the non-vacuum basis.
std::vector<PerturbedMode> first_order_spectrum(const HMatrix& unperturbed, const FockOperator& v1,
                                                double lambda, double degeneracy_tol = 1e-10);

}  // namespace renormalens
