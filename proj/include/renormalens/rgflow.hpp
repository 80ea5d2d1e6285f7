#pragma once

#include "renormalens/spectra.hpp"
#include "renormalens/statespace.hpp"

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace renormalens {

// <x^k> for k = 0..k_max under exp(-H), by adaptive Gauss-Kronrod quadrature.
Vec gibbs_moments(const EffectiveHamiltonian1D& h, int k_max);

struct FlowPoint {
  EffectiveHamiltonian1D parameters;
  std::vector<std::pair<int, double>> matched_moments;
  std::optional<double> regulator;
  double residual2 = 0.0;
  double residual4 = 0.0;
  int iterations = 0;

  double tau() const { return 1.0 / std::sqrt(2.0 * parameters.c(2)); }
  double lambda() const { return parameters.c(4); }
};

EffectiveHamiltonian1D match_second_moment(const EffectiveHamiltonian1D& h0);

// Moments 2 and 4 of the reference. A negative quartic coefficient is taken at
// first order around the Gaussian part.
std::pair<double, double> reference_moments(const EffectiveHamiltonian1D& reference);

struct FlowOptions {
  int max_iter = 200;
  double tolerance = 1e-11;
};

std::vector<FlowPoint> regulator_trajectory(const EffectiveHamiltonian1D& reference,
                                            const std::vector<double>& lambda_grid,
                                            const FlowOptions& opts = {});

struct FlowInvarianceReport {
  std::vector<std::vector<double>> expectations;  // per point, tr(rho_Lambda A_j) for j < n
  std::vector<double> deviations;                 // per point, max over j of the gap to point 0
  double max_deviation = 0.0;
  double tolerance = 1e-6;
  bool flagged = false;
};

// Expectations are evaluated on the spectrum's reference grid.
FlowInvarianceReport flow_invariance_report(const std::vector<FlowPoint>& trajectory,
                                            const ClassicalSpectrum& spectrum, int n,
                                            double tolerance = 1e-6);

}  // namespace renormalens
