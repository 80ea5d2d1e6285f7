#pragma once

#include "renormalens/channels.hpp"
#include "renormalens/statespace.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace renormalens {

struct InvariantResult {
  std::string module;
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;  // error message when the check threw
};

// Random instances shared by the property suites.
GridDistribution random_grid_state(std::mt19937_64& rng, int n);
StochasticChannel random_stochastic_channel(std::mt19937_64& rng, int n_in, int n_out);
DensityMatrixC random_density_matrix(std::mt19937_64& rng, int dim);
QuantumChannel<cplx> random_kraus_channel(std::mt19937_64& rng, int dim_in, int dim_out, int n_kraus);
CMat random_hermitian(std::mt19937_64& rng, int dim);

std::vector<InvariantResult> run_invariants(std::uint64_t seed = 20240611);

}  // namespace renormalens
