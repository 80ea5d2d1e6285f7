#pragma once

#include "renormalens/channels.hpp"
#include "renormalens/gaussian_exact.hpp"
#include "renormalens/perturbation.hpp"
#include "renormalens/rgflow.hpp"
#include "renormalens/spectra.hpp"
#include "renormalens/statespace.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace renormalens::io {

using json = nlohmann::json;

std::string sha256_hex(const std::string& bytes);
// Digest of the canonical (sorted-key, compact) dump.
std::string digest(const json& j);

json to_json(const Vec& v);
json to_json(const Mat& m);  // row-major nested arrays
json to_json(const CMat& m);  // entries as [re, im]
Vec vec_from_json(const json& j);
Mat mat_from_json(const json& j);
CMat cmat_from_json(const json& j);

// {"kind": "grid" | "density" | "cgauss" | "qgauss", ...}
json state_to_json(const GridDistribution& s);
json state_to_json(const DensityMatrixC& s);
json state_to_json(const ClassicalGaussianState& s);
json state_to_json(const QuantumGaussianState& s);
GridDistribution grid_state_from_json(const json& j);
DensityMatrixC density_state_from_json(const json& j);
ClassicalGaussianState cgauss_state_from_json(const json& j);
QuantumGaussianState qgauss_state_from_json(const json& j);

// {"kind": "stochastic" | "kraus" | "gaussian", ...}
json channel_to_json(const StochasticChannel& c);
json channel_to_json(const QuantumChannel<cplx>& c);
json channel_to_json(const GaussianChannelSpec& c);
StochasticChannel stochastic_channel_from_json(const json& j);
QuantumChannel<cplx> kraus_channel_from_json(const json& j);
GaussianChannelSpec gaussian_channel_from_json(const json& j);

json model_to_json(const KleinGordonModel& m);
KleinGordonModel model_from_json(const json& j);

json interaction_to_json(const QuarticInteraction& q);
QuarticInteraction interaction_from_json(const json& j);

// {"eta": [...], "observables": [...], "base_state_digest": hex}
json spectrum_to_json(const ClassicalSpectrum& s);

json flow_point_to_json(const FlowPoint& p);

// Adds "config_digest" and "version" and writes the sorted dump.
void write_json(const std::string& path, json doc, const json& config);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

std::string format_number(double v);
// Header lines start with '#'.
void write_csv(const std::string& path, const CsvTable& table, const json& config);

}  // namespace renormalens::io
