#include "renormalens/io.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace renormalens::io {

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) == 1,
          Errc::InvalidParameter, "sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string digest(const json& j) { return sha256_hex(j.dump()); }

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_json(Vec(m.row(r).transpose())));
  return rows;
}

json to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void expect(bool ok, const std::string& what) { require(ok, Errc::InvalidParameter, what); }

const json& field(const json& j, const char* key) {
  expect(j.is_object() && j.contains(key), std::string("missing field '") + key + "'");
  return j.at(key);
}

void expect_kind(const json& j, const char* kind) {
  expect(field(j, "kind") == kind, std::string("expected kind '") + kind + "'");
}

json axes_to_json(const std::vector<UniformGrid>& axes) {
  json a = json::array();
  for (const auto& g : axes) a.push_back({{"min", g.min}, {"max", g.max}, {"n", g.n}});
  return a;
}

std::vector<UniformGrid> axes_from_json(const json& j) {
  expect(j.is_array() && !j.empty(), "axes must be a nonempty array");
  std::vector<UniformGrid> axes;
  for (const auto& a : j)
    axes.push_back({field(a, "min").get<double>(), field(a, "max").get<double>(),
                    field(a, "n").get<int>()});
  return axes;
}

}  // namespace

Vec vec_from_json(const json& j) {
  expect(j.is_array(), "expected a numeric array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Mat mat_from_json(const json& j) {
  expect(j.is_array(), "expected a nested array");
  if (j.empty()) return Mat();
  const std::size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    expect(j[r].is_array() && j[r].size() == cols, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

CMat cmat_from_json(const json& j) {
  expect(j.is_array(), "expected a nested array");
  if (j.empty()) return CMat();
  const std::size_t cols = j[0].size();
  CMat m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    expect(j[r].is_array() && j[r].size() == cols, "ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      const json& e = j[r][c];
      if (e.is_number())
        m(r, c) = e.get<double>();
      else {
        expect(e.is_array() && e.size() == 2, "complex entries are [re, im]");
        m(r, c) = cplx(e[0].get<double>(), e[1].get<double>());
      }
    }
  }
  return m;
}

json state_to_json(const GridDistribution& s) {
  return {{"kind", "grid"}, {"axes", axes_to_json(s.axes())}, {"values", to_json(s.values())}};
}

json state_to_json(const DensityMatrixC& s) { return {{"kind", "density"}, {"rho", to_json(s.entries)}}; }

json state_to_json(const ClassicalGaussianState& s) { return {{"kind", "cgauss"}, {"A", to_json(s.A)}}; }

json state_to_json(const QuantumGaussianState& s) {
  return {{"kind", "qgauss"}, {"A", to_json(s.A)}, {"Delta", to_json(s.Delta)}};
}

GridDistribution grid_state_from_json(const json& j) {
  expect_kind(j, "grid");
  return GridDistribution(axes_from_json(field(j, "axes")), vec_from_json(field(j, "values")));
}

DensityMatrixC density_state_from_json(const json& j) {
  expect_kind(j, "density");
  DensityMatrixC s(cmat_from_json(field(j, "rho")));
  s.validate();
  return s;
}

ClassicalGaussianState cgauss_state_from_json(const json& j) {
  expect_kind(j, "cgauss");
  ClassicalGaussianState s{mat_from_json(field(j, "A"))};
  s.validate();
  return s;
}

QuantumGaussianState qgauss_state_from_json(const json& j) {
  expect_kind(j, "qgauss");
  QuantumGaussianState s{mat_from_json(field(j, "A")), mat_from_json(field(j, "Delta"))};
  s.validate();
  return s;
}

json channel_to_json(const StochasticChannel& c) {
  return {{"kind", "stochastic"},
          {"kernel", to_json(c.kernel)},
          {"in_axes", axes_to_json(c.in_axes)},
          {"out_axes", axes_to_json(c.out_axes)}};
}

json channel_to_json(const QuantumChannel<cplx>& c) {
  json k = json::array();
  for (const auto& m : c.kraus) k.push_back(to_json(m));
  return {{"kind", "kraus"}, {"kraus", k}};
}

json channel_to_json(const GaussianChannelSpec& c) {
  json j = {{"kind", "gaussian"}, {"X", to_json(c.X)}, {"Y", to_json(c.Y)}, {"quantum", c.quantum}};
  if (c.quantum) j["Delta"] = to_json(c.Delta);
  return j;
}

StochasticChannel stochastic_channel_from_json(const json& j) {
  expect_kind(j, "stochastic");
  StochasticChannel c = make_stochastic_channel(mat_from_json(field(j, "kernel")),
                                                axes_from_json(field(j, "in_axes")),
                                                axes_from_json(field(j, "out_axes")));
  c.validate();
  return c;
}

QuantumChannel<cplx> kraus_channel_from_json(const json& j) {
  expect_kind(j, "kraus");
  QuantumChannel<cplx> c;
  for (const auto& k : field(j, "kraus")) c.kraus.push_back(cmat_from_json(k));
  c.validate();
  return c;
}

GaussianChannelSpec gaussian_channel_from_json(const json& j) {
  expect_kind(j, "gaussian");
  GaussianChannelSpec c;
  c.X = mat_from_json(field(j, "X"));
  c.Y = mat_from_json(field(j, "Y"));
  c.quantum = j.value("quantum", false);
  if (c.quantum) c.Delta = mat_from_json(field(j, "Delta"));
  c.validate();
  return c;
}

json model_to_json(const KleinGordonModel& m) {
  return {{"m", m.m},         {"beta", m.beta},   {"y_phi", m.y_phi},
          {"y_pi", m.y_pi},   {"sigma", m.sigma}, {"k_grid", m.k_grid}};
}

KleinGordonModel model_from_json(const json& j) {
  KleinGordonModel m;
  m.m = field(j, "m").get<double>();
  m.beta = field(j, "beta").get<double>();
  m.y_phi = field(j, "y_phi").get<double>();
  m.y_pi = field(j, "y_pi").get<double>();
  m.sigma = field(j, "sigma").get<double>();
  m.k_grid = field(j, "k_grid").get<std::vector<double>>();
  m.validate();
  return m;
}

json interaction_to_json(const QuarticInteraction& q) {
  json sites = json::array();
  for (const Vec& f : q.sites) sites.push_back(to_json(f));
  json j = {{"type", q.type}, {"sites", sites}, {"coupling", q.coupling}};
  if (!q.weights.empty()) j["weights"] = q.weights;
  return j;
}

QuarticInteraction interaction_from_json(const json& j) {
  QuarticInteraction q;
  q.type = field(j, "type").get<std::string>();
  require(q.type == "quartic", Errc::UnsupportedInteraction, "only quartic interactions are supported");
  for (const auto& s : field(j, "sites")) q.sites.push_back(vec_from_json(s));
  q.coupling = j.value("coupling", 1.0);
  if (j.contains("weights")) q.weights = j.at("weights").get<std::vector<double>>();
  return q;
}

json spectrum_to_json(const ClassicalSpectrum& s) {
  json obs = json::array();
  for (int j = 0; j < s.size(); ++j) obs.push_back(to_json(Vec(s.observables.col(j))));
  return {{"eta", to_json(s.eta)},
          {"observables", obs},
          {"base_state_digest", digest(state_to_json(s.rho_ref))}};
}

json flow_point_to_json(const FlowPoint& p) {
  json c = json::object();
  for (const auto& [deg, val] : p.parameters.coefficients) c[std::to_string(deg)] = val;
  json mm = json::object();
  for (const auto& [k, v] : p.matched_moments) mm[std::to_string(k)] = v;
  json j = {{"coefficients", c},   {"matched_moments", mm},  {"tau", p.tau()},
            {"lambda", p.lambda()}, {"residual2", p.residual2}, {"residual4", p.residual4},
            {"iterations", p.iterations}};
  j["Lambda"] = p.regulator ? json(*p.regulator) : json(nullptr);
  return j;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::InvalidParameter, "cannot open output file " + path);
  f << text;
  require(f.good(), Errc::InvalidParameter, "failed writing " + path);
}

}  // namespace

void write_json(const std::string& path, json doc, const json& config) {
  doc["config_digest"] = digest(config);
  doc["version"] = kVersion;
  write_file(path, doc.dump(2) + "\n");
}

void CsvTable::add_row(std::vector<std::string> row) {
  require(row.size() == columns.size(), Errc::DimensionMismatch, "CSV row width");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const CsvTable& table, const json& config) {
  std::ostringstream os;
  os << "# renormalens " << kVersion << "\n# config_digest " << digest(config) << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << "\n";
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  write_file(path, os.str());
}

}  // namespace renormalens::io
