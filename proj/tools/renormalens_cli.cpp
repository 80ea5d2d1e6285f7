#include "renormalens/gaussian_exact.hpp"
#include "renormalens/invariants.hpp"
#include "renormalens/io.hpp"
#include "renormalens/perturbation.hpp"
#include "renormalens/rgflow.hpp"
#include "renormalens/spectra.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>

using namespace renormalens;
using io::json;

namespace {

struct Common {
  std::string out;
  std::string format = "json";
  std::string config;
  std::uint64_t seed = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out,-o", c.out, "output path (stdout when omitted)");
  sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--config", c.config, "JSON file with option values; flags win");
  sub->add_option("--seed", c.seed, "seed for randomized checks");
}

// Keys in a config file that carry structured inputs instead of option values.
const std::set<std::string> kStructuredKeys = {"state", "channel", "interaction", "model"};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  require(f.good(), Errc::InvalidParameter, "cannot read config file " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    fail(Errc::InvalidParameter, std::string("config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), Errc::InvalidParameter, "config must be a JSON object");
  return j;
}

void apply_config(CLI::App* sub, const json& cfg) {
  for (const auto& [key, value] : cfg.items()) {
    if (kStructuredKeys.count(key)) continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      fail(Errc::InvalidParameter, "unknown config key '" + key + "'");
    }
    if (opt->count() > 0 || key == "config") continue;
    const auto as_text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array())
      for (const auto& v : value) opt->add_result(as_text(v));
    else
      opt->add_result(as_text(value));
    opt->run_callback();
  }
}

// Effective option values, defaults included, for the config digest.
json effective_config(const CLI::App* sub, const json& file_cfg) {
  json c = json::object();
  c["subcommand"] = sub->get_name();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "out" || name == "config") continue;
    const auto& res = opt->results();
    if (res.empty())
      c[name] = opt->get_default_str();
    else if (res.size() == 1)
      c[name] = res.front();
    else
      c[name] = res;
  }
  for (const auto& k : kStructuredKeys)
    if (file_cfg.contains(k)) c[k] = file_cfg.at(k);
  return c;
}

void emit(const Common& c, const json& doc, const io::CsvTable& table, const json& config) {
  if (c.out.empty()) {
    if (c.format == "json") {
      json d = doc;
      d["config_digest"] = io::digest(config);
      d["version"] = kVersion;
      std::cout << d.dump(2) << "\n";
    } else {
      std::cout << "# renormalens " << kVersion << "\n# config_digest " << io::digest(config) << "\n";
      for (std::size_t i = 0; i < table.columns.size(); ++i) std::cout << (i ? "," : "") << table.columns[i];
      std::cout << "\n";
      for (const auto& r : table.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) std::cout << (i ? "," : "") << r[i];
        std::cout << "\n";
      }
    }
    return;
  }
  if (c.format == "json")
    io::write_json(c.out, doc, config);
  else
    io::write_csv(c.out, table, config);
}

std::string num(double v) { return io::format_number(v); }

// ---------------------------------------------------------------------------

struct SpectrumArgs {
  std::string scenario = "single-mode";
  std::string channel = "convolution";
  double tau = 1.0;
  double lambda = 0.0;
  double sigma = 2.0;
  int grid_n = 601;
  double domain = 10.0;
  int top = 6;
  std::optional<double> eta_threshold;
};

void run_spectrum(const SpectrumArgs& a, const Common& c, const json& config) {
  require(a.domain > 0.0, Errc::InvalidParameter, "domain must be positive");
  require(a.grid_n >= 3, Errc::InvalidParameter, "grid-n must be >= 3");
  if (a.channel == "convolution")
    require(a.sigma > 0.0, Errc::InvalidSigma, "sigma must be positive");
  const double lam = a.scenario == "quartic" ? a.lambda : 0.0;
  require(a.scenario != "single-mode" || a.lambda == 0.0, Errc::InvalidParameter,
          "lambda requires --scenario quartic");
  const GridDistribution rho =
      build_gibbs_1d(EffectiveHamiltonian1D::from_tau(a.tau, lam), -a.domain, a.domain, a.grid_n);
  const StochasticChannel e = a.channel == "identity"
                                  ? identity_channel(rho.axes())
                                  : gaussian_convolution_channel(-a.domain, a.domain, a.grid_n, a.sigma);
  SpectrumOptions opts;
  opts.eta_threshold = a.eta_threshold;
  const ClassicalSpectrum s = principal_spectrum(e, rho, a.top, opts);

  // label observables by their Hermite content when it is clean
  std::vector<std::string> labels;
  const Vec x = rho.points() / a.tau;
  for (int j = 0; j < s.size(); ++j) {
    const Vec obs = s.observables.col(j);
    std::string label = "A" + std::to_string(j + 1);
    for (int n = 1; n <= a.top + 2 && lam == 0.0; ++n) {
      Vec he = x.unaryExpr([n](double v) { return hermite_he(n, v); });
      he.array() -= expectation(rho, he);
      const double ov = std::abs(observable_inner(rho, obs, he)) /
                        std::sqrt(observable_inner(rho, obs, obs) * observable_inner(rho, he, he));
      if (ov >= 0.999) {
        label = "He" + std::to_string(n);
        break;
      }
    }
    labels.push_back(label);
  }

  json doc = io::spectrum_to_json(s);
  doc["labels"] = labels;
  doc["config"] = config;
  io::CsvTable t{{"index", "eta", "label"}, {}};
  for (int j = 0; j < s.size(); ++j) t.add_row({std::to_string(j), num(s.eta(j)), labels[j]});
  emit(c, doc, t, config);
}

struct KgArgs {
  double m = 1.0, beta = 1.0, y_phi = 3.0, y_pi = 3.0, sigma = 1.0;
  double k_min = 0.0, k_max = 5.0;
  int k_n = 51;
  std::vector<double> k_grid;
};

void run_kg(const KgArgs& a, const Common& c, const json& config, const json& file_cfg) {
  KleinGordonModel model;
  if (file_cfg.contains("model")) {
    model = io::model_from_json(file_cfg.at("model"));
  } else {
    model.m = a.m;
    model.beta = a.beta;
    model.y_phi = a.y_phi;
    model.y_pi = a.y_pi;
    model.sigma = a.sigma;
    if (!a.k_grid.empty()) {
      model.k_grid = a.k_grid;
    } else {
      require(a.k_n >= 1 && a.k_max >= a.k_min, Errc::InvalidParameter, "bad k range");
      for (int i = 0; i < a.k_n; ++i)
        model.k_grid.push_back(a.k_n == 1 ? a.k_min : a.k_min + (a.k_max - a.k_min) * i / (a.k_n - 1));
    }
  }
  model.validate();
  json rows = json::array();
  io::CsvTable t{{"k", "eta_phi", "eta_pi", "D_phi"}, {}};
  for (double k : model.k_grid) {
    const double ep = eta_kg_phi(model, k), eq = eta_kg_pi(model, k);
    const double d = ep * kg_field_norm(model, k);
    rows.push_back({{"k", k}, {"eta_phi", ep}, {"eta_pi", eq}, {"D_phi", d}});
    t.add_row({num(k), num(ep), num(eq), num(d)});
  }
  json doc = {{"model", io::model_to_json(model)}, {"rows", rows}, {"config", config}};
  emit(c, doc, t, config);
}

struct FlowArgs {
  double tau = 1.0;
  double lambda = -0.02;
  std::vector<double> cutoffs{10.0, 20.0, 40.0};
  int max_iter = 200;
  double tol = 1e-11;
  int order = 4;
  int grid_n = 601;
  double domain = 10.0;
};

void run_flow(const FlowArgs& a, const Common& c, const json& config) {
  require(a.order >= 1, Errc::InvalidParameter, "order must be >= 1");
  const auto reference = EffectiveHamiltonian1D::from_tau(a.tau, a.lambda);
  FlowOptions opts;
  opts.max_iter = a.max_iter;
  opts.tolerance = a.tol;
  const auto traj = regulator_trajectory(reference, a.cutoffs, opts);
  const double tau1 = std::sqrt(reference_moments(reference).first);
  const GridDistribution base =
      build_gibbs_1d(EffectiveHamiltonian1D::from_tau(tau1), -a.domain, a.domain, a.grid_n);
  const auto report = flow_invariance_report(traj, hermite_spectrum(base, tau1, 1.0, a.order), a.order);

  json pts = json::array();
  io::CsvTable t{{"Lambda", "tau", "lambda", "residual2", "residual4", "max_relevant_deviation"}, {}};
  for (std::size_t i = 0; i < traj.size(); ++i) {
    json p = io::flow_point_to_json(traj[i]);
    p["max_relevant_deviation"] = report.deviations[i];
    pts.push_back(std::move(p));
    t.add_row({num(*traj[i].regulator), num(traj[i].tau()), num(traj[i].lambda()), num(traj[i].residual2),
               num(traj[i].residual4), num(report.deviations[i])});
  }
  json doc = {{"trajectory", pts},
              {"max_relevant_deviation", report.max_deviation},
              {"flagged", report.flagged},
              {"config", config}};
  emit(c, doc, t, config);
}

struct PerturbArgs {
  double tau = 1.0;
  double sigma = 1.0;
  double coupling = 0.01;
  int max_degree = 8;
  int top = 6;
};

void run_perturb(const PerturbArgs& a, const Common& c, const json& config, const json& file_cfg) {
  ClassicalGaussianState state{Mat::Constant(1, 1, a.tau * a.tau)};
  GaussianChannelSpec chan{Mat::Identity(1, 1), Mat::Constant(1, 1, a.sigma * a.sigma), false, Mat()};
  QuarticInteraction inter;
  inter.sites = {Vec::Ones(1)};
  if (file_cfg.contains("state")) state = io::cgauss_state_from_json(file_cfg.at("state"));
  if (file_cfg.contains("channel")) chan = io::gaussian_channel_from_json(file_cfg.at("channel"));
  if (file_cfg.contains("interaction")) inter = io::interaction_from_json(file_cfg.at("interaction"));
  require(a.tau > 0.0, Errc::InvalidParameter, "tau must be positive");
  require(a.sigma > 0.0, Errc::InvalidSigma, "sigma must be positive");
  require(a.top >= 1, Errc::InvalidParameter, "top must be >= 1");

  const HMatrix h = classical_H(state, chan);
  const FockOperator v1 =
      build_V1(kernel_K1(inter, h, a.max_degree), kernel_L1(inter, h, a.max_degree), e_diag(h, a.max_degree));
  // the physical coupling enters the state as exp(-H0 - g H_I)
  const auto modes = first_order_spectrum(h, v1, -a.coupling);
  const FockBasis basis = fock_basis(h.n_modes(), a.max_degree);

  json out = json::array();
  io::CsvTable t{{"index", "occupation", "eta0", "eta"}, {}};
  const int n = std::min<int>(a.top, static_cast<int>(modes.size()));
  for (int j = 0; j < n; ++j) {
    const auto& m = modes[j];
    std::string occ;
    for (std::size_t k = 0; k < m.occupation.size(); ++k) occ += (k ? "-" : "") + std::to_string(m.occupation[k]);
    out.push_back({{"occupation", m.occupation}, {"eta0", m.eta0}, {"eta", m.eta}});
    t.add_row({std::to_string(j), occ, num(m.eta0), num(m.eta)});
  }
  std::vector<std::string> labels;
  for (int i = 0; i < basis.size(); ++i) labels.push_back(basis.label(i));
  json doc = {{"modes", out},
              {"eta_unperturbed", io::to_json(h.eta)},
              {"V1", {{"basis", labels}, {"matrix", io::to_json(v1.m)}}},
              {"config", config}};
  emit(c, doc, t, config);
}

int run_check(const Common& c, const json& config) {
  const auto results = run_invariants(c.seed == 0 ? 20240611 : c.seed);
  json rows = json::array();
  io::CsvTable t{{"module", "name", "measured", "tolerance", "pass"}, {}};
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    json row = {{"module", r.module}, {"name", r.name}, {"tolerance", r.tolerance}, {"pass", r.pass}};
    row["measured"] = std::isfinite(r.measured) ? json(r.measured) : json(nullptr);
    if (!r.note.empty()) row["note"] = r.note;
    rows.push_back(std::move(row));
    t.add_row({r.module, "\"" + r.name + "\"", num(r.measured), num(r.tolerance), r.pass ? "true" : "false"});
    std::cerr << (r.pass ? "PASS " : "FAIL ") << r.module << ": " << r.name << " (" << r.measured
              << " <= " << r.tolerance << ")" << (r.note.empty() ? "" : " " + r.note) << "\n";
  }
  json doc = {{"results", rows}, {"all_pass", all}, {"config", config}};
  emit(c, doc, t, config);
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relevance spectra, coarse-graining geometry and renormalization flows"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  SpectrumArgs sa;
  auto* spectrum = app.add_subcommand("spectrum", "principal relevance spectrum of a 1D scenario");
  add_common(spectrum, common);
  spectrum->add_option("--scenario", sa.scenario)->check(CLI::IsMember({"single-mode", "quartic"}));
  spectrum->add_option("--channel", sa.channel)->check(CLI::IsMember({"convolution", "identity"}));
  spectrum->add_option("--tau", sa.tau);
  spectrum->add_option("--lambda", sa.lambda, "quartic coefficient (quartic scenario)");
  spectrum->add_option("--sigma", sa.sigma);
  spectrum->add_option("--grid-n", sa.grid_n);
  spectrum->add_option("--domain", sa.domain, "grid is [-domain, domain]");
  spectrum->add_option("--top", sa.top);
  spectrum->add_option("--eta-threshold", sa.eta_threshold);

  KgArgs ka;
  auto* kg = app.add_subcommand("kg", "Klein-Gordon relevance curves");
  add_common(kg, common);
  kg->add_option("--m", ka.m);
  kg->add_option("--beta", ka.beta);
  kg->add_option("--y-phi", ka.y_phi);
  kg->add_option("--y-pi", ka.y_pi);
  kg->add_option("--sigma", ka.sigma);
  kg->add_option("--k-min", ka.k_min);
  kg->add_option("--k-max", ka.k_max);
  kg->add_option("--k-n", ka.k_n);
  kg->add_option("--k-grid", ka.k_grid, "explicit momenta (overrides the range)")->delimiter(',');

  FlowArgs fa;
  auto* flow = app.add_subcommand("flow", "x^6/Lambda regulator trajectory");
  add_common(flow, common);
  flow->add_option("--tau", fa.tau);
  flow->add_option("--lambda", fa.lambda, "quartic coefficient of the reference");
  flow->add_option("--cutoffs", fa.cutoffs, "Lambda grid")->delimiter(',');
  flow->add_option("--max-iter", fa.max_iter);
  flow->add_option("--tol", fa.tol);
  flow->add_option("--order", fa.order, "number of relevant observables in the report");
  flow->add_option("--grid-n", fa.grid_n);
  flow->add_option("--domain", fa.domain);

  PerturbArgs pa;
  auto* perturb = app.add_subcommand("perturb", "first-order spectrum of a quartic perturbation");
  add_common(perturb, common);
  perturb->add_option("--tau", pa.tau);
  perturb->add_option("--sigma", pa.sigma);
  perturb->add_option("--coupling", pa.coupling, "g in exp(-H0 - g H_I)");
  perturb->add_option("--max-degree", pa.max_degree);
  perturb->add_option("--top", pa.top);

  auto* check = app.add_subcommand("check", "run every module's invariant suite");
  add_common(check, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    const json file_cfg = load_config(common.config);
    apply_config(sub, file_cfg);
    const json config = effective_config(sub, file_cfg);
    if (sub == spectrum) run_spectrum(sa, common, config);
    if (sub == kg) run_kg(ka, common, config, file_cfg);
    if (sub == flow) run_flow(fa, common, config);
    if (sub == perturb) run_perturb(pa, common, config, file_cfg);
    if (sub == check) return run_check(common, config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
