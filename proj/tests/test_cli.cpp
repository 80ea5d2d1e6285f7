#include <doctest.h>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string bin() {
  const char* b = std::getenv("RENORMALENS_BIN");
  REQUIRE_MESSAGE(b != nullptr, "RENORMALENS_BIN must point at the CLI");
  return b;
}

fs::path workdir() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / "renormalens_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Run run(const std::string& args) {
  const fs::path o = workdir() / "stdout.txt", e = workdir() / "stderr.txt";
  const std::string cmd = "\"" + bin() + "\" " + args + " >\"" + o.string() + "\" 2>\"" + e.string() + "\"";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(o), slurp(e)};
}

std::string out_path(const std::string& name) { return (workdir() / name).string(); }

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("spectrum subcommand") {
  const std::string p = out_path("spec.json");
  const auto r = run("spectrum --scenario single-mode --tau 1 --sigma 2 --grid-n 601 --domain 10 --top 6 --out " + p);
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(p));
  CHECK(j["eta"].size() == 6);
  CHECK(std::abs(j["eta"][0].get<double>() - 0.2) < 1e-3);
  CHECK(j["labels"][0] == "He1");
  CHECK(j.contains("config_digest"));
  CHECK(j.contains("version"));
  CHECK(j.contains("base_state_digest"));

  const auto id = run("spectrum --channel identity --grid-n 81 --domain 8 --top 5");
  REQUIRE(id.code == 0);
  const json ji = json::parse(id.out);
  for (const auto& e : ji["eta"]) CHECK(std::abs(e.get<double>() - 1.0) < 1e-10);
}

TEST_CASE("validation errors leave no file") {
  const std::string p = out_path("bad.json");
  fs::remove(p);
  const auto r = run("spectrum --sigma -1 --out " + p);
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(p));
  CHECK_FALSE(r.err.empty());

  CHECK(run("spectrum --scenario triple").code == 2);
  CHECK(run("nosuchcommand").code == 2);
  CHECK(run("spectrum --grid-n abc").code == 2);
}

TEST_CASE("kg subcommand") {
  const auto r = run("kg --format csv --k-min 0 --k-max 4 --k-n 9");
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 10);
  CHECK(rows[0] == std::vector<std::string>{"k", "eta_phi", "eta_pi", "D_phi"});
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(std::stod(rows[i][1]) < std::stod(rows[i - 1][1]));
    CHECK(std::stod(rows[i][2]) < std::stod(rows[i - 1][2]));
  }
  CHECK(r.out.rfind("# renormalens ", 0) == 0);

  const auto one = run("kg --format csv --k-grid 0.5");
  REQUIRE(one.code == 0);
  CHECK(csv_rows(one.out).size() == 2);

  const std::string p = out_path("kg_bad.csv");
  fs::remove(p);
  const auto bad = run("kg --y-phi 0.5 --y-pi 0.5 --format csv --out " + p);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("uncertainty") != std::string::npos);
  CHECK_FALSE(fs::exists(p));
}

TEST_CASE("flow subcommand") {
  const auto r = run("flow --tau 1 --lambda -0.02 --cutoffs 10,20,40");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j["trajectory"].size() == 3);
  for (const auto& p : j["trajectory"]) {
    CHECK(std::abs(p["residual2"].get<double>()) < 1e-8);
    CHECK(std::abs(p["residual4"].get<double>()) < 1e-8);
  }
  CHECK(j["max_relevant_deviation"].get<double>() < 1e-6);
  CHECK(j["flagged"] == false);

  const auto trivial = run("flow --lambda 0 --cutoffs 1000,10000 --format csv");
  REQUIRE(trivial.code == 0);
  const auto rows = csv_rows(trivial.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0][0] == "Lambda");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::abs(std::stod(rows[i][2])) < 0.02);
    CHECK(std::abs(std::stod(rows[i][1]) - 1.0) < 0.05);
  }

  CHECK(run("flow --cutoffs 10,-5").code == 2);
  CHECK(run("flow --max-iter 1 --tol 1e-15").code == 3);
}

TEST_CASE("perturb subcommand") {
  const auto zero = run("perturb --coupling 0 --top 4");
  REQUIRE(zero.code == 0);
  const json j = json::parse(zero.out);
  REQUIRE(j["modes"].size() == 4);
  for (const auto& m : j["modes"]) CHECK(m["eta"].get<double>() == m["eta0"].get<double>());

  const auto g = run("perturb --tau 1 --sigma 1 --coupling 0.01 --top 2");
  REQUIRE(g.code == 0);
  const json jg = json::parse(g.out);
  CHECK(jg["modes"][0]["eta"].get<double>() == doctest::Approx(0.49875).epsilon(1e-12));
  CHECK(jg["V1"]["basis"].size() == 9);
}

TEST_CASE("check subcommand") {
  const auto r = run("check");
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  bool all = true;
  for (const auto& row : j["results"]) all = all && row["pass"].get<bool>();
  CHECK(all);
  CHECK(j["results"].size() >= 20);
}

TEST_CASE("config files, precedence and determinism") {
  const fs::path cfg = workdir() / "cfg.json";
  std::ofstream(cfg) << R"({"tau": 1, "sigma": 1, "grid-n": 201, "domain": 12, "top": 2})";

  const auto a = run("spectrum --config " + cfg.string());
  REQUIRE(a.code == 0);
  CHECK(json::parse(a.out)["eta"][0].get<double>() == doctest::Approx(0.5).epsilon(1e-6));

  // flags win over the file
  const auto b = run("spectrum --config " + cfg.string() + " --sigma 2");
  REQUIRE(b.code == 0);
  CHECK(json::parse(b.out)["eta"][0].get<double>() == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(json::parse(a.out)["config_digest"] != json::parse(b.out)["config_digest"]);

  const std::string p1 = out_path("d1.json"), p2 = out_path("d2.json");
  REQUIRE(run("spectrum --config " + cfg.string() + " --out " + p1).code == 0);
  REQUIRE(run("spectrum --config " + cfg.string() + " --out " + p2).code == 0);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(slurp(p1) == a.out);

  const fs::path unknown = workdir() / "unknown.json";
  std::ofstream(unknown) << R"({"tau": 1, "frobnicate": 3})";
  CHECK(run("spectrum --config " + unknown.string()).code == 2);
  const fs::path broken = workdir() / "broken.json";
  std::ofstream(broken) << R"({"tau": )";
  CHECK(run("spectrum --config " + broken.string()).code == 2);
  CHECK(run("spectrum --config " + (workdir() / "missing.json").string()).code == 2);
}
