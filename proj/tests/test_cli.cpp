#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "phonon/commands.hpp"
#include "phonon/config.hpp"
#include "phonon/errors.hpp"

using namespace phonon;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("phonon_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

// Runs the executable and returns its exit status.
int run_cli(const std::string& args) {
  std::string cmd = std::string("\"") + PHONON_EXE + "\" " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
#ifdef WEXITSTATUS
  return WEXITSTATUS(rc);
#else
  return rc;
#endif
}

Json cheap_grid() {
  return Json{{"L", 4.0}, {"T_end", 0.5}, {"dt", 0.01}, {"nx_left", 40}, {"nx_right", 120}};
}

Json cheap_zero() {
  Json g = cheap_grid();
  g["ordinates"] = "uniform";
  return Json{{"grid", g}, {"material", {{"n_mu", 4}, {"n_omega", 4}}}, {"incoming", {{"kind", "zero"}}}};
}

Json cheap_probe() {
  Json g = cheap_grid();
  g["T_end"] = 1.0;
  return Json{{"grid", g},
              {"probe", {{"mu0", 0.3}, {"omega0", 1.2}, {"epsilon", 0.25}}},
              {"experiment",
               {{"c_nodes", 24},
                {"layout",
                 {{"n_mu_probe", 4}, {"n_mu_bulk", 2}, {"n_omega_probe", 4}, {"n_omega_low", 2}, {"n_omega_high", 4}}}}}};
}

}  // namespace

TEST_CASE("shipped defaults file matches the built-in defaults") {
  std::ifstream in(fs::path(PHONON_SOURCE_DIR) / "configs" / "defaults.json");
  REQUIRE(in);
  Json j;
  in >> j;
  CHECK(j == default_config_json());
  RunConfig a = parse_config(j), b = parse_config(Json::object());
  CHECK(a.resolved == b.resolved);
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(parse_config(Json::object()));
  CHECK_THROWS_AS(parse_config(Json{{"grid", {{"nx_lft", 10}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"grid", {{"dt", -0.1}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"grid", {{"nx_left", 0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"probe", {{"epsilon", 0.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"grid", {{"ordinates", "odd"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(Json{{"experiment", {{"epsilons", {{"eps_max", 0.2}, {"count", 3}, {"ratio", 1.5}}}}}}),
                  ConfigError);
  RunConfig c = parse_config(Json{{"experiment", {{"epsilons", {{"eps_max", 0.2}, {"count", 3}, {"ratio", 0.5}}}}}});
  REQUIRE(c.experiment.epsilons.size() == 3);
  CHECK(c.experiment.epsilons[2] == doctest::Approx(0.05));
}

TEST_CASE("profile formats") {
  Profile k = parse_profile(Json("const:0.4"), "tau");
  CHECK(k(3.0) == doctest::Approx(0.4));
  CHECK(parse_profile(Json(2.5), "tau")(0.1) == doctest::Approx(2.5));

  Profile be = parse_profile(Json("bose_einstein:{T_eq=2,hbar_over_k0=1}"), "xi");
  Profile be2 = parse_profile(Json{{"kind", "bose_einstein"}, {"T_eq", 2.0}, {"hbar_over_k0", 1.0}}, "xi");
  for (double w : {0.1, 1.0, 7.0}) CHECK(be(w) == doctest::Approx(be2(w)).epsilon(1e-14));

  Profile th = parse_profile(Json("tanh_profile:{0.3,0.7,2,0.5}"), "eta1");
  CHECK(th(2.0) == doctest::Approx(0.5));
  CHECK(th(-50.0) == doctest::Approx(0.3));
  CHECK(th(50.0) == doctest::Approx(0.7));

  Profile tab = parse_profile(Json::parse("[[0.0, 1.0], [2.0, 3.0]]"), "tau");
  CHECK(tab(1.0) == doctest::Approx(2.0));

  CHECK_THROWS_AS(parse_profile(Json("const:"), "tau"), ConfigError);
  CHECK_THROWS_AS(parse_profile(Json("cubic:{1,2}"), "tau"), ConfigError);
  CHECK_THROWS_AS(parse_profile(Json("tanh:{1,2}"), "tau"), ConfigError);
  CHECK_THROWS_AS(parse_profile(Json::parse("[[0.0]]"), "tau"), ConfigError);
}

TEST_CASE("zero incoming data gives an all-zero trace") {
  fs::path d = scratch("zero");
  write_file(d / "cfg.json", cheap_zero().dump());
  REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " + (d / "out").string()) == 0);
  std::istringstream in(slurp(d / "out" / "trace.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,integrated");
  int rows = 0;
  while (std::getline(in, line)) {
    double v = std::stod(line.substr(line.find(',') + 1));
    CHECK(v == 0.0);
    ++rows;
  }
  CHECK(rows == 51);
  for (const char* f : {"summary.json", "config.json", "metadata.json"}) CHECK(fs::exists(d / "out" / f));
  Json echo = Json::parse(slurp(d / "out" / "config.json"));
  Json expect = cheap_zero();
  expect["output"]["dir"] = (d / "out").string();
  CHECK(echo == parse_config(expect).resolved);
}

TEST_CASE("equilibrium run reports a negligible deviation") {
  fs::path d = scratch("equilibrium");
  Json c = cheap_zero();
  c["incoming"] = Json{{"kind", "equilibrium"}, {"m0", 1.3}};
  c["initial"] = Json{{"kind", "equilibrium"}, {"m0", 1.3}};
  write_file(d / "cfg.json", c.dump());
  REQUIRE(run_cli("simulate --config " + (d / "cfg.json").string() + " --out " + (d / "out").string()) == 0);
  Json s = Json::parse(slurp(d / "out" / "summary.json"));
  CHECK(s.at("equilibrium_deviation").get<double>() <= 1e-10);
}

TEST_CASE("reruns are byte-identical apart from timings") {
  fs::path d = scratch("determinism");
  write_file(d / "cfg.json", cheap_probe().dump());
  std::string cfg = " --config " + (d / "cfg.json").string();
  const std::string out = " --out " + (d / "out").string();
  const char* files[] = {"trace.csv", "summary.json", "config.json"};
  REQUIRE(run_cli("simulate" + cfg + " --jobs 1" + out) == 0);
  std::vector<std::string> first;
  for (const char* f : files) first.push_back(slurp(d / "out" / f));
  Json ma = Json::parse(slurp(d / "out" / "metadata.json"));
  REQUIRE(run_cli("simulate" + cfg + " --jobs 3" + out) == 0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(slurp(d / "out" / files[i]) == first[i]);
  Json mb = Json::parse(slurp(d / "out" / "metadata.json"));
  CHECK(ma.at("config_hash") == mb.at("config_hash"));
  CHECK(mb.at("jobs") == 3);
  std::string trace = first[0];
  CHECK(trace.find("e-") != std::string::npos);
}

TEST_CASE("exit codes") {
  fs::path d = scratch("exit");
  CHECK(run_cli("") == kExitConfig);
  CHECK(run_cli("simulate --no-such-flag") == kExitConfig);
  write_file(d / "bad.json", "{ not json");
  CHECK(run_cli("simulate --config " + (d / "bad.json").string() + " --out " + (d / "o").string()) == kExitConfig);
  write_file(d / "unknown.json", R"({"grid": {"dtt": 0.1}})");
  CHECK(run_cli("simulate --config " + (d / "unknown.json").string() + " --out " + (d / "o").string()) ==
        kExitConfig);
  CHECK(run_cli("simulate --config " + (d / "missing.json").string()) == kExitConfig);

  // probe support crossing the cutoff of the spectral range
  Json far = cheap_probe();
  far["probe"]["omega0"] = 1e6;
  write_file(d / "far.json", far.dump());
  CHECK(run_cli("simulate --config " + (d / "far.json").string() + " --out " + (d / "o").string()) != 0);

  // slab too short for the measurement window
  Json shortL = cheap_probe();
  shortL["grid"]["L"] = 2.0;
  shortL["experiment"]["epsilons"] = Json::array({0.25, 0.2, 0.15});
  shortL["experiment"]["check_resolution"] = false;
  write_file(d / "short.json", shortL.dump());
  CHECK(run_cli("probe --config " + (d / "short.json").string() + " --out " + (d / "o").string()) ==
        kExitAssumption);
}

TEST_CASE("reconstruct from a records file") {
  fs::path d = scratch("records");
  // M/C = 0.6 + 2 eps^0.4 exactly; both fits see the pinned exponent
  Json recs = Json::array();
  for (double e : {0.2, 0.14, 0.098, 0.0686, 0.048}) {
    double r = 0.6 + 2.0 * std::pow(e, 0.4);
    recs.push_back(Json{{"epsilon", e}, {"M", r * 1e-3}, {"C", 1e-3}});
  }
  write_file(d / "recs.json", Json{{"records", recs}}.dump());
  Json c{{"experiment", {{"records", (d / "recs.json").string()}}}};
  write_file(d / "cfg.json", c.dump());
  REQUIRE(run_cli("reconstruct --config " + (d / "cfg.json").string() + " --out " + (d / "out").string()) == 0);
  Json res = Json::parse(slurp(d / "out" / "result.json"));
  double free_eta = res.at("eta1_estimate").get<double>();
  double pinned_eta = res.at("alternate_fit").at("eta1_estimate").get<double>();
  CHECK(free_eta == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(std::abs(free_eta - pinned_eta) <= 0.02);
  std::string table = slurp(d / "out" / "coefficients.csv");
  CHECK(table.rfind("omega0,eta1,eta2,zeta1,zeta2\n", 0) == 0);

  write_file(d / "one.json", Json{{"records", Json::array({recs[0]})}}.dump());
  c["experiment"]["records"] = (d / "one.json").string();
  write_file(d / "cfg1.json", c.dump());
  CHECK(run_cli("reconstruct --config " + (d / "cfg1.json").string() + " --out " + (d / "o1").string()) != 0);

  write_file(d / "broken.json", R"({"records": [{"epsilon": 0.1}]})");
  c["experiment"]["records"] = (d / "broken.json").string();
  write_file(d / "cfg2.json", c.dump());
  CHECK(run_cli("reconstruct --config " + (d / "cfg2.json").string() + " --out " + (d / "o2").string()) ==
        kExitConfig);
}

TEST_CASE("empty sweep writes a header-only table") {
  fs::path d = scratch("sweep");
  write_file(d / "cfg.json", R"({"experiment": {"omega0_list": []}})");
  REQUIRE(run_cli("sweep --config " + (d / "cfg.json").string() + " --out " + (d / "out").string()) == 0);
  CHECK(slurp(d / "out" / "coefficients.csv") == "omega0,eta1,eta2,zeta1,zeta2\n");
}

TEST_CASE("validate on a small equilibrium run") {
  fs::path d = scratch("validate");
  Json c = cheap_zero();
  c["incoming"] = Json{{"kind", "equilibrium"}, {"m0", 1.0}};
  c["initial"] = Json{{"kind", "equilibrium"}, {"m0", 1.0}};
  write_file(d / "cfg.json", c.dump());
  int rc = run_cli("validate --config " + (d / "cfg.json").string() + " --out " + (d / "out").string());
  Json rep = Json::parse(slurp(d / "out" / "report.json"));
  bool all = rep.at("ok").get<bool>();
  CHECK(rc == (all ? 0 : kExitAssumption));
  for (const auto& chk : rep.at("checks"))
    if (chk.at("name").get<std::string>().rfind("max", 0) == 0) CHECK(chk.at("passed").get<bool>());
}
