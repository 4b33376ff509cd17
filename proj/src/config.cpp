#include "phonon/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "phonon/errors.hpp"

namespace phonon {

Json default_config_json() {
  return Json::parse(R"({
  "material": {
    "omega_max": 0.0,
    "n_omega": 32,
    "n_mu": 16,
    "tau": 5.0,
    "v": 1.0,
    "v_prime": null,
    "xi": {"kind": "bose_einstein", "T_eq": 1.0, "hbar_over_k0": 1.0},
    "p0": 1.25
  },
  "interface": {"eta1": 0.6, "gamma0": 1.0},
  "grid": {
    "nx_left": 400,
    "nx_right": 1200,
    "L": 4.0,
    "dt": 0.0005,
    "T_end": 4.5,
    "advection": "tracking",
    "ordinates": "probe"
  },
  "probe": {"mu0": 0.5, "omega0": 1.0, "epsilon": 0.2},
  "incoming": {"kind": "probe", "m0": 1.0},
  "initial": {"kind": "zero", "m0": 1.0},
  "experiment": {
    "epsilons": {"eps_max": 0.2, "count": 4, "ratio": 0.7},
    "omega0_list": [1.0],
    "instrument": false,
    "c_nodes": 32,
    "check_resolution": true,
    "layout": {"n_mu_probe": 32, "n_mu_bulk": 8, "n_omega_probe": 16, "n_omega_low": 4, "n_omega_high": 8},
    "fit": {"pin_q": false, "q_min": 0.001, "q_max": 1.0},
    "eta1_true": null,
    "records": null
  },
  "validate": {
    "p": 2.0,
    "m0": null,
    "stride": 10,
    "tolerances": {"integral": 0.001, "pointwise": 1e-06, "lower": 1e-12}
  },
  "least_squares": {
    "enabled": false,
    "knots": 1,
    "initial": 0.5,
    "max_sweeps": 20,
    "tol": 0.0001,
    "noise": 0.0,
    "probe_omega0": [1.0],
    "epsilon": 0.2,
    "grid": {"nx_left": 100, "nx_right": 300, "dt": 0.002, "advection": "tracking"},
    "layout": {"n_mu_probe": 8, "n_mu_bulk": 4, "n_omega_probe": 8, "n_omega_low": 4, "n_omega_high": 4}
  },
  "output": {"dir": "out", "trace": "integrated", "trace_stride": 1},
  "seed": 1
})");
}

namespace {

// Keys whose values replace the default wholesale instead of merging.
const std::set<std::string> kOpaque = {
    "material.tau", "material.v", "material.v_prime", "material.xi", "interface.eta1",
    "experiment.epsilons", "experiment.omega0_list", "least_squares.probe_omega0"};

void merge(Json& base, const Json& user, const std::string& path) {
  if (!user.is_object()) throw ConfigError("config: '" + (path.empty() ? "<root>" : path) + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    Json& b = base[it.key()];
    if (b.is_object() && !kOpaque.count(key))
      merge(b, it.value(), key);
    else
      b = it.value();
  }
}

double num(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_number()) throw ConfigError("config: '" + where + "." + key + "' must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("config: '" + where + "." + key + "' must be finite");
  return x;
}

double pos(const Json& j, const char* key, const std::string& where) {
  double x = num(j, key, where);
  if (!(x > 0.0)) throw ConfigError("config: '" + where + "." + key + "' must be positive");
  return x;
}

int pos_int(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long>() <= 0)
    throw ConfigError("config: '" + where + "." + key + "' must be a positive integer");
  return v.get<int>();
}

bool flag(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError("config: '" + where + "." + key + "' must be a boolean");
  return v.get<bool>();
}

std::string str(const Json& j, const char* key, const std::string& where) {
  const Json& v = j.at(key);
  if (!v.is_string()) throw ConfigError("config: '" + where + "." + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> num_list(const Json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError("config: '" + where + "' must be a list of numbers");
  std::vector<double> out;
  for (const Json& x : v) {
    if (!x.is_number()) throw ConfigError("config: '" + where + "' must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Advection parse_advection(const std::string& s) {
  if (s == "tracking") return Advection::kTracking;
  if (s == "semi_lagrangian") return Advection::kSemiLagrangian;
  throw ConfigError("config: advection must be 'tracking' or 'semi_lagrangian', got '" + s + "'");
}

OrdinateLayout parse_layout(const Json& j, const std::string& w) {
  OrdinateLayout l;
  l.n_mu_probe = pos_int(j, "n_mu_probe", w);
  l.n_mu_bulk = pos_int(j, "n_mu_bulk", w);
  l.n_omega_probe = pos_int(j, "n_omega_probe", w);
  l.n_omega_low = pos_int(j, "n_omega_low", w);
  l.n_omega_high = pos_int(j, "n_omega_high", w);
  return l;
}

}  // namespace

namespace {

double parse_number(std::string t, const std::string& where) {
  auto b = t.find_first_not_of(" \t");
  auto e = t.find_last_not_of(" \t");
  t = b == std::string::npos ? "" : t.substr(b, e - b + 1);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) throw ConfigError("config: '" + where + "': bad number '" + t + "'");
  return v;
}

// "{a, b, ...}" with optional "name=" or "name:" prefixes on each entry.
std::vector<double> parse_brace_list(const std::string& body, std::size_t count,
                                     const std::string& where) {
  if (body.size() < 2 || body.front() != '{' || body.back() != '}')
    throw ConfigError("config: '" + where + "': expected {...} after the profile name");
  std::vector<double> out;
  std::stringstream ss(body.substr(1, body.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto k = item.find_first_of("=:");
    out.push_back(parse_number(k == std::string::npos ? item : item.substr(k + 1), where));
  }
  if (out.size() != count)
    throw ConfigError("config: '" + where + "': expected " + std::to_string(count) + " values");
  return out;
}

// String forms: "const:<v>", "bose_einstein:{T_eq,hbar_over_k0}",
// "tanh_profile:{low,high,center,width}".
Profile parse_profile_string(const std::string& s, const std::string& where) {
  auto colon = s.find(':');
  std::string name = s.substr(0, colon);
  std::string body = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (name == "const") return Profile::constant(parse_number(body, where));
  if (name == "bose_einstein") {
    auto v = parse_brace_list(body, 2, where);
    if (!(v[0] > 0.0 && v[1] > 0.0)) throw ConfigError("config: '" + where + "': parameters must be positive");
    return Profile::bose_einstein(v[0], v[1]);
  }
  if (name == "tanh_profile" || name == "tanh") {
    auto v = parse_brace_list(body, 4, where);
    if (!(v[3] > 0.0)) throw ConfigError("config: '" + where + "': width must be positive");
    return Profile::tanh_step(v[0], v[1], v[2], v[3]);
  }
  throw ConfigError("config: '" + where + "': unknown profile '" + s + "'");
}

// Array form: [[omega, value], ...] sorted by omega.
Profile parse_profile_pairs(const Json& j, const std::string& where) {
  std::vector<double> w, v;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw ConfigError("config: '" + where + "' entries must be [omega, value] pairs");
    w.push_back(e[0].get<double>());
    v.push_back(e[1].get<double>());
  }
  return Profile::table(std::move(w), std::move(v));
}

}  // namespace

Profile parse_profile(const Json& j, const std::string& where) {
  if (j.is_number()) return Profile::constant(j.get<double>());
  if (j.is_string()) return parse_profile_string(j.get<std::string>(), where);
  if (j.is_array()) return parse_profile_pairs(j, where);
  if (!j.is_object() || !j.contains("kind"))
    throw ConfigError("config: '" + where + "' must be a number, string, array or an object with 'kind'");
  std::string kind = str(j, "kind", where);
  auto allow = [&](std::initializer_list<const char*> keys) {
    std::set<std::string> ok(keys.begin(), keys.end());
    ok.insert("kind");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!ok.count(it.key())) throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
  };
  if (kind == "const") {
    allow({"value"});
    return Profile::constant(num(j, "value", where));
  }
  if (kind == "table") {
    allow({"omega", "values"});
    return Profile::table(num_list(j.at("omega"), where + ".omega"), num_list(j.at("values"), where + ".values"));
  }
  if (kind == "bose_einstein") {
    allow({"T_eq", "hbar_over_k0"});
    return Profile::bose_einstein(pos(j, "T_eq", where), pos(j, "hbar_over_k0", where));
  }
  if (kind == "tanh") {
    allow({"low", "high", "center", "width"});
    return Profile::tanh_step(num(j, "low", where), num(j, "high", where), num(j, "center", where),
                              pos(j, "width", where));
  }
  throw ConfigError("config: '" + where + ".kind' must be const, table, bose_einstein or tanh");
}

Json profile_to_json(const Profile& p) {
  switch (p.kind) {
    case Profile::Kind::kConst:
      return p.value;
    case Profile::Kind::kTable:
      return Json{{"kind", "table"}, {"omega", p.omega}, {"values", p.values}};
    case Profile::Kind::kBoseEinstein:
      return Json{{"kind", "bose_einstein"}, {"T_eq", p.T_eq}, {"hbar_over_k0", p.hbar_over_k0}};
    case Profile::Kind::kTanh:
      return Json{{"kind", "tanh"}, {"low", p.low}, {"high", p.high}, {"center", p.center}, {"width", p.width}};
  }
  return nullptr;
}

RunConfig parse_config(const Json& user) {
  Json r = default_config_json();
  if (!user.is_null()) merge(r, user, "");
  RunConfig c;
  c.resolved = r;

  const Json& jm = r.at("material");
  c.material.omega_max = num(jm, "omega_max", "material");
  if (c.material.omega_max < 0.0) throw ConfigError("config: 'material.omega_max' must be >= 0");
  c.material.n_omega = pos_int(jm, "n_omega", "material");
  c.material.n_mu = pos_int(jm, "n_mu", "material");
  c.material.tau = parse_profile(jm.at("tau"), "material.tau");
  c.material.v = parse_profile(jm.at("v"), "material.v");
  if (!jm.at("v_prime").is_null()) c.material.v_prime = parse_profile(jm.at("v_prime"), "material.v_prime");
  c.material.xi = parse_profile(jm.at("xi"), "material.xi");
  c.material.p0 = pos(jm, "p0", "material");

  const Json& ji = r.at("interface");
  c.interface.eta1 = parse_profile(ji.at("eta1"), "interface.eta1");
  c.interface.gamma0 = pos(ji, "gamma0", "interface");

  const Json& jg = r.at("grid");
  c.solver.grid.nx_left = pos_int(jg, "nx_left", "grid");
  c.solver.grid.nx_right = pos_int(jg, "nx_right", "grid");
  c.solver.grid.L = pos(jg, "L", "grid");
  if (!(c.solver.grid.L > 1.0)) throw ConfigError("config: 'grid.L' must exceed 1");
  c.solver.dt = pos(jg, "dt", "grid");
  c.T_end = pos(jg, "T_end", "grid");
  c.solver.advection = parse_advection(str(jg, "advection", "grid"));
  std::string ord = str(jg, "ordinates", "grid");
  if (ord != "probe" && ord != "uniform") throw ConfigError("config: 'grid.ordinates' must be 'probe' or 'uniform'");
  c.probe_ordinates = ord == "probe";

  const Json& jp = r.at("probe");
  c.probe.mu0 = pos(jp, "mu0", "probe");
  c.probe.omega0 = pos(jp, "omega0", "probe");
  c.probe.epsilon = pos(jp, "epsilon", "probe");

  const Json& jin = r.at("incoming");
  std::string ik = str(jin, "kind", "incoming");
  if (ik == "zero") c.incoming.kind = IncomingSpec::Kind::kZero;
  else if (ik == "probe") c.incoming.kind = IncomingSpec::Kind::kProbe;
  else if (ik == "equilibrium") c.incoming.kind = IncomingSpec::Kind::kEquilibrium;
  else throw ConfigError("config: 'incoming.kind' must be zero, probe or equilibrium");
  c.incoming.m0 = num(jin, "m0", "incoming");
  if (c.incoming.m0 < 0.0) throw ConfigError("config: 'incoming.m0' must be >= 0");

  const Json& jini = r.at("initial");
  std::string k0 = str(jini, "kind", "initial");
  if (k0 != "zero" && k0 != "equilibrium") throw ConfigError("config: 'initial.kind' must be zero or equilibrium");
  c.initial.equilibrium = k0 == "equilibrium";
  c.initial.m0 = num(jini, "m0", "initial");
  if (c.initial.m0 < 0.0) throw ConfigError("config: 'initial.m0' must be >= 0");

  const Json& je = r.at("experiment");
  ExperimentConfig& ex = c.experiment;
  ex.mu0 = c.probe.mu0;
  ex.omega0 = c.probe.omega0;
  ex.solver = c.solver;
  const Json& eps = je.at("epsilons");
  if (eps.is_array()) {
    ex.epsilons = num_list(eps, "experiment.epsilons");
  } else if (eps.is_object()) {
    for (auto it = eps.begin(); it != eps.end(); ++it)
      if (it.key() != "eps_max" && it.key() != "count" && it.key() != "ratio")
        throw ConfigError("config: unknown key 'experiment.epsilons." + it.key() + "'");
    double emax = pos(eps, "eps_max", "experiment.epsilons");
    int count = pos_int(eps, "count", "experiment.epsilons");
    double ratio = pos(eps, "ratio", "experiment.epsilons");
    if (!(ratio < 1.0)) throw ConfigError("config: 'experiment.epsilons.ratio' must lie in (0,1)");
    ex.epsilons.clear();
    for (int i = 0; i < count; ++i) ex.epsilons.push_back(emax * std::pow(ratio, i));
  } else {
    throw ConfigError("config: 'experiment.epsilons' must be a list or {eps_max, count, ratio}");
  }
  for (double e : ex.epsilons)
    if (!(e > 0.0)) throw ConfigError("config: epsilons must be positive");
  c.omega0_list = num_list(je.at("omega0_list"), "experiment.omega0_list");
  ex.instrument = flag(je, "instrument", "experiment");
  ex.c_nodes = pos_int(je, "c_nodes", "experiment");
  ex.check_resolution = flag(je, "check_resolution", "experiment");
  ex.layout = parse_layout(je.at("layout"), "experiment.layout");
  const Json& jf = je.at("fit");
  c.fit.pin_q = flag(jf, "pin_q", "experiment.fit");
  c.fit.q_min = pos(jf, "q_min", "experiment.fit");
  c.fit.q_max = pos(jf, "q_max", "experiment.fit");
  if (!(c.fit.q_min < c.fit.q_max)) throw ConfigError("config: need q_min < q_max");
  c.fit.p0 = c.material.p0;
  if (!je.at("eta1_true").is_null()) c.eta1_true = num(je, "eta1_true", "experiment");
  if (!je.at("records").is_null()) c.records_path = str(je, "records", "experiment");

  const Json& jv = r.at("validate");
  c.validate.p = pos(jv, "p", "validate");
  if (!(c.validate.p > 1.0)) throw ConfigError("config: 'validate.p' must exceed 1");
  if (!jv.at("m0").is_null()) c.validate.m0 = pos(jv, "m0", "validate");
  c.validate.stride = pos_int(jv, "stride", "validate");
  const Json& jt = jv.at("tolerances");
  c.validate.tolerances.integral = pos(jt, "integral", "validate.tolerances");
  c.validate.tolerances.pointwise = pos(jt, "pointwise", "validate.tolerances");
  c.validate.tolerances.lower = pos(jt, "lower", "validate.tolerances");

  const Json& jl = r.at("least_squares");
  LeastSquaresSpec& ls = c.least_squares;
  ls.enabled = flag(jl, "enabled", "least_squares");
  ls.cfg.knots = pos_int(jl, "knots", "least_squares");
  ls.cfg.initial = num(jl, "initial", "least_squares");
  ls.cfg.max_sweeps = pos_int(jl, "max_sweeps", "least_squares");
  ls.cfg.tol = pos(jl, "tol", "least_squares");
  ls.cfg.noise = num(jl, "noise", "least_squares");
  if (ls.cfg.noise < 0.0) throw ConfigError("config: 'least_squares.noise' must be >= 0");
  ls.probe_omega0 = num_list(jl.at("probe_omega0"), "least_squares.probe_omega0");
  ls.epsilon = pos(jl, "epsilon", "least_squares");
  const Json& jlg = jl.at("grid");
  ls.solver.grid.nx_left = pos_int(jlg, "nx_left", "least_squares.grid");
  ls.solver.grid.nx_right = pos_int(jlg, "nx_right", "least_squares.grid");
  ls.solver.grid.L = c.solver.grid.L;
  ls.solver.dt = pos(jlg, "dt", "least_squares.grid");
  ls.solver.advection = parse_advection(str(jlg, "advection", "least_squares.grid"));
  OrdinateLayout ll = parse_layout(jl.at("layout"), "least_squares.layout");
  ls.n_mu_probe = ll.n_mu_probe;
  ls.n_mu_bulk = ll.n_mu_bulk;
  ls.n_omega_probe = ll.n_omega_probe;
  ls.n_omega_low = ll.n_omega_low;
  ls.n_omega_high = ll.n_omega_high;

  const Json& jo = r.at("output");
  c.out_dir = str(jo, "dir", "output");
  c.trace_mode = str(jo, "trace", "output");
  if (c.trace_mode != "integrated" && c.trace_mode != "full")
    throw ConfigError("config: 'output.trace' must be 'integrated' or 'full'");
  c.trace_stride = pos_int(jo, "trace_stride", "output");

  const Json& js = r.at("seed");
  if (!js.is_number_unsigned()) throw ConfigError("config: 'seed' must be a nonnegative integer");
  c.seed = js.get<std::uint64_t>();
  c.least_squares.cfg.seed = c.seed;
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace phonon
