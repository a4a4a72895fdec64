#include "pmca_cli/scenario.hpp"

#include <cmath>
#include <fstream>

#include "pmca/error.hpp"

namespace pmca::cli {

using json = nlohmann::ordered_json;

namespace {

const json& child(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw ValidationError("config: missing key '" + where + key + "'");
  return obj.at(key);
}

template <class T>
T read(const json& obj, const std::string& key, const std::string& where) {
  const json& node = child(obj, key, where);
  try {
    return node.get<T>();
  } catch (const json::exception& e) {
    throw ValidationError("config: bad value for '" + where + key + "': " + e.what());
  }
}

template <class T>
T read_or(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  return read<T>(obj, key, where);
}

template <class T>
std::optional<T> read_opt(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return read<T>(obj, key, where);
}

ModelParams parse_model(const json& node) {
  ModelParams p;
  p.n = read<int>(node, "n", "model.");
  p.tau = read<std::vector<double>>(node, "tau", "model.");
  p.beta = read<std::vector<double>>(node, "beta", "model.");
  if (node.contains("kappa")) {
    const json& list = node.at("kappa");
    if (!list.is_array()) throw ValidationError("config: 'model.kappa' must be a list");
    for (const json& e : list) {
      const int i = read<int>(e, "i", "model.kappa[].");
      const int j = read<int>(e, "j", "model.kappa[].");
      p.kappa[{i, j}] = read<double>(e, "value", "model.kappa[].");
    }
  }
  return p;
}

RateSpec parse_rate(const json& node) {
  RateSpec r;
  r.form = read<std::string>(node, "form", "rate.");
  if (r.form == "rational") {
    r.a = read<double>(node, "a", "rate.");
    r.b = read<double>(node, "b", "rate.");
  } else if (r.form == "affine") {
    r.c0 = read<double>(node, "c0", "rate.");
    r.c1 = read<double>(node, "c1", "rate.");
  } else if (r.form == "power_tail") {
    r.r0 = read<double>(node, "r0", "rate.");
    r.rl = read<double>(node, "rl", "rate.");
    r.l = read<double>(node, "l", "rate.");
  } else if (r.form == "tabulated") {
    r.knots_u = read<std::vector<double>>(node, "u", "rate.");
    r.knots_r = read<std::vector<double>>(node, "r", "rate.");
  } else {
    throw ValidationError("config: unknown rate form '" + r.form + "'");
  }
  return r;
}

json rate_json(const RateSpec& r) {
  json j;
  j["form"] = r.form;
  if (r.form == "rational") {
    j["a"] = r.a;
    j["b"] = r.b;
  } else if (r.form == "affine") {
    j["c0"] = r.c0;
    j["c1"] = r.c1;
  } else if (r.form == "power_tail") {
    j["r0"] = r.r0;
    j["rl"] = r.rl;
    j["l"] = r.l;
  } else {
    j["u"] = r.knots_u;
    j["r"] = r.knots_r;
  }
  return j;
}

}  // namespace

RateFunction RateSpec::build() const {
  if (form == "rational") return RateFunction::rational(a, b);
  if (form == "affine") return RateFunction::affine(c0, c1);
  if (form == "power_tail") return RateFunction::power_tail(r0, rl, l);
  if (form == "tabulated") return RateFunction::tabulated(knots_u, knots_r);
  throw ValidationError("unknown rate form '" + form + "'");
}

OptimizerSettings OptimizerSpec::settings() const {
  OptimizerSettings s;
  s.max_iterations = max_iterations;
  s.grad_tol = grad_tol;
  s.armijo = armijo;
  s.shrink = shrink;
  s.restarts = restarts;
  s.seed = seed;
  return s;
}

ScenarioConfig parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  ScenarioConfig c;
  c.name = read_or<std::string>(doc, "name", "", "");
  c.model = parse_model(child(doc, "model", ""));
  c.rate = parse_rate(child(doc, "rate", ""));

  const json& bounds = child(doc, "bounds", "");
  c.u_min = read<double>(bounds, "u_min", "bounds.");
  c.u_max = read<double>(bounds, "u_max", "bounds.");

  const json& time = child(doc, "time", "");
  c.T = read<double>(time, "T", "time.");
  c.dt = read_or<double>(time, "dt", "time.", 0.0);

  c.x0 = read<std::vector<double>>(doc, "x0", "");

  if (doc.contains("control")) {
    const json& n = doc.at("control");
    ControlSpec s;
    s.on = read_or<std::string>(n, "on", "control.", "graph");
    s.breakpoints = read<std::vector<double>>(n, "breakpoints", "control.");
    s.u = read<std::vector<double>>(n, "u", "control.");
    if (s.on == "explicit") {
      s.v = read<std::vector<double>>(n, "v", "control.");
    } else if (s.on != "graph" && s.on != "string") {
      throw ValidationError("config: 'control.on' must be graph, string or explicit");
    }
    c.control = s;
  }
  if (doc.contains("scan")) {
    ScanSpec s;
    s.points = read_or<int>(doc.at("scan"), "points", "scan.", s.points);
    c.scan = s;
  }
  if (doc.contains("floquet")) {
    const json& n = doc.at("floquet");
    FloquetSpec s;
    s.omega = read_or<std::vector<double>>(n, "omega", "floquet.", {});
    s.finite_difference = read_or<bool>(n, "finite_difference", "floquet.", s.finite_difference);
    c.floquet = s;
  }
  if (doc.contains("expansion")) {
    const json& n = doc.at("expansion");
    ExpansionSpec s;
    s.k = read<int>(n, "k", "expansion.");
    s.samples = read_or<std::vector<double>>(n, "samples", "expansion.", s.samples);
    c.expansion = s;
  }
  if (doc.contains("chatter")) {
    const json& n = doc.at("chatter");
    ChatterSpec s;
    s.n_pieces = read_or<int>(n, "n_pieces", "chatter.", s.n_pieces);
    s.pieces = read_or<std::vector<int>>(n, "pieces", "chatter.", s.pieces);
    c.chatter = s;
  }
  if (doc.contains("optimizer")) {
    const json& n = doc.at("optimizer");
    OptimizerSpec s;
    s.cells = read<std::vector<double>>(n, "cells", "optimizer.");
    s.substep = read_or<double>(n, "substep", "optimizer.", s.substep);
    s.max_iterations = read_or<int>(n, "max_iterations", "optimizer.", s.max_iterations);
    s.grad_tol = read_or<double>(n, "grad_tol", "optimizer.", s.grad_tol);
    s.armijo = read_or<double>(n, "armijo", "optimizer.", s.armijo);
    s.shrink = read_or<double>(n, "shrink", "optimizer.", s.shrink);
    s.restarts = read_or<int>(n, "restarts", "optimizer.", s.restarts);
    s.seed = read_or<unsigned>(n, "seed", "optimizer.", s.seed);
    s.window_start = read_opt<double>(n, "window_start", "optimizer.");
    s.window_end = read_opt<double>(n, "window_end", "optimizer.");
    c.optimizer = s;
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + path + ": " + e.what());
  }
  return parse_scenario(doc);
}

json to_json(const ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;

  json model;
  model["n"] = c.model.n;
  model["tau"] = c.model.tau;
  model["beta"] = c.model.beta;
  json kappa = json::array();
  for (const auto& [ij, value] : c.model.kappa)
    kappa.push_back(json{{"i", ij.first}, {"j", ij.second}, {"value", value}});
  model["kappa"] = kappa;
  doc["model"] = model;

  doc["rate"] = rate_json(c.rate);
  doc["bounds"] = json{{"u_min", c.u_min}, {"u_max", c.u_max}};
  doc["time"] = json{{"T", c.T}, {"dt", c.dt}};
  doc["x0"] = c.x0;

  if (c.control) {
    json n{{"on", c.control->on}, {"breakpoints", c.control->breakpoints}, {"u", c.control->u}};
    if (c.control->on == "explicit") n["v"] = c.control->v;
    doc["control"] = n;
  }
  if (c.scan) doc["scan"] = json{{"points", c.scan->points}};
  if (c.floquet)
    doc["floquet"] = json{{"omega", c.floquet->omega},
                          {"finite_difference", c.floquet->finite_difference}};
  if (c.expansion)
    doc["expansion"] = json{{"k", c.expansion->k}, {"samples", c.expansion->samples}};
  if (c.chatter)
    doc["chatter"] = json{{"n_pieces", c.chatter->n_pieces}, {"pieces", c.chatter->pieces}};
  if (c.optimizer) {
    const OptimizerSpec& o = *c.optimizer;
    json n{{"cells", o.cells},           {"substep", o.substep}, {"max_iterations", o.max_iterations},
           {"grad_tol", o.grad_tol},     {"armijo", o.armijo},   {"shrink", o.shrink},
           {"restarts", o.restarts},     {"seed", o.seed}};
    if (o.window_start) n["window_start"] = *o.window_start;
    if (o.window_end) n["window_end"] = *o.window_end;
    doc["optimizer"] = n;
  }
  return doc;
}

void validate_scenario(const ScenarioConfig& c) {
  std::vector<std::string> problems;
  const ValidationReport report = validate(c.model);
  for (const Violation& v : report.violations)
    problems.push_back(std::string(to_string(v.kind)) + ": " + v.message);

  if (!(std::isfinite(c.u_min) && std::isfinite(c.u_max) && 0.0 < c.u_min && c.u_min < c.u_max))
    problems.push_back("bounds: need 0 < u_min < u_max");
  if (!(std::isfinite(c.T) && c.T > 0.0)) problems.push_back("time: T must be positive");
  if (!(c.dt >= 0.0)) problems.push_back("time: dt must be nonnegative");
  if (static_cast<int>(c.x0.size()) != c.model.n) {
    problems.push_back("x0: expected " + std::to_string(c.model.n) + " entries");
  } else {
    bool nonneg = true, nonzero = false;
    for (double x : c.x0) {
      nonneg = nonneg && x >= 0.0;
      nonzero = nonzero || x > 0.0;
    }
    if (!nonneg || !nonzero) problems.push_back("x0: must be nonnegative and nonzero");
  }
  try {
    const RateFunction r = c.rate.build();
    if (problems.empty() && !r.positive_on(c.u_min, c.u_max))
      problems.push_back("rate: r must be positive on [u_min, u_max]");
  } catch (const ValidationError& e) {
    problems.push_back(std::string("rate: ") + e.what());
  }

  if (problems.empty()) return;
  std::string msg = "invalid scenario";
  for (const std::string& p : problems) msg += "\n  " + p;
  throw ValidationError(msg);
}

}  // namespace pmca::cli
