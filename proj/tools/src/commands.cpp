#include "pmca_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "pmca/dim2.hpp"
#include "pmca/dynamics.hpp"
#include "pmca/error.hpp"
#include "pmca/floquet.hpp"
#include "pmca/optimize.hpp"
#include "pmca/spectral.hpp"
#include "pmca_cli/output.hpp"
#include "pmca_cli/scenario.hpp"

namespace pmca::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Context {
  ScenarioConfig cfg;
  GrowthFragMatrices m;
  RateFunction r = RateFunction::affine(1.0, 0.0);
  StringLine line;
  Vector x0;
  fs::path out;
  std::ostream* log = nullptr;
  bool quiet = false;

  void wrote(const fs::path& p) const {
    if (!quiet) *log << "wrote " << p.string() << '\n';
  }
  void csv(const std::string& name, const CsvTable& table) const {
    write_csv((out / name).string(), table);
    wrote(out / name);
  }
  void report(const std::string& name, json doc) const {
    doc["scenario"] = to_json(cfg);
    write_json((out / name).string(), doc);
    wrote(out / name);
  }
};

json header(const std::string& command) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  return j;
}

template <class V>
std::vector<double> to_std(const V& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json segments_json(const ControlSignal& c) {
  json list = json::array();
  for (const ControlSegment& s : c.segments())
    list.push_back(json{{"t_start", s.t_start}, {"t_end", s.t_end}, {"u", s.u}, {"v", s.v}});
  return list;
}

json pmp_json(const PmpReport& p) {
  json j;
  j["tolerance"] = p.tolerance;
  j["points"] = p.points;
  j["positive"] = p.positive;
  j["negative"] = p.negative;
  j["singular"] = p.singular;
  j["violations"] = p.violations;
  j["violation_fraction"] = p.violation_fraction;
  j["violating_indices"] = p.violating_indices;
  j["H_median"] = p.H_median;
  j["H_max_deviation"] = p.H_max_deviation;
  j["H_relative_deviation"] = p.H_relative_deviation;
  return j;
}

dim2::Dim2Config dim2_config(const Context& ctx) {
  if (ctx.cfg.model.n != 2) throw ValidationError("this command needs a two-compartment model (n = 2)");
  auto d = dim2::Dim2Config::from_model(ctx.cfg.model, ctx.r, ctx.cfg.u_min, ctx.cfg.u_max);
  d.validate();
  return d;
}

ControlSignal scenario_control(const Context& ctx) {
  const ControlSpec& s = *ctx.cfg.control;
  ControlSignal c;
  if (s.on == "graph") {
    c = ControlSignal::on_graph(s.breakpoints, s.u, ctx.r);
  } else if (s.on == "string") {
    c = ControlSignal::on_string(s.breakpoints, s.u, ctx.line);
  } else {
    c = ControlSignal(s.breakpoints, s.u, s.v);
  }
  if (std::abs(c.horizon() - ctx.cfg.T) > 1e-12 * ctx.cfg.T)
    throw ValidationError("control: last breakpoint must equal time.T");
  c.check_admissible(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, 1e-9);
  return c;
}

SimulateOptions sim_options(const Context& ctx) {
  SimulateOptions o;
  o.dt = ctx.cfg.dt;
  return o;
}

void cmd_simulate(const Context& ctx) {
  if (!ctx.cfg.control) throw ValidationError("simulate needs a 'control' block");
  const ControlSignal control = scenario_control(ctx);
  const Trajectory traj = simulate(ctx.x0, control, ctx.m, ctx.line.theta, sim_options(ctx));
  ctx.csv("trajectory.csv", trajectory_table(traj));

  json j = header("simulate");
  j["J"] = traj.J;
  j["duality_p0x0"] = traj.p.col(0).dot(traj.x.col(0));
  j["dt"] = traj.dt;
  j["points"] = traj.points();
  j["theta"] = ctx.line.theta;
  j["zeta"] = ctx.line.zeta;
  ctx.report("simulate.json", j);
}

void cmd_perron_scan(const Context& ctx) {
  const int points = ctx.cfg.scan ? ctx.cfg.scan->points : ScanSpec{}.points;
  if (points < 3) throw ValidationError("scan.points must be at least 3");
  const auto rows = perron_scan(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, points, ctx.m);

  CsvTable table({"u", "v", "lambda", "dlambda_du", "dlambda_dv"});
  std::size_t best = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const ScanRow& s = rows[k];
    table.add_row({s.u, s.v, s.lambda, s.dlambda_du, s.dlambda_dv});
    if (s.lambda > rows[best].lambda) best = k;
  }
  ctx.csv("perron_scan.csv", table);

  const LineMaximum refined = maximize_perron_constant(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, ctx.m);
  json j = header("perron-scan");
  j["points"] = points;
  j["lambda_at_u_min"] = rows.front().lambda;
  j["lambda_at_u_max"] = rows.back().lambda;
  j["grid_argmax_u"] = rows[best].u;
  j["grid_argmax_lambda"] = rows[best].lambda;
  j["interior_maximum"] = best != 0 && best + 1 != rows.size();
  j["u_opt"] = refined.u;
  j["lambda_opt"] = refined.lambda;
  ctx.report("perron_scan.json", j);
}

void cmd_perron_max(const Context& ctx) {
  const LineMaximum graph = maximize_perron_constant(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, ctx.m);
  const HullMaximum hull = maximize_perron_hull(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, ctx.m);
  const PerronTriple at_opt = perron_triple(graph.u, ctx.r(graph.u), ctx.m);
  const PerronGradient g = perron_gradient(at_opt, ctx.m);

  json j = header("perron-max");
  j["u_opt"] = graph.u;
  j["v_opt"] = ctx.r(graph.u);
  j["lambda_opt"] = graph.lambda;
  j["u_opt_at_boundary"] = graph.at_boundary;
  j["dlambda_du_opt"] = g.du;
  j["dlambda_dv_opt"] = g.dv;
  j["theta"] = hull.line.theta;
  j["zeta"] = hull.line.zeta;
  j["u_bar"] = hull.u_bar;
  j["v_bar"] = hull.v_bar;
  j["lambda_bar"] = hull.triple.lambda;
  j["u_bar_at_boundary"] = hull.at_boundary;
  j["X_bar"] = to_std(hull.triple.X);
  j["phi_bar"] = to_std(hull.triple.phi);
  j["perron_residual"] = hull.triple.residual;
  ctx.report("perron_max.json", j);
}

void cmd_floquet_scan(const Context& ctx) {
  if (!ctx.cfg.floquet || ctx.cfg.floquet->omega.empty())
    throw ValidationError("floquet-scan needs an omega list ('floquet.omega' or --omega)");
  for (double w : ctx.cfg.floquet->omega)
    if (!(w > 0.0)) throw ValidationError("floquet.omega entries must be positive");

  const LineMaximum opt = maximize_perron_constant(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, ctx.m);
  if (opt.at_boundary)
    throw ValidationError("floquet-scan needs an interior maximizer of lambda_P(u, r(u))");

  const auto basis = spectral_basis(opt.u, ctx.m, ctx.r);
  const auto rows = resonance_sweep(opt.u, ctx.cfg.floquet->omega, ctx.m, ctx.r,
                                    ctx.cfg.floquet->finite_difference);
  CsvTable table({"omega", "second_derivative_formula", "second_derivative_fd", "limit_value"});
  json bounds = json::array();
  for (const ResonanceRow& row : rows) {
    table.add_row({row.omega, row.formula, row.finite_difference, row.limit});
    const double b = resonance_tail_bound(row.omega, basis, ctx.m, ctx.r);
    bounds.push_back(std::isfinite(b) ? json(b) : json(nullptr));
  }
  ctx.csv("floquet_scan.csv", table);

  json j = header("floquet-scan");
  j["u_opt"] = opt.u;
  j["lambda_opt"] = opt.lambda;
  j["half_perron_second_derivative"] = 0.5 * perron_second_derivative(basis, ctx.m, ctx.r);
  j["limit_value"] = rows.front().limit;
  j["tail_bound"] = bounds;
  j["condition"] = basis.condition;
  const double thr = saddle_threshold(rows);
  j["saddle_threshold"] = std::isfinite(thr) ? json(thr) : json(nullptr);
  ctx.report("floquet_scan.json", j);
}

void cmd_expansion_check(const Context& ctx) {
  if (!ctx.cfg.expansion) throw ValidationError("expansion-check needs an 'expansion' block");
  const auto* tail = ctx.r.as<RateFunction::PowerTail>();
  if (!tail) throw ValidationError("expansion-check needs rate.form = power_tail");
  const ExpansionReport e =
      expansion_check(ctx.cfg.model, *tail, ctx.cfg.expansion->k, ctx.cfg.expansion->samples);

  json j = header("expansion-check");
  j["k"] = e.k;
  j["l"] = e.l;
  j["regime"] = to_string(e.regime);
  j["limit"] = e.limit;
  j["predicted_exponent"] = e.predicted_exponent;
  j["predicted_coefficient"] = e.predicted_coefficient;
  j["fitted_exponent"] = e.fitted_exponent;
  j["fitted_coefficient"] = e.fitted_coefficient;
  j["coefficient_rel_error"] = e.coefficient_rel_error;
  j["u"] = e.u;
  j["lambda"] = e.lambda;
  j["eigvec_predicted_coefficient"] = e.eigvec_predicted_coefficient;
  j["eigvec_predicted_exponent"] = e.eigvec_predicted_exponent;
  j["eigvec_fitted_coefficient"] = e.eigvec_fitted_coefficient;
  j["eigvec_fitted_exponent"] = e.eigvec_fitted_exponent;
  ctx.report("expansion.json", j);
}

void cmd_synthesize(const Context& ctx) {
  const dim2::Dim2Config d = dim2_config(ctx);
  const dim2::TurnpikeControl tc = dim2::synthesize_turnpike(ctx.x0, ctx.cfg.T, d);
  const Trajectory traj = simulate(ctx.x0, tc.control, d.matrices(), d.theta, sim_options(ctx));
  ctx.csv("trajectory.csv", trajectory_table(traj));

  json j = header("synthesize");
  j["u_sing"] = tc.u_bar;
  j["lambda_bar"] = tc.lambda_bar;
  j["Y_bar"] = tc.Y_bar;
  j["pi_bar"] = tc.pi_bar;
  j["T0"] = tc.T0;
  j["T_psi"] = tc.T_psi;
  j["Y_psi"] = tc.Y_psi;
  j["segments"] = segments_json(tc.control);
  j["u_init"] = tc.u_init;
  j["v_bar"] = tc.v_bar;
  j["y0"] = tc.y0;
  j["R"] = tc.R;
  j["S"] = tc.S;
  j["J"] = traj.J;
  j["horizon_threshold"] = dim2::horizon_threshold(d);
  j["pmp"] = pmp_json(pmp_residual(traj, d.u_min, d.u_max));
  ctx.report("synthesis.json", j);
}

void cmd_chatter(const Context& ctx) {
  const dim2::Dim2Config d = dim2_config(ctx);
  const ChatterSpec spec = ctx.cfg.chatter.value_or(ChatterSpec{});
  if (spec.n_pieces < 1) throw ValidationError("chatter.n_pieces must be at least 1");
  const dim2::TurnpikeControl tc = dim2::synthesize_turnpike(ctx.x0, ctx.cfg.T, d);

  const ControlSignal approx = dim2::chattering_approximation(tc, d, spec.n_pieces);
  ctx.csv("chatter_control.csv", control_table(approx));

  const dim2::ChatterReport rep = dim2::chattering_convergence(ctx.x0, tc, d, spec.pieces, ctx.cfg.dt);
  CsvTable table({"n_pieces", "J", "rel_gap", "integral_u_error", "integral_v_error"});
  json rows = json::array();
  for (const dim2::ChatterRow& row : rep.rows) {
    table.add_row({static_cast<double>(row.n_pieces), row.J, row.rel_gap, row.integral_u_error,
                   row.integral_v_error});
    rows.push_back(json{{"n_pieces", row.n_pieces}, {"J", row.J}, {"rel_gap", row.rel_gap}});
  }
  ctx.csv("chatter_convergence.csv", table);

  json j = header("chatter");
  j["n_pieces"] = spec.n_pieces;
  j["J_star"] = rep.J_star;
  j["monotone"] = rep.monotone;
  j["reported_N"] = rep.reported_N;
  j["rows"] = rows;
  j["integral_u"] = approx.integral_u();
  j["integral_u_relaxed"] = tc.control.integral_u();
  ctx.report("chatter.json", j);
}

std::string cell_tag(double cell) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", cell);
  return buf;
}

void cmd_optimize(const Context& ctx) {
  if (!ctx.cfg.optimizer || ctx.cfg.optimizer->cells.empty())
    throw ValidationError("optimize needs an 'optimizer' block with a cells list");
  const OptimizerSpec& o = *ctx.cfg.optimizer;
  const double T = ctx.cfg.T;
  const double wa = o.window_start.value_or(T / 6.0);
  const double wb = o.window_end.value_or(5.0 * T / 6.0);
  if (!(0.0 <= wa && wa < wb && wb <= T)) throw ValidationError("optimizer window must lie in [0, T]");

  const HullMaximum hull = maximize_perron_hull(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max, ctx.m);
  json runs = json::array();
  int previous = -1;
  bool nondecreasing = true;
  // Coarsest cell first so that the switch-count trend reads as refinement.
  std::vector<double> cells = o.cells;
  std::sort(cells.begin(), cells.end(), std::greater<>());
  for (double cell : cells) {
    DirectProblem pb;
    pb.model = ctx.m;
    pb.rate = ctx.r;
    pb.u_min = ctx.cfg.u_min;
    pb.u_max = ctx.cfg.u_max;
    pb.T = T;
    pb.cell = cell;
    pb.x0 = ctx.x0;
    pb.dt = ctx.cfg.dt > 0.0 ? ctx.cfg.dt : o.substep;
    pb.settings = o.settings();
    pb.validate();

    const DirectResult res = optimize_direct(pb);
    const std::string tag = cell_tag(cell);
    CsvTable hist({"iter", "J", "grad_norm", "step"});
    for (const HistoryRow& h : res.history)
      hist.add_row({static_cast<double>(h.iter), h.J, h.grad_norm, h.step});
    ctx.csv("optimize_history_" + tag + ".csv", hist);
    const ControlSignal control = pb.control(res.u);
    ctx.csv("optimize_control_" + tag + ".csv", control_table(control));

    const DutyStats duty = duty_ratio_stats(control, wa, wb, pb.u_min, pb.u_max);
    const int switches = count_switches(control, wa, wb, pb.u_min, pb.u_max);
    nondecreasing = nondecreasing && switches >= previous;
    previous = switches;

    json run;
    run["cell"] = cell;
    run["J"] = res.J;
    run["converged"] = res.converged;
    run["iterations"] = res.iterations;
    run["switches"] = switches;
    run["window_mean_u"] = duty.mean_u;
    run["fraction_at_u_max"] = duty.fraction_at_umax;
    run["fraction_at_u_min"] = duty.fraction_at_umin;
    run["R_emp"] = duty.R_emp ? json(*duty.R_emp) : json(nullptr);
    run["u"] = res.u;
    runs.push_back(run);
  }

  json j = header("optimize");
  j["window_start"] = wa;
  j["window_end"] = wb;
  j["u_bar"] = hull.u_bar;
  j["lambda_bar"] = hull.triple.lambda;
  j["R_opt"] = optimal_ratio(hull.u_bar, ctx.cfg.u_min, ctx.cfg.u_max);
  j["switches_nondecreasing"] = nondecreasing;
  j["runs"] = runs;
  ctx.report("optimize.json", j);
}

void cmd_verify_pmp(const Context& ctx) {
  ControlSignal control;
  std::string source;
  double theta = ctx.line.theta;
  GrowthFragMatrices m = ctx.m;
  if (ctx.cfg.control) {
    control = scenario_control(ctx);
    source = "control";
  } else {
    const dim2::Dim2Config d = dim2_config(ctx);
    control = dim2::synthesize_turnpike(ctx.x0, ctx.cfg.T, d).control;
    theta = d.theta;
    m = d.matrices();
    source = "turnpike";
  }
  const Trajectory traj = simulate(ctx.x0, control, m, theta, sim_options(ctx));
  json j = header("verify-pmp");
  j["control_source"] = source;
  j["J"] = traj.J;
  j["theta"] = theta;
  j["segments"] = segments_json(control);
  j["report"] = pmp_json(pmp_residual(traj, ctx.cfg.u_min, ctx.cfg.u_max));
  ctx.report("pmp.json", j);
}

using Handler = void (*)(const Context&);

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table{
      {"simulate", cmd_simulate},         {"perron-scan", cmd_perron_scan},
      {"perron-max", cmd_perron_max},     {"floquet-scan", cmd_floquet_scan},
      {"expansion-check", cmd_expansion_check}, {"synthesize", cmd_synthesize},
      {"chatter", cmd_chatter},           {"optimize", cmd_optimize},
      {"verify-pmp", cmd_verify_pmp},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"simulate", "perron-scan",  "perron-max",
                                              "floquet-scan", "expansion-check", "synthesize",
                                              "chatter",  "optimize",     "verify-pmp"};
  return names;
}

std::string usage() {
  std::ostringstream os;
  os << "usage: pmca COMMAND --config PATH [--out DIR] [--dt H] [--pieces N] [--omega LIST] "
        "[--quiet]\n\ncommands:\n";
  for (const auto& name : command_names()) os << "  " << name << '\n';
  return os.str();
}

int run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  const auto it = handlers().find(opt.command);
  if (it == handlers().end()) {
    err << "pmca: unknown command '" << opt.command << "'\n" << usage();
    return kExitUsage;
  }
  try {
    Context ctx;
    ctx.log = &out;
    ctx.quiet = opt.quiet;
    if (opt.config_path.empty()) throw ValidationError("--config is required");
    ctx.cfg = load_scenario(opt.config_path);
    if (opt.dt) ctx.cfg.dt = *opt.dt;
    if (opt.omega) {
      if (!ctx.cfg.floquet) ctx.cfg.floquet = FloquetSpec{};
      ctx.cfg.floquet->omega = *opt.omega;
    }
    if (opt.pieces) {
      if (!ctx.cfg.chatter) ctx.cfg.chatter = ChatterSpec{};
      ctx.cfg.chatter->n_pieces = *opt.pieces;
    }
    validate_scenario(ctx.cfg);

    ctx.m = build_matrices(ctx.cfg.model);
    ctx.r = ctx.cfg.rate.build();
    ctx.line = string_params(ctx.r, ctx.cfg.u_min, ctx.cfg.u_max);
    ctx.x0 = Eigen::Map<const Vector>(ctx.cfg.x0.data(), static_cast<Eigen::Index>(ctx.cfg.x0.size()));

    std::error_code ec;
    ctx.out = opt.out_dir.empty() ? fs::path(".") : fs::path(opt.out_dir);
    fs::create_directories(ctx.out, ec);
    if (!fs::is_directory(ctx.out)) throw ValidationError("cannot create output directory '" + ctx.out.string() + "'");

    it->second(ctx);
    return kExitOk;
  } catch (const dim2::HorizonTooShort& e) {
    err << "pmca: validation error: " << e.what() << " (minimum horizon " << e.minimum_horizon()
        << ")\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "pmca: validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const NumericError& e) {
    err << "pmca: numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "pmca: error: " << e.what() << '\n';
    return kExitInternal;
  }
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Growth-fragmentation amplification control toolkit", "pmca"};
  RunOptions opt;
  double dt = 0.0;
  int pieces = 0;
  std::vector<double> omega;
  app.add_option("command", opt.command, "one of: simulate, perron-scan, perron-max, floquet-scan, "
                                         "expansion-check, synthesize, chatter, optimize, verify-pmp");
  app.add_option("--config", opt.config_path, "scenario file (JSON)");
  app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  auto* dt_opt = app.add_option("--dt", dt, "integration step");
  auto* pieces_opt = app.add_option("--pieces", pieces, "chattering pieces on the singular arc");
  auto* omega_opt = app.add_option("--omega", omega, "comma-separated frequencies")->delimiter(',');
  app.add_flag("--quiet", opt.quiet, "suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help() << usage();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "pmca: " << e.what() << '\n' << usage();
    return kExitUsage;
  }
  if (opt.command.empty()) {
    err << usage();
    return kExitUsage;
  }
  if (*dt_opt) opt.dt = dt;
  if (*pieces_opt) opt.pieces = pieces;
  if (*omega_opt) opt.omega = omega;
  return run(opt, out, err);
}

}  // namespace pmca::cli
