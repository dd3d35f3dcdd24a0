#include "cli_app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "rangecap/capacity.hpp"
#include "rangecap/config.hpp"
#include "rangecap/decomp.hpp"
#include "rangecap/errors.hpp"
#include "rangecap/experiments.hpp"
#include "rangecap/green.hpp"
#include "rangecap/kernel.hpp"
#include "rangecap/lattice.hpp"
#include "rangecap/output.hpp"
#include "rangecap/site_set.hpp"

namespace rangecap {

namespace {

namespace fs = std::filesystem;

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;
  fs::path out_dir;
  int workers = 1;
  Provenance prov;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

GreenOracle make_oracle(const RunConfig& c, int d) {
  if (c.has("green_table")) {
    auto g = GreenOracle::load_file(c.raw("green_table"));
    if (g.dim() != d)
      throw ValidationError("green_table: table is for d = " + std::to_string(g.dim()) + ", command needs d = " +
                            std::to_string(d));
    return g;
  }
  const int radius = c.get_int("green_radius") > 0 ? static_cast<int>(c.get_int("green_radius")) : default_cache_radius(d);
  const double tol = c.get_real("green_tol") > 0 ? c.get_real("green_tol") : default_green_tolerance(d);
  return GreenOracle::build(d, radius, tol);
}

SiteSet load_set(const RunConfig& c, const std::string& key) {
  auto A = read_site_set_file(c.raw(key));
  const auto d = c.get_int("d");
  if (A.dim() != d)
    throw ValidationError(key + ": file '" + c.raw(key) + "' holds a d = " + std::to_string(A.dim()) +
                          " set but d = " + std::to_string(d) + " was requested");
  return A;
}

CampaignOptions campaign_options(Context& ctx, const std::string& label) {
  const auto& c = ctx.cfg;
  CampaignOptions o;
  o.seed = c.get_uint("seed");
  o.workers = ctx.workers;
  if (c.has("backend")) {
    o.policy.backend = parse_backend(c.raw("backend"));
    o.policy.direct_max = c.get_uint("direct_max");
    o.policy.iterative_max = c.get_uint("iterative_max");
    o.policy.escape_site_samples = c.get_uint("site_samples");
    o.policy.escape_radius_factor = c.get_real("radius_factor");
    o.batches = c.get_uint("batches");
  }
  std::ostream* err = &ctx.err;
  o.progress = [err, label](std::size_t i) { *err << "[" << label << "] grid point " << i + 1 << " done\n"; };
  return o;
}

void finish_outputs(Context& ctx, const ArtifactSet& a, bool partial) {
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  write_file_atomic(a.file(".meta.json"), sidecar_json(ctx.prov, ctx.cfg.serialize_all(), secs, ctx.workers, partial));
  set_partial_marker(a, partial, "interrupted before the campaign finished; completed grid points are intact");
  ctx.out << "wrote " << a.file(".csv").string() << (partial ? " (partial)" : "") << "\n";
}

void print_fitted(Context& ctx, const EstimateReport& r) {
  for (const auto& p : r.points) {
    ctx.out << "n=" << p.n << " mean=" << format_double(p.stats.mean) << " se=" << format_double(p.stats.se_mean)
            << " var=" << format_double(p.stats.var) << " backend=" << p.backend << "\n";
  }
  for (const auto& [k, v] : r.fitted) ctx.out << k << " = " << format_double(v) << "\n";
  for (const auto& [k, v] : r.labels) ctx.out << k << ": " << v << "\n";
}

int report_and_write(Context& ctx, const EstimateReport& r, const std::string& stem) {
  print_fitted(ctx, r);
  const ArtifactSet a{ctx.out_dir, stem};
  write_report(a, r, ctx.prov);
  finish_outputs(ctx, a, r.partial);
  return r.partial ? kExitInterrupted : kExitOk;
}

int cmd_walk(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto w = sample_walk(static_cast<int>(c.get_int("d")), c.get_uint("n"), c.get_uint("seed"));
  ctx.out << "steps = " << w.steps() << "\nrange size = " << w.range.size() << "\nendpoint = " << w.path.back().to_string()
          << "\nrange radius = " << format_double(w.range.radius()) << "\n";
  if (c.has("write_range")) {
    std::ostringstream s;
    write_site_set(s, w.range);
    write_file_atomic(c.raw("write_range"), s.str());
  }
  return kExitOk;
}

int cmd_green_eval(Context& ctx) {
  const auto& c = ctx.cfg;
  const int d = static_cast<int>(c.get_int("d"));
  LatticePoint x(d);
  if (c.has("x")) {
    const auto xs = c.get_int_list("x");
    require(static_cast<int>(xs.size()) == d, "x: expected " + std::to_string(d) + " coordinates");
    for (int i = 0; i < d; ++i) x[i] = xs[i];
  }
  const double tol = c.get_real("tol") > 0 ? c.get_real("tol") : default_green_tolerance(d);
  const auto q = green_quadrature(d, x, tol);
  ctx.out << std::setprecision(15) << "G(0," << x.to_string() << ") = " << q.value << "\nerror estimate = " << q.error_estimate
          << "\ntolerance = " << tol << "\n";
  if (c.get_uint("horizon") > 0) {
    const auto t = green_truncated(d, x, c.get_uint("horizon"), c.get_uint("replicas"), c.get_uint("seed"));
    ctx.out << "G_n(0,x) at n = " << t.horizon << ": " << t.mean << " +- " << t.standard_error << " (" << t.replicas
            << " walks)\n";
  }
  return kExitOk;
}

int cmd_green_table(Context& ctx) {
  const auto& c = ctx.cfg;
  const int d = static_cast<int>(c.get_int("d"));
  const int radius = c.get_int("radius") > 0 ? static_cast<int>(c.get_int("radius")) : default_cache_radius(d);
  const double tol = c.get_real("tol") > 0 ? c.get_real("tol") : default_green_tolerance(d);
  const auto g = GreenOracle::build(d, radius, tol);
  std::ostringstream s;
  g.save(s);
  write_file_atomic(c.raw("file"), s.str());
  ctx.out << std::setprecision(12) << "d = " << d << "\nradius = " << radius << "\ntolerance = " << tol
          << "\ntail constant = " << g.tail_constant() << "\ncalibration residual = " << g.calibration_residual()
          << "\ndomination constant = " << g.domination_constant() << "\nwrote " << c.raw("file") << "\n";
  return kExitOk;
}

int cmd_capacity_exact(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto A = load_set(c, "set");
  const auto g = make_oracle(c, A.dim());
  SolverOptions so;
  so.tol = c.get_real("solver_tol");
  const auto r = equilibrium_measure(A, g, so);
  ctx.out << std::setprecision(12) << "capacity = " << r.capacity << "\nresidual = " << r.residual << "\nmethod = " << r.method
          << "\nsites = " << A.size() << "\nclamped = " << r.clamped << "\n";
  if (c.has("measure_out")) {
    std::ostringstream s;
    s << std::setprecision(17) << "# config_hash=" << ctx.prov.config_hash << "\ncapacity=" << r.capacity
      << "\nresidual=" << r.residual << "\nmethod=" << r.method << "\nd=" << A.dim() << "\n";
    for (std::size_t i = 0; i < A.size(); ++i) {
      for (int k = 0; k < A.dim(); ++k) s << A[i][k] << ' ';
      s << r.measure[i] << "\n";
    }
    write_file_atomic(c.raw("measure_out"), s.str());
  }
  return kExitOk;
}

int cmd_capacity_variational(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto A = load_set(c, "set");
  const auto g = make_oracle(c, A.dim());
  const auto r = capacity_variational(A, g, static_cast<int>(c.get_int("iterations")), c.get_real("tol"));
  ctx.out << std::setprecision(12) << "lower bound = " << r.lower_bound << "\nupper bound = " << r.upper_bound
          << "\nrelative gap = " << r.relative_gap << "\niterations = " << r.iterations
          << "\nconverged = " << (r.converged ? "yes" : "no") << "\n";
  return kExitOk;
}

int cmd_capacity_escape(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto A = load_set(c, "set");
  const auto g = make_oracle(c, A.dim());
  EscapeOptions eo;
  eo.trials_per_site = c.get_uint("trials");
  eo.radius = c.get_real("radius");
  eo.radius_factor = c.get_real("radius_factor");
  eo.site_samples = c.get_uint("site_samples");
  eo.seed = c.get_uint("seed");
  const auto e = capacity_escape_mc(A, g, eo);
  ctx.out << std::setprecision(10) << "capacity = " << e.capacity << "\nstandard error = " << e.standard_error
          << "\nbias bound (upward) = " << e.bias_bound << "\nescape radius = " << e.radius << "\ntrials = " << e.trials
          << "\n";
  return kExitOk;
}

int cmd_capacity_representation(Context& ctx) {
  const auto& c = ctx.cfg;
  const int d = static_cast<int>(c.get_int("d"));
  const auto g = make_oracle(c, d);
  const auto w = sample_walk(d, c.get_uint("n"), c.get_uint("seed"));
  const auto e = capacity_representation_mc(w, c.get_uint("aux_horizon"), c.get_uint("trials"), g, c.get_uint("seed"),
                                            c.get_real("radius_factor"));
  ctx.out << std::setprecision(10) << "capacity = " << e.capacity << "\nstandard error = " << e.standard_error
          << "\nbias bound = " << e.bias_bound << "\nbias direction = " << e.bias_direction
          << "\nfresh times = " << e.fresh_times << "\nhorizon hits = " << e.horizon_hits << "\n";
  if (w.range.size() <= 10000) ctx.out << "exact capacity = " << capacity_exact(w.range, g) << "\n";
  return kExitOk;
}

int cmd_decomp_pair(Context& ctx, bool lower) {
  const auto& c = ctx.cfg;
  const auto A = load_set(c, "set");
  const auto B = load_set(c, "set_b");
  const auto g = make_oracle(c, A.dim());
  const auto r = lower ? check_lower_bound(A, B, g) : check_upper_bound(A, B, g);
  ctx.out << std::setprecision(12) << "cap(A) = " << r.cap_a << "\ncap(B) = " << r.cap_b << "\ncap(A u B) = " << r.cap_union
          << "\n" << (lower ? "cross term" : "cap(A n B)") << " = " << r.coupling << "\nlhs = " << r.lhs
          << "\nrhs = " << r.rhs << "\nslack = " << r.slack << "\n";
  if (r.slack < -1e-8) {
    ctx.err << "inequality violated beyond tolerance\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_decomp_dyadic(Context& ctx) {
  const auto& c = ctx.cfg;
  const int d = static_cast<int>(c.get_int("d"));
  const auto n = c.get_uint("n");
  const int L = static_cast<int>(c.get_int("levels"));
  const auto g = make_oracle(c, d);
  DecompOptions o;
  o.tolerance = c.get_real("tolerance");
  const auto paths = c.get_uint("paths");
  const auto seed = c.get_uint("seed");
  std::vector<SandwichReport> reps;
  bool partial = false;
  try {
    reps = parallel_map<SandwichReport>(paths, ctx.workers, [&](std::size_t r) {
      return dyadic_decompose(replica_walk(d, n, seed, r), L, g, o);
    });
  } catch (const Interrupted&) {
    partial = true;
  }
  std::string csv = "# command=decomp.dyadic\n# config_hash=" + ctx.prov.config_hash + "\n# version=" + ctx.prov.version +
                    "\n# master_seed=" + std::to_string(seed) + "\n";
  if (partial) csv += "# partial=1\n";
  csv += "path,L,lower,middle,upper,slack_low,slack_high\n";
  std::size_t bad = 0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& s = reps[i];
    csv += std::to_string(i) + "," + std::to_string(L) + "," + format_double(s.lower) + "," + format_double(s.middle) +
           "," + format_double(s.upper) + "," + format_double(s.slack_low()) + "," + format_double(s.slack_high()) + "\n";
    bad += !s.holds();
  }
  const ArtifactSet a{ctx.out_dir, "dyadic_d" + std::to_string(d)};
  write_file_atomic(a.file(".csv"), csv);
  finish_outputs(ctx, a, partial);
  ctx.out << "paths = " << reps.size() << "\nviolations = " << bad << "\n";
  if (partial) return kExitInterrupted;
  return bad ? kExitNumerical : kExitOk;
}

int cmd_decomp_moments(Context& ctx) {
  const auto& c = ctx.cfg;
  const int d = static_cast<int>(c.get_int("d"));
  const auto g = make_oracle(c, d);
  const auto grid = c.get_uint_list("n");
  const int k = static_cast<int>(c.get_int("order"));
  const auto est = cross_term_moment_campaign(d, grid, k, c.get_uint("replicas"), g, c.get_uint("seed"));
  std::string csv = "# command=decomp.moments\n# config_hash=" + ctx.prov.config_hash + "\n# version=" + ctx.prov.version +
                    "\n# master_seed=" + std::to_string(c.get_uint("seed")) + "\n";
  csv += "d,n,order,replicas,mean,se_mean,ratio\n";
  for (const auto& e : est) {
    csv += std::to_string(d) + "," + std::to_string(e.n) + "," + std::to_string(k) + "," + std::to_string(e.replicas) + "," +
           format_double(e.mean) + "," + format_double(e.standard_error) + "," + format_double(e.ratio) + "\n";
    ctx.out << "n=" << e.n << " mean=" << format_double(e.mean) << " se=" << format_double(e.standard_error)
            << " ratio=" << format_double(e.ratio) << "\n";
  }
  const ArtifactSet a{ctx.out_dir, "moments_d" + std::to_string(d) + "_k" + std::to_string(k)};
  write_file_atomic(a.file(".csv"), csv);
  finish_outputs(ctx, a, false);
  return kExitOk;
}

int cmd_experiment(Context& ctx, const std::string& which) {
  const auto& c = ctx.cfg;
  const auto replicas = c.get_uint("replicas");
  if (which == "nonintersection") {
    auto o = campaign_options(ctx, which);
    NonintersectionOptions ni;
    ni.long_walk_replicas = c.get_uint("long_walk_replicas");
    ni.horizon_multiplier = c.get_real("horizon_multiplier");
    return report_and_write(ctx, run_nonintersection(c.get_uint_list("n"), replicas, o, ni), "nonintersection_d4");
  }
  const int d = which == "d4" ? 4 : which == "d3" ? 3 : static_cast<int>(c.get_int("d"));
  const auto g = make_oracle(c, d);
  auto o = campaign_options(ctx, which);
  if (which == "clt") {
    CltOptions co;
    co.eps = c.get_real_list("eps");
    co.lindeberg_grid = c.get_uint_list("lindeberg_grid");
    co.lindeberg_replicas = c.get_uint("lindeberg_replicas");
    co.ks_simulations = c.get_uint("ks_simulations");
    const auto r = run_clt(d, c.get_uint("n"), replicas, g, o, co);
    ctx.out << std::setprecision(8) << "mean = " << r.mean << "\nvariance = " << r.variance << "\nKS distance = " << r.ks_distance
            << "\nKS p-value (composite, bootstrap) = " << r.ks_pvalue << "\nKS p-value (simple) = " << r.ks_pvalue_simple
            << "\nfourth moment ratio = " << r.fourth_moment_ratio << "\n";
    for (const auto& lp : r.lindeberg) {
      ctx.out << "lindeberg n=" << lp.n << " m=" << lp.m << " L=" << lp.levels << ":";
      for (const auto& v : lp.sums) ctx.out << " eps " << v.eps << " -> " << v.normalized;
      ctx.out << "\n";
    }
    const ArtifactSet a{ctx.out_dir, "clt_d" + std::to_string(d)};
    write_clt(a, r, ctx.prov);
    finish_outputs(ctx, a, r.partial);
    return r.partial ? kExitInterrupted : kExitOk;
  }
  const auto grid = c.get_uint_list("n");
  const std::string dtag = "_d" + std::to_string(d);
  if (which == "lln") return report_and_write(ctx, run_lln(d, grid, replicas, g, o), "lln" + dtag);
  if (which == "variance") return report_and_write(ctx, run_variance(d, grid, replicas, g, o), "variance" + dtag);
  if (which == "d4") return report_and_write(ctx, run_d4(grid, replicas, g, o), "d4");
  if (which == "d3") {
    D3Options d3;
    d3.jensen_se_allowance = c.get_real("jensen_se");
    return report_and_write(ctx, run_d3(grid, replicas, g, o, d3), "d3");
  }
  if (which == "conjectures") return report_and_write(ctx, run_conjectures(d, grid, replicas, g, o), "conjectures" + dtag);
  throw ValidationError("unknown experiment '" + which + "'");
}

int dispatch(Context& ctx) {
  const auto& cmd = ctx.cfg.command();
  if (cmd == "walk") return cmd_walk(ctx);
  if (cmd == "green.eval") return cmd_green_eval(ctx);
  if (cmd == "green.build-table") return cmd_green_table(ctx);
  if (cmd == "capacity.exact") return cmd_capacity_exact(ctx);
  if (cmd == "capacity.variational") return cmd_capacity_variational(ctx);
  if (cmd == "capacity.escape") return cmd_capacity_escape(ctx);
  if (cmd == "capacity.representation") return cmd_capacity_representation(ctx);
  if (cmd == "decomp.lower") return cmd_decomp_pair(ctx, true);
  if (cmd == "decomp.upper") return cmd_decomp_pair(ctx, false);
  if (cmd == "decomp.dyadic") return cmd_decomp_dyadic(ctx);
  if (cmd == "decomp.moments") return cmd_decomp_moments(ctx);
  if (cmd.rfind("experiment.", 0) == 0) return cmd_experiment(ctx, cmd.substr(11));
  throw ValidationError("unknown command '" + cmd + "'");
}

// `capacity --backend X ...` is shorthand for `capacity X ...`.
std::vector<std::string> rewrite_capacity_shorthand(std::vector<std::string> args) {
  if (args.empty() || args[0] != "capacity") return args;
  if (args.size() > 1 && args[1].rfind("--", 0) != 0) return args;
  std::string backend = "exact";
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--backend" && i + 1 < args.size()) {
      backend = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--backend=", 0) == 0) {
      backend = args[i].substr(10);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  args.insert(args.begin() + 1, backend);
  return args;
}

}  // namespace

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Capacity of random walk ranges: exact solves, Monte Carlo estimators and campaigns", "rangecap"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "sectioned key-value config file")->check(CLI::ExistingFile);
  app.set_version_flag("--version", artifact_version());

  // flag storage per command path
  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, CLI::App*> leaf;
  std::map<std::string, CLI::App*> groups;
  for (const auto& path : command_paths()) {
    const auto dot = path.find('.');
    CLI::App* parent = &app;
    std::string name = path;
    if (dot != std::string::npos) {
      const std::string group = path.substr(0, dot);
      if (!groups.count(group)) {
        groups[group] = app.add_subcommand(group, group + " commands");
        groups[group]->require_subcommand(1);
      }
      parent = groups[group];
      name = path.substr(dot + 1);
    }
    auto* sub = parent->add_subcommand(name, "run " + path);
    // unknown flags are reported together with the other config violations
    sub->allow_extras();
    leaf[path] = sub;
    for (const auto& k : command_schema(path)) {
      std::string names = "--" + k.name;
      if (k.name.find('_') != std::string::npos) {
        std::string dash = k.name;
        std::replace(dash.begin(), dash.end(), '_', '-');
        names += ",--" + dash;
      }
      std::string help = k.help;
      if (!k.default_value.empty()) help += " [default: " + k.default_value + "]";
      if (k.required) help += " (required)";
      sub->add_option(names, flags[path][k.name], help);
    }
  }

  auto args = rewrite_capacity_shorthand(raw_args);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    // help and version requests come through here with a zero exit code
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  std::string command;
  for (const auto& [path, sub] : leaf)
    if (sub->parsed()) command = path;
  if (command.empty()) {
    err << "error: no command given\n";
    return kExitValidation;
  }
  std::map<std::string, std::string> overrides;
  for (const auto& k : command_schema(command))
    if (leaf[command]->count("--" + k.name) > 0) overrides[k.name] = flags[command][k.name];
  const auto extra = leaf[command]->remaining();
  for (std::size_t i = 0; i < extra.size(); ++i) {
    std::string key = extra[i];
    if (key.rfind("--", 0) != 0) {
      err << "validation error: unexpected argument '" << key << "'\n";
      return kExitValidation;
    }
    key = key.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (i + 1 < extra.size() && extra[i + 1].rfind("--", 0) != 0) {
      value = extra[++i];
    }
    overrides[key] = value;
  }

  try {
    const IniFile file = config_file.empty() ? IniFile{} : read_ini_file(config_file);
    Context ctx{RunConfig::resolve(command, file, overrides), out, err, {}, 1, {}};
    ctx.out_dir = resolve_output_dir(ctx.cfg.raw("output"));
    const auto w = ctx.cfg.get_uint("workers");
    ctx.workers = w > 0 ? static_cast<int>(w) : std::max(1u, std::thread::hardware_concurrency());
    ctx.prov = Provenance{ctx.cfg.hash(), artifact_version(), ctx.cfg.get_uint("seed"), command};
    return dispatch(ctx);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Interrupted&) {
    err << "interrupted\n";
    return kExitInterrupted;
  } catch (const std::exception& e) {
    err << "failure in " << command << ": " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace rangecap
