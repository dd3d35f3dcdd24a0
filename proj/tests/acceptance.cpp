// Acceptance runner: one PASS/FAIL line per criterion. Gate constants and
// campaign sizes come from config/acceptance.ini.

#include <CLI11.hpp>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "cli_app.hpp"
#include "rangecap/config.hpp"
#include "rangecap/decomp.hpp"
#include "rangecap/errors.hpp"
#include "rangecap/experiments.hpp"
#include "rangecap/output.hpp"

using namespace rangecap;
namespace fs = std::filesystem;

namespace {

class Gates {
 public:
  explicit Gates(IniFile f) : f_(std::move(f)) {}
  const std::string& raw(const std::string& sec, const std::string& key) const {
    const auto s = f_.find(sec);
    if (s == f_.end() || !s->second.count(key)) throw ValidationError("gate file has no [" + sec + "] " + key);
    return s->second.at(key);
  }
  double real(const std::string& sec, const std::string& key) const { return std::stod(raw(sec, key)); }
  std::uint64_t uint(const std::string& sec, const std::string& key) const { return std::stoull(raw(sec, key)); }
  int integer(const std::string& sec, const std::string& key) const { return std::stoi(raw(sec, key)); }
  std::vector<std::uint64_t> uints(const std::string& sec, const std::string& key) const {
    return parse_uint_list(raw(sec, key));
  }
  std::vector<double> reals(const std::string& sec, const std::string& key) const {
    return parse_real_list(raw(sec, key));
  }

 private:
  IniFile f_;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Env {
  const Gates& gates;
  std::uint64_t seed;
  int workers;
  fs::path out_dir;  // empty: no artifacts

  CampaignOptions campaign(std::uint64_t tag) const {
    CampaignOptions o;
    o.seed = derive_stream({seed, tag});
    o.workers = workers;
    return o;
  }
  void save(const EstimateReport& r, const std::string& stem, const std::string& id, std::uint64_t s) const {
    if (out_dir.empty()) return;
    write_report({out_dir, stem}, r, {"", artifact_version(), s, "acceptance." + id});
  }
};

std::string fmt(double x, int prec = 6) {
  std::ostringstream s;
  s << std::setprecision(prec) << x;
  return s.str();
}

const GreenOracle& oracle(int d) {
  static std::map<int, GreenOracle> cache;
  static std::mutex mu;
  const std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, GreenOracle::build_default(d)).first;
  return it->second;
}

double spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

// ---------------------------------------------------------------------------

Outcome c01(const Env& e) {
  const auto& G = e.gates;
  const double htol = G.real("c01", "harmonic_tol"), ptol = G.real("c01", "pair_tol");
  double worst_h = 0, worst_p = 0;
  for (auto d64 : G.uints("c01", "dims")) {
    const int d = static_cast<int>(d64);
    const double g0 = green_exact(d, LatticePoint(d), 1e-12);
    const double g1 = green_exact(d, LatticePoint::unit(d, 0), 1e-12);
    worst_h = std::max(worst_h, std::abs(g0 - g1 - 1));
    const SiteSet two(d, {LatticePoint(d), LatticePoint::unit(d, 0)});
    worst_p = std::max(worst_p, std::abs(capacity_exact(two, oracle(d)) - 2 / (g0 + g1)));
  }
  return {worst_h <= htol && worst_p <= ptol,
          "max |G(0)-G(e)-1| = " + fmt(worst_h, 3) + " (gate " + fmt(htol) + "), max |cap({0,e1}) - 2/(G(0)+G(e1))| = " +
              fmt(worst_p, 3) + " (gate " + fmt(ptol) + ")"};
}

SiteSet random_test_set(int d, std::size_t size, int kind, StreamRng& rng) {
  std::vector<LatticePoint> pts;
  if (kind == 0) {
    // walk prefix stopped once the range reaches `size` sites
    LatticePoint p(d);
    pts.push_back(p);
    while (pts.size() < size) {
      random_step(p, d, rng);
      if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
    }
  } else if (kind == 1) {
    const int r = 1 + static_cast<int>(std::ceil(std::pow(static_cast<double>(size), 1.0 / d)));
    for (std::size_t i = 0; i < size; ++i) {
      LatticePoint x(d);
      for (int k = 0; k < d; ++k) x[k] = static_cast<Coord>(rng.below(2 * r + 1)) - r;
      pts.push_back(x);
    }
  } else {
    // two clusters far apart
    LatticePoint p(d);
    for (std::size_t i = 0; i < size; ++i) {
      if (i == size / 2) {
        p = LatticePoint(d);
        p[0] = static_cast<Coord>(20 + rng.below(20));
      }
      random_step(p, d, rng);
      pts.push_back(p);
    }
  }
  return SiteSet(d, pts);
}

Outcome c02(const Env& e) {
  const auto& G = e.gates;
  const auto dims = G.uints("c02", "dims");
  const auto sets = G.uint("c02", "sets");
  const auto max_size = G.uint("c02", "max_size");
  const double vtol = G.real("c02", "variational_rel_tol"), k = G.real("c02", "escape_se_multiplier");
  const int iters = G.integer("c02", "variational_iterations");
  const double gap = G.real("c02", "variational_gap");
  const std::uint64_t base = derive_stream({e.seed, 2});
  struct Row {
    double var_rel;
    bool converged;
    double z;
    bool ok;
  };
  const auto rows = parallel_map<Row>(sets, e.workers, [&](std::size_t i) {
    const int d = static_cast<int>(dims[i % dims.size()]);
    auto rng = StreamRng::for_path(base, {i});
    const std::size_t size = 1 + rng.below(max_size);
    const auto A = random_test_set(d, size, static_cast<int>((i / dims.size()) % 3), rng);
    const auto& g = oracle(d);
    const double exact = capacity_exact(A, g);
    const auto v = capacity_variational(A, g, iters, gap);
    EscapeOptions eo;
    eo.trials_per_site = G.uint("c02", "escape_trials_per_site");
    eo.seed = derive_stream({base, i, 1});
    const auto m = capacity_escape_mc(A, g, eo);
    Row r;
    r.var_rel = std::abs(v.lower_bound - exact) / exact;
    r.converged = v.converged;
    r.z = (m.capacity - exact) / m.standard_error;
    r.ok = r.var_rel <= vtol && std::abs(m.capacity - exact) <= k * m.standard_error + m.bias_bound;
    return r;
  });
  std::size_t bad_var = 0, bad_esc = 0, unconverged = 0;
  double worst_rel = 0, worst_z = 0;
  for (const auto& r : rows) {
    bad_var += r.var_rel > vtol;
    unconverged += !r.converged;
    worst_rel = std::max(worst_rel, r.var_rel);
    worst_z = std::max(worst_z, std::abs(r.z));
    bad_esc += !r.ok && r.var_rel <= vtol;
  }
  return {bad_var == 0 && bad_esc == 0,
          std::to_string(sets) + " sets: variational max rel err " + fmt(worst_rel, 3) + " (gate " + fmt(vtol) +
              ", unconverged " + std::to_string(unconverged) + "), escape outside " + fmt(k) +
              " SE + bias: " + std::to_string(bad_esc) + " (max |z| " + fmt(worst_z, 3) + ")"};
}

Outcome c03(const Env& e) {
  const auto& G = e.gates;
  const auto dims = G.uints("c03", "dims");
  const auto pairs = G.uint("c03", "pairs");
  const auto lo = G.uint("c03", "min_steps"), hi = G.uint("c03", "max_steps");
  const double tol = G.real("c03", "slack_tol");
  const std::uint64_t base = derive_stream({e.seed, 3});
  const auto rows = parallel_map<std::pair<double, double>>(pairs, e.workers, [&](std::size_t i) {
    const int d = static_cast<int>(dims[i % dims.size()]);
    auto rng = StreamRng::for_path(base, {i});
    const std::uint64_t n = lo + rng.below(hi - lo + 1);
    const auto w = sample_walk(d, n, rng);
    SiteSet A, B;
    if (i % 2 == 0) {
      // overlapping time windows of one path
      std::uint64_t a = rng.below(n + 1), b = rng.below(n + 1);
      if (a > b) std::swap(a, b);
      A = range_window(w, 0, b);
      B = range_window(w, a, n);
    } else {
      const auto w2 = sample_walk(d, lo + rng.below(hi - lo + 1), rng);
      const auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
      LatticePoint shift(d);
      for (int k = 0; k < d; ++k) shift[k] = static_cast<Coord>(rng.below(2 * s + 1)) - static_cast<Coord>(s);
      A = w.range;
      B = w2.range.translated(shift);
    }
    const auto& g = oracle(d);
    return std::make_pair(check_lower_bound(A, B, g).slack, check_upper_bound(A, B, g).slack);
  });
  double min_low = 1e300, min_up = 1e300;
  for (const auto& [l, u] : rows) {
    min_low = std::min(min_low, l);
    min_up = std::min(min_up, u);
  }
  return {min_low >= -tol && min_up >= -tol, std::to_string(pairs) + " pairs: min slack lower bound " + fmt(min_low, 4) +
                                                 ", upper bound " + fmt(min_up, 4) + " (gate >= -" + fmt(tol) + ")"};
}

Outcome c04(const Env& e) {
  const auto& G = e.gates;
  const int d = G.integer("c04", "d");
  const auto n = G.uint("c04", "n");
  const auto levels = G.uints("c04", "levels");
  DecompOptions o;
  o.tolerance = G.real("c04", "tolerance");
  const auto seed = derive_stream({e.seed, 4});
  const auto& g = oracle(d);
  const auto rows = parallel_map<std::vector<SandwichReport>>(G.uint("c04", "paths"), e.workers, [&](std::size_t p) {
    const auto w = replica_walk(d, n, seed, p);
    std::vector<SandwichReport> out;
    for (auto L : levels) out.push_back(dyadic_decompose(w, static_cast<int>(L), g, o));
    return out;
  });
  std::size_t bad = 0;
  double min_low = 1e300, min_high = 1e300;
  for (const auto& row : rows)
    for (const auto& s : row) {
      bad += !s.holds();
      min_low = std::min(min_low, s.slack_low());
      min_high = std::min(min_high, s.slack_high());
    }
  return {bad == 0, std::to_string(rows.size()) + " paths x " + std::to_string(levels.size()) +
                        " depths: violations " + std::to_string(bad) + ", min lower slack " + fmt(min_low, 4) +
                        ", min upper slack " + fmt(min_high, 4)};
}

Outcome c05(const Env& e) {
  const auto& G = e.gates;
  const int d = G.integer("c05", "d");
  auto o = e.campaign(5);
  const auto r = run_lln(d, G.uints("c05", "n"), G.uint("c05", "replicas"), oracle(d), o);
  e.save(r, "lln_d" + std::to_string(d), "c05", o.seed);
  const double flat = G.real("c05", "flat_tol");
  const bool ok5 = !r.partial && r.fitted.at("alpha_ci_low") > 0 && r.fitted.at("top_two_relative_change") < flat;

  auto o3 = e.campaign(53);
  o3.policy.escape_site_samples = G.uint("c05", "d3_site_samples");
  const auto r3 = run_lln(3, G.uints("c05", "d3_n"), G.uint("c05", "d3_replicas"), oracle(3), o3);
  e.save(r3, "lln_d3", "c05", o3.seed);
  const double first = r3.points.front().extras.at("cap_over_n"), last = r3.points.back().extras.at("cap_over_n");
  const double halving = G.real("c05", "halving");
  const bool ok3 = !r3.partial && last < halving * first;
  return {ok5 && ok3, "d=" + std::to_string(d) + ": alpha_hat " + fmt(r.fitted.at("alpha_hat")) + " CI [" +
                          fmt(r.fitted.at("alpha_ci_low")) + ", " + fmt(r.fitted.at("alpha_ci_high")) +
                          "], top-two change " + fmt(r.fitted.at("top_two_relative_change"), 3) + " (gate < " +
                          fmt(flat) + "); d=3: cap/n last/first " + fmt(last / first, 4) + " (gate < " + fmt(halving) +
                          ")"};
}

Outcome c06(const Env& e) {
  const auto& G = e.gates;
  const int d = G.integer("c06", "d");
  auto o = e.campaign(6);
  const auto r = run_variance(d, G.uints("c06", "n"), G.uint("c06", "replicas"), oracle(d), o);
  e.save(r, "variance_d" + std::to_string(d), "c06", o.seed);
  const double r2min = G.real("c06", "r2_min");
  const auto& f = r.fitted;
  return {!r.partial && f.at("r2") > r2min && f.at("gamma_ci_low") > 0,
          "gamma_hat " + fmt(f.at("gamma_hat")) + " CI [" + fmt(f.at("gamma_ci_low")) + ", " + fmt(f.at("gamma_ci_high")) +
              "], R^2 " + fmt(f.at("r2"), 4) + " (gate > " + fmt(r2min) + ")"};
}

Outcome c07(const Env& e) {
  const auto& G = e.gates;
  const int d = G.integer("c07", "d");
  CltOptions c;
  c.eps = G.reals("c07", "eps");
  c.lindeberg_grid = G.uints("c07", "lindeberg_grid");
  c.ks_simulations = G.uint("c07", "ks_simulations");
  auto o = e.campaign(7);
  const auto r = run_clt(d, G.uint("c07", "n"), G.uint("c07", "replicas"), oracle(d), o, c);
  if (!e.out_dir.empty()) write_clt({e.out_dir, "clt_d" + std::to_string(d)}, r, {"", artifact_version(), o.seed, "acceptance.c07"});
  const double pmin = G.real("c07", "pvalue_min");
  bool decreasing = true;
  std::string curve;
  for (std::size_t j = 0; j < c.eps.size(); ++j) {
    curve += " eps " + fmt(c.eps[j], 2) + ":";
    for (std::size_t i = 0; i < r.lindeberg.size(); ++i) {
      curve += " " + fmt(r.lindeberg[i].sums[j].normalized, 4);
      if (i > 0) decreasing = decreasing && r.lindeberg[i].sums[j].normalized < r.lindeberg[i - 1].sums[j].normalized;
    }
  }
  std::vector<double> fourth;
  for (const auto& lp : r.lindeberg) fourth.push_back(lp.fourth_moment_ratio);
  const double fs = spread(fourth), fmax = G.real("c07", "fourth_ratio_spread_max");
  return {!r.partial && r.ks_pvalue > pmin && decreasing && fs < fmax,
          "KS p " + fmt(r.ks_pvalue, 4) + " (gate > " + fmt(pmin) + "), Lindeberg decreasing: " +
              (decreasing ? "yes" : "no") + " [" + curve + " ], fourth-moment ratio max/min " + fmt(fs, 4) + " (gate < " +
              fmt(fmax) + ")"};
}

Outcome c08(const Env& e) {
  const auto& G = e.gates;
  const auto R = G.uint("c08", "replicas");
  const auto seed = derive_stream({e.seed, 8});
  const auto n5 = G.uint("c08", "d5_n");
  const auto m5 = cross_term_moment_campaign(5, {n5, 4 * n5}, 1, R, oracle(5), seed);
  const double ratio = m5[1].mean / m5[0].mean;
  const double target = G.real("c08", "d5_ratio_target"), tol = G.real("c08", "d5_ratio_tol");
  auto seq = [&](int d, const std::vector<std::uint64_t>& grid) {
    std::vector<double> r;
    for (const auto& m : cross_term_moment_campaign(d, grid, 1, R, oracle(d), seed)) r.push_back(m.ratio);
    return r;
  };
  const auto r6 = seq(6, G.uints("c08", "d6_n"));
  const auto r7 = seq(7, G.uints("c08", "d7_n"));
  const double smax = G.real("c08", "spread_max");
  const double s6 = spread(r6), s7 = spread(r7);
  return {std::abs(ratio - target) <= tol && s6 < smax && s7 < smax,
          "d=5 mean(4n)/mean(n) " + fmt(ratio, 4) + " (gate " + fmt(target) + " +- " + fmt(tol) +
              "), d=6 ratio-to-log max/min " + fmt(s6, 4) + ", d=7 max/min " + fmt(s7, 4) + " (gate < " + fmt(smax) +
              ")"};
}

Outcome c09(const Env& e) {
  const auto& G = e.gates;
  auto o = e.campaign(9);
  o.policy.escape_site_samples = G.uint("c09", "d4_site_samples");
  const auto r = run_d4(G.uints("c09", "d4_n"), G.uint("c09", "d4_replicas"), oracle(4), o);
  e.save(r, "d4", "c09", o.seed);
  const double vmax = G.real("c09", "variation_max"), lo = G.real("c09", "bracket_low"), hi = G.real("c09", "bracket_high");
  const double var = r.fitted.at("top_decade_variation"), top = r.fitted.at("a_top");

  auto oi = e.campaign(91);
  NonintersectionOptions ni;
  ni.long_walk_replicas = G.uint("c09", "ni_long_walk_replicas");
  ni.horizon_multiplier = G.real("c09", "ni_horizon_multiplier");
  const auto q = run_nonintersection(G.uints("c09", "ni_n"), G.uint("c09", "ni_replicas"), oi, ni);
  e.save(q, "nonintersection_d4", "c09", oi.seed);
  const double nvmax = G.real("c09", "ni_variation_max"), nvar = q.fitted.at("top_decade_variation");
  const bool ok = !r.partial && !q.partial && var < vmax && top >= lo && top <= hi && nvar < nvmax;
  std::string lw;
  if (q.points.back().extras.count("long_walk_log_n_p"))
    lw = ", long-walk variant " + fmt(q.points.back().extras.at("long_walk_log_n_p"), 4);
  return {ok, "[slow-convergence] a_n top " + fmt(top, 4) + " (bracket [" + fmt(lo) + ", " + fmt(hi) +
                  "], target pi^2/8 = " + fmt(std::numbers::pi * std::numbers::pi / 8, 5) + "), top-decade variation " +
                  fmt(var, 3) + " (gate < " + fmt(vmax) + "); log n * P " + fmt(q.fitted.at("log_n_p_top"), 4) + lw +
                  ", variation " + fmt(nvar, 3) + " (gate < " + fmt(nvmax) + ")"};
}

Outcome c10(const Env& e) {
  const auto& G = e.gates;
  auto o = e.campaign(10);
  o.policy.escape_site_samples = G.uint("c10", "site_samples");
  D3Options d3;
  d3.jensen_se_allowance = G.real("c10", "jensen_se");
  const auto r = run_d3(G.uints("c10", "n"), G.uint("c10", "replicas"), oracle(3), o, d3);
  e.save(r, "d3", "c10", o.seed);
  const double target = G.real("c10", "exponent_target"), tol = G.real("c10", "exponent_tol");
  const double rmax = G.real("c10", "rad_spread_max");
  const auto& f = r.fitted;
  const bool ok = !r.partial && std::abs(f.at("exponent") - target) <= tol && f.at("jensen_violations") == 0 &&
                  f.at("cap_over_rad_spread") < rmax;
  return {ok, "exponent " + fmt(f.at("exponent"), 4) + " CI [" + fmt(f.at("exponent_ci_low"), 4) + ", " +
                  fmt(f.at("exponent_ci_high"), 4) + "] (gate " + fmt(target) + " +- " + fmt(tol) +
                  "), Jensen violations " + fmt(f.at("jensen_violations")) + ", cap/rad max/min " +
                  fmt(f.at("cap_over_rad_spread"), 4) + " (gate < " + fmt(rmax) + ")"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome c11(const Env& e) {
  const auto& G = e.gates;
  const fs::path root = fs::temp_directory_path() / ("rangecap_repro_" + std::to_string(::getpid()));
  const std::vector<std::pair<std::string, std::vector<std::string>>> runs = {
      {"lln_d5", {"experiment", "lln", "--d", "5", "--n", "6:8", "--replicas", "24"}},
      {"variance_d6", {"experiment", "variance", "--d", "6", "--n", "6:7", "--replicas", "24"}},
      {"d4", {"experiment", "d4", "--n", "6:7", "--replicas", "16", "--backend", "escape", "--site-samples", "500"}},
      {"d3", {"experiment", "d3", "--n", "6:7", "--replicas", "16"}},
      {"nonintersection_d4", {"experiment", "nonintersection", "--n", "4:7", "--replicas", "2000"}},
      {"clt_d6", {"experiment", "clt", "--d", "6", "--n", "64", "--replicas", "200", "--lindeberg-grid", "64",
                  "--ks-simulations", "100"}},
      {"conjectures_d5", {"experiment", "conjectures", "--d", "5", "--n", "5:6", "--replicas", "16"}},
      {"dyadic_d6", {"decomp", "dyadic", "--d", "6", "--n", "256", "--levels", "2", "--paths", "8"}},
  };
  std::size_t same = 0;
  std::string diff;
  for (const auto& [stem, args] : runs) {
    std::string bytes[2];
    int w = 0;
    for (const char* key : {"workers_a", "workers_b"}) {
      const fs::path dir = root / (stem + "_" + key);
      auto a = args;
      a.insert(a.end(), {"--seed", std::to_string(e.seed), "--workers", G.raw("c11", key), "--output", dir.string()});
      std::ostringstream out, err;
      if (run_cli(a, out, err) != kExitOk) throw NumericalError("smoke run failed: " + stem + ": " + err.str());
      bytes[w++] = slurp(dir / (stem + ".csv"));
    }
    if (!bytes[0].empty() && bytes[0] == bytes[1])
      ++same;
    else
      diff += " " + stem;
  }
  fs::remove_all(root);
  return {same == runs.size(), std::to_string(same) + "/" + std::to_string(runs.size()) + " campaign CSVs identical with " +
                                   G.raw("c11", "workers_a") + " vs " + G.raw("c11", "workers_b") + " workers" +
                                   (diff.empty() ? "" : "; differing:" + diff)};
}

struct Criterion {
  const char* id;
  const char* title;
  Outcome (*run)(const Env&);
};

const Criterion kCriteria[] = {
    {"c01", "closed-form identities", c01},
    {"c02", "capacity backend equivalence", c02},
    {"c03", "two-set capacity inequalities", c03},
    {"c04", "dyadic sandwich", c04},
    {"c05", "law of large numbers", c05},
    {"c06", "variance linearity", c06},
    {"c07", "central limit diagnostics", c07},
    {"c08", "cross-term scaling", c08},
    {"c09", "d = 4 trends", c09},
    {"c10", "d = 3 growth exponent and Jensen bound", c10},
    {"c11", "worker-count reproducibility", c11},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string gates_path = RANGECAP_GATES_FILE;
  std::vector<std::string> only;
  int workers = -1;
  std::string output;
  app.add_option("--gates", gates_path, "gate file")->check(CLI::ExistingFile);
  app.add_option("--only", only, "criterion ids to run (c01..c11)")->delimiter(',');
  app.add_option("--workers", workers, "worker threads (default from the gate file)");
  app.add_option("--output", output, "directory for campaign artifacts");
  CLI11_PARSE(app, argc, argv);

  try {
    const Gates gates(read_ini_file(gates_path));
    if (workers < 0) workers = gates.integer("general", "workers");
    if (workers == 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (!output.empty()) fs::create_directories(output);
    const Env env{gates, gates.uint("general", "seed"), workers, output};
    int failed = 0, ran = 0;
    for (const auto& c : kCriteria) {
      if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
      ++ran;
      const auto t0 = std::chrono::steady_clock::now();
      Outcome o;
      try {
        o = c.run(env);
      } catch (const std::exception& ex) {
        o = {false, std::string("error: ") + ex.what()};
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::string id = c.id;
      std::transform(id.begin(), id.end(), id.begin(), ::toupper);
      std::cout << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << ": " << o.detail << "  [" << fmt(secs, 4)
                << " s]" << std::endl;
      failed += !o.pass;
    }
    if (ran == 0) {
      std::cerr << "no criterion matched\n";
      return 1;
    }
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "acceptance: " << ex.what() << "\n";
    return 1;
  }
}
