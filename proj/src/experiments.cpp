#include "rangecap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rangecap/decomp.hpp"
#include "rangecap/errors.hpp"
#include "rangecap/kernel.hpp"

namespace rangecap {

std::atomic<bool>& stop_requested() {
  static std::atomic<bool> flag{false};
  return flag;
}

Backend parse_backend(const std::string& name) {
  if (name == "auto") return Backend::kAuto;
  if (name == "exact") return Backend::kExact;
  if (name == "escape") return Backend::kEscape;
  throw ValidationError("unknown capacity backend '" + name + "' (expected auto, exact or escape)");
}

std::string backend_name(Backend b) {
  switch (b) {
    case Backend::kAuto: return "auto";
    case Backend::kExact: return "exact";
    case Backend::kEscape: return "escape";
  }
  return "?";
}

double default_escape_radius_factor(int dim) {
  // The return probability from distance r decays like r^{2-d}; in low
  // dimension the ball has to be much wider to keep the bias below the noise.
  if (dim == 3) return 20.0;
  if (dim == 4) return 3.0;
  return 2.0;
}

CapacityValue capacity_with_policy(const SiteSet& A, const GreenOracle& g, const CapacityPolicy& policy,
                                   std::uint64_t seed) {
  const bool exact = policy.backend == Backend::kExact ||
                     (policy.backend == Backend::kAuto && A.size() <= policy.iterative_max);
  CapacityValue v;
  if (exact) {
    SolverOptions so;
    so.direct_max = policy.direct_max;
    so.dense_max = std::max(policy.iterative_max, policy.direct_max);
    const auto r = equilibrium_measure(A, g, so);
    v.value = r.capacity;
    v.backend = A.size() <= policy.direct_max ? "direct" : "iterative";
    return v;
  }
  EscapeOptions eo;
  eo.site_samples = policy.escape_site_samples;
  eo.trials_per_site = 100;
  eo.radius_factor =
      policy.escape_radius_factor > 0 ? policy.escape_radius_factor : default_escape_radius_factor(A.dim());
  eo.seed = seed;
  const auto e = capacity_escape_mc(A, g, eo);
  v.value = e.capacity;
  v.standard_error = e.standard_error;
  v.bias_bound = e.bias_bound;
  v.backend = "escape";
  return v;
}

namespace {

std::uint64_t point_seed(std::uint64_t master, std::uint64_t n) { return derive_stream({master, n}); }

std::string merged_backend(const std::vector<CapacityValue>& v) {
  if (v.empty()) return "";
  for (const auto& x : v)
    if (x.backend != v.front().backend) return "mixed";
  return v.front().backend;
}

GridPoint make_point(int dim, std::uint64_t n, const std::vector<CapacityValue>& caps, std::uint64_t seed,
                     std::size_t batches) {
  GridPoint p;
  p.d = dim;
  p.n = n;
  p.replicas = caps.size();
  p.seed = seed;
  p.backend = merged_backend(caps);
  double noise = 0;
  for (const auto& c : caps) {
    p.values.push_back(c.value);
    p.bias_bound += c.bias_bound;
    p.mc_se += c.standard_error;
    noise += c.standard_error * c.standard_error;
  }
  const double R = std::max<double>(1.0, static_cast<double>(caps.size()));
  p.bias_bound /= R;
  p.mc_se /= R;
  p.extras["mc_noise_var"] = noise / R;
  p.stats = batch_statistics(p.values, batches);
  return p;
}

double t_quantile_for(const BatchStats& s) { return t95(s.batches > 1 ? s.batches - 1 : 1); }

void require_grid(const std::vector<std::uint64_t>& n_grid) {
  require(!n_grid.empty(), "n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    require(n_grid[i] >= 1, "grid horizons must be >= 1");
    if (i) require(n_grid[i] > n_grid[i - 1], "grid horizons must be strictly increasing");
  }
}

void notify(const CampaignOptions& opt, std::size_t i) {
  if (opt.progress) opt.progress(i);
}

// (max - min) / min over the points with n >= n_max / 8.
double top_decade_variation(const EstimateReport& r, const std::string& key) {
  if (r.points.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::uint64_t top = r.points.back().n;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : r.points) {
    if (p.n * 8 < top) continue;
    const double v = p.extras.at(key);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return (hi - lo) / lo;
}

}  // namespace

std::uint64_t replica_seed(std::uint64_t master, std::uint64_t n, std::uint64_t r) {
  return derive_stream({point_seed(master, n), r});
}

WalkRecord replica_walk(int dim, std::uint64_t n, std::uint64_t master, std::uint64_t r) {
  auto rng = replica_stream(point_seed(master, n), r, StreamTag::kWalk);
  return sample_walk(dim, n, rng);
}

EstimateReport sample_capacities(const std::string& campaign, int dim, const std::vector<std::uint64_t>& n_grid,
                                 std::uint64_t replicas, const GreenOracle& g, const CampaignOptions& opt) {
  require_grid(n_grid);
  require(replicas >= 2, "need at least two replicas");
  require(dim == g.dim(), "dimension mismatch between campaign and Green oracle");
  EstimateReport rep;
  rep.campaign = campaign;
  rep.d = dim;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const std::uint64_t n = n_grid[i];
    std::vector<CapacityValue> caps;
    try {
      caps = parallel_map<CapacityValue>(replicas, opt.workers, [&](std::size_t r) {
        const auto w = replica_walk(dim, n, opt.seed, r);
        return capacity_with_policy(w.range, g, opt.policy, replica_seed(opt.seed, n, r));
      });
    } catch (const Interrupted&) {
      rep.partial = true;
      return rep;
    }
    rep.points.push_back(make_point(dim, n, caps, point_seed(opt.seed, n), opt.batches));
    notify(opt, i);
  }
  return rep;
}

EstimateReport run_lln(int dim, const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, const GreenOracle& g,
                       const CampaignOptions& opt) {
  require(dim >= 3, "capacity campaigns need d >= 3");
  auto rep = sample_capacities("lln", dim, n_grid, replicas, g, opt);
  double running = std::numeric_limits<double>::infinity();
  for (auto& p : rep.points) {
    const double n = static_cast<double>(p.n);
    p.extras["cap_over_n"] = p.stats.mean / n;
    p.extras["cap_over_n_se"] = p.stats.se_mean / n;
    running = std::min(running, p.stats.mean / n);
    p.extras["running_min"] = running;
  }
  if (rep.points.empty()) return rep;
  const auto& last = rep.points.back();
  const double n = static_cast<double>(last.n);
  const double t = t_quantile_for(last.stats);
  rep.fitted["alpha_hat"] = last.stats.mean / n;
  // escape estimates are biased upward only, so the bias widens the lower end
  rep.fitted["alpha_ci_low"] = (last.stats.mean - t * last.stats.se_mean - last.bias_bound) / n;
  rep.fitted["alpha_ci_high"] = (last.stats.mean + t * last.stats.se_mean) / n;
  rep.fitted["first_over_last"] = rep.points.front().extras["cap_over_n"] / rep.fitted["alpha_hat"];
  if (rep.points.size() >= 2) {
    const double prev = rep.points[rep.points.size() - 2].extras["cap_over_n"];
    rep.fitted["top_two_relative_change"] = std::abs(rep.fitted["alpha_hat"] - prev) / rep.fitted["alpha_hat"];
  }
  return rep;
}

EstimateReport run_variance(int dim, const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas,
                            const GreenOracle& g, const CampaignOptions& opt) {
  require(dim >= 3, "capacity campaigns need d >= 3");
  auto rep = sample_capacities("variance", dim, n_grid, replicas, g, opt);
  std::vector<double> x, y;
  for (auto& p : rep.points) {
    const double n = static_cast<double>(p.n);
    // Monte Carlo noise of each capacity estimate adds to the spread between replicas
    const double var = std::max(0.0, p.stats.var - p.extras["mc_noise_var"]);
    p.extras["var_corrected"] = var;
    p.extras["var_over_n"] = var / n;
    p.extras["var_over_n_se"] = p.stats.se_var / n;
    p.extras["var_over_nlogn"] = var / (n * std::log(n));
    x.push_back(n);
    y.push_back(var);
  }
  if (x.size() >= 2) {
    const auto fit = fit_through_origin(x, y);
    rep.fitted["gamma_hat"] = fit.slope;
    rep.fitted["gamma_se"] = fit.se_slope;
    rep.fitted["gamma_ci_low"] = fit.ci_low;
    rep.fitted["gamma_ci_high"] = fit.ci_high;
    rep.fitted["r2"] = fit.r2;
    rep.fitted["sigma2_hat"] = fit.slope;
    rep.labels["sigma2_hat"] = "inferred: sigma_d^2 taken equal to gamma_d";
  }
  return rep;
}

EstimateReport run_d4(const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, const GreenOracle& g,
                      const CampaignOptions& opt) {
  auto rep = sample_capacities("d4", 4, n_grid, replicas, g, opt);
  for (auto& p : rep.points) {
    const double n = static_cast<double>(p.n);
    p.extras["a_n"] = std::log(n) / n * p.stats.mean;
    p.extras["a_n_se"] = std::log(n) / n * p.stats.se_mean;
  }
  rep.labels["convergence"] = "slow-convergence";
  rep.fitted["target"] = std::numbers::pi * std::numbers::pi / 8.0;
  if (!rep.points.empty()) {
    rep.fitted["a_top"] = rep.points.back().extras["a_n"];
    rep.fitted["top_decade_variation"] = top_decade_variation(rep, "a_n");
  }
  return rep;
}

double jensen_functional(const WalkRecord& w, const GreenOracle& g) {
  require(w.steps() >= 1, "Jensen functional needs at least one step");
  const std::uint64_t n = w.steps();
  const auto lt = local_times(w, n);
  std::vector<double> weights(lt.counts.begin(), lt.counts.end());
  const double q = green_quadratic(g, lt.sites, weights.data());
  return static_cast<double>(n) * static_cast<double>(n) / q;
}

EstimateReport run_d3(const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, const GreenOracle& g,
                      const CampaignOptions& opt, const D3Options& d3) {
  require_grid(n_grid);
  require(replicas >= 2, "need at least two replicas");
  require(g.dim() == 3, "d = 3 campaign needs a d = 3 Green oracle");
  struct Row {
    CapacityValue cap;
    double jensen = 0;
    double rad = 0;
  };
  EstimateReport rep;
  rep.campaign = "d3";
  rep.d = 3;
  std::uint64_t violations = 0;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const std::uint64_t n = n_grid[i];
    std::vector<Row> rows;
    try {
      rows = parallel_map<Row>(replicas, opt.workers, [&](std::size_t r) {
        const auto w = replica_walk(3, n, opt.seed, r);
        Row row;
        row.cap = capacity_with_policy(w.range, g, opt.policy, replica_seed(opt.seed, n, r));
        row.jensen = jensen_functional(w, g);
        row.rad = std::max(1.0, w.range.radius());
        return row;
      });
    } catch (const Interrupted&) {
      rep.partial = true;
      break;
    }
    std::vector<CapacityValue> caps;
    double jensen = 0, ratio = 0, worst = std::numeric_limits<double>::infinity();
    std::uint64_t bad = 0;
    for (const auto& row : rows) {
      caps.push_back(row.cap);
      jensen += row.jensen;
      ratio += row.cap.value / row.rad;
      const double allowance = row.cap.backend == "escape" ? d3.jensen_se_allowance * row.cap.standard_error
                                                            : 1e-8 * row.cap.value;
      const double margin = row.cap.value + allowance - row.jensen;
      worst = std::min(worst, margin / row.cap.value);
      if (margin < 0) ++bad;
    }
    auto p = make_point(3, n, caps, point_seed(opt.seed, n), opt.batches);
    const double R = static_cast<double>(rows.size());
    p.extras["jensen_mean"] = jensen / R;
    p.extras["cap_over_rad"] = ratio / R;
    p.extras["jensen_violations"] = static_cast<double>(bad);
    p.extras["jensen_min_relative_margin"] = worst;
    p.extras["cap_over_sqrt_n"] = p.stats.mean / std::sqrt(static_cast<double>(n));
    violations += bad;
    rep.points.push_back(std::move(p));
    notify(opt, i);
  }
  rep.fitted["jensen_violations"] = static_cast<double>(violations);
  if (rep.points.size() >= 3) {
    std::vector<double> x, y, w;
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& p : rep.points) {
      x.push_back(std::log(static_cast<double>(p.n)));
      y.push_back(std::log(p.stats.mean));
      const double rel = p.stats.se_mean / p.stats.mean;
      w.push_back(rel > 0 ? 1.0 / (rel * rel) : 1.0);
      lo = std::min(lo, p.extras.at("cap_over_rad"));
      hi = std::max(hi, p.extras.at("cap_over_rad"));
    }
    const auto fit = fit_line(x, y, w);
    rep.fitted["exponent"] = fit.slope;
    rep.fitted["exponent_se"] = fit.se_slope;
    rep.fitted["exponent_ci_low"] = fit.ci_low;
    rep.fitted["exponent_ci_high"] = fit.ci_high;
    rep.fitted["cap_over_rad_spread"] = hi / lo;
  }
  return rep;
}

std::uint64_t first_intersection_time(int dim, std::uint64_t horizon, StreamRng& w1, StreamRng& w2, StreamRng& w3) {
  check_dimension(dim);
  const auto H = static_cast<Coord>(horizon);
  std::array<Coord, kMaxDim> lo{}, hi{};
  for (int i = 0; i < dim; ++i) {
    lo[i] = -H;
    hi[i] = H;
  }
  const BoxPacker box(dim, lo.data(), hi.data());
  PackedPointSet first(box), others(box);
  LatticePoint s1(dim), s2(dim), s3(dim);
  others.insert(s2.data());
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    random_step(s1, dim, w1);
    random_step(s2, dim, w2);
    random_step(s3, dim, w3);
    first.insert(s1.data());
    others.insert(s2.data());
    others.insert(s3.data());
    if (s3.is_origin() || others.contains(s1) || first.contains(s2) || first.contains(s3)) return t;
  }
  return horizon + 1;
}

namespace {

// R1[1, horizon] avoids R2[0,n] u R3[0,n], with 0 not in R3[1,n]. Walk 1 leaps
// exactly while it is far from the bounding box of the other two ranges.
bool long_walk_avoids(int dim, std::uint64_t n, std::uint64_t horizon, StreamRng& w1, StreamRng& w2, StreamRng& w3) {
  std::vector<LatticePoint> pts;
  pts.reserve(2 * n + 2);
  LatticePoint s2(dim), s3(dim);
  pts.push_back(s2);
  for (std::uint64_t t = 1; t <= n; ++t) {
    random_step(s2, dim, w2);
    random_step(s3, dim, w3);
    if (s3.is_origin()) return false;
    pts.push_back(s2);
    pts.push_back(s3);
  }
  const PackedPointSet others(dim, pts);
  const BoxPacker& box = others.packer();
  LatticePoint s1(dim);
  std::uint64_t t = 0;
  while (t < horizon) {
    const auto gap = static_cast<std::uint64_t>(box.linf_distance(s1.data()));
    if (gap > 8) {
      const std::uint64_t k = std::min(gap - 1, horizon - t);
      add_k_step_displacement(s1.data(), dim, k, w1);
      t += k;
      continue;
    }
    random_step(s1, dim, w1);
    ++t;
    if (others.contains(s1)) return false;
  }
  return true;
}

}  // namespace

EstimateReport run_nonintersection(const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas,
                                   const CampaignOptions& opt, const NonintersectionOptions& ni) {
  require_grid(n_grid);
  require(replicas >= 2, "need at least two replicas");
  constexpr int kDim = 4;
  EstimateReport rep;
  rep.campaign = "nonintersection";
  rep.d = kDim;
  rep.labels["convergence"] = "slow-convergence";
  rep.fitted["target"] = std::numbers::pi * std::numbers::pi / 8.0;
  const std::uint64_t horizon = n_grid.back();
  const std::uint64_t seed = derive_stream({opt.seed, horizon});
  std::vector<std::uint64_t> tau;
  try {
    tau = parallel_map<std::uint64_t>(replicas, opt.workers, [&](std::size_t r) {
      auto a = replica_stream(seed, r, StreamTag::kWalk);
      auto b = replica_stream(seed, r, StreamTag::kSecondWalk);
      auto c = replica_stream(seed, r, StreamTag::kThirdWalk);
      return first_intersection_time(kDim, horizon, a, b, c);
    });
  } catch (const Interrupted&) {
    rep.partial = true;
    return rep;
  }
  // The events are nested in n, so one set of first-collision times serves the whole grid.
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const std::uint64_t n = n_grid[i];
    std::vector<double> hit(tau.size());
    for (std::size_t r = 0; r < tau.size(); ++r) hit[r] = tau[r] > n ? 1.0 : 0.0;
    GridPoint p;
    p.d = kDim;
    p.n = n;
    p.replicas = tau.size();
    p.seed = seed;
    p.backend = "simulation";
    p.stats = batch_statistics(hit, opt.batches);
    const double ln = std::log(static_cast<double>(n));
    p.extras["log_n_p"] = ln * p.stats.mean;
    p.extras["log_n_p_se"] = ln * p.stats.se_mean;
    rep.points.push_back(std::move(p));
    notify(opt, i);
  }
  rep.fitted["log_n_p_top"] = rep.points.back().extras["log_n_p"];
  rep.fitted["top_decade_variation"] = top_decade_variation(rep, "log_n_p");
  if (ni.long_walk_replicas > 0) {
    rep.fitted["horizon_multiplier"] = ni.horizon_multiplier;
    for (std::uint64_t n : n_grid) {
      const std::uint64_t s = derive_stream({opt.seed, n, 2});
      const auto h = static_cast<std::uint64_t>(std::ceil(ni.horizon_multiplier * static_cast<double>(n)));
      std::vector<double> ok;
      try {
        ok = parallel_map<double>(ni.long_walk_replicas, opt.workers, [&](std::size_t r) {
          auto a = replica_stream(s, r, StreamTag::kWalk);
          auto b = replica_stream(s, r, StreamTag::kSecondWalk);
          auto c = replica_stream(s, r, StreamTag::kThirdWalk);
          return long_walk_avoids(kDim, n, h, a, b, c) ? 1.0 : 0.0;
        });
      } catch (const Interrupted&) {
        rep.partial = true;
        return rep;
      }
      const auto st = batch_statistics(ok, opt.batches);
      const double ln = std::log(static_cast<double>(n));
      for (auto& p : rep.points) {
        if (p.n != n) continue;
        p.extras["long_walk_log_n_p"] = ln * st.mean;
        p.extras["long_walk_log_n_p_se"] = ln * st.se_mean;
      }
    }
  }
  return rep;
}

namespace {

int lindeberg_levels(std::uint64_t n) { return static_cast<int>(std::floor(std::log2(static_cast<double>(n)) / 4.0)); }

}  // namespace

CltDiagnostics run_clt(int dim, std::uint64_t n, std::uint64_t replicas, const GreenOracle& g,
                       const CampaignOptions& opt, const CltOptions& clt) {
  require(dim >= 3, "capacity campaigns need d >= 3");
  if (replicas < clt.min_replicas)
    throw ValidationError("CLT diagnostics need at least " + std::to_string(clt.min_replicas) + " replicas, got " +
                          std::to_string(replicas));
  CltDiagnostics out;
  out.d = dim;
  out.n = n;
  const auto main = sample_capacities("clt", dim, {n}, replicas, g, opt);
  if (main.partial) {
    out.partial = true;
    return out;
  }
  const auto& pt = main.points.front();
  out.replicas = pt.replicas;
  out.backend = pt.backend;
  out.mean = pt.stats.mean;
  out.variance = pt.stats.var;
  for (double v : pt.values) out.standardized.push_back((v - out.mean) / std::sqrt(static_cast<double>(n)));
  out.ks_distance = ks_distance_normal(out.standardized);
  out.ks_pvalue = lilliefors_pvalue(out.ks_distance, out.standardized.size(), clt.ks_simulations,
                                    derive_stream({opt.seed, n, static_cast<std::uint64_t>(StreamTag::kBootstrap)}));
  out.ks_pvalue_simple = kolmogorov_pvalue(out.ks_distance, out.standardized.size());
  out.fourth_moment_ratio = fourth_moment_ratio(pt.values, n);

  const std::uint64_t lr = clt.lindeberg_replicas ? clt.lindeberg_replicas : replicas;
  for (std::uint64_t nl : clt.lindeberg_grid) {
    LindebergPoint lp;
    lp.n = nl;
    lp.levels = lindeberg_levels(nl);
    lp.m = nl >> lp.levels;
    std::vector<double> sample;
    if (lp.m == n && lr == replicas) {
      sample = pt.values;
    } else {
      const auto r = sample_capacities("clt-lindeberg", dim, {lp.m}, lr, g, opt);
      if (r.partial) {
        out.partial = true;
        return out;
      }
      sample = r.points.front().values;
    }
    lp.replicas = sample.size();
    for (double eps : clt.eps) lp.sums.push_back(lindeberg_sum(sample, lp.m, lp.levels, eps));
    lp.fourth_moment_ratio = fourth_moment_ratio(sample, lp.m);
    out.lindeberg.push_back(std::move(lp));
  }
  return out;
}

double intersection_scale(int dim, double n) { return cross_term_scale(dim + 2, n); }

std::size_t half_intersection(const WalkRecord& w2n) {
  const std::uint64_t n = w2n.steps() / 2;
  const auto a = range_window(w2n, 0, n);
  const auto b = range_window(w2n, n, 2 * n);
  return set_intersection(a, b).size();
}

EstimateReport run_conjectures(int dim, const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas,
                               const GreenOracle& g, const CampaignOptions& opt) {
  require(dim >= 3, "capacity campaigns need d >= 3");
  require_grid(n_grid);
  require(replicas >= 2, "need at least two replicas");
  EstimateReport rep;
  rep.campaign = "conjectures";
  rep.d = dim;
  rep.labels["status"] = "exploratory, no pass/fail";
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    const std::uint64_t n = n_grid[i];
    std::vector<double> hits;
    try {
      hits = parallel_map<double>(replicas, opt.workers, [&](std::size_t r) {
        auto rng = replica_stream(derive_stream({opt.seed, n, 3}), r, StreamTag::kWalk);
        return static_cast<double>(half_intersection(sample_walk(dim, 2 * n, rng)));
      });
    } catch (const Interrupted&) {
      rep.partial = true;
      return rep;
    }
    GridPoint p;
    p.d = dim;
    p.n = n;
    p.replicas = hits.size();
    p.seed = derive_stream({opt.seed, n, 3});
    p.backend = "simulation";
    p.stats = batch_statistics(hits, opt.batches);
    p.extras["intersection_mean"] = p.stats.mean;
    p.extras["intersection_ratio"] = p.stats.mean / intersection_scale(dim, static_cast<double>(n));
    rep.points.push_back(std::move(p));
    notify(opt, i);
  }
  if (dim == 4 || dim == 5) {
    const auto caps = sample_capacities("conjectures", dim, n_grid, replicas, g, opt);
    rep.partial = rep.partial || caps.partial;
    for (std::size_t i = 0; i < caps.points.size(); ++i) {
      const auto& c = caps.points[i];
      auto& p = rep.points[i];
      const double n = static_cast<double>(c.n);
      p.extras["cap_mean"] = c.stats.mean;
      if (dim == 5) {
        const double var = std::max(0.0, c.stats.var - c.extras.at("mc_noise_var"));
        p.extras["var_over_nlogn"] = var / (n * std::log(n));
      } else {
        std::vector<double> ratio;
        for (double v : c.values) ratio.push_back(v / c.stats.mean);
        p.extras["normalized_iqr"] = quantile(ratio, 0.75) - quantile(ratio, 0.25);
      }
    }
  }
  return rep;
}

BackendComparison compare_backends(int dim, std::uint64_t n, std::uint64_t replicas, const GreenOracle& g,
                                   const CampaignOptions& opt) {
  require(replicas >= 2, "need at least two replicas");
  CapacityPolicy exact = opt.policy, escape = opt.policy;
  exact.backend = Backend::kExact;
  escape.backend = Backend::kEscape;
  struct Pair {
    double exact = 0, escape = 0, bias = 0;
  };
  const auto rows = parallel_map<Pair>(replicas, opt.workers, [&](std::size_t r) {
    const auto w = replica_walk(dim, n, opt.seed, r);
    const std::uint64_t s = replica_seed(opt.seed, n, r);
    const auto e = capacity_with_policy(w.range, g, escape, s);
    return Pair{capacity_with_policy(w.range, g, exact, s).value, e.value, e.bias_bound};
  });
  BackendComparison c;
  std::vector<double> diff;
  for (const auto& p : rows) {
    c.exact += p.exact;
    c.escape += p.escape;
    c.escape_bias += p.bias;
    diff.push_back(p.escape - p.exact);
  }
  const double R = static_cast<double>(rows.size());
  c.exact /= R;
  c.escape /= R;
  c.escape_bias /= R;
  // paired: both backends see the same walks
  c.escape_se = std::sqrt(sample_variance(diff) / R);
  c.agree = std::abs(c.escape - c.exact) <= 3.0 * c.escape_se + c.escape_bias;
  return c;
}

}  // namespace rangecap
