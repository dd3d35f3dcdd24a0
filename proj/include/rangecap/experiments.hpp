#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "rangecap/capacity.hpp"
#include "rangecap/green.hpp"
#include "rangecap/lattice.hpp"
#include "rangecap/stats.hpp"

namespace rangecap {

/// Raised between work items once an interrupt has been requested.
class Interrupted : public std::runtime_error {
 public:
  Interrupted() : std::runtime_error("interrupted") {}
};

/// Process-wide stop flag, set from the signal handler.
std::atomic<bool>& stop_requested();

/// Evaluates f(0..count-1) on `workers` threads; results come back in index
/// order, so the worker count never changes them. The first exception (by
/// index) is rethrown after all threads finish.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, int workers, F&& f) {
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      if (stop_requested().load()) {
        errors[i] = std::make_exception_ptr(Interrupted());
        continue;
      }
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (w == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < w; ++t) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

enum class Backend { kAuto, kExact, kEscape };
Backend parse_backend(const std::string& name);
std::string backend_name(Backend b);

/// How capacities of sampled ranges are computed.
struct CapacityPolicy {
  Backend backend = Backend::kAuto;
  /// auto: direct solve up to direct_max sites, dense iterative up to iterative_max, escape beyond
  std::size_t direct_max = 2000;
  std::size_t iterative_max = 10000;
  std::uint64_t escape_site_samples = 4000;
  /// ball radius factor for escape runs; 0 picks the per-dimension default
  double escape_radius_factor = 0;
};

/// Escape ball radius factor used when none is configured.
double default_escape_radius_factor(int dim);

struct CapacityValue {
  double value = 0;
  double standard_error = 0;
  double bias_bound = 0;
  /// "direct", "iterative" or "escape"
  std::string backend;
};

CapacityValue capacity_with_policy(const SiteSet& A, const GreenOracle& g, const CapacityPolicy& policy,
                                   std::uint64_t seed);

struct CampaignOptions {
  std::uint64_t seed = 1;
  int workers = 1;
  CapacityPolicy policy;
  std::size_t batches = kDefaultBatches;
  /// called after each finished grid point
  std::function<void(std::size_t)> progress;
};

struct GridPoint {
  int d = 0;
  std::uint64_t n = 0;
  std::uint64_t replicas = 0;
  BatchStats stats;
  std::string backend;
  /// mean over replicas of the per-replica upward bias bound (0 for exact solves)
  double bias_bound = 0;
  /// mean over replicas of the per-replica Monte Carlo standard error
  double mc_se = 0;
  std::uint64_t seed = 0;
  std::vector<double> values;
  /// Derived per-point quantities (ratios, running minima, ...), reported in JSON and plot files.
  std::map<std::string, double> extras;
};

struct EstimateReport {
  std::string campaign;
  int d = 0;
  std::vector<GridPoint> points;
  /// fitted constants and their intervals
  std::map<std::string, double> fitted;
  /// qualitative labels such as "slow-convergence"
  std::map<std::string, std::string> labels;
  bool partial = false;
};

/// Seed of replica r at grid point n of a campaign.
std::uint64_t replica_seed(std::uint64_t master, std::uint64_t n, std::uint64_t r);
/// The walk of replica r at grid point n.
WalkRecord replica_walk(int dim, std::uint64_t n, std::uint64_t master, std::uint64_t r);

/// Samples cap(R_n) over the grid. Used by the LLN, variance and d = 4 campaigns.
EstimateReport sample_capacities(const std::string& campaign, int dim, const std::vector<std::uint64_t>& n_grid,
                                 std::uint64_t replicas, const GreenOracle& g, const CampaignOptions& opt);

EstimateReport run_lln(int dim, const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, const GreenOracle& g,
                       const CampaignOptions& opt);
EstimateReport run_variance(int dim, const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas,
                            const GreenOracle& g, const CampaignOptions& opt);
EstimateReport run_d4(const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, const GreenOracle& g,
                      const CampaignOptions& opt);

struct D3Options {
  /// Jensen inequality tolerance in Monte Carlo standard errors (exact solves use 1e-8 relative)
  double jensen_se_allowance = 3.0;
};
EstimateReport run_d3(const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas, const GreenOracle& g,
                      const CampaignOptions& opt, const D3Options& d3 = {});

/// n^2 / sum_{k, k' < n} G(S_k, S_k'): the capacity lower bound from the occupation measure.
double jensen_functional(const WalkRecord& w, const GreenOracle& g);

struct NonintersectionOptions {
  /// replicas for the variant with an unbounded first walk (0 skips it)
  std::uint64_t long_walk_replicas = 0;
  /// that walk is followed for horizon_multiplier * n steps
  double horizon_multiplier = 16;
};
EstimateReport run_nonintersection(const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas,
                                   const CampaignOptions& opt, const NonintersectionOptions& ni = {});

/// First time t >= 1 at which R1[1,t] meets R2[0,t] u R3[0,t] or S3 returns to 0,
/// capped at horizon + 1. The non-intersection event at n holds iff the result exceeds n.
std::uint64_t first_intersection_time(int dim, std::uint64_t horizon, StreamRng& w1, StreamRng& w2, StreamRng& w3);

struct LindebergPoint {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  int levels = 0;
  std::vector<LindebergValue> sums;
  double fourth_moment_ratio = 0;
  std::uint64_t replicas = 0;
};

struct CltDiagnostics {
  int d = 0;
  std::uint64_t n = 0;
  std::uint64_t replicas = 0;
  /// (cap(R_n) - mean) / sqrt(n)
  std::vector<double> standardized;
  double mean = 0;
  double variance = 0;
  double ks_distance = 0;
  /// composite-test p-value (parametric bootstrap)
  double ks_pvalue = 0;
  /// limiting Kolmogorov p-value, which ignores the fitted parameters
  double ks_pvalue_simple = 0;
  double fourth_moment_ratio = 0;
  std::vector<LindebergPoint> lindeberg;
  std::string backend;
  bool partial = false;
};

struct CltOptions {
  std::vector<double> eps = {0.1, 0.2, 0.5, 1.0};
  /// Horizons n of the Lindeberg curve; each uses 2^L blocks of length n / 2^L, L = log2(n) / 4.
  std::vector<std::uint64_t> lindeberg_grid = {256, 4096, 65536};
  std::uint64_t lindeberg_replicas = 0;  // 0: same as the main run
  std::size_t ks_simulations = 2000;
  std::uint64_t min_replicas = 200;
};

CltDiagnostics run_clt(int dim, std::uint64_t n, std::uint64_t replicas, const GreenOracle& g,
                       const CampaignOptions& opt, const CltOptions& clt = {});

/// Exploratory measurements; no pass/fail.
EstimateReport run_conjectures(int dim, const std::vector<std::uint64_t>& n_grid, std::uint64_t replicas,
                               const GreenOracle& g, const CampaignOptions& opt);

/// f_{d+2}(n): conjectured order of E|R[0,n] n R[n,2n]| in dimension d.
double intersection_scale(int dim, double n);

/// |R[0,n] n R[n,2n]| for one walk of 2n steps.
std::size_t half_intersection(const WalkRecord& w2n);

struct BackendComparison {
  double exact = 0;
  double escape = 0;
  double escape_se = 0;
  double escape_bias = 0;
  bool agree = false;
};
/// Exact and escape backends on the mean over replicas at one grid point.
BackendComparison compare_backends(int dim, std::uint64_t n, std::uint64_t replicas, const GreenOracle& g,
                                   const CampaignOptions& opt);

}  // namespace rangecap
