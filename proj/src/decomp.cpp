#include "rangecap/decomp.hpp"

#include <cmath>
#include <limits>

#include "rangecap/errors.hpp"

namespace rangecap {

namespace {

double cap_or_zero(const SiteSet& A, const GreenOracle& g, const SolverOptions& opt) {
  return A.empty() ? 0.0 : capacity_exact(A, g, opt);
}

void check_pair(const SiteSet& A, const SiteSet& B) {
  require(!A.empty() && !B.empty(), "bound checks need nonempty sets");
  require(A.dim() == B.dim(), "bound checks need sets of the same dimension");
}

}  // namespace

BoundCheck check_lower_bound(const SiteSet& A, const SiteSet& B, const GreenOracle& g, const SolverOptions& opt) {
  check_pair(A, B);
  BoundCheck c;
  c.cap_a = capacity_exact(A, g, opt);
  c.cap_b = capacity_exact(B, g, opt);
  c.cap_union = capacity_exact(set_union(A, B), g, opt);
  c.coupling = cross_term(A, B, g).value;
  c.lhs = c.cap_union;
  c.rhs = c.cap_a + c.cap_b - 2.0 * c.coupling;
  c.slack = c.lhs - c.rhs;
  return c;
}

BoundCheck check_upper_bound(const SiteSet& A, const SiteSet& B, const GreenOracle& g, const SolverOptions& opt) {
  check_pair(A, B);
  BoundCheck c;
  c.cap_a = capacity_exact(A, g, opt);
  c.cap_b = capacity_exact(B, g, opt);
  c.cap_union = capacity_exact(set_union(A, B), g, opt);
  c.coupling = cap_or_zero(set_intersection(A, B), g, opt);
  c.lhs = c.cap_union;
  c.rhs = c.cap_a + c.cap_b - c.coupling;
  c.slack = c.rhs - c.lhs;
  return c;
}

std::vector<std::uint64_t> dyadic_times(std::uint64_t n, int levels) {
  require(levels >= 0 && levels < 63, "levels must be in [0, 62]");
  require((std::uint64_t{1} << levels) <= n || (levels == 0), "dyadic split needs 2^L <= n");
  std::vector<std::uint64_t> t{0, n};
  for (int l = 0; l < levels; ++l) {
    std::vector<std::uint64_t> next;
    next.reserve(2 * t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      next.push_back(t[i]);
      next.push_back(t[i] + (t[i + 1] - t[i]) / 2);
    }
    next.push_back(n);
    t = std::move(next);
  }
  return t;
}

SandwichReport dyadic_decompose(const WalkRecord& w, int levels, const GreenOracle& g, const DecompOptions& opt) {
  const std::uint64_t n = w.steps();
  require(levels >= 0, "levels must be nonnegative");
  require(levels < 63 && (std::uint64_t{1} << levels) <= std::max<std::uint64_t>(n, 1),
          "dyadic split needs 2^L <= n (L=" + std::to_string(levels) + ", n=" + std::to_string(n) + ")");
  SandwichReport rep;
  rep.levels = levels;
  rep.tolerance = opt.tolerance;
  rep.middle = capacity_exact(w.range, g, opt.solver);

  const auto t = dyadic_times(n, levels);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    rep.piece_starts.push_back(t[i]);
    rep.piece_lengths.push_back(t[i + 1] - t[i]);
    rep.piece_capacities.push_back(capacity_exact(range_window_recentered(w, t[i], t[i + 1]), g, opt.solver));
    rep.upper += rep.piece_capacities.back();
  }
  double errors = 0;
  for (int l = 1; l <= levels; ++l) {
    // level l - 1 blocks are unions of 2^(levels - l + 1) consecutive pieces
    const std::size_t stride = std::size_t{1} << (levels - l + 1);
    std::vector<double> row;
    for (std::size_t b = 0; b + stride < t.size(); b += stride) {
      const std::uint64_t a = t[b], mid = t[b + stride / 2], e = t[b + stride];
      const auto ct = cross_term(range_window(w, a, mid), range_window(w, mid, e), g, opt.cross);
      rep.cross_subsampled = rep.cross_subsampled || ct.subsampled;
      row.push_back(ct.value);
      errors += ct.value;
    }
    rep.level_errors.push_back(std::move(row));
  }
  rep.lower = rep.upper - 2.0 * errors;
  return rep;
}

double cross_term_scale(int dim, double n) {
  if (dim == 5) return std::sqrt(n);
  if (dim == 6) return std::log(n);
  if (dim >= 7) return 1.0;
  return std::numeric_limits<double>::quiet_NaN();
}

MomentEstimate cross_term_moment(int dim, std::uint64_t n, int order, std::uint64_t replicas, const GreenOracle& g,
                                 std::uint64_t seed, const CrossTermOptions& opt) {
  require(order >= 1, "moment order must be >= 1");
  require(replicas >= 1, "need at least one replica");
  require(dim == g.dim(), "dimension mismatch between request and Green oracle");
  MomentEstimate est;
  est.dim = dim;
  est.n = n;
  est.order = order;
  est.replicas = replicas;
  std::vector<double> powers;
  for (std::uint64_t r = 0; r < replicas; ++r) {
    auto r1 = replica_stream(seed, r, StreamTag::kWalk);
    auto r2 = replica_stream(seed, r, StreamTag::kSecondWalk);
    const auto w1 = sample_walk(dim, n, r1);
    const auto w2 = sample_walk(dim, n, r2);
    CrossTermOptions o = opt;
    o.seed = derive_stream({seed, r});
    const double x = cross_term(w1.range, w2.range, g, o).value;
    est.cross_terms.push_back(x);
    powers.push_back(std::pow(x, order));
  }
  const double R = static_cast<double>(replicas);
  for (double p : powers) est.mean += p;
  est.mean /= R;
  double m2 = 0;
  for (double p : powers) m2 += (p - est.mean) * (p - est.mean);
  const double var = replicas > 1 ? m2 / (R - 1) : 0.0;
  est.standard_error = std::sqrt(var / R);
  est.ratio = est.mean / std::pow(cross_term_scale(dim, static_cast<double>(n)), order);
  return est;
}

std::vector<MomentEstimate> cross_term_moment_campaign(int dim, const std::vector<std::uint64_t>& n_grid, int order,
                                                       std::uint64_t replicas, const GreenOracle& g,
                                                       std::uint64_t seed, const CrossTermOptions& opt) {
  std::vector<MomentEstimate> out;
  for (std::uint64_t n : n_grid) out.push_back(cross_term_moment(dim, n, order, replicas, g, derive_stream({seed, n}), opt));
  return out;
}

}  // namespace rangecap
