#pragma once

#include <cstdint>
#include <vector>

#include "rangecap/capacity.hpp"
#include "rangecap/green.hpp"
#include "rangecap/kernel.hpp"
#include "rangecap/lattice.hpp"
#include "rangecap/site_set.hpp"

namespace rangecap {

/// One instance of a two-set capacity inequality; slack = lhs - rhs for the
/// lower bound and rhs - lhs for the upper bound, so a valid check has slack >= -tol.
struct BoundCheck {
  double lhs = 0;
  double rhs = 0;
  double slack = 0;
  double cap_a = 0, cap_b = 0, cap_union = 0;
  /// cross term (lower bound) or cap(A n B) (upper bound)
  double coupling = 0;
};

/// cap(A u B) >= cap(A) + cap(B) - 2 sum_{A x B} G.
BoundCheck check_lower_bound(const SiteSet& A, const SiteSet& B, const GreenOracle& g, const SolverOptions& opt = {});
/// cap(A u B) <= cap(A) + cap(B) - cap(A n B), cap(empty) = 0.
BoundCheck check_upper_bound(const SiteSet& A, const SiteSet& B, const GreenOracle& g, const SolverOptions& opt = {});

struct DecompOptions {
  SolverOptions solver;
  CrossTermOptions cross;
  double tolerance = 1e-8;
};

struct SandwichReport {
  int levels = 0;
  double lower = 0;
  double middle = 0;
  double upper = 0;
  /// level_errors[l - 1][i]: cross term between the halves of block i at level l - 1.
  std::vector<std::vector<double>> level_errors;
  std::vector<std::uint64_t> piece_starts;
  std::vector<std::uint64_t> piece_lengths;
  std::vector<double> piece_capacities;
  double tolerance = 0;
  bool cross_subsampled = false;

  double slack_low() const noexcept { return middle - lower; }
  double slack_high() const noexcept { return upper - middle; }
  bool holds() const noexcept { return slack_low() >= -tolerance && slack_high() >= -tolerance; }
};

/// Dyadic block boundaries of [0, n] at depth L: block [a, b] splits at a + floor((b - a) / 2).
std::vector<std::uint64_t> dyadic_times(std::uint64_t n, int levels);

SandwichReport dyadic_decompose(const WalkRecord& w, int levels, const GreenOracle& g, const DecompOptions& opt = {});

/// Growth profile of the cross-term moments: sqrt(n) in d = 5, log n in d = 6, 1 for d >= 7.
double cross_term_scale(int dim, double n);

struct MomentEstimate {
  int dim = 0;
  std::uint64_t n = 0;
  int order = 1;
  double mean = 0;
  double standard_error = 0;
  std::uint64_t replicas = 0;
  /// mean / scale(n)^order (NaN where the scale is undefined)
  double ratio = 0;
  std::vector<double> cross_terms;
};

/// E[(sum_{x in R_n} sum_{y in R'_n} G(x, y))^k] for two independent walks from the origin.
MomentEstimate cross_term_moment(int dim, std::uint64_t n, int order, std::uint64_t replicas, const GreenOracle& g,
                                 std::uint64_t seed, const CrossTermOptions& opt = {});

std::vector<MomentEstimate> cross_term_moment_campaign(int dim, const std::vector<std::uint64_t>& n_grid, int order,
                                                       std::uint64_t replicas, const GreenOracle& g,
                                                       std::uint64_t seed, const CrossTermOptions& opt = {});

}  // namespace rangecap
