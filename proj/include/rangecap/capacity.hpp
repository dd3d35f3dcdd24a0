#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rangecap/green.hpp"
#include "rangecap/lattice.hpp"
#include "rangecap/point_key.hpp"
#include "rangecap/rng.hpp"
#include "rangecap/site_set.hpp"

namespace rangecap {

struct EquilibriumResult {
  std::vector<double> measure;
  double capacity = 0;
  /// max_x |sum_y G(x,y) e(y) - 1| after clamping.
  double residual = 0;
  std::string method;
  int iterations = 0;
  /// Entries in [-clamp, 0) that were set to zero.
  std::size_t clamped = 0;
};

struct SolverOptions {
  /// Relative residual target of the iterative solver.
  double tol = 1e-8;
  std::size_t direct_max = 2000;
  /// Above this size the iterative solver runs matrix-free.
  std::size_t dense_max = 10000;
  int max_iterations = 5000;
  double clamp = 1e-9;
};

/// Solves G_A e = 1 on A. Throws NumericalError when the solver stalls or when
/// an entry of e is below -clamp.
EquilibriumResult equilibrium_measure(const SiteSet& A, const GreenOracle& g, const SolverOptions& opt = {});
double capacity_exact(const SiteSet& A, const GreenOracle& g, const SolverOptions& opt = {});

struct VariationalResult {
  /// 1 / (nu^T G nu): a lower bound on cap(A) for the returned nu.
  double lower_bound = 0;
  /// Upper bound implied by the duality gap (infinite until the gap is small).
  double upper_bound = 0;
  std::vector<double> nu;
  int iterations = 0;
  /// Relative gap bound on (nu^T G nu - min) / nu^T G nu.
  double relative_gap = 0;
  bool converged = false;
};

/// Pairwise conditional gradient on the simplex with exact line search.
VariationalResult capacity_variational(const SiteSet& A, const GreenOracle& g, int max_iterations, double tol);

/// Random walk started inside A and stopped when it re-enters A, leaves the
/// ball B(center, rho), or (optionally) exhausts a step budget. Far from A the
/// walk advances by exact multi-step jumps: when no site of A is within sup
/// distance k, the k-step displacement is drawn directly.
class EscapeWalker {
 public:
  enum class Outcome { kReturned, kEscaped, kHorizon };

  EscapeWalker(const SiteSet& A, const std::array<double, kMaxDim>& center, double rho, std::uint64_t horizon = 0);

  Outcome run(const LatticePoint& start, StreamRng& rng) const;
  /// Leap size available at p (0 if p may be adjacent to A).
  std::uint64_t safe_leap(const Coord* p) const noexcept;
  std::size_t levels() const noexcept { return levels_.size(); }

 private:
  struct Level {
    int shift;
    PointKeySet cells;
  };
  int dim_;
  PackedPointSet members_;
  std::array<double, kMaxDim> center_;
  double rho2_;
  std::uint64_t horizon_;
  std::vector<Level> levels_;  // coarsest first
};

/// Draws the displacement of k simple-random-walk steps and adds it to p.
void add_k_step_displacement(Coord* p, int dim, std::uint64_t k, StreamRng& rng);

struct EscapeOptions {
  std::uint64_t trials_per_site = 1000;
  /// Ball radius about the centroid; 0 selects radius_factor * rad(A) + 50.
  double radius = 0;
  double radius_factor = 2.0;
  /// When nonzero, draw this many sites uniformly (with replacement) and run one
  /// trial from each instead of trials_per_site from every site.
  std::uint64_t site_samples = 0;
  std::uint64_t seed = 0;
};

struct EscapeEstimate {
  double capacity = 0;
  double standard_error = 0;
  /// Upper bound on the upward bias from stopping at the ball boundary.
  double bias_bound = 0;
  double radius = 0;
  std::uint64_t trials = 0;
  std::uint64_t escapes = 0;
  bool site_sampled = false;
};

EscapeEstimate capacity_escape_mc(const SiteSet& A, const GreenOracle& g, const EscapeOptions& opt);

/// Bias bound for an escape estimate `cap_hat` of A with ball radius rho about `center`.
double escape_bias_bound(const SiteSet& A, const GreenOracle& g, const std::array<double, kMaxDim>& center, double rho,
                         double cap_hat);

struct RepresentationEstimate {
  double capacity = 0;
  double standard_error = 0;
  double bias_bound = 0;
  std::uint64_t fresh_times = 0;
  std::uint64_t trials = 0;
  std::uint64_t horizon_hits = 0;
  /// Trials cut by the step budget count as avoidance, so the raw estimate is biased upward.
  std::string bias_direction = "upward";
};

/// cap(R_n) as the sum over fresh times k of the avoidance probability of an
/// independent walk launched from S_k.
RepresentationEstimate capacity_representation_mc(const WalkRecord& w, std::uint64_t aux_horizon,
                                                  std::uint64_t trials, const GreenOracle& g, std::uint64_t seed,
                                                  double radius_factor = 2.0);

}  // namespace rangecap
