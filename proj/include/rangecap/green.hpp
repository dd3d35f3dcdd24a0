#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rangecap/lattice_point.hpp"

namespace rangecap {

double default_green_tolerance(int dim);
/// Table radius used when none is configured.
int default_cache_radius(int dim);

/// G(0,x) for the simple random walk on Z^d, absolute error <= tol.
/// Throws ValidationError for d < 3 and NumericalError if tol cannot be met.
double green_exact(int dim, const LatticePoint& x, double tol);

/// Quadrature outcome for a single displacement.
struct GreenQuadrature {
  double value = 0;
  double error_estimate = 0;
  int refinements = 0;
};
GreenQuadrature green_quadrature(int dim, const LatticePoint& x, double tol);

/// Far-field model |x|^{2-d} (c + c_s / |x|^2 + c_q sum_i x_i^4 / |x|^6).
struct TailModel {
  double c = 0, c_s = 0, c_q = 0;
};

enum class TailFit {
  /// c |x|^{2-d} only.
  kPowerLaw,
  /// Adds the two second-order lattice terms (needs radius >= 6).
  kCorrected,
};

/// Cached Green kernel: exact values on the box |x|_inf <= radius (one entry per
/// symmetry orbit), fitted tail model outside it.
class GreenOracle {
 public:
  static constexpr double kDefaultResidualGate = 0.02;

  GreenOracle() = default;
  static GreenOracle build(int dim, int radius, double tol, double residual_gate = kDefaultResidualGate,
                           TailFit fit = TailFit::kCorrected);
  /// Table with default radius and tolerance for `dim`.
  static GreenOracle build_default(int dim);

  int dim() const noexcept { return dim_; }
  int radius() const noexcept { return radius_; }
  double tolerance() const noexcept { return tol_; }
  /// Leading coefficient c of the tail model.
  double tail_constant() const noexcept { return tail_.c; }
  const TailModel& tail_model() const noexcept { return tail_; }
  double calibration_residual() const noexcept { return residual_; }
  /// C such that G(x) <= C / (1 + |x|^{d-2}) over the table and the tail.
  double domination_constant() const noexcept { return dom_constant_; }
  double quadrature_error() const noexcept { return quad_error_; }
  std::size_t table_size() const noexcept { return table_.size(); }
  const std::vector<double>& table() const noexcept { return table_; }

  double value(const Coord* x) const noexcept;
  double value(const LatticePoint& x) const noexcept { return value(x.data()); }
  double value(const LatticePoint& x, const LatticePoint& y) const noexcept;
  double origin_value() const noexcept { return table_[0]; }
  /// G(x) - tail(x) inside the box (tail(0) taken as 0), zero outside.
  double correction(const Coord* x) const noexcept;

  /// Tail model at x; 0 at the origin.
  double tail(const Coord* x) const noexcept;
  /// sup of G over displacements with Euclidean norm >= r.
  double envelope(double r) const noexcept;

  /// Orbit representative of table slot `index`: coordinates sorted descending.
  std::vector<int> orbit_representative(std::size_t index) const;

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static GreenOracle load(std::istream& in);
  static GreenOracle load_file(const std::string& path);

  friend bool operator==(const GreenOracle& a, const GreenOracle& b) {
    return a.dim_ == b.dim_ && a.radius_ == b.radius_ && a.tol_ == b.tol_ && a.tail_.c == b.tail_.c &&
           a.tail_.c_s == b.tail_.c_s && a.tail_.c_q == b.tail_.c_q &&
           a.table_ == b.table_;
  }

 private:
  void init_indexing();
  void finalize(double residual_gate, bool calibrate, TailFit fit = TailFit::kCorrected);
  double tail_sq(double s, double s4) const noexcept;
  /// sup of the tail model over |x| >= r.
  double tail_bound(double r) const noexcept;
  std::size_t index_of_sorted(const int* a) const noexcept;

  int dim_ = 0;
  int radius_ = 0;
  double tol_ = 0;
  TailModel tail_;
  double residual_ = 0;
  double dom_constant_ = 0;
  double quad_error_ = 0;
  std::vector<double> table_;
  std::vector<double> corr_table_;  // G - tail, with tail(0) = 0
  // binom_[n * (dim+1) + k] = C(n, k)
  std::vector<std::size_t> binom_;
  std::vector<double> env_norms_;
  std::vector<double> env_suffix_max_;
};

/// Monte Carlo estimate of the truncated kernel G_n(0,x) = E sum_{k<n} 1{S_k = x}.
struct TruncatedGreenEstimate {
  double mean = 0;
  double standard_error = 0;
  std::uint64_t replicas = 0;
  std::uint64_t horizon = 0;
};
TruncatedGreenEstimate green_truncated(int dim, const LatticePoint& x, std::uint64_t n, std::uint64_t replicas,
                                       std::uint64_t seed);

}  // namespace rangecap
