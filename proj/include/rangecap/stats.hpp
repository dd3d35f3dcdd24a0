#pragma once

#include <cstdint>
#include <vector>

namespace rangecap {

/// Sample moments with standard errors from contiguous batches.
struct BatchStats {
  std::size_t count = 0;
  std::size_t batches = 0;
  double mean = 0;
  /// unbiased sample variance
  double var = 0;
  double se_mean = 0;
  double se_var = 0;
};

inline constexpr std::size_t kDefaultBatches = 20;

/// Splits x into `batches` contiguous groups (sizes differ by at most one).
/// Fewer batches are used when x has fewer than 2 * batches entries.
BatchStats batch_statistics(const std::vector<double>& x, std::size_t batches = kDefaultBatches);

double sample_mean(const std::vector<double>& x);
double sample_variance(const std::vector<double>& x);
double quantile(std::vector<double> x, double q);

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double se_slope = 0;
  double ci_low = 0, ci_high = 0;  // 95%
  double r2 = 0;
  std::size_t points = 0;
};

/// y = slope * x by least squares; r2 is the centred coefficient 1 - SS_res / SS_tot.
LineFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y);
/// y = intercept + slope * x, weighted by w (empty means equal weights). The slope
/// error is scaled up by sqrt(chi^2 / dof) when the scatter exceeds the weights.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w = {});

/// Two-sided Student t quantile for a 95% interval.
double t95(std::size_t dof);

/// sup |F_n - Phi((x - mean) / sd)| with mean and sd estimated from the sample.
double ks_distance_normal(const std::vector<double>& x);
/// Kolmogorov limiting tail P(K > sqrt(n) D) (no correction for estimated parameters).
double kolmogorov_pvalue(double d, std::size_t n);
/// p-value of the composite normality test by parametric bootstrap of the KS distance.
double lilliefors_pvalue(double d, std::size_t n, std::size_t simulations, std::uint64_t seed);

/// Lindeberg sums for a triangular array of 2^L i.i.d. blocks, each distributed as
/// the supplied sample of block sums of length m (n = m 2^L).
struct LindebergValue {
  double eps = 0;
  /// (2^L / n) E[Y^2 1{|Y| > eps sqrt(n)}], Y the centred block sum
  double raw = 0;
  /// the same with Y and the threshold scaled by the total standard deviation
  double normalized = 0;
};
LindebergValue lindeberg_sum(const std::vector<double>& block_sums, std::uint64_t m, int levels, double eps);

/// E[Y^4] / m^2 for the centred sample Y.
double fourth_moment_ratio(const std::vector<double>& x, std::uint64_t m);

}  // namespace rangecap
