#include "rangecap/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rangecap/errors.hpp"
#include "rangecap/rng.hpp"

namespace rangecap {

double sample_mean(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double quantile(std::vector<double> x, double q) {
  require(!x.empty(), "quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

BatchStats batch_statistics(const std::vector<double>& x, std::size_t batches) {
  BatchStats s;
  s.count = x.size();
  s.mean = sample_mean(x);
  s.var = sample_variance(x);
  if (x.size() < 4) return s;
  std::size_t B = std::min(batches, x.size() / 2);
  s.batches = B;
  std::vector<double> means, vars;
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t lo = b * x.size() / B, hi = (b + 1) * x.size() / B;
    const std::vector<double> part(x.begin() + lo, x.begin() + hi);
    means.push_back(sample_mean(part));
    vars.push_back(sample_variance(part));
  }
  s.se_mean = std::sqrt(sample_variance(means) / static_cast<double>(B));
  s.se_var = std::sqrt(sample_variance(vars) / static_cast<double>(B));
  return s;
}

double t95(std::size_t dof) {
  if (dof == 0) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

LineFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fit needs at least two points");
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  const double ym = sample_mean(y);
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += (y[i] - f.slope * x[i]) * (y[i] - f.slope * x[i]);
    ss_tot += (y[i] - ym) * (y[i] - ym);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  const std::size_t dof = x.size() - 1;
  f.se_slope = std::sqrt(ss_res / static_cast<double>(dof) / sxx);
  const double t = t95(dof);
  f.ci_low = f.slope - t * f.se_slope;
  f.ci_high = f.slope + t * f.se_slope;
  return f;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
  require(x.size() == y.size() && x.size() >= 3, "line fit needs at least three points");
  require(w.empty() || w.size() == x.size(), "weight count does not match points");
  const std::size_t n = x.size();
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double xm = sx / sw, ym = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - xm) * (x[i] - xm);
    sxy += wi * (x[i] - xm) * (y[i] - ym);
  }
  LineFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  double chi2 = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - f.intercept - f.slope * x[i];
    chi2 += wi * r * r;
    ss_tot += wi * (y[i] - ym) * (y[i] - ym);
  }
  f.r2 = ss_tot > 0 ? 1.0 - chi2 / ss_tot : 1.0;
  const std::size_t dof = n - 2;
  const double scale = w.empty() ? chi2 / static_cast<double>(dof) : std::max(1.0, chi2 / static_cast<double>(dof));
  f.se_slope = std::sqrt(scale / sxx);
  const double t = t95(dof);
  f.ci_low = f.slope - t * f.se_slope;
  f.ci_high = f.slope + t * f.se_slope;
  return f;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double ks_sorted(std::vector<double>& x) {
  const double m = sample_mean(x);
  const double sd = std::sqrt(sample_variance(x));
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = normal_cdf((x[i] - m) / sd);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

double ks_distance_normal(const std::vector<double>& x) {
  require(x.size() >= 3, "KS distance needs at least three points");
  std::vector<double> y = x;
  return ks_sorted(y);
}

double kolmogorov_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double p = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    p += term;
    if (std::abs(term) < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double lilliefors_pvalue(double d, std::size_t n, std::size_t simulations, std::uint64_t seed) {
  require(simulations >= 1, "need at least one bootstrap simulation");
  auto rng = StreamRng::for_path(seed, {static_cast<std::uint64_t>(StreamTag::kBootstrap)});
  boost::random::normal_distribution<double> normal;
  std::vector<double> x(n);
  std::size_t exceed = 0;
  for (std::size_t s = 0; s < simulations; ++s) {
    for (auto& v : x) v = normal(rng);
    if (ks_sorted(x) >= d) ++exceed;
  }
  return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(simulations));
}

LindebergValue lindeberg_sum(const std::vector<double>& block_sums, std::uint64_t m, int levels, double eps) {
  require(block_sums.size() >= 2, "Lindeberg sum needs a sample");
  const double blocks = std::ldexp(1.0, levels);
  const double n = blocks * static_cast<double>(m);
  const double mean = sample_mean(block_sums);
  const double sd = std::sqrt(sample_variance(block_sums));
  LindebergValue v;
  v.eps = eps;
  const double cut_raw = eps * std::sqrt(n);
  const double cut_norm = eps * std::sqrt(blocks);
  double raw = 0, norm = 0;
  for (double x : block_sums) {
    const double y = x - mean;
    if (std::abs(y) > cut_raw) raw += y * y;
    const double z = sd > 0 ? y / sd : 0.0;
    if (std::abs(z) > cut_norm) norm += z * z;
  }
  const double k = static_cast<double>(block_sums.size());
  v.raw = blocks / n * raw / k;
  v.normalized = norm / k;
  return v;
}

double fourth_moment_ratio(const std::vector<double>& x, std::uint64_t m) {
  const double mean = sample_mean(x);
  double s = 0;
  for (double v : x) s += std::pow(v - mean, 4);
  const double md = static_cast<double>(m);
  return s / static_cast<double>(x.size()) / (md * md);
}

}  // namespace rangecap
