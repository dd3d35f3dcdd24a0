#include "rangecap/capacity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "rangecap/errors.hpp"
#include "rangecap/kernel.hpp"

namespace rangecap {

namespace {

void check_capacity_input(const SiteSet& A, const GreenOracle& g) {
  require(!A.empty(), "capacity of the empty set is not computed; A must be nonempty");
  if (A.dim() < 3) throw ValidationError("capacity needs d >= 3, got d=" + std::to_string(A.dim()));
  require(A.dim() == g.dim(), "dimension mismatch between site set and Green oracle");
}

// Conjugate gradients for an SPD operator; returns iterations used.
template <class Apply>
int conjugate_gradient(Apply&& apply, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol, int max_iter) {
  const Eigen::Index n = b.size();
  x.setZero(n);
  Eigen::VectorXd r = b, p = b, q(n);
  double rr = r.squaredNorm();
  const double target = tol * tol * b.squaredNorm();
  for (int it = 1; it <= max_iter; ++it) {
    apply(p, q);
    const double alpha = rr / p.dot(q);
    x += alpha * p;
    r -= alpha * q;
    const double rr_new = r.squaredNorm();
    if (rr_new <= target) return it;
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  throw NumericalError("conjugate gradient did not reach relative residual " + std::to_string(tol) + " in " +
                       std::to_string(max_iter) + " iterations");
}

// Entries below -(clamp + solve error) cannot come from the solver and point at
// the kernel table. The solve error bound uses lambda_min(G_A) >= 1/2.
std::size_t clamp_measure(Eigen::VectorXd& e, const Eigen::VectorXd& ge, double clamp) {
  const double slack = clamp + 2.0 * (ge.array() - 1.0).matrix().norm();
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (e[i] < 0) {
      if (e[i] < -slack)
        throw NumericalError("equilibrium measure entry " + std::to_string(e[i]) +
                             " is negative beyond the clamp; the Green table is not accurate enough");
      e[i] = 0;
      ++clamped;
    }
  }
  return clamped;
}

}  // namespace

EquilibriumResult equilibrium_measure(const SiteSet& A, const GreenOracle& g, const SolverOptions& opt) {
  check_capacity_input(A, g);
  const std::size_t n = A.size();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd e(n), ge(n);
  EquilibriumResult res;
  if (n <= opt.dense_max) {
    const Eigen::MatrixXd M = green_matrix(g, A);
    if (n <= opt.direct_max) {
      Eigen::LLT<Eigen::MatrixXd> llt(M);
      if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorisation of the Green matrix failed");
      e = llt.solve(ones);
      res.method = "cholesky";
      res.iterations = 1;
    } else {
      res.iterations = conjugate_gradient(
          [&](const Eigen::VectorXd& p, Eigen::VectorXd& q) { q.noalias() = M.selfadjointView<Eigen::Lower>() * p; },
          ones, e, opt.tol, opt.max_iterations);
      res.method = "cg-dense";
    }
    ge.noalias() = M * e;
    res.clamped = clamp_measure(e, ge, opt.clamp);
    if (res.clamped) ge.noalias() = M * e;
  } else {
    const GreenOperator op(g, A);
    res.iterations = conjugate_gradient([&](const Eigen::VectorXd& p, Eigen::VectorXd& q) { op.apply(p.data(), q.data()); },
                                        ones, e, opt.tol, opt.max_iterations);
    res.method = "cg-matrix-free";
    op.apply(e.data(), ge.data());
    res.clamped = clamp_measure(e, ge, opt.clamp);
    if (res.clamped) op.apply(e.data(), ge.data());
  }
  res.residual = (ge - ones).cwiseAbs().maxCoeff();
  res.measure.assign(e.data(), e.data() + n);
  res.capacity = e.sum();
  return res;
}

double capacity_exact(const SiteSet& A, const GreenOracle& g, const SolverOptions& opt) {
  return equilibrium_measure(A, g, opt).capacity;
}

VariationalResult capacity_variational(const SiteSet& A, const GreenOracle& g, int max_iterations, double tol) {
  check_capacity_input(A, g);
  require(max_iterations >= 1, "variational solver needs at least one iteration");
  require(tol > 0, "variational tolerance must be positive");
  const std::size_t n = A.size();
  const bool dense = n <= 4000;
  Eigen::MatrixXd M;
  if (dense) M = green_matrix(g, A);
  auto entry = [&](std::size_t i, std::size_t j) { return dense ? M(i, j) : g.value(A[i], A[j]); };

  std::vector<double> nu(n, 1.0 / n), grad(n);
  auto recompute = [&] {
    if (dense) {
      Eigen::Map<Eigen::VectorXd>(grad.data(), n).noalias() = M * Eigen::Map<const Eigen::VectorXd>(nu.data(), n);
    } else {
      const GreenOperator op(g, A);
      op.apply(nu.data(), grad.data());
    }
    double q = 0;
    for (std::size_t i = 0; i < n; ++i) q += nu[i] * grad[i];
    return q;
  };
  double q = recompute();

  VariationalResult out;
  for (int it = 1; it <= max_iterations; ++it) {
    out.iterations = it;
    std::size_t s = 0, a = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (grad[i] < grad[s]) s = i;
      if (nu[i] > 0 && (a == n || grad[i] > grad[a])) a = i;
    }
    const double gmin = grad[s];
    out.relative_gap = std::max(0.0, 2.0 * (q - gmin) / q);
    out.upper_bound = (2.0 * gmin - q) > 0 ? 1.0 / (2.0 * gmin - q) : std::numeric_limits<double>::infinity();
    if (out.relative_gap <= tol) {
      out.converged = true;
      break;
    }
    const double gss = entry(s, s), gaa = entry(a, a), gsa = entry(s, a);
    const double curvature = gss + gaa - 2.0 * gsa;
    if (a == s || !(curvature > 0)) break;
    const double step = std::min(nu[a], (grad[a] - grad[s]) / curvature);
    if (!(step > 0)) break;
    q += 2.0 * step * (grad[s] - grad[a]) + step * step * curvature;
    nu[s] += step;
    nu[a] = (step == nu[a]) ? 0.0 : nu[a] - step;
    for (std::size_t i = 0; i < n; ++i) grad[i] += step * (entry(i, s) - entry(i, a));
    if (it % 200 == 0) q = recompute();
  }
  q = recompute();
  out.lower_bound = 1.0 / q;
  out.nu = std::move(nu);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kLevelBudget = 6'000'000;
constexpr std::uint64_t kMinLeap = 8;
constexpr Coord kCellLimit = 30000;

inline Coord floor_shift(Coord x, int shift) noexcept { return x >> shift; }  // arithmetic shift floors

inline bool pack_cell(const Coord* cell, int dim, PointKey& key) noexcept {
  key = 0;
  for (int k = 0; k < dim; ++k) {
    if (cell[k] < -kCellLimit || cell[k] > kCellLimit) return false;
    key = (key << 16) | static_cast<std::uint16_t>(cell[k] + 32768);
  }
  return true;
}

std::int64_t binomial(std::int64_t n, double p, StreamRng& rng) {
  if (n <= 0) return 0;
  if (p == 0.5 && n <= 256) {
    std::int64_t c = 0;
    for (std::int64_t left = n; left > 0; left -= 64) {
      std::uint64_t bits = rng();
      if (left < 64) bits &= (std::uint64_t{1} << left) - 1;
      c += std::popcount(bits);
    }
    return c;
  }
  if (n <= 24) {
    std::int64_t c = 0;
    for (std::int64_t i = 0; i < n; ++i) c += rng.uniform() < p;
    return c;
  }
  boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
  return dist(rng);
}

}  // namespace

void add_k_step_displacement(Coord* p, int dim, std::uint64_t k, StreamRng& rng) {
  auto left = static_cast<std::int64_t>(k);
  for (int axis = 0; axis < dim; ++axis) {
    const std::int64_t ki = (axis + 1 == dim) ? left : binomial(left, 1.0 / (dim - axis), rng);
    left -= ki;
    p[axis] += 2 * binomial(ki, 0.5, rng) - ki;
  }
}

EscapeWalker::EscapeWalker(const SiteSet& A, const std::array<double, kMaxDim>& center, double rho,
                           std::uint64_t horizon)
    : dim_(A.dim()), members_(A.dim(), A.sites()), center_(center), rho2_(rho * rho), horizon_(horizon) {
  const auto& box = members_.packer();
  Coord extent = 1;
  for (int k = 0; k < dim_; ++k) extent = std::max(extent, box.hi(k) - box.lo(k) + 1);
  std::size_t offsets = 1;
  for (int k = 0; k < dim_; ++k) offsets *= 3;
  const int top = std::bit_width(static_cast<std::uint64_t>(extent)) - 1;
  for (int shift = top; shift >= 1; --shift) {
    // cell coordinates relative to the cell holding the box corner
    Coord base[kMaxDim];
    for (int k = 0; k < dim_; ++k) base[k] = floor_shift(box.lo(k), shift);
    PointKeySet occupied;
    Coord cell[kMaxDim];
    for (const auto& pt : A) {
      for (int k = 0; k < dim_; ++k) cell[k] = floor_shift(pt[k], shift) - base[k];
      PointKey key;
      pack_cell(cell, dim_, key);
      occupied.insert(key);
    }
    if (occupied.size() * offsets > kLevelBudget) break;
    Level lv{shift, {}};
    lv.cells.reserve(occupied.size() * offsets);
    for (const auto& pt : A) {
      Coord c0[kMaxDim];
      for (int k = 0; k < dim_; ++k) c0[k] = floor_shift(pt[k], shift) - base[k];
      for (std::size_t o = 0; o < offsets; ++o) {
        std::size_t rest = o;
        for (int k = 0; k < dim_; ++k) {
          cell[k] = c0[k] + static_cast<Coord>(rest % 3) - 1;
          rest /= 3;
        }
        PointKey key;
        pack_cell(cell, dim_, key);
        lv.cells.insert(key);
      }
    }
    levels_.push_back(std::move(lv));
  }
}

std::uint64_t EscapeWalker::safe_leap(const Coord* p) const noexcept {
  const auto& box = members_.packer();
  const Coord delta = box.linf_distance(p);
  const std::uint64_t kb = delta >= 2 ? static_cast<std::uint64_t>(delta - 1) : 0;
  Coord cell[kMaxDim];
  for (const auto& lv : levels_) {
    const std::uint64_t h = std::uint64_t{1} << lv.shift;
    if (h <= kb) break;
    for (int k = 0; k < dim_; ++k) cell[k] = floor_shift(p[k], lv.shift) - floor_shift(box.lo(k), lv.shift);
    PointKey key;
    if (!pack_cell(cell, dim_, key) || !lv.cells.contains(key)) return h;
  }
  return kb;
}

EscapeWalker::Outcome EscapeWalker::run(const LatticePoint& start, StreamRng& rng) const {
  LatticePoint p = start;
  std::uint64_t t = 0;
  const auto outside = [&] {
    double s = 0;
    for (int k = 0; k < dim_; ++k) {
      const double u = static_cast<double>(p[k]) - center_[k];
      s += u * u;
    }
    return s > rho2_;
  };
  for (;;) {
    if (horizon_ && t >= horizon_) return Outcome::kHorizon;
    std::uint64_t k = t == 0 ? 0 : safe_leap(p.data());
    if (horizon_) k = std::min(k, horizon_ - t);
    if (k >= kMinLeap) {
      add_k_step_displacement(p.data(), dim_, k, rng);
      t += k;
    } else {
      random_step(p, dim_, rng);
      ++t;
      if (members_.contains(p.data())) return Outcome::kReturned;
    }
    if (outside()) return Outcome::kEscaped;
  }
}

double escape_bias_bound(const SiteSet& A, const GreenOracle& g, const std::array<double, kMaxDim>& center, double rho,
                         double cap_hat) {
  // From any z outside the ball, P_z(hit A) = sum_y G(z,y) e_A(y) is at most both
  // sum_y G(z,y) and cap(A) * max_y G(z,y).
  const double rad = A.radius_about(center);
  double sum = 0;
  for (const auto& y : A) {
    double s = 0;
    for (int k = 0; k < A.dim(); ++k) {
      const double u = static_cast<double>(y[k]) - center[k];
      s += u * u;
    }
    sum += g.envelope(rho - std::sqrt(s));
  }
  const double hit = std::min(sum, cap_hat * g.envelope(rho - rad));
  return cap_hat * hit;
}

EscapeEstimate capacity_escape_mc(const SiteSet& A, const GreenOracle& g, const EscapeOptions& opt) {
  check_capacity_input(A, g);
  const auto center = A.centroid();
  const double rad = A.radius_about(center);
  const double rho = opt.radius > 0 ? opt.radius : opt.radius_factor * rad + 50.0;
  if (!(rho > rad))
    throw ValidationError("escape radius " + std::to_string(rho) + " must exceed the set radius " + std::to_string(rad));
  const EscapeWalker walker(A, center, rho);
  EscapeEstimate est;
  est.radius = rho;
  if (opt.site_samples > 0) {
    auto pick = StreamRng::for_path(opt.seed, {static_cast<std::uint64_t>(StreamTag::kSiteSample)});
    auto rng = StreamRng::for_path(opt.seed, {static_cast<std::uint64_t>(StreamTag::kEscape)});
    std::uint64_t esc = 0;
    for (std::uint64_t t = 0; t < opt.site_samples; ++t) {
      const auto& x = A[pick.below(static_cast<std::uint32_t>(A.size()))];
      esc += walker.run(x, rng) == EscapeWalker::Outcome::kEscaped;
    }
    const double K = static_cast<double>(opt.site_samples);
    const double p = esc / K;
    est.capacity = A.size() * p;
    est.standard_error = A.size() * std::sqrt(p * (1 - p) / K);
    est.trials = opt.site_samples;
    est.escapes = esc;
    est.site_sampled = true;
  } else {
    require(opt.trials_per_site >= 1, "need at least one trial per site");
    const double m = static_cast<double>(opt.trials_per_site);
    double var = 0;
    for (std::size_t i = 0; i < A.size(); ++i) {
      auto rng = StreamRng::for_path(opt.seed, {static_cast<std::uint64_t>(StreamTag::kEscape), i});
      std::uint64_t esc = 0;
      for (std::uint64_t t = 0; t < opt.trials_per_site; ++t) esc += walker.run(A[i], rng) == EscapeWalker::Outcome::kEscaped;
      const double p = esc / m;
      est.capacity += p;
      var += p * (1 - p) / m;
      est.escapes += esc;
    }
    est.standard_error = std::sqrt(var);
    est.trials = opt.trials_per_site * A.size();
  }
  est.bias_bound = escape_bias_bound(A, g, center, rho, est.capacity);
  return est;
}

RepresentationEstimate capacity_representation_mc(const WalkRecord& w, std::uint64_t aux_horizon, std::uint64_t trials,
                                                  const GreenOracle& g, std::uint64_t seed, double radius_factor) {
  check_capacity_input(w.range, g);
  require(trials >= 1, "need at least one trial per fresh time");
  require(w.fresh.size() == w.path.size(), "walk record lacks fresh-site flags");
  const auto center = w.range.centroid();
  const double rho = radius_factor * w.range.radius_about(center) + 50.0;
  const EscapeWalker walker(w.range, center, rho, aux_horizon);
  RepresentationEstimate est;
  const double m = static_cast<double>(trials);
  double var = 0;
  for (std::size_t k = 0; k < w.path.size(); ++k) {
    if (!w.fresh[k]) continue;
    ++est.fresh_times;
    auto rng = StreamRng::for_path(seed, {static_cast<std::uint64_t>(StreamTag::kRepresentation), k});
    std::uint64_t avoid = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      const auto out = walker.run(w.path[k], rng);
      if (out != EscapeWalker::Outcome::kReturned) ++avoid;
      if (out == EscapeWalker::Outcome::kHorizon) ++est.horizon_hits;
    }
    const double p = avoid / m;
    est.capacity += p;
    var += p * (1 - p) / m;
  }
  est.trials = est.fresh_times * trials;
  est.standard_error = std::sqrt(var);
  est.bias_bound = escape_bias_bound(w.range, g, center, rho, est.capacity);
  return est;
}

}  // namespace rangecap
