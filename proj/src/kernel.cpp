#include "rangecap/kernel.hpp"

#include <algorithm>
#include <numeric>
#include <utility>

#include "rangecap/errors.hpp"
#include "rangecap/rng.hpp"

namespace rangecap {

CellIndex::CellIndex(const SiteSet& set, Coord side) : dim_(set.dim()), side_(side) {
  require(side >= 1, "cell side must be positive");
  const std::size_t n = set.size();
  std::vector<std::array<Coord, kMaxDim>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys[i] = {};
    for (int k = 0; k < dim_; ++k) {
      const Coord x = set[i][k];
      keys[i][k] = (x >= 0) ? x / side : -((-x + side - 1) / side);
    }
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
  for (std::size_t p = 0; p < n;) {
    std::size_t q = p;
    while (q < n && keys[order_[q]] == keys[order_[p]]) ++q;
    cells_.push_back({keys[order_[p]], static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q)});
    p = q;
  }
  lookup_.reserve(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    PointKey h = 0;
    for (int k = 0; k < dim_; ++k) {
      require(cells_[c].key[k] > -32000 && cells_[c].key[k] < 32000, "site set too spread out for the cell index");
      h = (h << 16) | static_cast<std::uint16_t>(cells_[c].key[k] + 32768);
    }
    lookup_.emplace(h, static_cast<std::uint32_t>(c));
  }
}

std::int64_t CellIndex::find(const Coord* key) const noexcept {
  PointKey h = 0;
  for (int k = 0; k < dim_; ++k) {
    if (key[k] <= -32000 || key[k] >= 32000) return -1;
    h = (h << 16) | static_cast<std::uint16_t>(key[k] + 32768);
  }
  auto it = lookup_.find(h);
  return it == lookup_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

namespace {

std::vector<double> axis_major(const SiteSet& A) {
  const std::size_t n = A.size();
  const int d = A.dim();
  std::vector<double> xs(static_cast<std::size_t>(d) * n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) xs[k * n + i] = static_cast<double>(A[i][k]);
  return xs;
}

// Tail model at squared distance s with quartic moment s4; s = 0 lanes give 0.
template <int D>
inline double tail_term(double s, double s4, const TailModel& m) noexcept {
  // squared distances are integers, so max(s, 0.25) only moves the s = 0 lanes
  const double sc = std::max(s, 0.25);
  double inv, lead;
  if constexpr (D % 2 == 1) {
    const double ir = 1.0 / std::sqrt(sc);
    inv = ir * ir;
    lead = ir;
    for (int k = 3; k < D; k += 2) lead *= inv;
  } else {
    inv = 1.0 / sc;
    lead = inv;
    for (int k = 4; k < D; k += 2) lead *= inv;
  }
  return lead * (m.c + inv * (m.c_s + m.c_q * s4 * inv * inv)) * static_cast<double>(s > 0.5);
}

template <int... K>
inline void dist_moments(const double* xk, const double* ys, std::size_t n, std::size_t j, double& s, double& s4,
                         std::integer_sequence<int, K...>) noexcept {
  s = (((xk[K] - ys[K * n + j]) * (xk[K] - ys[K * n + j])) + ...);
  s4 = (((xk[K] - ys[K * n + j]) * (xk[K] - ys[K * n + j]) * (xk[K] - ys[K * n + j]) * (xk[K] - ys[K * n + j])) + ...);
}

// sum_{j in [begin, end)} v_j T(x - y_j), zero-distance terms dropped.
template <int D, bool Weighted>
double tail_row_impl(const double* __restrict x, const double* __restrict ys, std::size_t n, const double* __restrict v,
                     std::size_t begin, std::size_t end, const TailModel& m) {
  double xk[D];
  for (int k = 0; k < D; ++k) xk[k] = x[k];
  double total = 0;
#pragma omp simd reduction(+ : total)
  for (std::size_t j = begin; j < end; ++j) {
    double s, s4;
    dist_moments(xk, ys, n, j, s, s4, std::make_integer_sequence<int, D>{});
    double term = tail_term<D>(s, s4, m);
    if constexpr (Weighted) term *= v[j];
    total += term;
  }
  return total;
}

template <int D>
double tail_row(const double* x, const double* ys, std::size_t n, const double* v, std::size_t begin, std::size_t end,
                const TailModel& m) {
  return v ? tail_row_impl<D, true>(x, ys, n, v, begin, end, m) : tail_row_impl<D, false>(x, ys, n, v, begin, end, m);
}

// Writes out[j - begin] = T(x - y_j).
template <int D>
void tail_column(const double* x, const double* ys, std::size_t n, std::size_t begin, std::size_t end, double* out,
                 const TailModel& m) {
  double xk[D];
  for (int k = 0; k < D; ++k) xk[k] = x[k];
#pragma omp simd
  for (std::size_t j = begin; j < end; ++j) {
    double s, s4;
    dist_moments(xk, ys, n, j, s, s4, std::make_integer_sequence<int, D>{});
    out[j - begin] = tail_term<D>(s, s4, m);
  }
}

template <class Fn>
decltype(auto) dispatch_dim(int d, Fn&& fn) {
  switch (d) {
    case 3: return fn(std::integral_constant<int, 3>{});
    case 4: return fn(std::integral_constant<int, 4>{});
    case 5: return fn(std::integral_constant<int, 5>{});
    case 6: return fn(std::integral_constant<int, 6>{});
    case 7: return fn(std::integral_constant<int, 7>{});
    case 8: return fn(std::integral_constant<int, 8>{});
    default: throw ValidationError("kernel sums need 3 <= d <= 8");
  }
}

inline double near_correction(const GreenOracle& g, const Coord* a, const Coord* b) noexcept {
  Coord diff[kMaxDim];
  for (int k = 0; k < g.dim(); ++k) diff[k] = a[k] - b[k];
  return g.correction(diff);
}

void check_dims(const GreenOracle& g, const SiteSet& A) {
  if (A.dim() != g.dim() && !A.empty())
    throw ValidationError("dimension mismatch: site set d=" + std::to_string(A.dim()) + ", oracle d=" + std::to_string(g.dim()));
}

// r_i = sum_j v_j G(a_i - b_j).
std::vector<double> row_sums(const GreenOracle& g, const SiteSet& A, const SiteSet& B, const double* v) {
  std::vector<double> r(A.size(), 0.0);
  if (A.empty() || B.empty()) return r;
  const auto xa = axis_major(A);
  const auto xb = axis_major(B);
  const std::size_t na = A.size(), nb = B.size();
  const TailModel m = g.tail_model();
  dispatch_dim(g.dim(), [&](auto D) {
    double x[kMaxDim];
    for (std::size_t i = 0; i < na; ++i) {
      for (int k = 0; k < D; ++k) x[k] = xa[k * na + i];
      r[i] = tail_row<D>(x, xb.data(), nb, v, 0, nb, m);
    }
    return 0;
  });
  for_each_near_pair(A, B, g.radius(), [&](std::uint32_t i, std::uint32_t j) {
    r[i] += (v ? v[j] : 1.0) * near_correction(g, A[i].data(), B[j].data());
  });
  return r;
}

}  // namespace

double green_bilinear(const GreenOracle& g, const SiteSet& A, const double* u, const SiteSet& B, const double* v) {
  check_dims(g, A);
  check_dims(g, B);
  const auto r = row_sums(g, A, B, v);
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += (u ? u[i] : 1.0) * r[i];
  return s;
}

double green_quadratic(const GreenOracle& g, const SiteSet& A, const double* u) {
  check_dims(g, A);
  if (A.empty()) return 0.0;
  const auto xs = axis_major(A);
  const std::size_t n = A.size();
  const TailModel m = g.tail_model();
  double upper = 0;
  dispatch_dim(g.dim(), [&](auto D) {
    double x[kMaxDim];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (int k = 0; k < D; ++k) x[k] = xs[k * n + i];
      upper += (u ? u[i] : 1.0) * tail_row<D>(x, xs.data(), n, u, i + 1, n, m);
    }
    return 0;
  });
  double total = 2.0 * upper;
  double near = 0;
  for_each_near_pair_symmetric(A, g.radius(), [&](std::uint32_t i, std::uint32_t j) {
    near += (i == j ? 1.0 : 2.0) * (u ? u[i] * u[j] : 1.0) * near_correction(g, A[i].data(), A[j].data());
  });
  return total + near;
}

Eigen::MatrixXd green_matrix(const GreenOracle& g, const SiteSet& A) {
  check_dims(g, A);
  const std::size_t n = A.size();
  Eigen::MatrixXd M(n, n);
  if (n == 0) return M;
  const auto xs = axis_major(A);
  const TailModel m = g.tail_model();
  dispatch_dim(g.dim(), [&](auto D) {
    double x[kMaxDim];
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < D; ++k) x[k] = xs[k * n + i];
      tail_column<D>(x, xs.data(), n, i, n, M.col(i).data() + i, m);
    }
    return 0;
  });
  M.triangularView<Eigen::StrictlyUpper>() = M.transpose();
  for_each_near_pair_symmetric(A, g.radius(), [&](std::uint32_t i, std::uint32_t j) {
    const double c = near_correction(g, A[i].data(), A[j].data());
    M(i, j) += c;
    if (i != j) M(j, i) += c;
  });
  return M;
}

GreenOperator::GreenOperator(const GreenOracle& g, const SiteSet& A)
    : g_(&g), dim_(A.dim()), n_(A.size()), xs_(axis_major(A)) {
  check_dims(g, A);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n_);
  for_each_near_pair_symmetric(A, g.radius(), [&](std::uint32_t i, std::uint32_t j) {
    const double c = near_correction(g, A[i].data(), A[j].data());
    rows[i].emplace_back(j, c);
    if (i != j) rows[j].emplace_back(i, c);
  });
  row_ptr_.assign(n_ + 1, 0);
  for (std::size_t i = 0; i < n_; ++i) {
    std::sort(rows[i].begin(), rows[i].end());
    row_ptr_[i + 1] = row_ptr_[i] + rows[i].size();
  }
  cols_.reserve(row_ptr_[n_]);
  vals_.reserve(row_ptr_[n_]);
  for (auto& r : rows)
    for (auto [j, v] : r) {
      cols_.push_back(j);
      vals_.push_back(v);
    }
}

void GreenOperator::apply(const double* u, double* y) const {
  const TailModel m = g_->tail_model();
  dispatch_dim(dim_, [&](auto D) {
    double x[kMaxDim];
    for (std::size_t i = 0; i < n_; ++i) {
      for (int k = 0; k < D; ++k) x[k] = xs_[k * n_ + i];
      double s = tail_row<D>(x, xs_.data(), n_, u, 0, n_, m);
      for (std::uint64_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += vals_[p] * u[cols_[p]];
      y[i] = s;
    }
    return 0;
  });
}

CrossTermValue cross_term(const SiteSet& A, const SiteSet& B, const GreenOracle& g, const CrossTermOptions& opt) {
  check_dims(g, A);
  check_dims(g, B);
  if (!A.empty() && !B.empty()) require(A.dim() == B.dim(), "cross term: dimension mismatch");
  CrossTermValue out;
  out.size_a = A.size();
  out.size_b = B.size();
  const double pairs = static_cast<double>(A.size()) * static_cast<double>(B.size());
  if (opt.subsample_above_pairs > 0 && pairs > opt.subsample_above_pairs && opt.subsample_rows < A.size()) {
    // Rows drawn without replacement from A, each summed exactly over B.
    auto rng = StreamRng::for_path(opt.seed, {static_cast<std::uint64_t>(StreamTag::kSiteSample)});
    std::vector<std::uint32_t> idx(A.size());
    std::iota(idx.begin(), idx.end(), 0u);
    const std::size_t k = opt.subsample_rows;
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(static_cast<std::uint32_t>(idx.size() - i))]);
    std::vector<LatticePoint> pts;
    for (std::size_t i = 0; i < k; ++i) pts.push_back(A[idx[i]]);
    const SiteSet sub(A.dim(), std::move(pts));
    const auto r = row_sums(g, sub, B, nullptr);
    double mean = 0, m2 = 0;
    for (double x : r) mean += x;
    mean /= k;
    for (double x : r) m2 += (x - mean) * (x - mean);
    const double var = k > 1 ? m2 / (k - 1) : 0.0;
    const double N = static_cast<double>(A.size());
    out.value = N * mean;
    out.standard_error = N * std::sqrt((1.0 - k / N) * var / k);
    out.subsampled = true;
    out.rows_used = k;
    return out;
  }
  // Evaluate in a canonical operand order so that swapping A and B is bit-exact.
  const bool swap = B.size() < A.size() || (B.size() == A.size() && B.sites() < A.sites());
  out.value = swap ? green_bilinear(g, B, nullptr, A, nullptr) : green_bilinear(g, A, nullptr, B, nullptr);
  out.rows_used = A.size();
  return out;
}

}  // namespace rangecap
