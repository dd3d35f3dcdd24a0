#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "rangecap/green.hpp"
#include "rangecap/point_key.hpp"
#include "rangecap/site_set.hpp"

namespace rangecap {

// Sums of the Green kernel over pairs of sites. Every pair gets the tail model
// T(x-y) (T(0) = 0) in a vectorised sweep; pairs inside the cached box then
// receive the correction G - T.

/// Sites bucketed into cubes of side `side`; pairs closer than `side` in the
/// sup norm always lie in adjacent buckets.
class CellIndex {
 public:
  CellIndex(const SiteSet& set, Coord side);

  struct Cell {
    std::array<Coord, kMaxDim> key;
    std::uint32_t begin, end;  // range into order()
  };
  const std::vector<Cell>& cells() const noexcept { return cells_; }
  const std::vector<std::uint32_t>& order() const noexcept { return order_; }
  /// Cell index holding cell coordinates `key`, or -1.
  std::int64_t find(const Coord* key) const noexcept;
  Coord side() const noexcept { return side_; }
  int dim() const noexcept { return dim_; }

 private:
  int dim_;
  Coord side_;
  std::vector<Cell> cells_;
  std::vector<std::uint32_t> order_;
  absl::flat_hash_map<PointKey, std::uint32_t, PointKeyHash> lookup_;
};

/// Calls f(i, j) for every i in A, j in B with |a_i - b_j|_inf <= radius.
template <class F>
void for_each_near_pair(const SiteSet& A, const SiteSet& B, int radius, F&& f) {
  if (A.empty() || B.empty()) return;
  const int d = A.dim();
  const Coord side = radius + 1;
  const CellIndex ca(A, side), cb(B, side);
  const auto& ordA = ca.order();
  const auto& ordB = cb.order();
  auto visit = [&](const CellIndex::Cell& x, const CellIndex::Cell& y) {
    for (std::uint32_t p = x.begin; p < x.end; ++p) {
      const std::uint32_t i = ordA[p];
      const Coord* a = A[i].data();
      for (std::uint32_t q = y.begin; q < y.end; ++q) {
        const std::uint32_t j = ordB[q];
        const Coord* b = B[j].data();
        bool near = true;
        for (int k = 0; k < d && near; ++k) {
          const Coord t = a[k] - b[k];
          near = t <= radius && t >= -radius;
        }
        if (near) f(i, j);
      }
    }
  };
  std::size_t offsets = 1;
  for (int k = 0; k < d; ++k) offsets *= 3;
  if (ca.cells().size() * cb.cells().size() <= ca.cells().size() * offsets) {
    for (const auto& x : ca.cells())
      for (const auto& y : cb.cells()) {
        bool adj = true;
        for (int k = 0; k < d && adj; ++k) adj = std::abs(x.key[k] - y.key[k]) <= 1;
        if (adj) visit(x, y);
      }
  } else {
    Coord key[kMaxDim];
    for (const auto& x : ca.cells()) {
      for (std::size_t o = 0; o < offsets; ++o) {
        std::size_t rest = o;
        for (int k = 0; k < d; ++k) {
          key[k] = x.key[k] + static_cast<Coord>(rest % 3) - 1;
          rest /= 3;
        }
        const auto c = cb.find(key);
        if (c >= 0) visit(x, cb.cells()[c]);
      }
    }
  }
}

/// Calls f(i, j) once for every unordered pair {i, j} (i == j included) of A
/// with |a_i - a_j|_inf <= radius.
template <class F>
void for_each_near_pair_symmetric(const SiteSet& A, int radius, F&& f) {
  if (A.empty()) return;
  const int d = A.dim();
  const CellIndex ca(A, radius + 1);
  const auto& ord = ca.order();
  const auto& cells = ca.cells();
  auto visit = [&](std::size_t cx, std::size_t cy) {
    const auto& x = cells[cx];
    const auto& y = cells[cy];
    for (std::uint32_t p = x.begin; p < x.end; ++p) {
      const std::uint32_t i = ord[p];
      const Coord* a = A[i].data();
      for (std::uint32_t q = (cx == cy ? p : y.begin); q < y.end; ++q) {
        const std::uint32_t j = ord[q];
        const Coord* b = A[j].data();
        bool near = true;
        for (int k = 0; k < d && near; ++k) {
          const Coord t = a[k] - b[k];
          near = t <= radius && t >= -radius;
        }
        if (near) f(i, j);
      }
    }
  };
  std::size_t offsets = 1;
  for (int k = 0; k < d; ++k) offsets *= 3;
  if (cells.size() <= offsets) {
    for (std::size_t cx = 0; cx < cells.size(); ++cx)
      for (std::size_t cy = cx; cy < cells.size(); ++cy) {
        bool adj = true;
        for (int k = 0; k < d && adj; ++k) adj = std::abs(cells[cx].key[k] - cells[cy].key[k]) <= 1;
        if (adj) visit(cx, cy);
      }
  } else {
    Coord key[kMaxDim];
    for (std::size_t cx = 0; cx < cells.size(); ++cx) {
      for (std::size_t o = 0; o < offsets; ++o) {
        std::size_t rest = o;
        for (int k = 0; k < d; ++k) {
          key[k] = cells[cx].key[k] + static_cast<Coord>(rest % 3) - 1;
          rest /= 3;
        }
        const auto c = ca.find(key);
        if (c >= static_cast<std::int64_t>(cx)) visit(cx, static_cast<std::size_t>(c));
      }
    }
  }
}

/// sum_i sum_j u_i v_j G(a_i - b_j); null weights mean all ones.
double green_bilinear(const GreenOracle& g, const SiteSet& A, const double* u, const SiteSet& B, const double* v);
/// sum_{i,j} u_i u_j G(a_i - a_j).
double green_quadratic(const GreenOracle& g, const SiteSet& A, const double* u);
/// Dense [G(a_i - a_j)].
Eigen::MatrixXd green_matrix(const GreenOracle& g, const SiteSet& A);

/// Matrix-free y = G_A u: tail sweep plus sparse near corrections.
class GreenOperator {
 public:
  GreenOperator(const GreenOracle& g, const SiteSet& A);
  std::size_t size() const noexcept { return n_; }
  void apply(const double* u, double* y) const;
  std::size_t near_pairs() const noexcept { return cols_.size(); }

 private:
  const GreenOracle* g_;
  int dim_;
  std::size_t n_;
  std::vector<double> xs_;  // axis-major coordinates
  std::vector<std::uint64_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<double> vals_;
};

struct CrossTermValue {
  double value = 0;
  std::size_t size_a = 0;
  std::size_t size_b = 0;
  bool subsampled = false;
  std::size_t rows_used = 0;
  double standard_error = 0;
};

struct CrossTermOptions {
  /// Use the row-subsampling estimator when |A||B| exceeds this (0 disables).
  double subsample_above_pairs = 0;
  std::size_t subsample_rows = 4096;
  std::uint64_t seed = 0;
};

/// sum_{x in A} sum_{y in B} G(x, y).
CrossTermValue cross_term(const SiteSet& A, const SiteSet& B, const GreenOracle& g, const CrossTermOptions& opt = {});

}  // namespace rangecap
