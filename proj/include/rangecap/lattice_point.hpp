#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <span>
#include <string>

#include "rangecap/errors.hpp"

namespace rangecap {

inline constexpr int kMaxDim = 8;
using Coord = std::int64_t;

inline void check_dimension(int d) {
  require(d >= 1 && d <= kMaxDim, "dimension must be in [1, " + std::to_string(kMaxDim) + "], got " + std::to_string(d));
}

/// A site of Z^d. Coordinates past dim() are kept at zero so that the
/// defaulted comparisons are exact.
class LatticePoint {
 public:
  LatticePoint() = default;
  explicit LatticePoint(int dim) : dim_(dim) { check_dimension(dim); }
  LatticePoint(std::initializer_list<Coord> coords) : dim_(static_cast<int>(coords.size())) {
    check_dimension(dim_);
    int i = 0;
    for (Coord c : coords) c_[i++] = c;
  }
  LatticePoint(int dim, std::span<const Coord> coords) : dim_(dim) {
    check_dimension(dim);
    require(static_cast<int>(coords.size()) == dim, "coordinate count does not match dimension");
    for (int i = 0; i < dim; ++i) c_[i] = coords[i];
  }

  static LatticePoint unit(int dim, int axis, int sign = 1) {
    LatticePoint p(dim);
    require(axis >= 0 && axis < dim, "axis out of range");
    p.c_[axis] = sign >= 0 ? 1 : -1;
    return p;
  }

  int dim() const noexcept { return dim_; }
  Coord operator[](int i) const noexcept { return c_[i]; }
  Coord& operator[](int i) noexcept { return c_[i]; }
  const Coord* data() const noexcept { return c_.data(); }
  Coord* data() noexcept { return c_.data(); }
  std::span<const Coord> coords() const noexcept { return {c_.data(), static_cast<std::size_t>(dim_)}; }

  bool is_origin() const noexcept {
    for (int i = 0; i < dim_; ++i)
      if (c_[i] != 0) return false;
    return true;
  }
  Coord norm1() const noexcept {
    Coord s = 0;
    for (int i = 0; i < dim_; ++i) s += std::abs(c_[i]);
    return s;
  }
  Coord norm_inf() const noexcept {
    Coord s = 0;
    for (int i = 0; i < dim_; ++i) s = std::max(s, std::abs(c_[i]));
    return s;
  }
  std::int64_t norm_sq() const noexcept {
    std::int64_t s = 0;
    for (int i = 0; i < dim_; ++i) s += c_[i] * c_[i];
    return s;
  }
  double norm() const noexcept { return std::sqrt(static_cast<double>(norm_sq())); }

  LatticePoint& operator+=(const LatticePoint& o) noexcept {
    for (int i = 0; i < dim_; ++i) c_[i] += o.c_[i];
    return *this;
  }
  LatticePoint& operator-=(const LatticePoint& o) noexcept {
    for (int i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  friend LatticePoint operator+(LatticePoint a, const LatticePoint& b) noexcept { return a += b; }
  friend LatticePoint operator-(LatticePoint a, const LatticePoint& b) noexcept { return a -= b; }
  friend LatticePoint operator-(LatticePoint a) noexcept {
    for (int i = 0; i < a.dim_; ++i) a.c_[i] = -a.c_[i];
    return a;
  }

  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;

  std::string to_string() const {
    std::string s = "(";
    for (int i = 0; i < dim_; ++i) {
      if (i) s += ',';
      s += std::to_string(c_[i]);
    }
    return s + ")";
  }

 private:
  std::array<Coord, kMaxDim> c_{};
  int dim_ = 0;
};

}  // namespace rangecap
