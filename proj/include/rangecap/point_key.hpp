#pragma once

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <bit>
#include <cstdint>
#include <span>

#include "rangecap/lattice_point.hpp"
#include "rangecap/rng.hpp"

namespace rangecap {

using PointKey = unsigned __int128;

struct PointKeyHash {
  std::size_t operator()(PointKey k) const noexcept {
    const auto lo = static_cast<std::uint64_t>(k);
    const auto hi = static_cast<std::uint64_t>(k >> 64);
    return static_cast<std::size_t>(splitmix64(lo ^ splitmix64(hi)));
  }
};

using PointKeySet = absl::flat_hash_set<PointKey, PointKeyHash>;
template <class V>
using PointKeyMap = absl::flat_hash_map<PointKey, V, PointKeyHash>;

/// Packs points of an axis-aligned box into 128-bit keys, bit fields sized to
/// the box extent per axis. Membership tests outside the box short-circuit.
class BoxPacker {
 public:
  BoxPacker() = default;

  BoxPacker(int dim, const Coord* lo, const Coord* hi) : dim_(dim) {
    int total = 0;
    for (int i = 0; i < dim; ++i) {
      require(hi[i] >= lo[i], "empty box");
      lo_[i] = lo[i];
      hi_[i] = hi[i];
      const auto extent = static_cast<std::uint64_t>(hi[i] - lo[i]);
      shift_[i] = total;
      total += static_cast<int>(std::bit_width(extent));
    }
    require(total <= 128, "point set too spread out to pack into 128-bit keys");
  }

  template <class Range>
  static BoxPacker bounding(int dim, const Range& points) {
    std::array<Coord, kMaxDim> lo{}, hi{};
    bool first = true;
    for (const LatticePoint& p : points) {
      for (int i = 0; i < dim; ++i) {
        if (first || p[i] < lo[i]) lo[i] = p[i];
        if (first || p[i] > hi[i]) hi[i] = p[i];
      }
      first = false;
    }
    return BoxPacker(dim, lo.data(), hi.data());
  }

  int dim() const noexcept { return dim_; }
  Coord lo(int i) const noexcept { return lo_[i]; }
  Coord hi(int i) const noexcept { return hi_[i]; }

  bool in_box(const Coord* c) const noexcept {
    for (int i = 0; i < dim_; ++i)
      if (c[i] < lo_[i] || c[i] > hi_[i]) return false;
    return true;
  }

  PointKey pack(const Coord* c) const noexcept {
    PointKey k = 0;
    for (int i = 0; i < dim_; ++i) k |= static_cast<PointKey>(static_cast<std::uint64_t>(c[i] - lo_[i])) << shift_[i];
    return k;
  }
  PointKey pack(const LatticePoint& p) const noexcept { return pack(p.data()); }

  /// Chebyshev distance from c to the box (0 inside).
  Coord linf_distance(const Coord* c) const noexcept {
    Coord d = 0;
    for (int i = 0; i < dim_; ++i) {
      if (c[i] < lo_[i]) d = std::max(d, lo_[i] - c[i]);
      if (c[i] > hi_[i]) d = std::max(d, c[i] - hi_[i]);
    }
    return d;
  }

 private:
  int dim_ = 0;
  std::array<Coord, kMaxDim> lo_{}, hi_{};
  std::array<int, kMaxDim> shift_{};
};

/// Hash set of lattice points restricted to a fixed bounding box.
class PackedPointSet {
 public:
  PackedPointSet() = default;
  template <class Range>
  PackedPointSet(int dim, const Range& points) : packer_(BoxPacker::bounding(dim, points)) {
    for (const LatticePoint& p : points) keys_.insert(packer_.pack(p));
  }
  PackedPointSet(BoxPacker packer) : packer_(packer) {}

  bool insert(const Coord* c) { return keys_.insert(packer_.pack(c)).second; }
  bool contains(const Coord* c) const noexcept { return packer_.in_box(c) && keys_.contains(packer_.pack(c)); }
  bool contains(const LatticePoint& p) const noexcept { return contains(p.data()); }
  std::size_t size() const noexcept { return keys_.size(); }
  const BoxPacker& packer() const noexcept { return packer_; }
  void reserve(std::size_t n) { keys_.reserve(n); }

 private:
  BoxPacker packer_;
  PointKeySet keys_;
};

}  // namespace rangecap
