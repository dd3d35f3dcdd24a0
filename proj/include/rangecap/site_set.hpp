#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "rangecap/lattice_point.hpp"
#include "rangecap/point_key.hpp"

namespace rangecap {

/// Finite deduplicated subset of Z^d. Sites are kept in lexicographic order;
/// the ordinal of a site is its row in any Green matrix built over the set.
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(int dim);
  SiteSet(int dim, std::vector<LatticePoint> points);

  int dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return sites_.size(); }
  bool empty() const noexcept { return sites_.empty(); }
  const std::vector<LatticePoint>& sites() const noexcept { return sites_; }
  const LatticePoint& operator[](std::size_t i) const noexcept { return sites_[i]; }
  auto begin() const noexcept { return sites_.begin(); }
  auto end() const noexcept { return sites_.end(); }

  bool contains(const LatticePoint& p) const noexcept;
  std::optional<std::size_t> index_of(const LatticePoint& p) const noexcept;

  /// A + shift.
  SiteSet translated(const LatticePoint& shift) const;
  /// A - origin: re-expresses the set relative to a new origin.
  SiteSet recentered(const LatticePoint& origin) const { return translated(-origin); }

  std::array<double, kMaxDim> centroid() const;
  /// max over sites of the Euclidean distance to `center`.
  double radius_about(const std::array<double, kMaxDim>& center) const;
  /// max over sites of the Euclidean norm.
  double radius() const;

  friend bool operator==(const SiteSet& a, const SiteSet& b) { return a.dim_ == b.dim_ && a.sites_ == b.sites_; }

 private:
  void build_index();

  int dim_ = 0;
  std::vector<LatticePoint> sites_;
  BoxPacker packer_;
  PointKeyMap<std::uint32_t> index_;
};

SiteSet set_union(const SiteSet& a, const SiteSet& b);
SiteSet set_intersection(const SiteSet& a, const SiteSet& b);

/// Text format: a header line `d=<dim>` followed by one site per line as
/// space-separated integers. Blank lines and lines starting with '#' are skipped.
SiteSet read_site_set(std::istream& in);
SiteSet read_site_set_file(const std::string& path);
void write_site_set(std::ostream& out, const SiteSet& set);

}  // namespace rangecap
