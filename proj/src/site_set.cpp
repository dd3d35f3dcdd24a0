#include "rangecap/site_set.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace rangecap {

SiteSet::SiteSet(int dim) : dim_(dim) { check_dimension(dim); }

SiteSet::SiteSet(int dim, std::vector<LatticePoint> points) : dim_(dim), sites_(std::move(points)) {
  check_dimension(dim);
  for (const auto& p : sites_) require(p.dim() == dim, "site dimension mismatch: " + p.to_string());
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  build_index();
}

void SiteSet::build_index() {
  index_.clear();
  if (sites_.empty()) return;
  packer_ = BoxPacker::bounding(dim_, sites_);
  index_.reserve(sites_.size());
  for (std::size_t i = 0; i < sites_.size(); ++i) index_.emplace(packer_.pack(sites_[i]), static_cast<std::uint32_t>(i));
}

bool SiteSet::contains(const LatticePoint& p) const noexcept { return index_of(p).has_value(); }

std::optional<std::size_t> SiteSet::index_of(const LatticePoint& p) const noexcept {
  if (sites_.empty() || p.dim() != dim_ || !packer_.in_box(p.data())) return std::nullopt;
  auto it = index_.find(packer_.pack(p));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SiteSet SiteSet::translated(const LatticePoint& shift) const {
  require(shift.dim() == dim_, "shift dimension mismatch");
  SiteSet out(dim_);
  out.sites_ = sites_;
  for (auto& p : out.sites_) p += shift;
  // translation preserves lexicographic order
  out.build_index();
  return out;
}

std::array<double, kMaxDim> SiteSet::centroid() const {
  std::array<double, kMaxDim> c{};
  if (sites_.empty()) return c;
  for (const auto& p : sites_)
    for (int i = 0; i < dim_; ++i) c[i] += static_cast<double>(p[i]);
  for (int i = 0; i < dim_; ++i) c[i] /= static_cast<double>(sites_.size());
  return c;
}

double SiteSet::radius_about(const std::array<double, kMaxDim>& center) const {
  double best = 0.0;
  for (const auto& p : sites_) {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double t = static_cast<double>(p[i]) - center[i];
      s += t * t;
    }
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

double SiteSet::radius() const { return radius_about(std::array<double, kMaxDim>{}); }

SiteSet set_union(const SiteSet& a, const SiteSet& b) {
  require(a.dim() == b.dim(), "set_union: dimension mismatch");
  std::vector<LatticePoint> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SiteSet(a.dim(), std::move(out));
}

SiteSet set_intersection(const SiteSet& a, const SiteSet& b) {
  require(a.dim() == b.dim(), "set_intersection: dimension mismatch");
  std::vector<LatticePoint> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return SiteSet(a.dim(), std::move(out));
}

SiteSet read_site_set(std::istream& in) {
  std::string line;
  int dim = 0;
  std::vector<LatticePoint> points;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (dim == 0) {
      if (line.compare(first, 2, "d=") != 0) throw ValidationError("site set: expected header `d=<dim>` on line " + std::to_string(lineno));
      try {
        dim = std::stoi(line.substr(first + 2));
      } catch (const std::exception&) {
        throw ValidationError("site set: bad dimension header `" + line + "`");
      }
      check_dimension(dim);
      continue;
    }
    std::istringstream ls(line);
    std::array<Coord, kMaxDim> c{};
    int k = 0;
    Coord v;
    while (ls >> v) {
      if (k >= dim) throw ValidationError("site set: too many coordinates on line " + std::to_string(lineno));
      c[k++] = v;
    }
    if (!ls.eof() || k != dim) throw ValidationError("site set: expected " + std::to_string(dim) + " integers on line " + std::to_string(lineno));
    points.emplace_back(dim, std::span<const Coord>(c.data(), dim));
  }
  if (dim == 0) throw ValidationError("site set: missing `d=<dim>` header");
  return SiteSet(dim, std::move(points));
}

SiteSet read_site_set_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open site set file " + path);
  return read_site_set(in);
}

void write_site_set(std::ostream& out, const SiteSet& set) {
  out << "d=" << set.dim() << '\n';
  for (const auto& p : set) {
    for (int i = 0; i < set.dim(); ++i) out << (i ? " " : "") << p[i];
    out << '\n';
  }
}

}  // namespace rangecap
