#include "rangecap/lattice.hpp"

#include <algorithm>

namespace rangecap {

namespace {

constexpr std::uint64_t kMaxSteps = std::uint64_t{1} << 40;

std::vector<bool> fresh_flags(int dim, const std::vector<LatticePoint>& path) {
  std::vector<bool> fresh(path.size(), false);
  if (path.empty()) return fresh;
  PackedPointSet seen(BoxPacker::bounding(dim, path));
  seen.reserve(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) fresh[k] = seen.insert(path[k].data());
  return fresh;
}

}  // namespace

std::uint64_t LocalTimes::at(const LatticePoint& x) const noexcept {
  const auto i = sites.index_of(x);
  return i ? counts[*i] : 0;
}

std::uint64_t LocalTimes::total() const noexcept {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

WalkRecord make_walk_record(int dim, std::vector<LatticePoint> path) {
  check_dimension(dim);
  require(!path.empty(), "walk path must contain S_0");
  WalkRecord w;
  w.dim = dim;
  w.fresh = fresh_flags(dim, path);
  w.range = SiteSet(dim, path);
  w.path = std::move(path);
  return w;
}

WalkRecord sample_walk(int dim, std::uint64_t n, StreamRng& rng) {
  check_dimension(dim);
  require(n <= kMaxSteps, "walk length exceeds 2^40 steps");
  std::vector<LatticePoint> path;
  path.reserve(n + 1);
  LatticePoint p(dim);
  path.push_back(p);
  for (std::uint64_t k = 0; k < n; ++k) {
    random_step(p, dim, rng);
    path.push_back(p);
  }
  return make_walk_record(dim, std::move(path));
}

WalkRecord sample_walk(int dim, std::uint64_t n, std::uint64_t seed) {
  auto rng = StreamRng::for_path(seed, {0, static_cast<std::uint64_t>(StreamTag::kWalk)});
  return sample_walk(dim, n, rng);
}

SiteSet range_window(const WalkRecord& w, std::uint64_t a, std::uint64_t b) {
  if (!(a <= b && b < w.path.size()))
    throw ValidationError("range window [" + std::to_string(a) + ", " + std::to_string(b) + "] outside walk of " +
                          std::to_string(w.steps()) + " steps");
  return SiteSet(w.dim, std::vector<LatticePoint>(w.path.begin() + a, w.path.begin() + b + 1));
}

SiteSet range_window_recentered(const WalkRecord& w, std::uint64_t a, std::uint64_t b) {
  if (!(a <= b && b < w.path.size()))
    throw ValidationError("range window [" + std::to_string(a) + ", " + std::to_string(b) + "] outside walk of " +
                          std::to_string(w.steps()) + " steps");
  std::vector<LatticePoint> pts(w.path.begin() + a, w.path.begin() + b + 1);
  const LatticePoint origin = w.path[a];
  for (auto& p : pts) p -= origin;
  return SiteSet(w.dim, std::move(pts));
}

LocalTimes local_times(const WalkRecord& w, std::uint64_t horizon) {
  if (horizon > w.path.size())
    throw ValidationError("local-time horizon " + std::to_string(horizon) + " exceeds recorded path of " +
                          std::to_string(w.path.size()) + " points");
  LocalTimes lt;
  lt.sites = SiteSet(w.dim, std::vector<LatticePoint>(w.path.begin(), w.path.begin() + horizon));
  lt.counts.assign(lt.sites.size(), 0);
  for (std::uint64_t i = 0; i < horizon; ++i) ++lt.counts[*lt.sites.index_of(w.path[i])];
  return lt;
}

bool is_nearest_neighbour_path(const std::vector<LatticePoint>& path) noexcept {
  for (std::size_t k = 1; k < path.size(); ++k) {
    const LatticePoint d = path[k] - path[k - 1];
    if (d.norm1() != 1) return false;
  }
  return true;
}

}  // namespace rangecap
