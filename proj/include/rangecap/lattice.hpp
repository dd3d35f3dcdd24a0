#pragma once

#include <cstdint>
#include <vector>

#include "rangecap/lattice_point.hpp"
#include "rangecap/rng.hpp"
#include "rangecap/site_set.hpp"

namespace rangecap {

/// One simple-random-walk trajectory S_0..S_n together with its range.
/// Immutable once built.
struct WalkRecord {
  int dim = 0;
  std::vector<LatticePoint> path;
  SiteSet range;
  /// fresh[k] is true iff S_k was not visited at any time before k.
  std::vector<bool> fresh;

  std::size_t steps() const noexcept { return path.empty() ? 0 : path.size() - 1; }
};

/// Local times on the horizon [0, l): sites in lexicographic order, counts aligned.
struct LocalTimes {
  SiteSet sites;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(const LatticePoint& x) const noexcept;
  std::uint64_t total() const noexcept;
};

/// Walk of n steps from the origin. Step k picks one of the 2d neighbours uniformly.
WalkRecord sample_walk(int dim, std::uint64_t n, StreamRng& rng);
/// Seeded convenience form: uses the walk stream of replica 0.
WalkRecord sample_walk(int dim, std::uint64_t n, std::uint64_t seed);

/// Builds the record (range, fresh flags) from an explicit path.
WalkRecord make_walk_record(int dim, std::vector<LatticePoint> path);

/// Advances `p` by one uniform nearest-neighbour step.
inline void random_step(LatticePoint& p, int dim, StreamRng& rng) noexcept {
  const std::uint32_t dir = rng.below(static_cast<std::uint32_t>(2 * dim));
  p[static_cast<int>(dir >> 1)] += (dir & 1u) ? -1 : 1;
}

/// {S_a, ..., S_b}.
SiteSet range_window(const WalkRecord& w, std::uint64_t a, std::uint64_t b);
/// {S_a - S_a, ..., S_b - S_a}: the window recentred at its left endpoint.
SiteSet range_window_recentered(const WalkRecord& w, std::uint64_t a, std::uint64_t b);

LocalTimes local_times(const WalkRecord& w, std::uint64_t horizon);

/// Path validity: starts anywhere, consecutive points are lattice neighbours.
bool is_nearest_neighbour_path(const std::vector<LatticePoint>& path) noexcept;

}  // namespace rangecap
