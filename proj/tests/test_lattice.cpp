#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rangecap/lattice.hpp"
#include "rangecap/stats.hpp"

using namespace rangecap;

TEST_CASE("zero-step walk") {
  const auto w = sample_walk(3, 0, 5);
  CHECK(w.path.size() == 1);
  CHECK(w.path[0].is_origin());
  CHECK(w.range.size() == 1);
  CHECK(w.fresh == std::vector<bool>{true});
}

TEST_CASE("walks are nearest-neighbour, reproducible and consistent") {
  const auto w = sample_walk(5, 10000, 42);
  const auto v = sample_walk(5, 10000, 42);
  CHECK(w.path == v.path);
  CHECK(is_nearest_neighbour_path(w.path));
  CHECK(w.path.front().is_origin());
  // the endpoint is the sum of the increments
  LatticePoint sum(5);
  for (std::size_t k = 1; k < w.path.size(); ++k) sum += w.path[k] - w.path[k - 1];
  CHECK(sum == w.path.back());
  std::size_t fresh = 0;
  for (std::size_t k = 0; k < w.path.size(); ++k) {
    fresh += w.fresh[k];
    if (k % 997 == 0) CHECK(fresh == range_window(w, 0, k).size());
  }
  CHECK(fresh == w.range.size());
  for (const auto& p : w.path) CHECK(w.range.contains(p));
}

TEST_CASE("step directions are uniform") {
  const int d = 4;
  auto rng = StreamRng::for_path(3, {1});
  std::vector<double> count(2 * d, 0);
  const int N = 1000000;
  for (int i = 0; i < N; ++i) {
    LatticePoint p(d);
    random_step(p, d, rng);
    for (int a = 0; a < d; ++a) {
      if (p[a] == 1) ++count[2 * a];
      if (p[a] == -1) ++count[2 * a + 1];
    }
  }
  const double q = 1.0 / (2 * d);
  const double se = std::sqrt(q * (1 - q) / N);
  for (double c : count) CHECK(std::abs(c / N - q) < 5 * se);
}

TEST_CASE("range windows") {
  const auto w = sample_walk(3, 1000, 11);
  CHECK(range_window(w, 0, 1000) == w.range);
  CHECK(range_window(w, 17, 17).size() == 1);
  CHECK(range_window(w, 17, 17).contains(w.path[17]));
  CHECK(set_union(range_window(w, 0, 500), range_window(w, 500, 1000)) == w.range);
  // monotone in the horizon
  for (std::uint64_t m : {10u, 100u, 700u}) {
    const auto small = range_window(w, 0, m);
    for (const auto& p : small) CHECK(range_window(w, 0, m + 50).contains(p));
  }
  const auto rc = range_window_recentered(w, 200, 400);
  CHECK(rc.contains(LatticePoint(3)));
  CHECK(rc == range_window(w, 200, 400).recentered(w.path[200]));
  CHECK_THROWS_AS(range_window(w, 5, 1001), ValidationError);
  CHECK_THROWS_AS(range_window(w, 6, 5), ValidationError);
}

TEST_CASE("local times") {
  const auto w = sample_walk(3, 500, 2);
  const auto one = local_times(w, 1);
  CHECK(one.total() == 1);
  CHECK(one.at(LatticePoint(3)) == 1);
  CHECK(local_times(w, 500).total() == 500);
  const LatticePoint o(3), e = LatticePoint::unit(3, 0);
  const auto bf = make_walk_record(3, {o, e, o, e});
  const auto lt = local_times(bf, 4);
  CHECK(lt.sites.size() == 2);
  CHECK(lt.at(o) == 2);
  CHECK(lt.at(e) == 2);
  CHECK_THROWS_AS(local_times(bf, 5), ValidationError);
}

TEST_CASE("range growth agrees with an independent stepper") {
  // d = 3, n = 10^5, 10^3 replicas on each side
  const int d = 3, n = 100000, R = 1000;
  std::vector<double> ours;
  for (int r = 0; r < R; ++r) {
    auto rng = replica_stream(123, r, StreamTag::kWalk);
    ours.push_back(static_cast<double>(sample_walk(d, n, rng).range.size()) / n);
  }
  const auto theirs = oracle::range_fractions(d, n, R, 321);
  const double se = std::sqrt(sample_variance(ours) / R + sample_variance(theirs) / R);
  CHECK(std::abs(sample_mean(ours) - sample_mean(theirs)) < 3 * se);
}
