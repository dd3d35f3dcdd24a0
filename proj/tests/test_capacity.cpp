#include <doctest.h>

#include <cmath>

#include "rangecap/capacity.hpp"
#include "rangecap/errors.hpp"
#include "rangecap/lattice.hpp"

using namespace rangecap;

namespace {

SiteSet random_set(int d, std::size_t count, int r, std::uint64_t seed) {
  auto rng = StreamRng::for_path(seed, {static_cast<std::uint64_t>(d)});
  std::vector<LatticePoint> pts;
  for (std::size_t i = 0; i < count; ++i) {
    LatticePoint x(d);
    for (int k = 0; k < d; ++k) x[k] = static_cast<Coord>(rng.below(2 * r + 1)) - r;
    pts.push_back(x);
  }
  return SiteSet(d, pts);
}

}  // namespace

TEST_CASE("capacity of one and two sites") {
  for (int d = 3; d <= 7; ++d) {
    CAPTURE(d);
    const auto g = GreenOracle::build_default(d);
    const double g0 = green_exact(d, LatticePoint(d), 1e-11);
    const SiteSet one(d, {LatticePoint(d)});
    CHECK(capacity_exact(one, g) == doctest::Approx(1.0 / g0).epsilon(1e-10));
    const SiteSet two(d, {LatticePoint(d), LatticePoint::unit(d, 0)});
    CHECK(capacity_exact(two, g) == doctest::Approx(2.0 / (2.0 * g0 - 1.0)).epsilon(1e-10));
    CHECK_THROWS_AS(capacity_exact(SiteSet(d), g), ValidationError);
  }
}

TEST_CASE("translation invariance") {
  const auto g = GreenOracle::build_default(4);
  const auto A = random_set(4, 120, 8, 3);
  const double c = capacity_exact(A, g);
  CHECK(capacity_exact(A.translated(LatticePoint{100, -7, 3, 2000}), g) == doctest::Approx(c).epsilon(1e-12));
  CHECK(capacity_exact(A.recentered(A[17]), g) == doctest::Approx(c).epsilon(1e-12));
}

TEST_CASE("monotone and subadditive") {
  const auto g = GreenOracle::build_default(5);
  const auto A = random_set(5, 80, 5, 11);
  const auto B = random_set(5, 90, 5, 12);
  const auto U = set_union(A, B);
  const double ca = capacity_exact(A, g), cb = capacity_exact(B, g), cu = capacity_exact(U, g);
  CHECK(cu >= ca - 1e-10);
  CHECK(cu >= cb - 1e-10);
  CHECK(cu <= ca + cb + 1e-10);
  CHECK(cu <= static_cast<double>(U.size()) / green_exact(5, LatticePoint(5), 1e-10) * 2);
}

TEST_CASE("equilibrium measure entries are escape probabilities") {
  const auto g = GreenOracle::build_default(3);
  auto rng = StreamRng::for_path(21, {});
  const auto w = sample_walk(3, 400, rng);
  const auto e = equilibrium_measure(w.range, g);
  CHECK(e.residual < 1e-6);
  double sum = 0;
  for (double v : e.measure) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(e.capacity).epsilon(1e-12));
}

TEST_CASE("direct, dense iterative and matrix-free solves agree") {
  const auto g = GreenOracle::build_default(6);
  auto rng = StreamRng::for_path(22, {});
  const auto w = sample_walk(6, 600, rng);
  SolverOptions direct;
  SolverOptions dense;
  dense.direct_max = 0;
  SolverOptions free;
  free.direct_max = 0;
  free.dense_max = 0;
  const auto a = equilibrium_measure(w.range, g, direct);
  const auto b = equilibrium_measure(w.range, g, dense);
  const auto c = equilibrium_measure(w.range, g, free);
  CHECK(a.method != b.method);
  CHECK(b.method != c.method);
  CHECK(b.capacity == doctest::Approx(a.capacity).epsilon(1e-7));
  CHECK(c.capacity == doctest::Approx(a.capacity).epsilon(1e-7));
}

TEST_CASE("variational lower bound") {
  const auto g = GreenOracle::build_default(5);
  const SiteSet one(5, {LatticePoint(5)});
  const auto v1 = capacity_variational(one, g, 10, 1e-10);
  CHECK(v1.lower_bound == doctest::Approx(1.0 / g.origin_value()).epsilon(1e-14));
  CHECK(v1.iterations <= 1);

  const auto A = random_set(5, 50, 3, 31);
  const double exact = capacity_exact(A, g);
  for (int it : {1, 10, 100}) {
    const auto v = capacity_variational(A, g, it, 1e-12);
    CHECK(v.lower_bound <= exact * (1 + 1e-9));
  }
  const auto v = capacity_variational(A, g, 20000, 1e-9);
  CHECK(v.converged);
  CHECK(std::abs(v.lower_bound - exact) < 1e-4 * exact);
  CHECK(v.upper_bound >= exact * (1 - 1e-9));
  double total = 0;
  for (double x : v.nu) {
    CHECK(x >= 0.0);
    total += x;
  }
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("escape estimate for a single site") {
  const auto g = GreenOracle::build_default(3);
  const SiteSet one(3, {LatticePoint(3)});
  EscapeOptions opt;
  opt.trials_per_site = 40000;
  opt.radius = 300;
  opt.seed = 5;
  const auto e = capacity_escape_mc(one, g, opt);
  const double target = 1.0 / g.origin_value();
  CHECK(e.trials == 40000);
  CHECK(e.bias_bound > 0);
  CHECK(e.bias_bound < 0.01);
  CHECK(std::abs(e.capacity - target) < 3 * e.standard_error + e.bias_bound);
  CHECK(e.capacity >= target - 3 * e.standard_error);
}

TEST_CASE("escape walker leaps are exact in distribution") {
  // with no targets nearby, the leaped walk lands on the same law as plain steps
  auto rng = StreamRng::for_path(41, {});
  const int N = 200000;
  double m2 = 0, m4 = 0;
  for (int t = 0; t < N; ++t) {
    LatticePoint p(3);
    add_k_step_displacement(p.data(), 3, 64, rng);
    const double x = p[0];
    m2 += x * x;
    m4 += x * x * x * x;
  }
  m2 /= N;
  m4 /= N;
  // one coordinate of a 64-step walk in d = 3: E[x^2] = 64/3, E[x^4] = 3(64/3)^2 - 2*64/3 * (1 - 1/3) ... computed directly
  // x is a sum of 64 i.i.d. steps taking +-1 w.p. 1/6 each and 0 w.p. 2/3: E x^4 = 64 m4 + 3*64*63 m2^2
  const double s2 = 1.0 / 3, s4 = 1.0 / 3;
  const double ex2 = 64 * s2, ex4 = 64 * s4 + 3 * 64 * 63 * s2 * s2;
  CHECK(std::abs(m2 - ex2) < 5 * std::sqrt((ex4 - ex2 * ex2) / N));
  CHECK(m4 == doctest::Approx(ex4).epsilon(0.03));
}

TEST_CASE("exact, variational and escape agree on a range") {
  const auto g = GreenOracle::build_default(5);
  auto rng = StreamRng::for_path(23, {});
  const auto w = sample_walk(5, 300, rng);
  const double exact = capacity_exact(w.range, g);
  const auto v = capacity_variational(w.range, g, 20000, 1e-9);
  CHECK(std::abs(v.lower_bound - exact) < 1e-4 * exact);
  EscapeOptions opt;
  opt.trials_per_site = 400;
  opt.seed = 9;
  const auto e = capacity_escape_mc(w.range, g, opt);
  CHECK(std::abs(e.capacity - exact) < 3 * e.standard_error + e.bias_bound);
  // site-sampled variant targets the same quantity
  opt.site_samples = 40000;
  const auto s = capacity_escape_mc(w.range, g, opt);
  CHECK(s.site_sampled);
  CHECK(std::abs(s.capacity - exact) < 3 * s.standard_error + s.bias_bound);
}

TEST_CASE("escape monotone in the set") {
  const auto g = GreenOracle::build_default(6);
  auto rng = StreamRng::for_path(24, {});
  const auto w = sample_walk(6, 512, rng);
  const auto half = range_window(w, 0, 256);
  EscapeOptions opt;
  opt.trials_per_site = 200;
  opt.seed = 1;
  const auto a = capacity_escape_mc(half, g, opt);
  const auto b = capacity_escape_mc(w.range, g, opt);
  CHECK(a.capacity < b.capacity + 3 * std::hypot(a.standard_error, b.standard_error));
  CHECK(std::abs(b.capacity - capacity_exact(w.range, g)) < 3 * b.standard_error + b.bias_bound);
}

TEST_CASE("fresh-time representation") {
  const auto g = GreenOracle::build_default(6);
  const auto w0 = sample_walk(6, 0, 3);
  const auto r0 = capacity_representation_mc(w0, 100000, 20000, g, 1);
  CHECK(r0.fresh_times == 1);
  CHECK(std::abs(r0.capacity - 1.0 / g.origin_value()) < 3 * r0.standard_error + r0.bias_bound + 1e-3);

  const auto w = sample_walk(6, 256, 4);
  const auto r = capacity_representation_mc(w, 100000, 300, g, 2);
  const double exact = capacity_exact(w.range, g);
  CHECK(r.fresh_times == w.range.size());
  CHECK(r.capacity <= static_cast<double>(w.range.size()));
  CHECK(r.bias_direction == "upward");
  CHECK(std::abs(r.capacity - exact) < 3 * r.standard_error + r.bias_bound + 1e-3 * exact);
}

TEST_CASE("solver input validation") {
  const auto g3 = GreenOracle::build_default(3);
  CHECK_THROWS_AS(capacity_exact(SiteSet(4, {LatticePoint(4)}), g3), ValidationError);
}
