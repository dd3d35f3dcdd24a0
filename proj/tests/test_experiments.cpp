#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rangecap/decomp.hpp"
#include "rangecap/errors.hpp"
#include "rangecap/experiments.hpp"

using namespace rangecap;

namespace {

struct StopGuard {
  StopGuard() { stop_requested() = true; }
  ~StopGuard() { stop_requested() = false; }
};

CampaignOptions options(std::uint64_t seed, int workers = 1) {
  CampaignOptions o;
  o.seed = seed;
  o.workers = workers;
  return o;
}

}  // namespace

TEST_CASE("parallel map returns results in index order") {
  for (int w : {1, 2, 5}) {
    const auto v = parallel_map<std::size_t>(97, w, [](std::size_t i) { return i * i; });
    REQUIRE(v.size() == 97);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == i * i);
  }
  CHECK_THROWS_WITH_AS(parallel_map<int>(10, 3,
                                         [](std::size_t i) -> int {
                                           if (i == 4) throw std::runtime_error("four");
                                           if (i == 7) throw std::runtime_error("seven");
                                           return 0;
                                         }),
                       "four", std::runtime_error);
}

TEST_CASE("backend names") {
  CHECK(parse_backend("auto") == Backend::kAuto);
  CHECK(parse_backend("exact") == Backend::kExact);
  CHECK(parse_backend("escape") == Backend::kEscape);
  CHECK(backend_name(Backend::kEscape) == "escape");
  CHECK_THROWS_AS(parse_backend("nope"), ValidationError);
}

TEST_CASE("capacity policy") {
  const auto g = GreenOracle::build_default(5);
  const auto w = replica_walk(5, 400, 3, 0);
  CapacityPolicy p;
  const auto a = capacity_with_policy(w.range, g, p, 1);
  CHECK(a.backend == "direct");
  CHECK(a.value == doctest::Approx(capacity_exact(w.range, g)).epsilon(1e-12));
  CHECK(a.standard_error == 0);
  p.direct_max = 100;
  CHECK(capacity_with_policy(w.range, g, p, 1).backend == "iterative");
  p.iterative_max = 100;
  const auto e = capacity_with_policy(w.range, g, p, 1);
  CHECK(e.backend == "escape");
  CHECK(e.standard_error > 0);
  CHECK(std::abs(e.value - a.value) < 4 * e.standard_error + e.bias_bound);
  CHECK(default_escape_radius_factor(3) > default_escape_radius_factor(5));
}

TEST_CASE("replica walks are reproducible") {
  const auto a = replica_walk(4, 100, 9, 3);
  const auto b = replica_walk(4, 100, 9, 3);
  const auto c = replica_walk(4, 100, 9, 4);
  CHECK(a.path == b.path);
  CHECK(a.path != c.path);
  CHECK(replica_seed(9, 100, 3) != replica_seed(9, 100, 4));
  CHECK(replica_seed(9, 100, 3) != replica_seed(9, 200, 3));
}

TEST_CASE("campaign output is independent of the worker count") {
  const auto g = GreenOracle::build_default(5);
  const auto one = run_lln(5, {64, 128}, 24, g, options(3, 1));
  const auto four = run_lln(5, {64, 128}, 24, g, options(3, 4));
  REQUIRE(one.points.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(one.points[i].values == four.points[i].values);
    CHECK(one.points[i].stats.mean == four.points[i].stats.mean);
  }
  CHECK(one.fitted == four.fitted);
  // the values are the exact capacities of the replica walks
  CHECK(one.points[0].values[5] == doctest::Approx(capacity_exact(replica_walk(5, 64, 3, 5).range, g)).epsilon(1e-12));
}

TEST_CASE("LLN report") {
  const auto g = GreenOracle::build_default(6);
  const auto r = run_lln(6, {128, 256, 512}, 40, g, options(4));
  for (const char* k : {"alpha_hat", "alpha_ci_low", "alpha_ci_high", "first_over_last", "top_two_relative_change"})
    CHECK(r.fitted.count(k) == 1);
  CHECK(r.fitted.at("alpha_ci_low") <= r.fitted.at("alpha_hat"));
  CHECK(r.fitted.at("alpha_hat") <= r.fitted.at("alpha_ci_high"));
  CHECK(r.fitted.at("alpha_hat") > 0.3);
  CHECK(r.fitted.at("alpha_hat") < 1.0);
  for (const auto& p : r.points) {
    CHECK(p.extras.at("cap_over_n") == doctest::Approx(p.stats.mean / p.n));
    CHECK(p.backend == "direct");
  }
}

TEST_CASE("interval width shrinks with replicas") {
  const auto g = GreenOracle::build_default(6);
  const auto a = run_lln(6, {256}, 100, g, options(6));
  const auto b = run_lln(6, {256}, 400, g, options(6));
  const double ratio = b.points[0].stats.se_mean / a.points[0].stats.se_mean;
  CHECK(ratio > 0.3);
  CHECK(ratio < 0.75);
}

TEST_CASE("variance report") {
  const auto g = GreenOracle::build_default(6);
  const auto r = run_variance(6, {64, 128, 256}, 60, g, options(5));
  for (const char* k : {"gamma_hat", "gamma_se", "gamma_ci_low", "gamma_ci_high", "r2", "sigma2_hat"})
    CHECK(r.fitted.count(k) == 1);
  CHECK(r.fitted.at("sigma2_hat") == r.fitted.at("gamma_hat"));
  for (const auto& p : r.points) CHECK(p.extras.at("var_over_n") == doctest::Approx(p.extras.at("var_corrected") / p.n));
}

TEST_CASE("d = 4 and d = 3 reports") {
  const auto g4 = GreenOracle::build_default(4);
  const auto r4 = run_d4({64, 128}, 20, g4, options(7));
  CHECK(r4.fitted.at("target") == doctest::Approx(std::numbers::pi * std::numbers::pi / 8));
  CHECK(r4.labels.count("convergence") == 1);
  for (const auto& p : r4.points)
    CHECK(p.extras.at("a_n") == doctest::Approx(p.stats.mean * std::log(double(p.n)) / p.n));

  const auto g3 = GreenOracle::build_default(3);
  const auto r3 = run_d3({64, 128, 256}, 20, g3, options(8));
  CHECK(r3.fitted.at("jensen_violations") == 0);
  CHECK(r3.fitted.count("exponent") == 1);
  for (const auto& p : r3.points) CHECK(p.extras.at("jensen_mean") <= p.stats.mean);
}

TEST_CASE("occupation-measure bound is below the capacity") {
  const auto g = GreenOracle::build_default(3);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto w = sample_walk(3, 300, 50 + s);
    CHECK(jensen_functional(w, g) <= capacity_exact(w.range, g) * (1 + 1e-10));
  }
}

TEST_CASE("first intersection time against a brute-force scan") {
  const std::uint64_t H = 40;
  for (std::uint64_t r = 0; r < 200; ++r) {
    auto a = replica_stream(11, r, StreamTag::kWalk);
    auto b = replica_stream(11, r, StreamTag::kSecondWalk);
    auto c = replica_stream(11, r, StreamTag::kThirdWalk);
    const auto t = first_intersection_time(4, H, a, b, c);
    auto a2 = replica_stream(11, r, StreamTag::kWalk);
    auto b2 = replica_stream(11, r, StreamTag::kSecondWalk);
    auto c2 = replica_stream(11, r, StreamTag::kThirdWalk);
    std::vector<LatticePoint> p1{LatticePoint(4)}, p2{LatticePoint(4)}, p3{LatticePoint(4)};
    for (std::uint64_t k = 0; k < H; ++k) {
      LatticePoint x = p1.back(), y = p2.back(), z = p3.back();
      random_step(x, 4, a2);
      random_step(y, 4, b2);
      random_step(z, 4, c2);
      p1.push_back(x);
      p2.push_back(y);
      p3.push_back(z);
    }
    std::uint64_t expected = H + 1;
    for (std::uint64_t s = 1; s <= H && expected > H; ++s) {
      bool hit = p3[s].is_origin();
      for (std::uint64_t i = 1; i <= s && !hit; ++i)
        for (std::uint64_t j = 0; j <= s && !hit; ++j) hit = p1[i] == p2[j] || p1[i] == p3[j];
      if (hit) expected = s;
    }
    CHECK(t == expected);
  }
}

TEST_CASE("non-intersection probabilities are nested") {
  const auto r = run_nonintersection({4, 16, 64, 256}, 4000, options(12));
  REQUIRE(r.points.size() == 4);
  for (std::size_t i = 1; i < r.points.size(); ++i) CHECK(r.points[i].stats.mean <= r.points[i - 1].stats.mean);
  CHECK(r.points[0].stats.mean > 0);
  CHECK(r.points[0].stats.mean < 1);
  NonintersectionOptions ni;
  ni.long_walk_replicas = 500;
  ni.horizon_multiplier = 4;
  const auto l = run_nonintersection({16, 64}, 1000, options(12), ni);
  for (const auto& p : l.points) CHECK(p.extras.at("long_walk_log_n_p") <= p.extras.at("log_n_p") + 4 * p.extras.at("log_n_p_se") + 4 * p.extras.at("long_walk_log_n_p_se"));
}

TEST_CASE("CLT diagnostics") {
  const auto g = GreenOracle::build_default(6);
  CHECK_THROWS_AS(run_clt(6, 256, 100, g, options(1)), ValidationError);
  CltOptions c;
  c.lindeberg_grid = {256};
  c.ks_simulations = 200;
  const auto d = run_clt(6, 256, 200, g, options(2), c);
  CHECK(d.standardized.size() == 200);
  double m = 0;
  for (double z : d.standardized) m += z;
  CHECK(std::abs(m / 200) < 1e-9);
  CHECK(d.ks_pvalue >= 0);
  CHECK(d.ks_pvalue <= 1);
  REQUIRE(d.lindeberg.size() == 1);
  CHECK(d.lindeberg[0].m == 64);
  CHECK(d.lindeberg[0].levels == 2);
  CHECK(d.lindeberg[0].sums.size() == 4);
}

TEST_CASE("an interrupt leaves a partial report") {
  const auto g = GreenOracle::build_default(5);
  {
    StopGuard stop;
    const auto r = run_lln(5, {64, 128}, 10, g, options(1));
    CHECK(r.partial);
    const auto n = run_nonintersection({8}, 10, options(1));
    CHECK(n.partial);
  }
  CHECK_FALSE(run_lln(5, {64}, 10, g, options(1)).partial);
}

TEST_CASE("backend comparison") {
  const auto g = GreenOracle::build_default(5);
  const auto c = compare_backends(5, 256, 10, g, options(13));
  CHECK(c.agree);
  CHECK(c.escape_se > 0);
  CHECK(std::abs(c.escape - c.exact) <= 3 * c.escape_se + c.escape_bias);
}

TEST_CASE("conjecture campaign and intersections") {
  CHECK(intersection_scale(5, 1000.0) == 1.0);
  CHECK(intersection_scale(4, std::exp(2.0)) == doctest::Approx(2.0));
  const auto w = make_walk_record(
      3, {LatticePoint(3), LatticePoint::unit(3, 0), LatticePoint(3), LatticePoint::unit(3, 0), LatticePoint(3)});
  CHECK(half_intersection(w) == 2);
  const auto g = GreenOracle::build_default(5);
  const auto r = run_conjectures(5, {32, 64}, 20, g, options(14));
  for (const auto& p : r.points) {
    CHECK(p.extras.count("intersection_mean") == 1);
    CHECK(p.extras.count("var_over_nlogn") == 1);
  }
}
