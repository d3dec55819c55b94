#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "predrate/geometry.hpp"

using namespace predrate;

namespace {

const Grid kGrid(-12.0, 12.0, 2401);

RegimeSetup iid_setup(std::vector<double> means, std::size_t truth, std::vector<double> weights = {}) {
  Family fam = build_gaussian_location_family(kGrid, means, 1.0);
  RegimeSetup s;
  s.regime = Regime::iid;
  s.prior = weights.empty() ? std::make_shared<const AtomicPrior>(AtomicPrior::uniform(std::move(fam)))
                            : std::make_shared<const AtomicPrior>(AtomicPrior(std::move(fam), std::move(weights)));
  s.truth = Truth::well_specified(s.prior->family()[truth]);
  return s;
}

}  // namespace

TEST_CASE("rate schedule") {
  RateSchedule s{{100, 200, 400}, 1.0, 1.0 / 3.0, 0.0};
  CHECK(s.epsilon(1000) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK_NOTHROW(s.validate());
  RateSchedule bad{{200, 100}, 1.0, 1.0 / 3.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  RateSchedule flat{{100, 200}, 1.0, 0.5, 0.0};  // n eps^2 constant
  CHECK_THROWS_AS(flat.validate(), std::invalid_argument);
}

TEST_CASE("thickness profile") {
  // Truth atom with weight p: mass >= p, implied C -> 0.
  auto setup = iid_setup({0.0, 1.0, 2.0}, 0, {0.2, 0.5, 0.3});
  RateSchedule sched{{100, 1000, 10000}, 1.0, 1.0 / 3.0, 0.0};
  const auto rows = thickness_profile(setup, sched);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(r.neighborhood_mass >= 0.2 - 1e-12);
  CHECK(rows[2].implied_C < rows[0].implied_C);
  CHECK(rows[2].implied_C == doctest::Approx(-std::log(0.2) / (10000 * sched.epsilon(10000) * sched.epsilon(10000))));

  // Exactly one atom in the (K, V) neighborhood at eps = 0.3: K, V <= 0.09.
  auto three = iid_setup({0.05, 0.35, 0.9}, 0, {0.5, 0.3, 0.2});
  three.truth = Truth::well_specified(FamilyMember{99, gaussian_density(kGrid, 0.0, 1.0)});
  RegimeMetric metric(three, 100);
  int inside = 0;
  double expected = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const double m = std::vector<double>{0.05, 0.35, 0.9}[j];
    const bool in = oracle::gaussian_kl(0.0, m) <= 0.09 && oracle::gaussian_v(0.0, m) <= 0.09;
    if (in) {
      ++inside;
      expected += three.prior->weights()[j];
    }
  }
  REQUIRE(inside == 1);
  CHECK(thickness_at(metric, 0.3).neighborhood_mass == doctest::Approx(expected).epsilon(1e-12));

  // Empty neighborhood reports +inf.
  auto far = iid_setup({3.0, 4.0}, 0);
  far.truth = Truth::well_specified(FamilyMember{99, gaussian_density(kGrid, 0.0, 1.0)});
  RegimeMetric fm(far, 100);
  const auto empty = thickness_at(fm, 0.3);
  CHECK(empty.neighborhood_mass == 0.0);
  CHECK(std::isinf(empty.implied_C));
}

TEST_CASE("separation") {
  const GridDensity ref = gaussian_density(kGrid, 0.0, 1.0);
  const GridDensity self[] = {ref};
  const auto s0 = check_separation(ref, self, 1e-6);
  CHECK(!s0.separated);
  CHECK(s0.min_gap == 0.0);
  CHECK_THROWS_AS(check_separation(ref, std::span<const GridDensity>{}, 0.1), std::invalid_argument);

  // r^2/8 separation of the radius r/2 ball around f0 when H(f*, f0) > r.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const double m0 = 0.8 + 1.5 * u(rng);
    const double H0 = oracle::gaussian_hellinger(0.0, m0);
    const double r = H0 * (0.3 + 0.65 * u(rng));
    std::vector<GridDensity> ball;
    for (int k = 0; k < 6; ++k) {
      const double m = m0 + 1.5 * (u(rng) - 0.5);
      if (oracle::gaussian_hellinger(m0, m) <= r / 2.0) ball.push_back(gaussian_density(kGrid, m, 1.0));
    }
    ball.push_back(gaussian_density(kGrid, m0, 1.0));
    CHECK(check_separation(ref, ball, r * r / 8.0).separated);
  }

  // Flag agrees with the exhaustive minimum.
  for (int t = 0; t < 20; ++t) {
    std::vector<GridDensity> members;
    double lo = 1.0;
    for (int k = 0; k < 4; ++k) {
      const double m = 3.0 * (u(rng) - 0.5);
      members.push_back(gaussian_density(kGrid, m, 1.0));
      lo = std::min(lo, 1.0 - oracle::gaussian_affinity(0.0, m));
    }
    const double delta = 0.05 * u(rng);
    const auto res = check_separation(ref, members, delta);
    CHECK(std::abs(res.min_gap - lo) < 1e-8);
    CHECK(res.separated == (lo > delta));
  }
}

TEST_CASE("mixture closure") {
  const GridDensity c = gaussian_density(kGrid, 0.0, 1.0);
  const GridDensity one[] = {c};
  CHECK(check_mixture_closure(c, one, 0.0, 10, 1).closed);

  // Two members at the boundary of the ball, weight grid in h-form.
  const double radius = oracle::gaussian_hellinger(0.0, 0.9);
  const GridDensity a = gaussian_density(kGrid, -0.9, 1.0), b = gaussian_density(kGrid, 0.9, 1.0);
  const GridDensity pair[] = {a, b};
  CHECK(check_mixture_closure(c, pair, radius, 64, 3).closed);
  const double hmax = std::max(h_affinity_gap(c, a), h_affinity_gap(c, b));
  for (int k = 0; k <= 20; ++k) {
    const double w[] = {k / 20.0, 1.0 - k / 20.0};
    CHECK(h_affinity_gap(c, mixture(pair, w)) <= hmax + 1e-9);
  }
}

TEST_CASE("greedy cover") {
  const std::size_t ids[] = {0, 1, 2, 3};
  auto close = [](std::size_t, std::size_t) { return 0.01; };
  CHECK(greedy_cover(ids, 0.1, close).size() == 1);
  auto far = [](std::size_t a, std::size_t b) { return a == b ? 0.0 : 1.0; };
  CHECK(greedy_cover(ids, 0.1, far).size() == 4);

  // 21-atom location family: greedy within a factor 2 of the exact minimum on
  // 15-atom windows, and the full cover covers every target atom.
  std::vector<double> means;
  for (int k = 0; k <= 20; ++k) means.push_back(-2.0 + 0.2 * k);
  auto setup = iid_setup(means, 10);
  RegimeMetric metric(setup, 1);
  std::vector<std::size_t> all(21);
  for (std::size_t j = 0; j < 21; ++j) all[j] = j;
  const auto cover = greedy_cover(metric, all, 0.2);
  std::vector<bool> covered(21, false);
  for (const auto& b : cover) {
    for (std::size_t id : b.member_ids) {
      covered[id] = true;
      CHECK(metric.ball_distance(b.center_id, id) <= 0.2 + 1e-12);
    }
  }
  CHECK(std::all_of(covered.begin(), covered.end(), [](bool x) { return x; }));

  std::vector<std::size_t> window(all.begin(), all.begin() + 15);
  std::vector<std::vector<double>> dist(15, std::vector<double>(15));
  for (std::size_t a = 0; a < 15; ++a) {
    for (std::size_t b = 0; b < 15; ++b) dist[a][b] = oracle::gaussian_hellinger(means[a], means[b]);
  }
  const std::size_t exact = oracle::exact_cover_size(dist, 0.2);
  const std::size_t greedy = greedy_cover(metric, window, 0.2).size();
  CHECK(greedy >= exact);
  CHECK(greedy <= 2 * exact);

  // Larger radius never needs more balls.
  std::size_t prev = greedy_cover(metric, all, 0.05).size();
  for (double r : {0.1, 0.2, 0.4, 0.8}) {
    const std::size_t now = greedy_cover(metric, all, r).size();
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("Condition P sum") {
  const double unit[] = {1.0};
  CHECK(condition_p_sum(unit, 2.0, 1.0, 10, 0.1).S_n == 1.0);
  const double masses[] = {0.5, 0.25, 0.25};
  CHECK(condition_p_sum(masses, 2.0, 1.0, 10, 0.1).S_n == doctest::Approx(1.0 / std::sqrt(2.0) + 1.0).epsilon(1e-14));
  CHECK(condition_p_sum(masses, 2.0, 1.0, 10, 0.1).S_n == doctest::Approx(1.7071).epsilon(1e-4));
  CHECK_THROWS_WITH_AS(condition_p_sum(masses, 1.0, 1.0, 10, 0.1), "Condition P requires beta > 1",
                       std::invalid_argument);
  RateSchedule sched{{100, 200, 400}, 0.5, 1.0 / 3.0, 0.0};
  double prev = 2.0;
  for (std::size_t n : sched.n_values) {
    const double d = condition_p_sum(masses, 2.0, 1.0, n, sched.epsilon(n)).discounted;
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("sieve from cover") {
  const double unit[] = {1.0};
  const auto one = build_sieve_from_masses(unit, 2.0, 1.0, 1.0, 1, 0.0);
  CHECK(one.J_n == 1);
  CHECK(one.complement_mass == 0.0);

  std::vector<double> geometric;
  for (int j = 1; j <= 20; ++j) geometric.push_back(std::pow(2.0, -j));
  RateSchedule sched{{100, 200, 400}, 0.3, 1.0 / 3.0, 0.0};
  for (std::size_t n : sched.n_values) {
    const double eps = sched.epsilon(n);
    const auto s = build_sieve_from_masses(geometric, 2.0, 1.5, 2.5, n, eps);
    CHECK(s.J_n == oracle::direct_sieve_count(s.S_n, 2.0, 1.5, n, eps));
    CHECK(s.complement_mass <= s.tail_sum_bound + 1e-15);
    CHECK(s.mass_bound_holds);
    CHECK(s.entropy_bound_holds);
    CHECK(!s.covering_exhausted);
  }

  // Shuffled input gives the same sieve.
  auto setup = iid_setup({-1.0, -0.5, 0.0, 0.5, 1.0, 1.5}, 2, {6, 5, 4, 3, 2, 1});
  RegimeMetric metric(setup, 1);
  std::vector<std::size_t> ids{0, 1, 2, 3, 4, 5};
  auto cover = greedy_cover(metric, ids, 0.15);
  const auto base = build_sieve_from_cover(cover, *setup.prior, 2.0, 0.5, 1.0, 50, 0.2);
  std::shuffle(cover.begin(), cover.end(), std::mt19937_64(2));
  const auto shuffled = build_sieve_from_cover(cover, *setup.prior, 2.0, 0.5, 1.0, 50, 0.2);
  CHECK(base.J_n == shuffled.J_n);
  CHECK(base.sieve_ids == shuffled.sieve_ids);
  CHECK(base.complement_mass == shuffled.complement_mass);
  for (std::size_t k = 0; k < base.balls.size(); ++k) CHECK(base.balls[k].center_id == shuffled.balls[k].center_id);

  CHECK_THROWS_AS(sieve_count(1.0, 1.0, 1.0, 10, 0.1), std::invalid_argument);
}

TEST_CASE("admissible M") {
  const double M = admissible_M(0.5, 1.0);
  CHECK(M * M > 4.0 * (1.5 + 2.0));
  CHECK((M - 1e-3) * (M - 1e-3) <= 4.0 * (1.5 + 2.0));
}

TEST_CASE("regime metric for regression and Markov") {
  const auto design = default_design(20);
  const LinearCoefficients coef[] = {{0.0, 0.0}, {0.3, 0.0}, {0.0, 1.0}};
  RegimeSetup reg;
  reg.regime = Regime::regression;
  reg.prior = std::make_shared<const AtomicPrior>(AtomicPrior::uniform(build_regression_family(design, coef)));
  reg.truth = Truth::well_specified(reg.prior->family()[0]);
  RegimeMetric rm(reg, 20);
  CHECK(std::abs(rm.target_distance(1) - oracle::gaussian_hellinger(0.0, 0.3)) < 1e-6);
  double sum = 0.0;
  for (double x : design) sum += std::pow(oracle::gaussian_hellinger(0.0, x), 2);
  CHECK(std::abs(rm.target_distance(2) - std::sqrt(sum / 20.0)) < 1e-6);
  CHECK(std::abs(rm.ball_distance(0, 2) - oracle::gaussian_hellinger(0.0, 1.0)) < 1e-6);
  CHECK(rm.thickness(1).K == doctest::Approx(0.045).epsilon(1e-5));

  RegimeSetup mk;
  mk.regime = Regime::markov;
  mk.prior = std::make_shared<const AtomicPrior>(AtomicPrior::uniform(build_markov_family(std::vector<double>{0.5, 0.8})));
  mk.truth = Truth::well_specified(mk.prior->family()[0]);
  RegimeMetric mm(mk, 10);
  CHECK(std::abs(mm.thickness(1).K - oracle::ar1_kl(0.5, 0.8)) < 1e-4);
  // Theta_0 membership from the stationary variances s0, s1: the log ratio is a + b y^2.
  const double s0 = 1.0 / 0.75, s1 = 1.0 / 0.36;
  const double a = 0.5 * std::log(s1 / s0), b = 0.5 * (1.0 / s1 - 1.0 / s0);
  const double ku = a + b * s0;
  const double vu = a * a + 2.0 * a * b * s0 + 3.0 * b * b * s0 * s0;
  CHECK(mm.thickness(1).admissible == (ku <= 1.0 && vu <= 1.0));
  CHECK(mm.thickness(0).admissible);
}
