#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "predrate/experiments.hpp"
#include "predrate/numerics.hpp"

using namespace predrate;

namespace {

const Grid kGrid(-12.0, 12.0, 481);

RegimeSetup iid_setup(std::vector<double> means, std::size_t truth) {
  RegimeSetup s;
  s.regime = Regime::iid;
  s.prior = std::make_shared<const AtomicPrior>(
      AtomicPrior::uniform(build_gaussian_location_family(kGrid, means, 1.0)));
  s.truth = Truth::well_specified(s.prior->family()[truth]);
  return s;
}

}  // namespace

TEST_CASE("data generation") {
  const Grid fine(-12.0, 12.0, 4001);
  const FamilyMember normal{0, gaussian_density(fine, 0.0, 1.0)};
  const auto a = generate_data(Regime::iid, normal, 100000, 42);
  const auto b = generate_data(Regime::iid, normal, 100000, 42);
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].y == b[i].y;
  CHECK(same);
  std::vector<double> ys;
  for (const auto& o : a) ys.push_back(o.y);
  CHECK(std::abs(mean_and_error(ys).mean) < 3.0 / std::sqrt(1e5));

  const FamilyMember ar{0, MarkovParam{0.6, 1.0}};
  const auto m = generate_data(Regime::markov, ar, 100000, 7);
  REQUIRE(m.size() == 100001);
  double mean = 0.0;
  for (const auto& o : m) mean += o.y;
  mean /= static_cast<double>(m.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    den += (m[i].y - mean) * (m[i].y - mean);
    if (i > 0) num += (m[i].y - mean) * (m[i - 1].y - mean);
  }
  CHECK(std::abs(num / den - 0.6) < 0.01);
  for (std::size_t i = 1; i < 10; ++i) CHECK(*m[i].context.previous == m[i - 1].y);

  CHECK_THROWS_AS(generate_data(Regime::markov, normal, 10, 1), std::invalid_argument);
}

TEST_CASE("rate fit") {
  const std::size_t ns[] = {50, 100, 200, 400, 800};
  std::vector<double> eps, exact, inv;
  for (std::size_t n : ns) {
    eps.push_back(0.5 * std::pow(static_cast<double>(n), -1.0 / 3.0));
    exact.push_back(eps.back() * eps.back());
    inv.push_back(3.0 / static_cast<double>(n));
  }
  const auto f1 = fit_rate(ns, exact, eps);
  CHECK(f1.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(f1.fitted_constant == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f1.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit_rate(ns, inv, eps).slope == doctest::Approx(-1.0).epsilon(1e-12));

  std::vector<double> holes = inv;
  holes[1] = 0.0;
  const auto f2 = fit_rate(ns, holes, eps);
  CHECK(f2.excluded == std::vector<std::size_t>{1});
  holes[2] = holes[3] = 0.0;
  CHECK_THROWS_AS(fit_rate(ns, holes, eps), std::invalid_argument);
}

TEST_CASE("Cesaro statistic degenerate cases") {
  const std::size_t ns[] = {5, 10, 20};
  auto single = iid_setup({0.3}, 0);
  const auto run = cesaro_kl_run(single, ns, 1);
  for (double v : run.cesaro) CHECK(v == 0.0);

  // Misspecified single atom at its own projection.
  RegimeSetup mis;
  mis.regime = Regime::misspecified;
  mis.prior = std::make_shared<const AtomicPrior>(
      AtomicPrior::uniform(build_gaussian_location_family(kGrid, std::vector<double>{0.5}, 1.0)));
  const MisspecifiedSetup ms(mis.prior, gaussian_density(kGrid, 0.0, 1.0));
  mis.truth = ms.truth();
  for (double v : cesaro_kl_run(mis, ns, 2).cesaro) CHECK(std::abs(v) < 1e-12);

  // Two atoms: nonnegative running means and the convexity chain.
  auto two = iid_setup({0.0, 1.0}, 0);
  const auto r2 = cesaro_kl_run(two, ns, 3);
  for (double v : r2.cesaro) CHECK(v >= 0.0);
  CHECK(r2.convexity_violation <= 1e-9);
}

TEST_CASE("replications are independent of the thread count") {
  ExperimentPlan plan;
  plan.setup = iid_setup({-0.5, 0.0, 0.5}, 1);
  plan.schedule = RateSchedule{{10, 20, 40}, 0.5, 1.0 / 3.0, 0.0};
  plan.replications = 12;
  plan.seed = 77;
  plan.jobs = 1;
  const auto one = cesaro_experiment(plan);
  plan.jobs = 3;
  const auto three = cesaro_experiment(plan);
  CHECK(one.per_replication == three.per_replication);
  CHECK(one.mean == three.mean);
}

TEST_CASE("exact singleton numerator against closed forms") {
  auto setup = iid_setup({0.0, 0.7}, 0);
  const double h = 1.0 - oracle::gaussian_affinity(0.0, 0.7);
  const double expect = std::sqrt(0.5) * std::pow(1.0 - h, 50.0);
  CHECK(std::abs(exact_singleton_sqrt_numerator(setup, 1, 50) - expect) <= 1e-10 * expect);

  RegimeSetup mk;
  mk.regime = Regime::markov;
  mk.prior = std::make_shared<const AtomicPrior>(
      AtomicPrior::uniform(build_markov_family(std::vector<double>{0.5, 0.1})));
  mk.truth = Truth::well_specified(mk.prior->family()[0]);
  for (std::size_t n : {1, 10, 60}) {
    const double ref = std::sqrt(0.5) * oracle::ar1_singleton_affinity(0.5, 0.1, n);
    CHECK(std::abs(exact_singleton_sqrt_numerator(mk, 1, n, 801) - ref) <= 1e-10 * ref);
  }
}

TEST_CASE("numerator bound refuses uncertified subsets") {
  ExperimentPlan plan;
  plan.setup = iid_setup({0.0, 0.1, 0.2}, 0);
  plan.schedule = RateSchedule{{20, 40, 80}, 0.5, 1.0 / 3.0, 0.0};
  plan.replications = 4;
  SubsetRecipe recipe;
  recipe.kind = SubsetRecipe::Kind::explicit_ball;
  recipe.center = 1;
  recipe.members = {0, 1};  // contains the truth: never separated
  CHECK_THROWS_WITH_AS(verify_numerator_bound(plan, recipe), "subset not admissible: separation",
                       std::runtime_error);
  const auto report = verify_numerator_bound(plan, recipe, false);
  CHECK(!report.pass);
  CHECK(report.failure == "subset not admissible: separation");
}

TEST_CASE("evidence and posterior mass degenerate cases") {
  ExperimentPlan plan;
  plan.setup = iid_setup({0.0}, 0);
  plan.schedule = RateSchedule{{10, 20, 40}, 0.5, 1.0 / 3.0, 0.0};
  plan.replications = 5;
  const auto ev = verify_evidence_bound(plan);
  for (double f : ev.fraction_below) CHECK(f == 0.0);
  for (const auto& rep : ev.log_I) {
    for (double l : rep) CHECK(l == 0.0);
  }

  plan.setup = iid_setup({-1.0, 0.0, 1.0}, 1);
  const auto mass = posterior_mass_path(plan, 1e6);
  for (const auto& row : mass.rows) {
    CHECK(row.target_size == 0);
    CHECK(row.median == 0.0);
  }
}
