#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "predrate/models.hpp"

using namespace predrate;

namespace {
const Grid kGrid(-12.0, 12.0, 4001);
}

TEST_CASE("Gaussian location family") {
  const double one[] = {0.0};
  const Family single = build_gaussian_location_family(kGrid, one, 1.0);
  REQUIRE(single.size() == 1);
  CHECK(kl(single[0].density(), gaussian_density(kGrid, 0.0, 1.0)) == 0.0);

  const double two[] = {0.0, 1.0};
  const Family pair = build_gaussian_location_family(kGrid, two, 1.0);
  CHECK(std::abs(hellinger(pair[0].density(), pair[1].density()) - 0.48478) < 1e-5);

  std::vector<double> means;
  for (int k = 0; k <= 20; ++k) means.push_back(-2.0 + 0.2 * k);
  const Family f21 = build_gaussian_location_family(kGrid, means, 1.0);
  CHECK(f21.size() == 21);
  for (const auto& m : f21) CHECK(std::abs(m.density().mass() - 1.0) < 1e-8);

  const double clipped[] = {7.0};
  CHECK_THROWS_WITH_AS(build_gaussian_location_family(kGrid, clipped, 1.0), "grid clips density",
                       std::invalid_argument);
}

TEST_CASE("atomic prior validation") {
  const double means[] = {0.0, 1.0, 2.0};
  const Family fam = build_gaussian_location_family(kGrid, means, 1.0);
  const AtomicPrior p(fam, {1.0, 2.0, 1.0});
  double total = 0.0;
  for (double w : p.weights()) total += w;
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK(p.weights()[1] == doctest::Approx(0.5));
  CHECK_THROWS_AS(AtomicPrior(fam, {1.0, 0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AtomicPrior(fam, {1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(AtomicPrior(Family{}, {}), std::invalid_argument);
}

TEST_CASE("KL projection") {
  const double means[] = {0.5, 1.0, 1.5};
  const Family fam = build_gaussian_location_family(kGrid, means, 1.0);
  const GridDensity star = gaussian_density(kGrid, 0.0, 1.0);
  const Projection p = kl_projection(star, fam);
  CHECK(p.index == 0);
  CHECK(std::abs(p.k_min - 0.125) < 1e-4);
  for (const auto& m : fam) CHECK(kl_contrast(fam[p.index].density(), m.density(), star) >= -1e-9);

  const Projection in = kl_projection(fam[1].density(), fam);
  CHECK(in.index == 1);
  CHECK(in.k_min == 0.0);
  CHECK_THROWS_AS(kl_projection(star, Family{}), std::invalid_argument);

  // Independent scan over random families.
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> ms(6);
    for (double& m : ms) m = u(rng);
    const Family f = build_gaussian_location_family(kGrid, ms, 1.0);
    const GridDensity s = gaussian_density(kGrid, u(rng), 1.1);
    std::size_t best = 0;
    double best_k = oracle::simpson([&](double y) {
      return std::log(s.at(y) / f[0].density().at(y)) * s.at(y);
    }, -12.0, 12.0, 4000);
    for (std::size_t j = 1; j < f.size(); ++j) {
      const double k = oracle::simpson([&](double y) {
        return std::log(s.at(y) / f[j].density().at(y)) * s.at(y);
      }, -12.0, 12.0, 4000);
      if (k < best_k) {
        best_k = k;
        best = j;
      }
    }
    CHECK(kl_projection(s, f).index == best);
  }
}

TEST_CASE("continuous projection and mixture segment") {
  const GridDensity star = gaussian_density(kGrid, 0.3, 1.0);
  const auto p = kl_projection_continuous(
      star, [](double m) { return gaussian_density(kGrid, m, 1.0); }, -2.0, 2.0);
  CHECK(std::abs(p.parameter - 0.3) < 1e-5);

  // Mixture segment: data lies on it at t = 0.25.
  const GridDensity f1 = gaussian_density(kGrid, -1.0, 1.0);
  const GridDensity f2 = gaussian_density(kGrid, 2.0, 1.0);
  const GridDensity parts[] = {f1, f2};
  const double w[] = {0.75, 0.25};
  const auto seg = project_onto_mixture_segment(mixture(parts, w), f1, f2);
  CHECK(std::abs(seg.parameter - 0.25) < 1e-8);
  CHECK(seg.k_min < 1e-12);
}

TEST_CASE("likelihood by member kind") {
  const Family mk = build_markov_family(std::vector<double>{0.0, 0.5});
  CHECK(likelihood(mk[0], Context{}, 0.7) == doctest::Approx(oracle::normal_pdf(0.7, 0.0, 1.0)));
  CHECK(likelihood(mk[1], Context{0, 2.0}, 0.7) == doctest::Approx(oracle::normal_pdf(0.7, 1.0, 1.0)));
  CHECK(likelihood(mk[1], Context{}, 0.7) ==
        doctest::Approx(oracle::normal_pdf(0.7, 0.0, std::sqrt(1.0 / 0.75))));

  const auto design = default_design(4);
  CHECK(design[0] == 0.25);
  CHECK(design[3] == 1.0);
  const LinearCoefficients coef[] = {{1.0, 2.0}};
  const Family reg = build_regression_family(design, coef);
  const double mode = reg[0].regression().at(1);
  CHECK(likelihood(reg[0], Context{1, {}}, mode) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK_THROWS_AS(likelihood(reg[0], Context{4, {}}, 0.0), std::out_of_range);

  const double means[] = {0.0};
  const Family iid = build_gaussian_location_family(kGrid, means, 1.0);
  CHECK(log_likelihood(iid[0], Context{}, kGrid.node(1500)) == iid[0].density().log_values()[1500]);
  CHECK_THROWS_AS(log_likelihood(iid[0], Context{}, 13.0), std::out_of_range);

  CHECK_THROWS_AS(build_markov_family(std::vector<double>{1.0}), std::domain_error);
}

TEST_CASE("stationary density") {
  const GridDensity u0 = stationary_density(MarkovParam{0.0, 1.0}, kGrid);
  CHECK(kl(u0, gaussian_density(kGrid, 0.0, 1.0)) < 1e-14);

  const MarkovParam p{0.6, 1.0};
  const GridDensity u = stationary_density(p, kGrid);
  double var = 0.0;
  std::vector<double> sq(kGrid.points());
  for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = kGrid.node(k) * kGrid.node(k) * u.values()[k];
  var = kGrid.integrate(sq);
  CHECK(std::abs(var - 1.5625) < 1e-3);

  // One transition step leaves the stationary law unchanged.
  const Grid coarse(-12.0, 12.0, 1201);
  const GridDensity uc = stationary_density(p, coarse);
  double worst = 0.0;
  for (std::size_t b = 0; b < coarse.points(); b += 7) {
    double s = 0.0;
    for (std::size_t a = 0; a < coarse.points(); ++a) {
      s += coarse.weight(a) * uc.values()[a] *
           oracle::normal_pdf(coarse.node(b), p.transition_mean(coarse.node(a)), 1.0);
    }
    worst = std::max(worst, std::abs(s - uc.values()[b]));
  }
  CHECK(worst < 1e-4);
  CHECK_THROWS_AS(stationary_density(MarkovParam{1.2, 1.0}, kGrid), std::domain_error);
}

TEST_CASE("misspecified setup finds the projection") {
  std::vector<double> means{0.5, 1.0, 1.5, 2.0};
  auto prior = std::make_shared<const AtomicPrior>(
      AtomicPrior::uniform(build_gaussian_location_family(kGrid, means, 1.0)));
  const MisspecifiedSetup ms(prior, gaussian_density(kGrid, 0.0, 1.0));
  CHECK(ms.projection_id() == 0);
  const Truth t = ms.truth();
  CHECK(t.misspecified());
  for (const auto& m : prior->family()) {
    CHECK(kl(ms.true_density(), prior->family()[ms.projection_id()].density()) <=
          kl(ms.true_density(), m.density()) + 1e-9);
  }
}
