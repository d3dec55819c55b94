#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "predrate/divergences.hpp"

using namespace predrate;

namespace {

const Grid kWide(-10.0, 10.0, 4001);
const Grid kUnit(-12.0, 12.0, 4001);

GridDensity random_mixture(std::mt19937_64& rng, const Grid& grid) {
  std::uniform_real_distribution<double> mean(-2.0, 2.0), sd(0.6, 1.6), w(0.1, 1.0);
  const GridDensity parts[] = {gaussian_density(grid, mean(rng), sd(rng)),
                               gaussian_density(grid, mean(rng), sd(rng))};
  const double weights[] = {w(rng), w(rng)};
  return mixture(parts, weights);
}

}  // namespace

TEST_CASE("grid spacing and nodes") {
  const Grid g(-1.0, 2.0, 7);
  CHECK(g.spacing() == doctest::Approx(0.5));
  CHECK(g.node(0) == -1.0);
  CHECK(g.node(6) == 2.0);
  CHECK(g.weight(0) == doctest::Approx(0.25));
  CHECK(g.weight(3) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Grid(1.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(Grid(0.0, 1.0, 2), std::invalid_argument);
  CHECK(g.refined().points() == 13);
}

TEST_CASE("densities are normalized and round-trip through text") {
  const GridDensity f = gaussian_density(kUnit, 0.3, 1.2);
  CHECK(f.mass() == doctest::Approx(1.0).epsilon(1e-12));
  const GridDensity back = GridDensity::from_text(f.to_text());
  CHECK(back.grid() == f.grid());
  for (std::size_t k = 0; k < f.grid().points(); k += 97) CHECK(back.values()[k] == f.values()[k]);
}

TEST_CASE("floored tails are flagged") {
  const GridDensity far = gaussian_density(kUnit, 0.0, 0.2);
  CHECK(far.floored());
  const GridDensity wide = gaussian_density(kUnit, 0.0, 1.0);
  CHECK(tail_truncated(far, wide));
  CHECK(std::isfinite(kl(wide, far)));
}

TEST_CASE("off-grid lookup is an error") {
  const GridDensity f = gaussian_density(kUnit, 0.0, 1.0);
  CHECK_THROWS_AS(f.log_at(12.5), std::out_of_range);
  CHECK(f.log_at(kUnit.node(2000)) == f.log_values()[2000]);
}

TEST_CASE("kl against closed form and two-point case") {
  const GridDensity f = gaussian_density(kWide, 0.0, 1.0);
  const GridDensity g = gaussian_density(kWide, 1.0, 1.0);
  CHECK(kl(f, f) == 0.0);
  CHECK(std::abs(kl(f, g) - 0.5) < 1e-5);
  const double p[] = {0.5, 0.5}, q[] = {0.25, 0.75};
  CHECK(kl_atoms(p, q) == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-12));
  CHECK(v_atoms(p, q) == doctest::Approx(0.5 * std::pow(std::log(2.0), 2) +
                                         0.5 * std::pow(std::log(2.0 / 3.0), 2)).epsilon(1e-12));
  CHECK(kl_atoms(p, q) == doctest::Approx(0.1438).epsilon(1e-3));
  CHECK(v_atoms(p, q) == doctest::Approx(0.3224).epsilon(1e-3));
}

TEST_CASE("grid mismatch is rejected") {
  const GridDensity f = gaussian_density(kWide, 0.0, 1.0);
  const GridDensity g = gaussian_density(kUnit, 0.0, 1.0);
  CHECK_THROWS_WITH_AS(kl(f, g), "incompatible grids", std::invalid_argument);
  CHECK_THROWS_AS(hellinger(f, g), std::invalid_argument);
  CHECK_THROWS_AS(h_star(f, f, g), std::invalid_argument);
}

TEST_CASE("hellinger closed form, range and symmetry") {
  const GridDensity f = gaussian_density(kWide, 0.0, 1.0);
  const GridDensity g = gaussian_density(kWide, 1.0, 1.0);
  CHECK(hellinger(f, f) == 0.0);
  CHECK(std::abs(hellinger(f, g) - oracle::gaussian_hellinger(0.0, 1.0)) < 1e-5);
  CHECK(std::abs(hellinger(f, g) - 0.48478) < 1e-5);
  CHECK(std::abs(h_affinity_gap(f, g) - (1.0 - std::exp(-1.0 / 8.0))) < 1e-5);
  CHECK(hellinger(f, g) == hellinger(g, f));

  const GridDensity left = gaussian_density(kUnit, -8.0, 0.3);
  const GridDensity right = gaussian_density(kUnit, 8.0, 0.3);
  CHECK(std::abs(hellinger(left, right) - std::sqrt(2.0)) < 1e-6);
}

TEST_CASE("random pairs: nonnegativity, h = H^2/2, h <= K, asymmetry") {
  std::mt19937_64 rng(11);
  bool asymmetric = false;
  for (int t = 0; t < 100; ++t) {
    const GridDensity f = random_mixture(rng, kUnit);
    const GridDensity g = random_mixture(rng, kUnit);
    const double H = hellinger(f, g);
    CHECK(v_divergence(f, g) >= 0.0);
    CHECK(std::abs(h_affinity_gap(f, g) - 0.5 * H * H) < 1e-9);
    CHECK(h_affinity_gap(f, g) <= kl(f, g) + 1e-9);
    if (std::abs(kl(f, g) - kl(g, f)) > 1e-6) asymmetric = true;
  }
  CHECK(asymmetric);
}

TEST_CASE("quadrature convergence under grid refinement") {
  const GridDensity f = gaussian_density(kUnit, 0.0, 1.0);
  const GridDensity g = gaussian_density(kUnit, 0.7, 1.3);
  const Grid fine = kUnit.refined();
  const GridDensity f2 = gaussian_density(fine, 0.0, 1.0);
  const GridDensity g2 = gaussian_density(fine, 0.7, 1.3);
  CHECK(std::abs(kl(f, g) - kl(f2, g2)) < 1e-7);
  CHECK(std::abs(hellinger(f, g) - hellinger(f2, g2)) < 1e-7);
}

TEST_CASE("misspecified functionals against closed forms") {
  // Family {N(m, 1): m >= 0.5}, data N(0, 1): the projection is N(0.5, 1).
  const GridDensity star = gaussian_density(kUnit, 0.0, 1.0);
  const GridDensity circ = gaussian_density(kUnit, 0.5, 1.0);
  const GridDensity f = gaussian_density(kUnit, 1.5, 1.0);
  CHECK(kl_contrast(circ, circ, star) == 0.0);
  CHECK(std::abs(kl_contrast(circ, f, star) - 1.0) < 1e-4);
  CHECK(std::abs(h_star(circ, f, star) - (1.0 - oracle::misspecified_sqrt_ratio(1.5, 0.5, 0.0))) < 1e-9);
  CHECK(std::abs(projection_ratio_mass(circ, f, star) - oracle::misspecified_ratio_mass(1.5, 0.5, 0.0)) < 1e-9);
  CHECK(weighted_hellinger(circ, circ, star) == 0.0);
  CHECK(v_star(circ, circ, star) == 0.0);

  // Independent Simpson quadrature on the continuous densities.
  auto fs = [](double y) { return oracle::normal_pdf(y, 0.0, 1.0); };
  auto fc = [](double y) { return oracle::normal_pdf(y, 0.5, 1.0); };
  auto ff = [](double y) { return oracle::normal_pdf(y, 1.5, 1.0); };
  const double v_ref = oracle::simpson([&](double y) {
    const double l = std::log(fc(y) / ff(y));
    return l * l * fs(y);
  }, -12.0, 12.0);
  const double H2_ref = oracle::simpson([&](double y) {
    const double d = std::sqrt(ff(y)) - std::sqrt(fc(y));
    return d * d * fs(y) / fc(y);
  }, -12.0, 12.0);
  CHECK(std::abs(v_star(circ, f, star) - v_ref) < 1e-6);
  CHECK(std::abs(weighted_hellinger(circ, f, star) - std::sqrt(H2_ref)) < 1e-6);
}

TEST_CASE("starred functionals reduce at f_circ = f_star") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const GridDensity s = random_mixture(rng, kUnit);
    const GridDensity f = random_mixture(rng, kUnit);
    CHECK(std::abs(kl_contrast(s, f, s) - kl(s, f)) < 1e-9);
    CHECK(std::abs(v_star(s, f, s) - v_divergence(s, f)) < 1e-9);
    CHECK(std::abs(weighted_hellinger(s, f, s) - hellinger(s, f)) < 1e-9);
    CHECK(std::abs(h_star(s, f, s) - h_affinity_gap(s, f)) < 1e-9);
  }
}

TEST_CASE("mean and max Hellinger over sequences") {
  std::vector<GridDensity> a, b;
  const Grid grid(-10.0, 12.0, 2201);
  double sum = 0.0, worst = 0.0;
  for (int i = 1; i <= 8; ++i) {
    const double x = i / 8.0;
    const double ma = 0.2 + 0.5 * x, mb = -0.1 + 1.1 * x;
    a.push_back(gaussian_density(grid, ma, 1.0));
    b.push_back(gaussian_density(grid, mb, 1.0));
    const double h = oracle::gaussian_hellinger(ma, mb);
    sum += h * h;
    worst = std::max(worst, h);
  }
  CHECK(std::abs(mean_hellinger(a, b) - std::sqrt(sum / 8.0)) < 1e-5);
  CHECK(std::abs(max_hellinger(a, b) - worst) < 1e-5);
  CHECK(mean_hellinger(a, a) == 0.0);
  CHECK(max_hellinger(a, a) == 0.0);
  CHECK(max_hellinger(a, b) >= mean_hellinger(a, b));
  std::vector<GridDensity> shorter(a.begin(), a.end() - 1);
  CHECK_THROWS_AS(mean_hellinger(a, shorter), std::invalid_argument);
  CHECK_THROWS_AS(max_hellinger(std::span<const GridDensity>{}, std::span<const GridDensity>{}),
                  std::invalid_argument);

  // Constant per-index distance.
  std::vector<GridDensity> c(8, gaussian_density(grid, 0.0, 1.0)), d(8, gaussian_density(grid, 0.4, 1.0));
  CHECK(mean_hellinger(c, d) == doctest::Approx(hellinger(c[0], d[0])).epsilon(1e-12));
}

TEST_CASE("Markov divergences against AR(1) closed forms") {
  const MarkovParam star{0.6, 1.0};
  const StateWeighting q = stationary_weighting(star);
  for (double theta : {0.0, 0.3, 0.6}) {
    const auto d = markov_divergences(star, MarkovParam{theta, 1.0}, q, 5.0);
    CHECK(std::abs(d.K - oracle::ar1_kl(0.6, theta)) < 1e-4);
    CHECK(std::abs(d.V - oracle::ar1_v(0.6, theta)) < 1e-4);
    CHECK(std::abs(d.H_inf_truncated - oracle::ar1_state_hellinger(0.6, theta, 5.0)) < 1e-6);
  }
  const auto same = markov_divergences(star, star, q, 5.0);
  CHECK(same.K == 0.0);
  CHECK(same.V == 0.0);
  CHECK(same.H_Q == 0.0);
  CHECK(same.H_inf_truncated == 0.0);
  CHECK_THROWS_WITH_AS(markov_divergences(MarkovParam{1.0, 1.0}, star, q, 5.0),
                       "no stationary density", std::domain_error);
  CHECK_THROWS_AS(markov_divergences(star, star, q, 0.0), std::invalid_argument);
}

TEST_CASE("H_Q under a two-point weighting matches a direct state integral") {
  const MarkovParam star{0.5, 1.0}, theta{0.1, 1.0};
  const StateWeighting q = two_point_weighting(1.5, 0.5);
  CHECK(q.density.mass() == doctest::Approx(1.0).epsilon(1e-10));
  const auto d = markov_divergences(star, theta, q, 5.0);
  const double ref = oracle::simpson([](double y) {
    return 0.5 * (oracle::normal_pdf(y, -1.5, 0.5) + oracle::normal_pdf(y, 1.5, 0.5)) *
           oracle::ar1_state_hellinger(0.5, 0.1, y);
  }, -8.0, 8.0);
  CHECK(std::abs(d.H_Q - ref) < 1e-6);
}
