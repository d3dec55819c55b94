#include "predrate/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "predrate/numerics.hpp"

namespace predrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double squared_positive(double x) { return x > 0.0 ? x * x : 0.0; }

}  // namespace

// ------------------------------------------------------------- schedule

double RateSchedule::epsilon(std::size_t n) const {
  if (n == 0) throw std::invalid_argument("schedule needs n >= 1");
  const double x = static_cast<double>(n);
  double e = a * std::pow(x, -gamma);
  if (kappa != 0.0) e *= std::pow(std::log(x), kappa);
  return e;
}

void RateSchedule::validate() const {
  if (n_values.empty()) throw std::invalid_argument("schedule has no n values");
  if (!(a > 0.0)) throw std::invalid_argument("schedule scale a must be positive");
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    const double e = epsilon(n_values[k]);
    if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("epsilon_n must be positive");
    if (k == 0) continue;
    const std::size_t m = n_values[k - 1];
    if (n_values[k] <= m) throw std::invalid_argument("schedule n values must increase");
    const double prev = epsilon(m);
    if (!(e < prev)) throw std::invalid_argument("epsilon_n must decrease along the schedule");
    if (!(static_cast<double>(n_values[k]) * e * e > static_cast<double>(m) * prev * prev)) {
      throw std::invalid_argument("n epsilon_n^2 must increase along the schedule");
    }
  }
}

// --------------------------------------------------------------- setup

double RegimeSetup::window() const {
  if (state_window > 0.0) return state_window;
  if (truth.data.kind() == MemberKind::markov_param) return 5.0 * truth.data.markov().stationary_sd();
  return 5.0;
}

// -------------------------------------------------------------- metric

RegimeMetric::RegimeMetric(RegimeSetup setup, std::size_t n) : setup_(std::move(setup)), n_(n) {
  if (!setup_.prior) throw std::invalid_argument("regime setup needs a prior");
  const MemberKind kind = setup_.prior->kind();
  switch (setup_.regime) {
    case Regime::iid:
    case Regime::misspecified:
      if (kind != MemberKind::iid_density || setup_.truth.data.kind() != MemberKind::iid_density ||
          setup_.truth.reference.kind() != MemberKind::iid_density) {
        throw std::invalid_argument("iid regimes need density members");
      }
      break;
    case Regime::regression:
      if (kind != MemberKind::regression_function ||
          setup_.truth.data.kind() != MemberKind::regression_function) {
        throw std::invalid_argument("regression regime needs regression members");
      }
      if (n_ == 0 || n_ > setup_.truth.data.regression().size()) {
        throw std::out_of_range("index outside design");
      }
      for (const auto& m : setup_.prior->family()) {
        if (m.regression().size() < n_) throw std::out_of_range("index outside design");
      }
      break;
    case Regime::markov:
      if (kind != MemberKind::markov_param || setup_.truth.data.kind() != MemberKind::markov_param) {
        throw std::invalid_argument("markov regime needs Markov members");
      }
      if (!setup_.truth.data.markov().is_stationary()) throw std::domain_error("no stationary density");
      if (!setup_.weighting) {
        setup_.weighting = stationary_weighting(setup_.truth.data.markov(),
                                                setup_.quadrature.state_points,
                                                setup_.quadrature.half_width);
      }
      break;
  }
}

double RegimeMetric::per_index_hellinger(double mean_a, double mean_b) {
  const Grid grid(std::min(mean_a, mean_b) - 10.0, std::max(mean_a, mean_b) + 10.0,
                  setup_.conditional_points);
  return hellinger(gaussian_density(grid, mean_a, 1.0), gaussian_density(grid, mean_b, 1.0));
}

const MarkovDivergences& RegimeMetric::markov(std::size_t j) {
  auto it = markov_.find(j);
  if (it != markov_.end()) return it->second;
  const MarkovDivergences d =
      markov_divergences(setup_.truth.data.markov(), setup_.prior->family().at(j).markov(),
                         *setup_.weighting, setup_.window(), setup_.quadrature);
  return markov_.emplace(j, d).first->second;
}

const RegimeMetric::Thickness& RegimeMetric::thickness(std::size_t j) {
  auto it = thickness_.find(j);
  if (it != thickness_.end()) return it->second;
  const FamilyMember& m = setup_.prior->family().at(j);
  Thickness t;
  switch (setup_.regime) {
    case Regime::iid:
      t.K = kl(setup_.data_density(), m.density());
      t.V = v_divergence(setup_.data_density(), m.density());
      break;
    case Regime::misspecified:
      t.K = kl_contrast(setup_.reference_density(), m.density(), setup_.data_density());
      t.V = v_star(setup_.reference_density(), m.density(), setup_.data_density());
      break;
    case Regime::regression: {
      const auto& truth = setup_.truth.data.regression();
      for (std::size_t i = 0; i < n_; ++i) {
        const double a = truth.at(i), b = m.regression().at(i);
        const Grid grid(std::min(a, b) - 10.0, std::max(a, b) + 10.0, setup_.conditional_points);
        const GridDensity fa = gaussian_density(grid, a, 1.0);
        const GridDensity fb = gaussian_density(grid, b, 1.0);
        t.K += kl(fa, fb);
        t.V += v_divergence(fa, fb);
      }
      t.K /= static_cast<double>(n_);
      t.V /= static_cast<double>(n_);
      break;
    }
    case Regime::markov: {
      const MarkovDivergences& d = markov(j);
      t.K = d.K;
      t.V = d.V;
      const MarkovParam& star = setup_.truth.data.markov();
      const MarkovParam& p = m.markov();
      const double reach = setup_.quadrature.half_width * std::max(star.stationary_sd(), p.stationary_sd());
      const Grid grid(-reach, reach, 2 * setup_.quadrature.state_points + 1);
      const GridDensity us = stationary_density(star, grid);
      const GridDensity u = stationary_density(p, grid);
      t.admissible = kl(us, u) <= setup_.theta0_bound && v_divergence(us, u) <= setup_.theta0_bound;
      break;
    }
  }
  return thickness_.emplace(j, t).first->second;
}

double RegimeMetric::target_distance(std::size_t j) {
  auto it = target_.find(j);
  if (it != target_.end()) return it->second;
  const FamilyMember& m = setup_.prior->family().at(j);
  double value = 0.0;
  switch (setup_.regime) {
    case Regime::iid:
      value = hellinger(setup_.data_density(), m.density());
      break;
    case Regime::misspecified:
      value = weighted_hellinger(setup_.reference_density(), m.density(), setup_.data_density());
      break;
    case Regime::regression: {
      const auto& truth = setup_.truth.data.regression();
      double sum = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double h = per_index_hellinger(truth.at(i), m.regression().at(i));
        sum += h * h;
      }
      value = std::sqrt(sum / static_cast<double>(n_));
      break;
    }
    case Regime::markov:
      value = markov(j).H_Q;
      break;
  }
  return target_.emplace(j, value).first->second;
}

double RegimeMetric::separation_gap(std::size_t j) {
  auto it = gap_.find(j);
  if (it != gap_.end()) return it->second;
  const FamilyMember& m = setup_.prior->family().at(j);
  double value = 0.0;
  switch (setup_.regime) {
    case Regime::iid:
      value = h_affinity_gap(setup_.data_density(), m.density());
      break;
    case Regime::misspecified:
      value = h_star(setup_.reference_density(), m.density(), setup_.data_density());
      break;
    case Regime::regression: {
      const double H = target_distance(j);
      value = 0.5 * H * H;
      break;
    }
    case Regime::markov: {
      const double H = markov(j).H_inf_truncated;
      value = 0.5 * H * H;
      break;
    }
  }
  return gap_.emplace(j, value).first->second;
}

double RegimeMetric::ball_distance(std::size_t a, std::size_t b) {
  if (a == b) return 0.0;
  const auto key = std::minmax(a, b);
  auto it = ball_.find(key);
  if (it != ball_.end()) return it->second;
  const FamilyMember& ma = setup_.prior->family().at(key.first);
  const FamilyMember& mb = setup_.prior->family().at(key.second);
  double value = 0.0;
  switch (setup_.regime) {
    case Regime::iid:
      value = hellinger(ma.density(), mb.density());
      break;
    case Regime::misspecified:
      value = weighted_hellinger_between(ma.density(), mb.density(), setup_.reference_density(),
                                         setup_.data_density());
      break;
    case Regime::regression:
      for (std::size_t i = 0; i < n_; ++i) {
        value = std::max(value, per_index_hellinger(ma.regression().at(i), mb.regression().at(i)));
      }
      break;
    case Regime::markov:
      value = markov_sup_hellinger(ma.markov(), mb.markov(), setup_.window(), setup_.quadrature);
      break;
  }
  return ball_.emplace(key, value).first->second;
}

double RegimeMetric::center_distance(std::size_t center) {
  auto it = center_.find(center);
  if (it != center_.end()) return it->second;
  const FamilyMember& c = setup_.prior->family().at(center);
  double value = 0.0;
  switch (setup_.regime) {
    case Regime::iid:
    case Regime::misspecified:
      value = target_distance(center);
      break;
    case Regime::regression: {
      const auto& truth = setup_.truth.data.regression();
      for (std::size_t i = 0; i < n_; ++i) {
        value = std::max(value, per_index_hellinger(truth.at(i), c.regression().at(i)));
      }
      break;
    }
    case Regime::markov:
      value = markov(center).H_inf_truncated;
      break;
  }
  return center_.emplace(center, value).first->second;
}

double RegimeMetric::hull_gap(std::size_t center, double radius) {
  const FamilyMember& c = setup_.prior->family().at(center);
  if (setup_.regime == Regime::regression) {
    // Per index, every mixture sits within radius of the center.
    const auto& truth = setup_.truth.data.regression();
    double sum = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      sum += 0.5 * squared_positive(per_index_hellinger(truth.at(i), c.regression().at(i)) - radius);
    }
    return sum / static_cast<double>(n_);
  }
  return 0.5 * squared_positive(center_distance(center) - radius);
}

GridDensity RegimeMetric::mixture_density(std::span<const std::size_t> ids,
                                          std::span<const double> weights, const Context& context,
                                          const Grid& grid) const {
  std::vector<GridDensity> parts;
  parts.reserve(ids.size());
  for (std::size_t id : ids) parts.push_back(conditional_density(setup_.prior->family().at(id), context, grid));
  return mixture(parts, weights);
}

double RegimeMetric::mixture_ball_gap(std::size_t center, std::span<const std::size_t> ids,
                                      std::span<const double> weights) {
  if (ids.empty() || ids.size() != weights.size()) {
    throw std::invalid_argument("mixture needs one weight per member");
  }
  const Family& family = setup_.prior->family();
  const FamilyMember& c = family.at(center);
  switch (setup_.regime) {
    case Regime::iid: {
      const Grid& grid = c.density().grid();
      return h_affinity_gap(c.density(), mixture_density(ids, weights, {}, grid));
    }
    case Regime::misspecified: {
      const Grid& grid = c.density().grid();
      const double H = weighted_hellinger_between(c.density(), mixture_density(ids, weights, {}, grid),
                                                  setup_.reference_density(), setup_.data_density());
      return 0.5 * H * H;
    }
    case Regime::regression: {
      double worst = 0.0;
      std::vector<FamilyMember> members;
      members.push_back(c);
      for (std::size_t id : ids) members.push_back(family.at(id));
      for (std::size_t i = 0; i < n_; ++i) {
        const Context ctx{i, std::nullopt};
        const Grid grid = observation_grid(members, ctx, setup_.conditional_points);
        worst = std::max(worst, h_affinity_gap(conditional_density(c, ctx, grid),
                                               mixture_density(ids, weights, ctx, grid)));
      }
      return worst;
    }
    case Regime::markov: {
      double worst = 0.0;
      std::vector<FamilyMember> members;
      members.push_back(c);
      for (std::size_t id : ids) members.push_back(family.at(id));
      const double w = setup_.window();
      const Grid states(-w, w, std::max<std::size_t>(setup_.quadrature.window_points, 3));
      for (std::size_t k = 0; k < states.points(); ++k) {
        const Context ctx{0, states.node(k)};
        const Grid grid = observation_grid(members, ctx, setup_.conditional_points);
        worst = std::max(worst, h_affinity_gap(conditional_density(c, ctx, grid),
                                               mixture_density(ids, weights, ctx, grid)));
      }
      return worst;
    }
  }
  return 0.0;
}

double RegimeMetric::projection_ratio(std::size_t j) {
  if (setup_.regime != Regime::misspecified) return 1.0;
  auto it = ratio_.find(j);
  if (it != ratio_.end()) return it->second;
  const double value = projection_ratio_mass(setup_.reference_density(),
                                             setup_.prior->family().at(j).density(),
                                             setup_.data_density());
  return ratio_.emplace(j, value).first->second;
}

std::string_view RegimeMetric::target_name() const {
  switch (setup_.regime) {
    case Regime::iid: return "H";
    case Regime::misspecified: return "H_star";
    case Regime::regression: return "H_n";
    case Regime::markov: return "H_Q";
  }
  return "";
}

std::string_view RegimeMetric::gap_name() const {
  switch (setup_.regime) {
    case Regime::iid: return "h";
    case Regime::misspecified: return "h_star";
    case Regime::regression: return "h_n";
    case Regime::markov: return "h_inf";
  }
  return "";
}

std::string_view RegimeMetric::ball_name() const {
  switch (setup_.regime) {
    case Regime::iid: return "H";
    case Regime::misspecified: return "H_star";
    case Regime::regression: return "H_n_inf";
    case Regime::markov: return "H_inf";
  }
  return "";
}

// ----------------------------------------------------------- thickness

ThicknessRow thickness_at(RegimeMetric& metric, double epsilon) {
  ThicknessRow row;
  row.n = metric.n();
  row.epsilon = epsilon;
  const double e2 = epsilon * epsilon;
  const auto weights = metric.setup().prior->weights();
  for (std::size_t j = 0; j < metric.size(); ++j) {
    const auto& t = metric.thickness(j);
    if (t.admissible && t.K <= e2 && t.V <= e2) row.neighborhood_mass += weights[j];
  }
  const double ne2 = static_cast<double>(metric.n()) * e2;
  row.implied_C = row.neighborhood_mass > 0.0
                      ? std::max(0.0, -std::log(row.neighborhood_mass) / ne2)
                      : kInf;
  return row;
}

std::vector<ThicknessRow> thickness_profile(const RegimeSetup& setup,
                                            const RateSchedule& schedule) {
  std::vector<ThicknessRow> rows;
  for (std::size_t n : schedule.n_values) {
    RegimeMetric metric(setup, n);
    rows.push_back(thickness_at(metric, schedule.epsilon(n)));
  }
  return rows;
}

// ---------------------------------------------------------- separation

SeparationResult check_separation(const GridDensity& ref, std::span<const GridDensity> members,
                                  double delta) {
  if (members.empty()) throw std::invalid_argument("empty subset");
  double gap = kInf;
  for (const auto& m : members) gap = std::min(gap, h_affinity_gap(ref, m));
  return {gap > delta, gap};
}

SeparationResult check_separation(RegimeMetric& metric, std::span<const std::size_t> ids,
                                  double delta) {
  if (ids.empty()) throw std::invalid_argument("empty subset");
  double gap = kInf;
  for (std::size_t id : ids) gap = std::min(gap, metric.separation_gap(id));
  return {gap > delta, gap};
}

namespace {

std::vector<double> dirichlet_weights(std::size_t k, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (double& x : w) {
    x = gamma(rng);
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

template <typename GapFn>
ClosureResult closure_scan(std::size_t members, double radius, std::size_t n_random,
                           std::uint64_t seed, GapFn&& gap_of) {
  ClosureResult out;
  out.worst_violation = -kInf;
  const double limit = 0.5 * radius * radius;
  auto consider = [&](const std::vector<double>& w) {
    const double v = gap_of(w) - limit;
    out.worst_violation = std::max(out.worst_violation, v);
  };
  for (std::size_t k = 0; k < members; ++k) {
    std::vector<double> w(members, 0.0);
    w[k] = 1.0;
    consider(w);
  }
  if (members > 1) {
    std::mt19937_64 rng(seed);
    for (std::size_t s = 0; s < n_random; ++s) consider(dirichlet_weights(members, rng));
  }
  out.closed = out.worst_violation <= 1e-9;
  return out;
}

}  // namespace

ClosureResult check_mixture_closure(RegimeMetric& metric, const Ball& ball,
                                    std::size_t n_random_mixtures, std::uint64_t seed) {
  if (ball.member_ids.empty()) throw std::invalid_argument("ball has no members");
  return closure_scan(ball.member_ids.size(), ball.radius, n_random_mixtures, seed,
                      [&](const std::vector<double>& w) {
                        return metric.mixture_ball_gap(ball.center_id, ball.member_ids, w);
                      });
}

ClosureResult check_mixture_closure(const GridDensity& center,
                                    std::span<const GridDensity> members, double radius,
                                    std::size_t n_random_mixtures, std::uint64_t seed) {
  if (members.empty()) throw std::invalid_argument("ball has no members");
  return closure_scan(members.size(), radius, n_random_mixtures, seed,
                      [&](const std::vector<double>& w) {
                        return h_affinity_gap(center, mixture(members, w));
                      });
}

// ------------------------------------------------------------ coverings

std::vector<Ball> greedy_cover(std::span<const std::size_t> target, double radius,
                               const DistanceFn& distance) {
  std::vector<std::size_t> ids(target.begin(), target.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<Ball> balls;
  if (ids.empty()) return balls;

  std::vector<bool> covered(ids.size(), false);
  std::vector<double> nearest(ids.size(), kInf);
  std::size_t next = 0;
  while (true) {
    const std::size_t center = ids[next];
    Ball ball{center, radius, {}};
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const double d = distance(center, ids[t]);
      nearest[t] = std::min(nearest[t], d);
      if (d <= radius) {
        ball.member_ids.push_back(ids[t]);
        covered[t] = true;
      }
    }
    balls.push_back(std::move(ball));

    bool found = false;
    double far = -1.0;
    for (std::size_t t = 0; t < ids.size(); ++t) {
      if (covered[t]) continue;
      if (nearest[t] > far) {
        far = nearest[t];
        next = t;
        found = true;
      }
    }
    if (!found) break;
  }
  return balls;
}

std::vector<Ball> greedy_cover(RegimeMetric& metric, std::span<const std::size_t> target,
                               double radius) {
  return greedy_cover(target, radius,
                      [&](std::size_t a, std::size_t b) { return metric.ball_distance(a, b); });
}

ConditionPSum condition_p_sum(std::span<const double> ball_masses, double beta, double c_const,
                              std::size_t n, double epsilon) {
  if (!(beta > 1.0)) throw std::invalid_argument("Condition P requires beta > 1");
  ConditionPSum out;
  for (double m : ball_masses) out.S_n += std::pow(m, 1.0 / beta);
  out.discounted = std::exp(-c_const * static_cast<double>(n) * epsilon * epsilon) * out.S_n;
  return out;
}

ConditionPSum condition_p_sum(std::span<const Ball> cover, const AtomicPrior& prior, double beta,
                              double c_const, std::size_t n, double epsilon) {
  std::vector<double> masses;
  for (const auto& b : cover) masses.push_back(prior.mass(b.member_ids));
  return condition_p_sum(masses, beta, c_const, n, epsilon);
}

std::size_t sieve_count(double S_n, double beta, double r_const, std::size_t n, double epsilon) {
  if (!(beta > 1.0)) throw std::invalid_argument("Condition P requires beta > 1");
  if (!(S_n > 0.0)) return 1;
  const double threshold = beta * std::log(S_n) + r_const * static_cast<double>(n) * epsilon * epsilon;
  if (threshold <= 0.0) return 1;
  const double log_j = threshold / (beta - 1.0);
  if (log_j > 40.0) return std::numeric_limits<std::size_t>::max();
  auto holds = [&](std::size_t j) { return (beta - 1.0) * std::log(static_cast<double>(j)) >= threshold; };
  auto j = static_cast<std::size_t>(std::ceil(std::exp(log_j)));
  j = std::max<std::size_t>(j, 1);
  while (j > 1 && holds(j - 1)) --j;
  while (!holds(j)) ++j;
  return j;
}

namespace {

/// Shared construction; `atom_mass` gives Pi({id}) for complement bookkeeping.
template <typename AtomMass>
CoveringAndSieve sieve_core(std::vector<Ball> balls, std::vector<double> masses,
                            AtomMass&& atom_mass, double beta, double r_const, double c_const,
                            std::size_t n, double epsilon) {
  if (!(beta > 1.0)) throw std::invalid_argument("Condition P requires beta > 1");
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (masses[x] != masses[y]) return masses[x] > masses[y];
    return balls[x].center_id < balls[y].center_id;
  });
  CoveringAndSieve out;
  for (std::size_t k : order) {
    out.balls.push_back(balls[k]);
    out.ball_masses.push_back(masses[k]);
  }
  const double ne2 = static_cast<double>(n) * epsilon * epsilon;
  out.S_n = condition_p_sum(out.ball_masses, beta, c_const, n, epsilon).S_n;
  out.J_n = sieve_count(out.S_n, beta, r_const, n, epsilon);
  const std::size_t count = out.balls.size();
  out.covering_exhausted = out.J_n > count;
  const std::size_t used = std::min(out.J_n, count);

  std::vector<std::size_t> all, sieve;
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t id : out.balls[k].member_ids) {
      all.push_back(id);
      if (k < used) sieve.push_back(id);
    }
  }
  auto dedupe = [](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(all);
  dedupe(sieve);
  out.target_ids = all;
  out.sieve_ids = sieve;
  std::vector<std::size_t> outside;
  std::set_difference(all.begin(), all.end(), sieve.begin(), sieve.end(), std::back_inserter(outside));
  for (std::size_t id : outside) out.complement_mass += atom_mass(id);

  out.log_cover_count = used > 0 ? std::log(static_cast<double>(used)) : 0.0;
  const double s_beta = std::pow(out.S_n, beta);
  for (std::size_t j = out.J_n + 1; j <= count && out.J_n < count; ++j) {
    out.tail_sum_bound += s_beta / std::pow(static_cast<double>(j), beta);
  }
  out.mass_bound_holds = true;
  for (std::size_t j = 1; j <= count; ++j) {
    const double bound = s_beta / std::pow(static_cast<double>(j), beta);
    if (out.ball_masses[j - 1] > bound * (1.0 + 1e-12)) out.mass_bound_holds = false;
  }
  out.entropy_bound = (r_const + beta * c_const) / (beta - 1.0) * ne2;
  const double log_j = out.J_n == std::numeric_limits<std::size_t>::max()
                           ? kInf
                           : std::log(static_cast<double>(out.J_n));
  out.entropy_bound_holds = log_j <= out.entropy_bound + 1e-12;
  out.complement_constant = out.complement_mass * std::exp(r_const * ne2);
  out.entropy_constant = ne2 > 0.0 ? out.log_cover_count / ne2 : kInf;
  return out;
}

}  // namespace

CoveringAndSieve build_sieve_from_cover(std::vector<Ball> cover, const AtomicPrior& prior,
                                        double beta, double r_const, double c_const,
                                        std::size_t n, double epsilon) {
  std::vector<double> masses;
  for (const auto& b : cover) masses.push_back(prior.mass(b.member_ids));
  const auto weights = prior.weights();
  return sieve_core(std::move(cover), std::move(masses),
                    [&](std::size_t id) { return weights[id]; }, beta, r_const, c_const, n,
                    epsilon);
}

CoveringAndSieve build_sieve_from_masses(std::span<const double> masses, double beta,
                                         double r_const, double c_const, std::size_t n,
                                         double epsilon) {
  std::vector<Ball> balls;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    if (!(masses[k] >= 0.0)) throw std::invalid_argument("ball masses must be nonnegative");
    balls.push_back({k, 0.0, {k}});
  }
  return sieve_core(std::move(balls), {masses.begin(), masses.end()},
                    [&](std::size_t id) { return masses[id]; }, beta, r_const, c_const, n,
                    epsilon);
}

double admissible_M(double C, double R) {
  const double floor_sq = 4.0 * ((C + 1.0) + 2.0 * R);
  double M = std::ceil(std::sqrt(floor_sq) * 1000.0) / 1000.0;
  while (!(M * M > floor_sq)) M += 1e-3;
  return M;
}

// -------------------------------------------------------- certification

SubsetCertificate certify_subset(RegimeMetric& metric, const Ball& ball, double d,
                                 double epsilon, double implied_C, std::size_t n_mixtures,
                                 std::uint64_t seed) {
  SubsetCertificate cert;
  cert.implied_C = implied_C;
  cert.required_gap = d * epsilon * epsilon;
  const ClosureResult closure = check_mixture_closure(metric, ball, n_mixtures, seed);
  cert.closure_violation = closure.worst_violation;
  cert.hull_gap = metric.hull_gap(ball.center_id, ball.radius);
  for (std::size_t id : ball.member_ids) {
    cert.ratio_excess = std::max(cert.ratio_excess, metric.projection_ratio(id) - 1.0);
  }

  if (!closure.closed) {
    cert.failed_check = "mixture closure";
  } else if (cert.ratio_excess > 1e-9) {
    cert.failed_check = "projection ratio";
  } else if (!(cert.hull_gap > cert.required_gap)) {
    cert.failed_check = "separation";
  } else if (!(d > implied_C + 1.0)) {
    cert.failed_check = "d > C + 1";
  }
  cert.admissible = cert.failed_check.empty();
  return cert;
}

}  // namespace predrate
