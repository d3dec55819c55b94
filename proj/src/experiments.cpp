#include "predrate/experiments.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "predrate/numerics.hpp"

namespace predrate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Inverse-CDF sampler for the piecewise-linear interpolant of a grid density.
class GridSampler {
 public:
  explicit GridSampler(const GridDensity& density) : grid_(density.grid()) {
    const auto v = density.values();
    values_.assign(v.begin(), v.end());
    cumulative_.resize(grid_.points());
    cumulative_[0] = 0.0;
    for (std::size_t k = 0; k + 1 < grid_.points(); ++k) {
      cumulative_[k + 1] = cumulative_[k] + 0.5 * grid_.spacing() * (values_[k] + values_[k + 1]);
    }
  }

  double operator()(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
    const double u = unif(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
    k = std::clamp<std::size_t>(k, 1, grid_.points() - 1) - 1;
    const double h = grid_.spacing();
    const double rest = u - cumulative_[k];
    // Mass of [x_k, x_k + t h] is v0 h t + (v1 - v0) h t^2 / 2.
    const double a = 0.5 * (values_[k + 1] - values_[k]) * h;
    const double b = values_[k] * h;
    const double disc = std::max(0.0, b * b + 4.0 * a * rest);
    const double denom = b + std::sqrt(disc);
    const double t = denom > 0.0 ? std::clamp(2.0 * rest / denom, 0.0, 1.0) : 0.5;
    return grid_.node(k) + t * h;
  }

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<double> cumulative_;
};

std::vector<double> epsilons_of(const RateSchedule& schedule) {
  std::vector<double> e;
  for (std::size_t n : schedule.n_values) e.push_back(schedule.epsilon(n));
  return e;
}

double median_of(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

std::vector<double> column(const std::vector<std::vector<double>>& table, std::size_t k) {
  std::vector<double> out;
  out.reserve(table.size());
  for (const auto& row : table) out.push_back(row[k]);
  return out;
}

double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

/// Atom ids whose target distance to the truth exceeds `radius`.
std::vector<std::size_t> far_atoms(RegimeMetric& metric, double radius) {
  std::vector<std::size_t> ids;
  for (std::size_t j = 0; j < metric.size(); ++j) {
    if (metric.target_distance(j) > radius) ids.push_back(j);
  }
  return ids;
}

}  // namespace

// ----------------------------------------------------------------- data

std::size_t sample_length(Regime regime, std::size_t n) {
  return regime == Regime::markov ? n + 1 : n;
}

std::vector<Observation> generate_data(Regime regime, const FamilyMember& truth, std::size_t n,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Observation> data;
  data.reserve(sample_length(regime, n));
  switch (regime) {
    case Regime::iid:
    case Regime::misspecified: {
      if (truth.kind() != MemberKind::iid_density) throw std::invalid_argument("invalid truth for regime");
      const GridSampler sample(truth.density());
      for (std::size_t i = 0; i < n; ++i) data.push_back({sample(rng), {i, std::nullopt}});
      break;
    }
    case Regime::regression: {
      if (truth.kind() != MemberKind::regression_function) {
        throw std::invalid_argument("invalid truth for regime");
      }
      const auto& f = truth.regression();
      if (n > f.size()) throw std::out_of_range("index outside design");
      for (std::size_t i = 0; i < n; ++i) data.push_back({f.at(i) + normal(rng), {i, std::nullopt}});
      break;
    }
    case Regime::markov: {
      if (truth.kind() != MemberKind::markov_param) throw std::invalid_argument("invalid truth for regime");
      const MarkovParam& p = truth.markov();
      double y = p.stationary_sd() * normal(rng);
      data.push_back({y, {0, std::nullopt}});
      for (std::size_t i = 1; i <= n; ++i) {
        const double next = p.transition_mean(y) + p.noise_sd * normal(rng);
        data.push_back({next, {i, y}});
        y = next;
      }
      break;
    }
  }
  return data;
}

// ------------------------------------------------------------ rate fits

RateFit fit_rate(std::span<const std::size_t> n_values, std::span<const double> statistic,
                 std::span<const double> epsilons) {
  if (n_values.size() != statistic.size() || n_values.size() != epsilons.size()) {
    throw std::invalid_argument("sequence length mismatch");
  }
  RateFit fit;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    fit.fitted_constant = std::max(fit.fitted_constant, statistic[k] / (epsilons[k] * epsilons[k]));
    if (statistic[k] > 0.0 && std::isfinite(statistic[k])) {
      x.push_back(std::log(static_cast<double>(n_values[k])));
      y.push_back(std::log(statistic[k]));
    } else {
      fit.excluded.push_back(k);
    }
  }
  if (x.size() < 3) throw std::invalid_argument("rate fit needs at least 3 positive points");
  fit.slope = least_squares_slope(x, y);
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (fit.intercept + fit.slope * x[k]);
    ss_res += e * e;
    ss_tot += (y[k] - my) * (y[k] - my);
  }
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

// --------------------------------------------------------------- Cesaro

CesaroReplication cesaro_kl_run(const RegimeSetup& setup, std::span<const std::size_t> n_values,
                                std::uint64_t seed, std::size_t predictive_points) {
  if (n_values.empty()) throw std::invalid_argument("schedule has no n values");
  const std::size_t n_max = n_values.back();
  const auto data = generate_data(setup.regime, setup.truth.data, n_max, seed);
  PosteriorState state(setup.prior);
  const Family& family = setup.prior->family();
  const bool iid_kind = setup.regime == Regime::iid || setup.regime == Regime::misspecified;

  std::size_t offset = 0;
  if (setup.regime == Regime::markov) {
    state.absorb(data[0]);
    offset = 1;
  }

  CesaroReplication out;
  out.convexity_violation = -kInf;
  std::vector<double> predictive_sum;
  double gap_sum = 0.0;
  if (iid_kind) predictive_sum.assign(setup.data_density().grid().points(), 0.0);

  double kl_sum = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 1; i <= n_max; ++i) {
    const Observation& obs = data[offset + i - 1];
    double stat = 0.0;
    if (iid_kind) {
      const Grid& grid = setup.data_density().grid();
      const GridDensity hat = predictive(state, obs.context, grid);
      stat = setup.regime == Regime::iid
                 ? kl(setup.data_density(), hat)
                 : kl_contrast(setup.reference_density(), hat, setup.data_density());
      for (std::size_t k = 0; k < predictive_sum.size(); ++k) predictive_sum[k] += hat.values()[k];
      gap_sum += h_affinity_gap(setup.data_density(), hat);
    } else {
      std::vector<FamilyMember> members(family.begin(), family.end());
      members.push_back(setup.truth.data);
      const Grid grid = observation_grid(members, obs.context, predictive_points);
      const GridDensity hat = predictive(state, obs.context, grid);
      stat = kl(conditional_density(setup.truth.data, obs.context, grid), hat);
    }
    kl_sum += stat;
    state.absorb(obs);

    while (next < n_values.size() && n_values[next] == i) {
      out.cesaro.push_back(kl_sum / static_cast<double>(i));
      if (iid_kind) {
        std::vector<double> mean(predictive_sum);
        for (double& v : mean) v /= static_cast<double>(i);
        const GridDensity bar = GridDensity::from_values(setup.data_density().grid(), std::move(mean));
        const double violation =
            h_affinity_gap(setup.data_density(), bar) - gap_sum / static_cast<double>(i);
        out.convexity_violation = std::max(out.convexity_violation, violation);
      }
      ++next;
    }
  }
  if (!iid_kind) out.convexity_violation = 0.0;
  return out;
}

CesaroReport cesaro_experiment(const ExperimentPlan& plan, std::size_t predictive_points) {
  plan.schedule.validate();
  const auto& ns = plan.schedule.n_values;
  auto reps = run_replications(plan.replications, plan.jobs, [&](std::size_t rep) {
    return cesaro_kl_run(plan.setup, ns, plan.replication_seed(rep), predictive_points);
  });
  CesaroReport report;
  report.n_values = ns;
  report.epsilon = epsilons_of(plan.schedule);
  report.worst_convexity_violation = -kInf;
  for (auto& r : reps) {
    report.per_replication.push_back(r.cesaro);
    report.worst_convexity_violation = std::max(report.worst_convexity_violation, r.convexity_violation);
  }
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const auto col = column(report.per_replication, k);
    const auto me = mean_and_error(col);
    report.mean.push_back(me.mean);
    report.standard_error.push_back(me.standard_error);
    report.median.push_back(quantile(col, 0.5));
    report.upper_quartile.push_back(quantile(col, 0.75));
  }
  if (ns.size() >= 3) {
    try {
      report.fit = fit_rate(ns, report.mean, report.epsilon);
    } catch (const std::invalid_argument&) {
      // Identically zero statistics leave nothing to fit; the report keeps the
      // default fit with every point excluded.
      report.fit = RateFit{};
      for (std::size_t k = 0; k < ns.size(); ++k) report.fit.excluded.push_back(k);
    }
  }
  return report;
}

// ------------------------------------------------------ numerator bound

Ball build_subset(RegimeMetric& metric, const SubsetRecipe& recipe, double M, double epsilon) {
  if (recipe.kind == SubsetRecipe::Kind::explicit_ball) {
    if (recipe.members.empty()) throw std::invalid_argument("empty subset");
    Ball ball{recipe.center, 0.0, recipe.members};
    std::sort(ball.member_ids.begin(), ball.member_ids.end());
    for (std::size_t id : ball.member_ids) {
      ball.radius = std::max(ball.radius, metric.ball_distance(recipe.center, id));
    }
    return ball;
  }
  const auto target = far_atoms(metric, M * epsilon);
  const auto cover = greedy_cover(metric, target, 0.5 * M * epsilon);
  if (recipe.ball_index >= cover.size()) {
    throw std::runtime_error("cover has no ball at the requested position");
  }
  return cover[recipe.ball_index];
}

NumeratorReport verify_numerator_bound(const ExperimentPlan& plan, const SubsetRecipe& recipe,
                                       bool require_certificate) {
  plan.schedule.validate();
  const auto& ns = plan.schedule.n_values;
  const double d = plan.params.d;
  NumeratorReport report;
  report.pass = true;

  for (std::size_t k = 0; k < ns.size(); ++k) {
    const std::size_t n = ns[k];
    const double eps = plan.schedule.epsilon(n);
    RegimeMetric metric(plan.setup, n);
    NumeratorRow row;
    row.n = n;
    row.epsilon = eps;
    const Ball ball = build_subset(metric, recipe, plan.params.M, eps);
    row.subset = ball.member_ids;
    row.prior_mass = plan.setup.prior->mass(ball.member_ids);
    const double implied_C = thickness_at(metric, eps).implied_C;
    row.certificate = certify_subset(metric, ball, d, eps, implied_C, recipe.closure_mixtures,
                                     plan.seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
    if (!row.certificate.admissible) {
      report.pass = false;
      report.failure = "subset not admissible: " + row.certificate.failed_check;
      if (require_certificate) throw std::runtime_error(report.failure);
    }

    const auto values = run_replications(plan.replications, plan.jobs, [&](std::size_t rep) {
      const auto data = generate_data(plan.setup.regime, plan.setup.truth.data, n,
                                      plan.replication_seed(rep));
      const double log_L =
          restricted_log_numerator(*plan.setup.prior, data, ball.member_ids, plan.setup.truth.reference);
      return std::exp(0.5 * log_L);
    });
    const auto me = mean_and_error(values);
    row.mean_sqrt_L = me.mean;
    row.standard_error = me.standard_error;
    const double ne2 = static_cast<double>(n) * eps * eps;
    row.bound = std::sqrt(row.prior_mass) * std::exp(-d * ne2);
    row.pass = row.certificate.admissible && row.mean_sqrt_L <= row.bound + 3.0 * row.standard_error;
    row.tight_d = row.certificate.hull_gap / (eps * eps);
    row.tight_bound = std::sqrt(row.prior_mass) * std::exp(-static_cast<double>(n) * row.certificate.hull_gap);
    row.tight_pass = row.mean_sqrt_L <= row.tight_bound + 3.0 * row.standard_error;
    report.pass = report.pass && row.pass;
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

/// E prod sqrt(f_j / f_*) over a stationary AR(1) path of n transitions,
/// including the stationary factor at Y_0, by iterating the transfer operator
/// (T g)(y) = int sqrt(f_j(y'|y) f_*(y'|y)) g(y') dy' on a grid.
double markov_singleton_affinity(const MarkovParam& star, const MarkovParam& member,
                                 std::size_t n, std::size_t points, double half_width) {
  const double reach = half_width * std::max(star.stationary_sd(), member.stationary_sd());
  const Grid grid(-reach, reach, points);
  const std::size_t m = grid.points();
  std::vector<double> kernel(m * m);
  for (std::size_t a = 0; a < m; ++a) {
    const double y = grid.node(a);
    for (std::size_t b = 0; b < m; ++b) {
      const double yp = grid.node(b);
      const double l = 0.5 * (normal_log_pdf(yp, star.transition_mean(y), star.noise_sd) +
                              normal_log_pdf(yp, member.transition_mean(y), member.noise_sd));
      kernel[a * m + b] = grid.weight(b) * std::exp(l);
    }
  }
  std::vector<double> g(m, 1.0), next(m);
  for (std::size_t step = 0; step < n; ++step) {
    for (std::size_t a = 0; a < m; ++a) {
      double s = 0.0;
      const double* row = &kernel[a * m];
      for (std::size_t b = 0; b < m; ++b) s += row[b] * g[b];
      next[a] = s;
    }
    g.swap(next);
  }
  double total = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double y = grid.node(a);
    const double l = 0.5 * (normal_log_pdf(y, 0.0, star.stationary_sd()) +
                            normal_log_pdf(y, 0.0, member.stationary_sd()));
    total += grid.weight(a) * std::exp(l) * g[a];
  }
  return total;
}

}  // namespace

double exact_singleton_sqrt_numerator(const RegimeSetup& setup, std::size_t j, std::size_t n,
                                      std::size_t operator_points) {
  const FamilyMember& member = setup.prior->family().at(j);
  const double root_mass = std::sqrt(setup.prior->weights()[j]);
  switch (setup.regime) {
    case Regime::iid:
      return root_mass * std::pow(1.0 - h_affinity_gap(setup.data_density(), member.density()),
                                  static_cast<double>(n));
    case Regime::misspecified:
      return root_mass * std::pow(1.0 - h_star(setup.reference_density(), member.density(),
                                               setup.data_density()),
                                  static_cast<double>(n));
    case Regime::regression: {
      const auto& truth = setup.truth.data.regression();
      double log_product = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = truth.at(i), b = member.regression().at(i);
        const Grid grid(std::min(a, b) - 10.0, std::max(a, b) + 10.0, setup.conditional_points);
        log_product += std::log1p(-h_affinity_gap(gaussian_density(grid, a, 1.0),
                                                  gaussian_density(grid, b, 1.0)));
      }
      return root_mass * std::exp(log_product);
    }
    case Regime::markov:
      return root_mass * markov_singleton_affinity(setup.truth.data.markov(), member.markov(), n,
                                                   operator_points, setup.quadrature.half_width);
  }
  return 0.0;
}

// ------------------------------------------------------------- evidence

EvidenceReport verify_evidence_bound(const ExperimentPlan& plan) {
  plan.schedule.validate();
  const auto& ns = plan.schedule.n_values;
  EvidenceReport report;
  report.n_values = ns;
  for (std::size_t n : ns) {
    const double eps = plan.schedule.epsilon(n);
    report.threshold_log.push_back(-plan.params.c * static_cast<double>(n) * eps * eps);
    RegimeMetric metric(plan.setup, n);
    const double C = thickness_at(metric, eps).implied_C;
    report.implied_C.push_back(C);
    report.c_admissible.push_back(plan.params.c > C + 1.0);
  }
  report.log_I = run_replications(plan.replications, plan.jobs, [&](std::size_t rep) {
    const auto data = generate_data(plan.setup.regime, plan.setup.truth.data, ns.back(),
                                    plan.replication_seed(rep));
    PosteriorState state(plan.setup.prior, plan.setup.truth.reference);
    std::vector<double> out;
    std::size_t next = 0;
    for (std::size_t k = 0; k < data.size() && next < ns.size(); ++k) {
      state.absorb(data[k]);
      const std::size_t n_done = plan.setup.regime == Regime::markov ? k : k + 1;
      while (next < ns.size() && ns[next] == n_done && (plan.setup.regime != Regime::markov || k > 0)) {
        out.push_back(state.log_I());
        ++next;
      }
    }
    return out;
  });
  std::vector<double> x;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    std::size_t below = 0;
    for (const auto& row : report.log_I) below += row[k] <= report.threshold_log[k] ? 1 : 0;
    report.fraction_below.push_back(static_cast<double>(below) /
                                    static_cast<double>(report.log_I.size()));
    x.push_back(static_cast<double>(ns[k]));
  }
  report.trend = ns.size() >= 2 ? least_squares_slope(x, report.fraction_below) : 0.0;
  return report;
}

// ---------------------------------------------------------- concentration

MassReport posterior_mass_path(const ExperimentPlan& plan, double M,
                               std::span<const std::size_t> small_set) {
  plan.schedule.validate();
  const auto& ns = plan.schedule.n_values;
  std::vector<std::vector<std::size_t>> targets;
  for (std::size_t n : ns) {
    RegimeMetric metric(plan.setup, n);
    targets.push_back(far_atoms(metric, M * plan.schedule.epsilon(n)));
  }
  const std::size_t ref_id = plan.setup.truth.reference.id;
  const bool ref_in_family = ref_id < plan.setup.prior->size();
  const std::vector<std::size_t> small(small_set.begin(), small_set.end());

  struct Replication {
    std::vector<double> mass, ref_weight, small_mass;
  };
  const auto reps = run_replications(plan.replications, plan.jobs, [&](std::size_t rep) {
    const auto data = generate_data(plan.setup.regime, plan.setup.truth.data, ns.back(),
                                    plan.replication_seed(rep));
    PosteriorState state(plan.setup.prior);
    Replication out;
    std::size_t next = 0;
    for (std::size_t k = 0; k < data.size() && next < ns.size(); ++k) {
      state.absorb(data[k]);
      const std::size_t n_done = plan.setup.regime == Regime::markov ? k : k + 1;
      while (next < ns.size() && ns[next] == n_done && (plan.setup.regime != Regime::markov || k > 0)) {
        out.mass.push_back(targets[next].empty() ? 0.0 : state.mass(targets[next]));
        out.ref_weight.push_back(ref_in_family ? std::exp(state.log_weights()[ref_id]) : 0.0);
        out.small_mass.push_back(small.empty() ? 0.0 : state.mass(small));
        ++next;
      }
    }
    return out;
  });

  MassReport report;
  report.decreasing = true;
  for (const auto& r : reps) report.per_replication.push_back(r.mass);
  for (std::size_t k = 0; k < ns.size(); ++k) {
    MassRow row;
    row.n = ns[k];
    row.epsilon = plan.schedule.epsilon(ns[k]);
    row.target_size = targets[k].size();
    std::vector<double> mass, ref, sm;
    std::size_t above = 0;
    for (const auto& r : reps) {
      mass.push_back(r.mass[k]);
      ref.push_back(r.ref_weight[k]);
      sm.push_back(r.small_mass[k]);
      above += r.mass[k] > plan.params.eta ? 1 : 0;
    }
    row.median = median_of(mass);
    row.upper_quartile = quantile(mass, 0.75);
    row.fraction_above_eta = static_cast<double>(above) / static_cast<double>(reps.size());
    row.median_reference_weight = median_of(ref);
    row.median_small_set = median_of(sm);
    if (k > 0 && row.median > report.rows.back().median) report.decreasing = false;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace predrate
