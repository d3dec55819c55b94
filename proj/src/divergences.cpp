#include "predrate/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "predrate/numerics.hpp"

namespace predrate {

// ---------------------------------------------------------------- Grid

Grid::Grid(double lower, double upper, std::size_t points)
    : lower_(lower), upper_(upper), points_(points), spacing_(0.0) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw std::invalid_argument("grid requires finite lower < upper");
  }
  if (points < 3) throw std::invalid_argument("grid requires at least 3 points");
  spacing_ = (upper - lower) / static_cast<double>(points - 1);
}

double Grid::node(std::size_t k) const {
  if (k + 1 == points_) return upper_;
  return lower_ + static_cast<double>(k) * spacing_;
}

double Grid::weight(std::size_t k) const {
  return (k == 0 || k + 1 == points_) ? 0.5 * spacing_ : spacing_;
}

double Grid::integrate(std::span<const double> samples) const {
  if (samples.size() != points_) throw std::invalid_argument("sample count does not match grid");
  double interior = 0.0;
  for (std::size_t k = 1; k + 1 < points_; ++k) interior += samples[k];
  return spacing_ * (interior + 0.5 * (samples.front() + samples.back()));
}

Grid Grid::refined() const { return Grid(lower_, upper_, 2 * points_ - 1); }

// ---------------------------------------------------------- GridDensity

GridDensity::GridDensity(Grid grid, std::vector<double> values, std::vector<double> log_values,
                         bool floored)
    : grid_(grid), values_(std::move(values)), log_values_(std::move(log_values)),
      floored_(floored) {}

GridDensity GridDensity::from_values(Grid grid, std::vector<double> values) {
  if (values.size() != grid.points()) {
    throw std::invalid_argument("density sample count does not match grid");
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("density samples must be finite and nonnegative");
    }
  }
  const double total = grid.integrate(values);
  if (!(total > 0.0)) throw std::invalid_argument("density has zero mass on the grid");
  // Already-normalized input (for example a density read back from text) is
  // kept bit for bit.
  const double scale = std::abs(total - 1.0) < 1e-14 ? 1.0 : total;
  bool floored = false;
  std::vector<double> logs(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    double v = values[k] / scale;
    if (v < kPositivityFloor) {
      v = kPositivityFloor;
      floored = true;
    }
    values[k] = v;
    logs[k] = std::log(v);
  }
  return GridDensity(grid, std::move(values), std::move(logs), floored);
}

GridDensity GridDensity::from_log_values(Grid grid, std::vector<double> log_values) {
  if (log_values.size() != grid.points()) {
    throw std::invalid_argument("density sample count does not match grid");
  }
  double top = -std::numeric_limits<double>::infinity();
  for (double l : log_values) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("log-density samples must be finite or -inf");
    }
    top = std::max(top, l);
  }
  if (!std::isfinite(top)) throw std::invalid_argument("density has zero mass on the grid");
  std::vector<double> scaled(log_values.size());
  for (std::size_t k = 0; k < log_values.size(); ++k) scaled[k] = std::exp(log_values[k] - top);
  const double log_total = std::log(grid.integrate(scaled)) + top;

  bool floored = false;
  std::vector<double> values(log_values.size());
  for (std::size_t k = 0; k < log_values.size(); ++k) {
    double l = log_values[k] - log_total;
    double v = std::exp(l);
    if (v < kPositivityFloor) {
      v = kPositivityFloor;
      floored = true;
      if (!std::isfinite(l)) l = std::log(kPositivityFloor);
    }
    values[k] = v;
    log_values[k] = l;
  }
  return GridDensity(grid, std::move(values), std::move(log_values), floored);
}

double GridDensity::log_at(double y) const {
  if (!grid_.contains(y)) throw std::out_of_range("observation outside grid");
  const double pos = (y - grid_.lower()) / grid_.spacing();
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= grid_.points()) k = grid_.points() - 2;
  const double t = pos - static_cast<double>(k);
  return (1.0 - t) * log_values_[k] + t * log_values_[k + 1];
}

double GridDensity::at(double y) const { return std::exp(log_at(y)); }

std::string GridDensity::to_text() const {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "grid %.17g %.17g %zu\n", grid_.lower(), grid_.upper(),
                grid_.points());
  out << buf;
  for (double v : values_) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    out << buf;
  }
  return out.str();
}

GridDensity GridDensity::from_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  double lower = 0.0, upper = 0.0;
  std::size_t points = 0;
  if (!(in >> tag >> lower >> upper >> points) || tag != "grid") {
    throw std::invalid_argument("density text must start with 'grid <lower> <upper> <points>'");
  }
  Grid grid(lower, upper, points);
  std::vector<double> values;
  values.reserve(points);
  double v = 0.0;
  while (in >> v) values.push_back(v);
  return from_values(grid, std::move(values));
}

GridDensity gaussian_density(const Grid& grid, double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  std::vector<double> logs(grid.points());
  for (std::size_t k = 0; k < grid.points(); ++k) logs[k] = normal_log_pdf(grid.node(k), mean, sd);
  return GridDensity::from_log_values(grid, std::move(logs));
}

GridDensity mixture(std::span<const GridDensity> components, std::span<const double> weights) {
  if (components.empty() || components.size() != weights.size()) {
    throw std::invalid_argument("mixture needs one weight per component");
  }
  const Grid& grid = components.front().grid();
  double total = 0.0;
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (!(components[j].grid() == grid)) throw std::invalid_argument("incompatible grids");
    if (!(weights[j] >= 0.0)) throw std::invalid_argument("mixture weights must be nonnegative");
    total += weights[j];
  }
  if (!(total > 0.0)) throw std::invalid_argument("mixture weights sum to zero");

  std::vector<double> log_w;
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < components.size(); ++j) {
    if (weights[j] > 0.0) {
      log_w.push_back(std::log(weights[j] / total));
      active.push_back(j);
    }
  }
  std::vector<double> logs(grid.points());
  std::vector<double> terms(active.size());
  for (std::size_t k = 0; k < grid.points(); ++k) {
    for (std::size_t a = 0; a < active.size(); ++a) {
      terms[a] = log_w[a] + components[active[a]].log_values()[k];
    }
    logs[k] = log_sum_exp(terms);
  }
  return GridDensity::from_log_values(grid, std::move(logs));
}

bool tail_truncated(const GridDensity& f, const GridDensity& g) {
  return f.floored() || g.floored();
}

// ---------------------------------------------------------- divergences

namespace {

void require_same_grid(const GridDensity& a, const GridDensity& b) {
  if (!(a.grid() == b.grid())) throw std::invalid_argument("incompatible grids");
}

void require_same_grid(const GridDensity& a, const GridDensity& b, const GridDensity& c) {
  require_same_grid(a, b);
  require_same_grid(a, c);
}

template <class Integrand>
double quadrature(const Grid& grid, Integrand&& integrand) {
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.points(); ++k) sum += grid.weight(k) * integrand(k);
  return sum;
}

constexpr double kNegativeSlack = 1e-9;

double clamp_nonnegative(double value, const char* what) {
  if (value >= 0.0) return value;
  if (value >= -kNegativeSlack) return 0.0;
  throw std::logic_error(std::string(what) + ": negative value beyond quadrature tolerance");
}

}  // namespace

double kl(const GridDensity& f, const GridDensity& g) {
  require_same_grid(f, g);
  const auto fv = f.values();
  const auto lf = f.log_values();
  const auto lg = g.log_values();
  return clamp_nonnegative(quadrature(f.grid(), [&](std::size_t k) { return fv[k] * (lf[k] - lg[k]); }),
                           "kl");
}

double v_divergence(const GridDensity& f, const GridDensity& g) {
  require_same_grid(f, g);
  const auto fv = f.values();
  const auto lf = f.log_values();
  const auto lg = g.log_values();
  return quadrature(f.grid(), [&](std::size_t k) {
    const double d = lf[k] - lg[k];
    return fv[k] * d * d;
  });
}

double hellinger(const GridDensity& f, const GridDensity& g) {
  require_same_grid(f, g);
  const auto fv = f.values();
  const auto gv = g.values();
  const double sq = quadrature(f.grid(), [&](std::size_t k) {
    const double d = std::sqrt(fv[k]) - std::sqrt(gv[k]);
    return d * d;
  });
  return std::clamp(std::sqrt(std::max(sq, 0.0)), 0.0, std::sqrt(2.0));
}

double h_affinity_gap(const GridDensity& f, const GridDensity& g) {
  require_same_grid(f, g);
  const auto fv = f.values();
  const auto gv = g.values();
  // 1 - int sqrt(f g) written as half the squared distance of root densities,
  // which is the same for normalized densities and exact at f = g.
  const double gap = 0.5 * quadrature(f.grid(), [&](std::size_t k) {
    const double d = std::sqrt(fv[k]) - std::sqrt(gv[k]);
    return d * d;
  });
  return std::clamp(gap, 0.0, 1.0);
}

double kl_contrast(const GridDensity& f_circ, const GridDensity& f, const GridDensity& f_star) {
  require_same_grid(f_circ, f, f_star);
  const auto lc = f_circ.log_values();
  const auto lf = f.log_values();
  const auto sv = f_star.values();
  return quadrature(f.grid(), [&](std::size_t k) { return sv[k] * (lc[k] - lf[k]); });
}

double v_star(const GridDensity& f_circ, const GridDensity& f, const GridDensity& f_star) {
  require_same_grid(f_circ, f, f_star);
  const auto lc = f_circ.log_values();
  const auto lf = f.log_values();
  const auto sv = f_star.values();
  return quadrature(f.grid(), [&](std::size_t k) {
    const double d = lc[k] - lf[k];
    return sv[k] * d * d;
  });
}

double weighted_hellinger_between(const GridDensity& a, const GridDensity& b,
                                  const GridDensity& f_circ, const GridDensity& f_star) {
  require_same_grid(a, b, f_circ);
  require_same_grid(a, f_star);
  const auto av = a.values();
  const auto bv = b.values();
  const auto lc = f_circ.log_values();
  const auto ls = f_star.log_values();
  const double sq = quadrature(a.grid(), [&](std::size_t k) {
    const double d = std::sqrt(av[k]) - std::sqrt(bv[k]);
    return d * d * std::exp(ls[k] - lc[k]);
  });
  return std::sqrt(std::max(sq, 0.0));
}

double weighted_hellinger(const GridDensity& f_circ, const GridDensity& f,
                          const GridDensity& f_star) {
  return weighted_hellinger_between(f_circ, f, f_circ, f_star);
}

double h_star(const GridDensity& f_circ, const GridDensity& f, const GridDensity& f_star) {
  require_same_grid(f_circ, f, f_star);
  const auto lc = f_circ.log_values();
  const auto lf = f.log_values();
  const auto sv = f_star.values();
  return 1.0 - quadrature(f.grid(), [&](std::size_t k) { return std::exp(0.5 * (lf[k] - lc[k])) * sv[k]; });
}

double projection_ratio_mass(const GridDensity& f_circ, const GridDensity& f,
                             const GridDensity& f_star) {
  require_same_grid(f_circ, f, f_star);
  const auto lc = f_circ.log_values();
  const auto lf = f.log_values();
  const auto sv = f_star.values();
  return quadrature(f.grid(), [&](std::size_t k) { return std::exp(lf[k] - lc[k]) * sv[k]; });
}

// ------------------------------------------------------------ sequences

namespace {

void require_paired(std::span<const GridDensity> a, std::span<const GridDensity> b) {
  if (a.size() != b.size()) throw std::invalid_argument("sequence length mismatch");
  if (a.empty()) throw std::invalid_argument("empty sequence");
}

}  // namespace

double mean_hellinger(std::span<const GridDensity> seq_a, std::span<const GridDensity> seq_b) {
  require_paired(seq_a, seq_b);
  double sum = 0.0;
  for (std::size_t i = 0; i < seq_a.size(); ++i) {
    const double h = hellinger(seq_a[i], seq_b[i]);
    sum += h * h;
  }
  return std::sqrt(sum / static_cast<double>(seq_a.size()));
}

double max_hellinger(std::span<const GridDensity> seq_a, std::span<const GridDensity> seq_b) {
  require_paired(seq_a, seq_b);
  double best = 0.0;
  for (std::size_t i = 0; i < seq_a.size(); ++i) best = std::max(best, hellinger(seq_a[i], seq_b[i]));
  return best;
}

// ---------------------------------------------------------- point masses

namespace {

void require_probability_pair(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size() || p.empty()) throw std::invalid_argument("incompatible grids");
}

}  // namespace

double kl_atoms(std::span<const double> p, std::span<const double> q) {
  require_probability_pair(p, q);
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) sum += p[k] * (std::log(p[k]) - std::log(std::max(q[k], kPositivityFloor)));
  }
  return clamp_nonnegative(sum, "kl_atoms");
}

double v_atoms(std::span<const double> p, std::span<const double> q) {
  require_probability_pair(p, q);
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) {
      const double d = std::log(p[k]) - std::log(std::max(q[k], kPositivityFloor));
      sum += p[k] * d * d;
    }
  }
  return sum;
}

// -------------------------------------------------------------- Markov

StateWeighting stationary_weighting(const MarkovParam& param, std::size_t points,
                                    double half_width_sd) {
  const double s = param.stationary_sd();
  Grid grid(-half_width_sd * s, half_width_sd * s, points);
  return {StateWeighting::Kind::stationary_density, gaussian_density(grid, 0.0, s)};
}

StateWeighting explicit_weighting(GridDensity density) {
  return {StateWeighting::Kind::explicit_density, std::move(density)};
}

StateWeighting two_point_weighting(double shift, double sd, std::size_t points) {
  const double reach = std::abs(shift) + 12.0 * sd;
  Grid grid(-reach, reach, points);
  std::vector<double> logs(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double y = grid.node(k);
    logs[k] = log_add_exp(normal_log_pdf(y, -shift, sd), normal_log_pdf(y, shift, sd)) - std::log(2.0);
  }
  return {StateWeighting::Kind::two_point_mixture, GridDensity::from_log_values(grid, std::move(logs))};
}

namespace {

GridDensity transition_on(const MarkovParam& p, double state, const Grid& grid) {
  std::vector<double> logs(grid.points());
  const double mean = p.transition_mean(state);
  for (std::size_t k = 0; k < grid.points(); ++k) logs[k] = normal_log_pdf(grid.node(k), mean, p.noise_sd);
  return GridDensity::from_log_values(grid, std::move(logs));
}

Grid transition_grid(const MarkovParam& a, const MarkovParam& b, double state,
                     const MarkovQuadrature& q) {
  const double ma = a.transition_mean(state);
  const double mb = b.transition_mean(state);
  const double reach = q.half_width * std::max(a.noise_sd, b.noise_sd);
  return Grid(std::min(ma, mb) - reach, std::max(ma, mb) + reach, q.observation_points);
}

}  // namespace

TransitionDivergences transition_divergences(const MarkovParam& a, const MarkovParam& b,
                                             double state, const MarkovQuadrature& q) {
  const Grid grid = transition_grid(a, b, state, q);
  const GridDensity fa = transition_on(a, state, grid);
  const GridDensity fb = transition_on(b, state, grid);
  return {kl(fa, fb), v_divergence(fa, fb), hellinger(fa, fb)};
}

double markov_sup_hellinger(const MarkovParam& a, const MarkovParam& b, double state_window,
                            const MarkovQuadrature& q) {
  if (!(state_window > 0.0)) throw std::invalid_argument("state window must be positive");
  const std::size_t m = std::max<std::size_t>(q.window_points, 3);
  const Grid window(-state_window, state_window, m);
  double best = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const Grid grid = transition_grid(a, b, window.node(k), q);
    best = std::max(best, hellinger(transition_on(a, window.node(k), grid),
                                    transition_on(b, window.node(k), grid)));
  }
  return best;
}

MarkovDivergences markov_divergences(const MarkovParam& theta_star, const MarkovParam& theta,
                                     const StateWeighting& weighting, double state_window,
                                     const MarkovQuadrature& q) {
  if (!theta_star.is_stationary() || !theta.is_stationary()) {
    throw std::domain_error("no stationary density");
  }
  if (!(state_window > 0.0)) throw std::invalid_argument("state window must be positive");

  MarkovDivergences out;
  const StateWeighting stationary = stationary_weighting(theta_star, q.state_points, q.half_width);
  const GridDensity& u = stationary.density;
  const Grid& sgrid = u.grid();
  for (std::size_t k = 0; k < sgrid.points(); ++k) {
    const double w = sgrid.weight(k) * u.values()[k];
    if (w < 1e-300) continue;
    const auto d = transition_divergences(theta_star, theta, sgrid.node(k), q);
    out.K += w * d.K;
    out.V += w * d.V;
  }

  const GridDensity& Q = weighting.density;
  const Grid& qgrid = Q.grid();
  for (std::size_t k = 0; k < qgrid.points(); ++k) {
    const double w = qgrid.weight(k) * Q.values()[k];
    if (w < 1e-300) continue;
    out.H_Q += w * transition_divergences(theta_star, theta, qgrid.node(k), q).H;
  }

  out.H_inf_truncated = markov_sup_hellinger(theta_star, theta, state_window, q);
  return out;
}

}  // namespace predrate
