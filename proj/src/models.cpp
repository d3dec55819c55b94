#include "predrate/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "predrate/numerics.hpp"

namespace predrate {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::iid: return "iid";
    case Regime::misspecified: return "misspecified";
    case Regime::regression: return "regression";
    case Regime::markov: return "markov";
  }
  return "unknown";
}

std::optional<Regime> parse_regime(std::string_view name) {
  if (name == "iid") return Regime::iid;
  if (name == "misspecified") return Regime::misspecified;
  if (name == "regression") return Regime::regression;
  if (name == "markov") return Regime::markov;
  return std::nullopt;
}

// --------------------------------------------------------- regression

RegressionFunction::RegressionFunction(std::vector<double> values_at_design,
                                       std::vector<double> design_points)
    : values_(std::move(values_at_design)), design_(std::move(design_points)) {
  if (values_.empty() || values_.size() != design_.size()) {
    throw std::invalid_argument("regression function needs one value per design point");
  }
}

double RegressionFunction::at(std::size_t index) const {
  if (index >= values_.size()) throw std::out_of_range("index outside design");
  return values_[index];
}

std::vector<double> default_design(std::size_t n) {
  if (n == 0) throw std::invalid_argument("design needs at least one point");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return x;
}

// ------------------------------------------------------------- prior

AtomicPrior::AtomicPrior(Family family, std::vector<double> weights)
    : family_(std::move(family)), weights_(std::move(weights)) {
  if (family_.empty()) throw std::invalid_argument("prior needs at least one atom");
  if (weights_.size() != family_.size()) throw std::invalid_argument("one weight per atom required");
  const MemberKind kind = family_.front().kind();
  double total = 0.0;
  for (std::size_t j = 0; j < family_.size(); ++j) {
    if (family_[j].id != j) throw std::invalid_argument("family ids must equal positions");
    if (family_[j].kind() != kind) throw std::invalid_argument("family mixes member kinds");
    if (!(weights_[j] > 0.0) || !std::isfinite(weights_[j])) {
      throw std::invalid_argument("prior weights must be positive");
    }
    total += weights_[j];
  }
  log_weights_.resize(weights_.size());
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    weights_[j] /= total;
    log_weights_[j] = std::log(weights_[j]);
  }
}

AtomicPrior AtomicPrior::uniform(Family family) {
  std::vector<double> w(family.size(), 1.0);
  return AtomicPrior(std::move(family), std::move(w));
}

double AtomicPrior::mass(std::span<const std::size_t> ids) const {
  double m = 0.0;
  for (std::size_t id : ids) m += weights_.at(id);
  return m;
}

// ----------------------------------------------------------- families

Family build_gaussian_location_family(const Grid& grid, std::span<const double> means, double sd) {
  if (means.empty()) throw std::invalid_argument("family needs at least one mean");
  Family family;
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (means[j] - 6.0 * sd < grid.lower() || means[j] + 6.0 * sd > grid.upper()) {
      throw std::invalid_argument("grid clips density");
    }
    family.push_back({j, gaussian_density(grid, means[j], sd)});
  }
  return family;
}

RegressionFunction linear_regression_function(std::span<const double> design,
                                              LinearCoefficients c) {
  std::vector<double> values(design.size());
  for (std::size_t i = 0; i < design.size(); ++i) values[i] = c.intercept + c.slope * design[i];
  return RegressionFunction(std::move(values), {design.begin(), design.end()});
}

Family build_regression_family(std::span<const double> design,
                               std::span<const LinearCoefficients> coefficients) {
  if (coefficients.empty()) throw std::invalid_argument("family needs at least one member");
  Family family;
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    family.push_back({j, linear_regression_function(design, coefficients[j])});
  }
  return family;
}

Family build_markov_family(std::span<const double> thetas, double noise_sd) {
  if (thetas.empty()) throw std::invalid_argument("family needs at least one member");
  Family family;
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    MarkovParam p{thetas[j], noise_sd};
    if (!p.is_stationary()) throw std::domain_error("no stationary density");
    family.push_back({j, p});
  }
  return family;
}

// ---------------------------------------------------------- densities

namespace {

constexpr double kRegressionSd = 1.0;

/// Conditional Gaussian parameters of a regression or Markov member.
struct GaussianLaw {
  double mean;
  double sd;
};

GaussianLaw conditional_law(const FamilyMember& member, const Context& context) {
  switch (member.kind()) {
    case MemberKind::regression_function:
      return {member.regression().at(context.index), kRegressionSd};
    case MemberKind::markov_param: {
      const MarkovParam& p = member.markov();
      if (!context.previous) return {0.0, p.stationary_sd()};
      return {p.transition_mean(*context.previous), p.noise_sd};
    }
    case MemberKind::iid_density: break;
  }
  throw std::logic_error("iid members have no Gaussian conditional law");
}

}  // namespace

double log_likelihood(const FamilyMember& member, const Context& context, double y) {
  if (member.kind() == MemberKind::iid_density) return member.density().log_at(y);
  const GaussianLaw law = conditional_law(member, context);
  return normal_log_pdf(y, law.mean, law.sd);
}

double likelihood(const FamilyMember& member, const Context& context, double y) {
  return std::exp(log_likelihood(member, context, y));
}

void log_likelihoods(const Family& family, const Observation& obs, std::span<double> out) {
  if (out.size() != family.size()) throw std::invalid_argument("output size mismatch");
  if (family.empty()) return;
  if (family.front().kind() != MemberKind::iid_density) {
    for (std::size_t j = 0; j < family.size(); ++j) out[j] = log_likelihood(family[j], obs.context, obs.y);
    return;
  }
  // Shared grid: locate the cell once.
  const Grid& grid = family.front().density().grid();
  if (!grid.contains(obs.y)) throw std::out_of_range("observation outside grid");
  const double pos = (obs.y - grid.lower()) / grid.spacing();
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= grid.points()) k = grid.points() - 2;
  const double t = pos - static_cast<double>(k);
  for (std::size_t j = 0; j < family.size(); ++j) {
    const GridDensity& d = family[j].density();
    if (!(d.grid() == grid)) throw std::invalid_argument("incompatible grids");
    const auto l = d.log_values();
    out[j] = (1.0 - t) * l[k] + t * l[k + 1];
  }
}

GridDensity stationary_density(const MarkovParam& param, const Grid& grid) {
  return gaussian_density(grid, 0.0, param.stationary_sd());
}

GridDensity transition_density(const MarkovParam& param, double previous, const Grid& grid) {
  return gaussian_density(grid, param.transition_mean(previous), param.noise_sd);
}

Grid observation_grid(std::span<const FamilyMember> members, const Context& context,
                      std::size_t points, double half_width) {
  if (members.empty()) throw std::invalid_argument("no members to place on a grid");
  if (members.front().kind() == MemberKind::iid_density) return members.front().density().grid();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& m : members) {
    const GaussianLaw law = conditional_law(m, context);
    lo = std::min(lo, law.mean - half_width * law.sd);
    hi = std::max(hi, law.mean + half_width * law.sd);
  }
  return Grid(lo, hi, points);
}

GridDensity conditional_density(const FamilyMember& member, const Context& context,
                                const Grid& grid) {
  if (member.kind() == MemberKind::iid_density) {
    if (!(member.density().grid() == grid)) throw std::invalid_argument("incompatible grids");
    return member.density();
  }
  const GaussianLaw law = conditional_law(member, context);
  return gaussian_density(grid, law.mean, law.sd);
}

// ------------------------------------------------------- KL projection

Projection kl_projection(const GridDensity& f_star, const Family& family) {
  if (family.empty()) throw std::invalid_argument("empty family");
  Projection best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (family[j].kind() != MemberKind::iid_density) {
      throw std::invalid_argument("KL projection needs an iid-density family");
    }
    const double k = kl(f_star, family[j].density());
    if (k < best.k_min) best = {j, k};
  }
  return best;
}

ContinuousProjection kl_projection_continuous(const GridDensity& f_star,
                                              const std::function<GridDensity(double)>& member,
                                              double lo, double hi, double scan_step,
                                              double tolerance) {
  if (!(lo <= hi)) throw std::invalid_argument("empty parameter interval");
  auto objective = [&](double t) { return kl(f_star, member(t)); };

  const auto steps = static_cast<std::size_t>(std::ceil((hi - lo) / scan_step));
  double best_t = lo;
  double best_k = objective(lo);
  for (std::size_t s = 1; s <= steps; ++s) {
    const double t = std::min(hi, lo + static_cast<double>(s) * scan_step);
    const double k = objective(t);
    if (k < best_k) {
      best_k = k;
      best_t = t;
    }
  }

  double a = std::max(lo, best_t - scan_step);
  double b = std::min(hi, best_t + scan_step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > tolerance) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double t = 0.5 * (a + b);
  const double k = objective(t);
  if (k <= best_k) return {t, k};
  return {best_t, best_k};
}

ContinuousProjection project_onto_mixture_segment(const GridDensity& f_star,
                                                  const GridDensity& f1, const GridDensity& f2) {
  auto at = [&](double t) {
    const GridDensity parts[] = {f1, f2};
    const double w[] = {1.0 - t, t};
    return mixture(parts, w);
  };
  ContinuousProjection p = kl_projection_continuous(f_star, at, 0.0, 1.0);

  // First-order condition g(t) = int (f2 - f1) / f_t f_star; g' < 0 on the
  // segment, so Newton converges from the golden-section estimate.
  const Grid& grid = f_star.grid();
  const auto v1 = f1.values();
  const auto v2 = f2.values();
  const auto vs = f_star.values();
  double t = p.parameter;
  bool converged = false;
  for (int iter = 0; iter < 50; ++iter) {
    double g = 0.0, dg = 0.0;
    for (std::size_t k = 0; k < grid.points(); ++k) {
      const double ft = (1.0 - t) * v1[k] + t * v2[k];
      const double diff = v2[k] - v1[k];
      const double r = diff / ft;
      g += grid.weight(k) * r * vs[k];
      dg -= grid.weight(k) * r * r * vs[k];
    }
    if (!(dg < 0.0)) break;
    const double next = std::clamp(t - g / dg, 0.0, 1.0);
    converged = std::abs(next - t) < 1e-15;
    t = next;
    if (converged) break;
  }
  // Near the optimum the two KL values agree to roundoff, so a converged
  // Newton point wins over the comparison.
  const double k = kl(f_star, at(t));
  if (converged || k <= p.k_min) return {t, k};
  return p;
}

MisspecifiedSetup::MisspecifiedSetup(std::shared_ptr<const AtomicPrior> prior,
                                     GridDensity true_density)
    : prior_(std::move(prior)), true_density_(std::move(true_density)),
      projection_(kl_projection(true_density_, prior_->family())) {}

Truth MisspecifiedSetup::truth() const {
  return {FamilyMember{prior_->size(), true_density_}, prior_->family()[projection_.index]};
}

}  // namespace predrate
