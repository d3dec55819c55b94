#include "predrate/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "predrate/numerics.hpp"

namespace predrate {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> validated_subset(std::span<const std::size_t> subset, std::size_t size) {
  std::vector<std::size_t> ids(subset.begin(), subset.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (ids.empty() || ids.back() >= size) {
    throw std::invalid_argument("restricted posterior undefined");
  }
  return ids;
}

/// log f_j on the grid nodes for one member at one context.
std::vector<double> member_log_values(const FamilyMember& member, const Context& context,
                                      const Grid& grid) {
  if (member.kind() == MemberKind::iid_density) {
    const GridDensity& d = member.density();
    if (!(d.grid() == grid)) throw std::invalid_argument("incompatible grids");
    return {d.log_values().begin(), d.log_values().end()};
  }
  std::vector<double> out(grid.points());
  for (std::size_t k = 0; k < grid.points(); ++k) {
    out[k] = log_likelihood(member, context, grid.node(k));
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------ posterior

PosteriorState::PosteriorState(std::shared_ptr<const AtomicPrior> prior,
                               std::optional<FamilyMember> reference)
    : prior_(std::move(prior)), reference_(std::move(reference)) {
  if (!prior_) throw std::invalid_argument("posterior needs a prior");
  log_weights_.assign(prior_->log_weights().begin(), prior_->log_weights().end());
  scratch_.resize(log_weights_.size());
}

std::vector<double> PosteriorState::weights() const { return softmax(log_weights_); }

double PosteriorState::log_mass(std::span<const std::size_t> ids) const {
  std::vector<double> terms;
  terms.reserve(ids.size());
  for (std::size_t id : ids) terms.push_back(log_weights_.at(id));
  return log_sum_exp(terms);
}

double PosteriorState::mass(std::span<const std::size_t> ids) const {
  return std::exp(log_mass(ids));
}

double PosteriorState::log_predictive_at(const Observation& obs) const {
  std::vector<double> terms(log_weights_.size());
  log_likelihoods(prior_->family(), obs, terms);
  for (std::size_t j = 0; j < terms.size(); ++j) terms[j] += log_weights_[j];
  return log_sum_exp(terms);
}

PosteriorState PosteriorState::updated(const Observation& obs) const {
  PosteriorState next = *this;
  next.absorb(obs);
  return next;
}

void PosteriorState::absorb(const Observation& obs) {
  log_likelihoods(prior_->family(), obs, scratch_);
  for (std::size_t j = 0; j < scratch_.size(); ++j) scratch_[j] += log_weights_[j];
  const double increment = log_sum_exp(scratch_);
  if (!std::isfinite(increment)) throw std::runtime_error("posterior evidence underflow");
  for (std::size_t j = 0; j < scratch_.size(); ++j) log_weights_[j] = scratch_[j] - increment;
  log_evidence_ += increment;
  if (reference_) log_reference_ += log_likelihood(*reference_, obs.context, obs.y);
  ++n_observed_;
}

std::string PosteriorState::dump() const {
  std::string out;
  char line[64];
  for (std::size_t j = 0; j < log_weights_.size(); ++j) {
    std::snprintf(line, sizeof line, "%zu %.17g\n", j, log_weights_[j]);
    out += line;
  }
  return out;
}

// ----------------------------------------------------------- predictive

GridDensity member_mixture(const Family& family, std::span<const double> log_weights,
                           const Context& context, const Grid& grid) {
  if (family.size() != log_weights.size()) throw std::invalid_argument("one weight per atom required");
  std::vector<std::vector<double>> logs;
  std::vector<double> lw;
  for (std::size_t j = 0; j < family.size(); ++j) {
    if (log_weights[j] == kNegInf) continue;
    logs.push_back(member_log_values(family[j], context, grid));
    lw.push_back(log_weights[j]);
  }
  if (lw.empty()) throw std::invalid_argument("mixture weights sum to zero");
  std::vector<double> out(grid.points());
  std::vector<double> terms(lw.size());
  for (std::size_t k = 0; k < grid.points(); ++k) {
    for (std::size_t a = 0; a < lw.size(); ++a) terms[a] = lw[a] + logs[a][k];
    out[k] = log_sum_exp(terms);
  }
  return GridDensity::from_log_values(grid, std::move(out));
}

Grid predictive_grid(const AtomicPrior& prior, const Context& context, std::size_t points) {
  return observation_grid(prior.family(), context, points);
}

GridDensity predictive(const PosteriorState& state, const Context& context, const Grid& grid) {
  return member_mixture(state.prior().family(), state.log_weights(), context, grid);
}

GridDensity restricted_predictive(const PosteriorState& state,
                                  std::span<const std::size_t> subset, const Context& context,
                                  const Grid& grid) {
  const auto ids = validated_subset(subset, state.prior().size());
  std::vector<double> lw(state.prior().size(), kNegInf);
  for (std::size_t id : ids) lw[id] = state.log_weights()[id];
  if (log_sum_exp(lw) == kNegInf) throw std::invalid_argument("restricted posterior undefined");
  return member_mixture(state.prior().family(), lw, context, grid);
}

double restricted_log_predictive_at(const PosteriorState& state,
                                    std::span<const std::size_t> subset, const Observation& obs) {
  const auto ids = validated_subset(subset, state.prior().size());
  std::vector<double> num, den;
  for (std::size_t id : ids) {
    const double lw = state.log_weights()[id];
    num.push_back(lw + log_likelihood(state.prior().family()[id], obs.context, obs.y));
    den.push_back(lw);
  }
  const double log_mass = log_sum_exp(den);
  if (log_mass == kNegInf) throw std::invalid_argument("restricted posterior undefined");
  return log_sum_exp(num) - log_mass;
}

GridDensity average_predictive(std::span<const GridDensity> history) {
  if (history.empty()) throw std::invalid_argument("empty sequence");
  const Grid& grid = history.front().grid();
  std::vector<double> sum(grid.points(), 0.0);
  for (const auto& d : history) {
    if (!(d.grid() == grid)) throw std::invalid_argument("incompatible grids");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += d.values()[k];
  }
  for (double& v : sum) v /= static_cast<double>(history.size());
  return GridDensity::from_values(grid, std::move(sum));
}

// -------------------------------------------------------- factorization

FactorizationCheck factorization_check(std::shared_ptr<const AtomicPrior> prior,
                                       std::span<const Observation> data) {
  const Family& family = prior->family();
  std::vector<double> totals(prior->log_weights().begin(), prior->log_weights().end());
  for (const auto& obs : data) {
    for (std::size_t j = 0; j < family.size(); ++j) {
      totals[j] += log_likelihood(family[j], obs.context, obs.y);
    }
  }
  FactorizationCheck out;
  out.log_joint_direct = log_sum_exp(totals);

  PosteriorState state(prior);
  double factored = 0.0;
  for (const auto& obs : data) {
    factored += state.log_predictive_at(obs);
    state.absorb(obs);
  }
  out.log_joint_factored = factored;
  out.abs_diff = std::abs(out.log_joint_direct - out.log_joint_factored);
  return out;
}

// ------------------------------------------------------ restricted path

RestrictedNumeratorPath restricted_path(const AtomicPrior& prior,
                                        std::span<const Observation> data,
                                        std::span<const std::size_t> subset,
                                        const FamilyMember& reference) {
  RestrictedNumeratorPath path;
  path.subset_ids = validated_subset(subset, prior.size());
  const auto& ids = path.subset_ids;
  std::vector<double> cumulative(ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a) cumulative[a] = prior.log_weights()[ids[a]];
  path.log_L.reserve(data.size() + 1);
  path.log_L.push_back(log_sum_exp(cumulative));
  for (const auto& obs : data) {
    const double ref = log_likelihood(reference, obs.context, obs.y);
    for (std::size_t a = 0; a < ids.size(); ++a) {
      cumulative[a] += log_likelihood(prior.family()[ids[a]], obs.context, obs.y) - ref;
    }
    path.log_L.push_back(log_sum_exp(cumulative));
  }
  return path;
}

double restricted_log_numerator(const AtomicPrior& prior, std::span<const Observation> data,
                                std::span<const std::size_t> subset,
                                const FamilyMember& reference) {
  const auto ids = validated_subset(subset, prior.size());
  std::vector<double> cumulative(ids.size());
  for (std::size_t a = 0; a < ids.size(); ++a) cumulative[a] = prior.log_weights()[ids[a]];
  for (const auto& obs : data) {
    const double ref = log_likelihood(reference, obs.context, obs.y);
    for (std::size_t a = 0; a < ids.size(); ++a) {
      cumulative[a] += log_likelihood(prior.family()[ids[a]], obs.context, obs.y) - ref;
    }
  }
  return log_sum_exp(cumulative);
}

// ------------------------------------------------ conditional identity

SqrtRatioIdentity conditional_sqrt_ratio_identity(const PosteriorState& state,
                                                  std::span<const std::size_t> subset,
                                                  const Context& context, const Truth& truth,
                                                  std::size_t points) {
  const auto ids = validated_subset(subset, state.prior().size());
  const Family& family = state.prior().family();

  Grid grid = family.front().kind() == MemberKind::iid_density ? family.front().density().grid()
                                                                : Grid(0.0, 1.0, 3);
  if (family.front().kind() != MemberKind::iid_density) {
    std::vector<FamilyMember> members;
    for (std::size_t id : ids) members.push_back(family[id]);
    members.push_back(truth.data);
    members.push_back(truth.reference);
    grid = observation_grid(members, context, points);
  }

  // Left side: node-by-node likelihood evaluations, no density objects.
  std::vector<double> restricted_lw;
  for (std::size_t id : ids) restricted_lw.push_back(state.log_weights()[id]);
  const double log_mass = log_sum_exp(restricted_lw);
  if (log_mass == kNegInf) throw std::invalid_argument("restricted posterior undefined");
  std::vector<double> terms(ids.size());
  double lhs = 0.0;
  double data_mass = 0.0;
  for (std::size_t k = 0; k < grid.points(); ++k) {
    const double y = grid.node(k);
    for (std::size_t a = 0; a < ids.size(); ++a) {
      terms[a] = restricted_lw[a] + log_likelihood(family[ids[a]], context, y);
    }
    const double log_hat = log_sum_exp(terms) - log_mass;
    const double log_ref = log_likelihood(truth.reference, context, y);
    const double log_data = log_likelihood(truth.data, context, y);
    lhs += grid.weight(k) * std::exp(0.5 * (log_hat - log_ref) + log_data);
    data_mass += grid.weight(k) * std::exp(log_data);
  }
  // The data law is a probability measure; quadrature mass is divided out so
  // both sides refer to the same normalized law.
  lhs /= data_mass;

  // Right side: materialized densities and the regime's affinity gap.
  const GridDensity hat = restricted_predictive(state, ids, context, grid);
  const GridDensity data = conditional_density(truth.data, context, grid);
  double gap;
  if (truth.misspecified()) {
    gap = h_star(conditional_density(truth.reference, context, grid), hat, data);
  } else {
    gap = h_affinity_gap(data, hat);
  }
  SqrtRatioIdentity out;
  out.lhs = lhs;
  out.rhs = 1.0 - gap;
  out.abs_diff = std::abs(out.lhs - out.rhs);
  return out;
}

}  // namespace predrate
