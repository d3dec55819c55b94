#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "predrate/divergences.hpp"
#include "predrate/models.hpp"

namespace predrate {

/// Sequential posterior over the atoms of a prior, kept as normalized log
/// weights. Also tracks the log evidence log int prod f(Y_i) dPi and, when a
/// reference member is given, log prod ref(Y_i) so that the likelihood-ratio
/// evidence I_n is available.
class PosteriorState {
 public:
  explicit PosteriorState(std::shared_ptr<const AtomicPrior> prior,
                          std::optional<FamilyMember> reference = std::nullopt);

  const AtomicPrior& prior() const { return *prior_; }
  std::shared_ptr<const AtomicPrior> prior_ptr() const { return prior_; }
  const std::optional<FamilyMember>& reference() const { return reference_; }

  std::span<const double> log_weights() const { return log_weights_; }
  std::vector<double> weights() const;
  std::size_t n_observed() const { return n_observed_; }
  double log_evidence() const { return log_evidence_; }
  double log_reference() const { return log_reference_; }
  /// log I_n = log int R_n dPi.
  double log_I() const { return log_evidence_ - log_reference_; }

  /// log Pi_n(ids). Returns -inf for an empty set.
  double log_mass(std::span<const std::size_t> ids) const;
  double mass(std::span<const std::size_t> ids) const;

  /// log f_hat(y | context) under the current posterior.
  double log_predictive_at(const Observation& obs) const;

  /// Returns the posterior after one more observation.
  PosteriorState updated(const Observation& obs) const;
  /// In-place form of updated().
  void absorb(const Observation& obs);

  /// One line per atom: "<id> <log weight>".
  std::string dump() const;

 private:
  std::shared_ptr<const AtomicPrior> prior_;
  std::optional<FamilyMember> reference_;
  std::vector<double> log_weights_;
  std::vector<double> scratch_;
  std::size_t n_observed_ = 0;
  double log_evidence_ = 0.0;
  double log_reference_ = 0.0;
};

/// Mixture of the conditional densities of `family` at `context`, with the
/// given log weights (entries of -inf drop the atom), materialized on `grid`.
GridDensity member_mixture(const Family& family, std::span<const double> log_weights,
                           const Context& context, const Grid& grid);

/// Grid for materializing predictive densities at `context`: the shared grid
/// for iid families, else an interval covering every member's conditional law.
Grid predictive_grid(const AtomicPrior& prior, const Context& context, std::size_t points = 801);

/// Posterior-mean density of the next observation given `context`.
GridDensity predictive(const PosteriorState& state, const Context& context, const Grid& grid);

/// Predictive density with the posterior restricted and renormalized to
/// `subset`. Throws std::invalid_argument("restricted posterior undefined")
/// for an empty subset, an unknown id, or zero posterior mass.
GridDensity restricted_predictive(const PosteriorState& state,
                                  std::span<const std::size_t> subset, const Context& context,
                                  const Grid& grid);

/// log f_hat^A(y | context) from the restricted posterior.
double restricted_log_predictive_at(const PosteriorState& state,
                                    std::span<const std::size_t> subset, const Observation& obs);

/// Pointwise mean of predictive densities on a shared grid.
GridDensity average_predictive(std::span<const GridDensity> history);

struct FactorizationCheck {
  double log_joint_direct = 0.0;
  double log_joint_factored = 0.0;
  double abs_diff = 0.0;
};

/// log int prod f(Y_i) dPi computed as one log-sum-exp over atoms of full
/// products, and as the sum of log predictive densities along sequential
/// updates. For Markov data the first observation carries no previous state
/// and contributes the stationary factor.
FactorizationCheck factorization_check(std::shared_ptr<const AtomicPrior> prior,
                                       std::span<const Observation> data);

/// log L_i = log int_A R_i dPi for i = 0..data.size(), R_i being the
/// likelihood ratio against `reference` over the first i observations.
struct RestrictedNumeratorPath {
  std::vector<std::size_t> subset_ids;
  std::vector<double> log_L;
};

/// Brute-force cumulative sums per atom. Throws std::invalid_argument
/// ("restricted posterior undefined") for an empty subset or unknown ids.
RestrictedNumeratorPath restricted_path(const AtomicPrior& prior,
                                        std::span<const Observation> data,
                                        std::span<const std::size_t> subset,
                                        const FamilyMember& reference);

/// log L_n only, without storing the path.
double restricted_log_numerator(const AtomicPrior& prior, std::span<const Observation> data,
                                std::span<const std::size_t> subset,
                                const FamilyMember& reference);

struct SqrtRatioIdentity {
  double lhs = 0.0;  // int sqrt(f_hat^A / ref) g, pointwise on a grid
  double rhs = 0.0;  // 1 - affinity gap of the regime, from materialized densities
  double abs_diff = 0.0;
};

/// Conditional expectation of sqrt(L_i / L_{i-1}) given the past, where the
/// next observation has law truth.data at `context` and the ratio is taken
/// against truth.reference. The right side uses h (well specified, regression
/// index, Markov state) or h_star (misspecified).
SqrtRatioIdentity conditional_sqrt_ratio_identity(const PosteriorState& state,
                                                  std::span<const std::size_t> subset,
                                                  const Context& context, const Truth& truth,
                                                  std::size_t points = 801);

}  // namespace predrate
