#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "predrate/divergences.hpp"
#include "predrate/models.hpp"

namespace predrate {

/// epsilon_n = a * n^(-gamma) * (log n)^kappa over a fixed list of n.
struct RateSchedule {
  std::vector<std::size_t> n_values;
  double a = 1.0;
  double gamma = 1.0 / 3.0;
  double kappa = 0.0;

  double epsilon(std::size_t n) const;
  /// Throws std::invalid_argument unless n_values is increasing, epsilon_n
  /// decreases and n * epsilon_n^2 increases along it.
  void validate() const;
};

/// Constants of the thickness, separation, sieve and concentration conditions.
struct ConditionParams {
  double C = 0.5;     // thickness
  double c = 2.0;     // evidence threshold and Condition P discount
  double d = 2.0;     // separation in the numerator bound
  double r = 2.0;     // sieve complement decay
  double beta = 2.0;  // Condition P exponent
  double M = 4.0;     // concentration radius multiplier
  double eta = 0.05;  // in-probability threshold
};

/// Everything needed to compute distances for one data regime: the prior,
/// the truth, and the quadrature choices.
struct RegimeSetup {
  Regime regime = Regime::iid;
  std::shared_ptr<const AtomicPrior> prior;
  Truth truth;
  std::size_t conditional_points = 201;  // per-index / per-state grids
  double state_window = 0.0;             // 0 means 5 stationary sd of the truth
  std::optional<StateWeighting> weighting;  // Q; defaults to the truth's stationary law
  double theta0_bound = 1.0;
  MarkovQuadrature quadrature;

  /// Truncation window for sup-over-states distances.
  double window() const;
  /// The data density of the iid regimes.
  const GridDensity& data_density() const { return truth.data.density(); }
  /// f_circ for the misspecified regime, the data density otherwise.
  const GridDensity& reference_density() const { return truth.reference.density(); }
};

/// Per-regime distances between atoms and the truth, with lazy caches.
///   regime        target     separation gap   ball metric
///   iid           H          h                H
///   misspecified  H_star     h_star           H_star
///   regression    H_n        h_n              H_{n,inf}
///   markov        H_Q        h_inf (window)   H_inf (window)
/// Regression quantities use the first n design indices.
class RegimeMetric {
 public:
  RegimeMetric(RegimeSetup setup, std::size_t n);

  const RegimeSetup& setup() const { return setup_; }
  std::size_t size() const { return setup_.prior->size(); }
  std::size_t n() const { return n_; }

  struct Thickness {
    double K = 0.0;
    double V = 0.0;
    bool admissible = true;  // Markov: inside Theta_0
  };
  const Thickness& thickness(std::size_t j);
  double target_distance(std::size_t j);
  double separation_gap(std::size_t j);
  double ball_distance(std::size_t a, std::size_t b);

  /// Reference-to-center distance in the ball metric.
  double center_distance(std::size_t center);
  /// Lower bound on the separation gap of every mixture of atoms lying within
  /// `radius` of `center` in the ball metric, from the triangle inequality.
  double hull_gap(std::size_t center, double radius);
  /// Ball metric in affinity-gap form, from `center` to a mixture of atoms.
  double mixture_ball_gap(std::size_t center, std::span<const std::size_t> ids,
                          std::span<const double> weights);
  /// Misspecified regime: int (f / f_circ) f_star for atom j (1 elsewhere).
  double projection_ratio(std::size_t j);

  std::string_view target_name() const;
  std::string_view gap_name() const;
  std::string_view ball_name() const;

 private:
  double per_index_hellinger(double mean_a, double mean_b);
  const MarkovDivergences& markov(std::size_t j);
  GridDensity mixture_density(std::span<const std::size_t> ids, std::span<const double> weights,
                              const Context& context, const Grid& grid) const;

  RegimeSetup setup_;
  std::size_t n_;
  std::map<std::size_t, Thickness> thickness_;
  std::map<std::size_t, double> target_;
  std::map<std::size_t, double> gap_;
  std::map<std::pair<std::size_t, std::size_t>, double> ball_;
  std::map<std::size_t, double> center_;
  std::map<std::size_t, MarkovDivergences> markov_;
  std::map<std::size_t, double> ratio_;
};

// -- thickness ---------------------------------------------------------------

struct ThicknessRow {
  std::size_t n = 0;
  double epsilon = 0.0;
  double neighborhood_mass = 0.0;
  double implied_C = 0.0;  // -log(mass) / (n eps^2), +inf for empty
};

std::vector<ThicknessRow> thickness_profile(const RegimeSetup& setup,
                                            const RateSchedule& schedule);
ThicknessRow thickness_at(RegimeMetric& metric, double epsilon);

// -- separation and convexity -------------------------------------------------

struct SeparationResult {
  bool separated = false;
  double min_gap = 0.0;
};

/// Separated iff min_j h(ref, members[j]) > delta.
SeparationResult check_separation(const GridDensity& ref, std::span<const GridDensity> members,
                                  double delta);
/// Same with the regime's separation gap against the truth.
SeparationResult check_separation(RegimeMetric& metric, std::span<const std::size_t> ids,
                                  double delta);

struct Ball {
  std::size_t center_id = 0;
  double radius = 0.0;
  std::vector<std::size_t> member_ids;
};

struct ClosureResult {
  bool closed = true;
  double worst_violation = 0.0;  // max of mixture gap - radius^2 / 2
};

/// Random Dirichlet(1) mixtures of the ball's members plus every vertex,
/// checked against the radius in affinity-gap form with 1e-9 slack.
ClosureResult check_mixture_closure(RegimeMetric& metric, const Ball& ball,
                                    std::size_t n_random_mixtures, std::uint64_t seed);
/// Raw-density form in the Hellinger metric.
ClosureResult check_mixture_closure(const GridDensity& center,
                                    std::span<const GridDensity> members, double radius,
                                    std::size_t n_random_mixtures, std::uint64_t seed);

// -- coverings ----------------------------------------------------------------

using DistanceFn = std::function<double(std::size_t, std::size_t)>;

/// Greedy farthest-point cover of `target`: the first center is the smallest
/// id, later centers are the uncovered atoms farthest from every existing
/// center (ties to smallest id). A ball holds every target atom within
/// `radius` of its center.
std::vector<Ball> greedy_cover(std::span<const std::size_t> target, double radius,
                               const DistanceFn& distance);
std::vector<Ball> greedy_cover(RegimeMetric& metric, std::span<const std::size_t> target,
                               double radius);

struct ConditionPSum {
  double S_n = 0.0;
  double discounted = 0.0;
};
ConditionPSum condition_p_sum(std::span<const Ball> cover, const AtomicPrior& prior, double beta,
                              double c_const, std::size_t n, double epsilon);
/// Same from ball masses directly.
ConditionPSum condition_p_sum(std::span<const double> ball_masses, double beta, double c_const,
                              std::size_t n, double epsilon);

struct CoveringAndSieve {
  std::vector<std::size_t> target_ids;
  std::vector<Ball> balls;           // sorted by mass, descending, ties by center id
  std::vector<double> ball_masses;   // aligned with balls
  std::size_t J_n = 0;               // from the defining inequality (may exceed balls.size())
  double S_n = 0.0;
  std::vector<std::size_t> sieve_ids;
  double complement_mass = 0.0;      // covered mass outside the first J_n balls
  double log_cover_count = 0.0;      // log min(J_n, balls)
  bool covering_exhausted = false;
  // Checks of the construction.
  double tail_sum_bound = 0.0;       // sum_{J_n < j <= balls} S^beta / j^beta
  double entropy_bound = 0.0;        // (r + beta c) / (beta - 1) * n eps^2
  bool entropy_bound_holds = false;
  bool mass_bound_holds = false;     // Pi(A_J) <= S^beta / J^beta for every J
  double complement_constant = 0.0; // complement_mass * exp(r n eps^2)
  double entropy_constant = 0.0;     // log_cover_count / (n eps^2)
};

/// J_n = min{j >= 1 : j^(beta-1) >= S^beta exp(r n eps^2)}, evaluated in logs.
std::size_t sieve_count(double S_n, double beta, double r_const, std::size_t n, double epsilon);

/// Masses are per ball (ball_masses[k] for balls[k]); atoms for complement
/// bookkeeping come from the prior.
CoveringAndSieve build_sieve_from_cover(std::vector<Ball> cover, const AtomicPrior& prior,
                                        double beta, double r_const, double c_const,
                                        std::size_t n, double epsilon);
/// Variant on bare masses, balls given implicitly as disjoint singletons of
/// ids 0..masses.size()-1.
CoveringAndSieve build_sieve_from_masses(std::span<const double> masses, double beta,
                                         double r_const, double c_const, std::size_t n,
                                         double epsilon);

/// Smallest M on a 1e-3 lattice with M^2 > 4 [(C + 1) + 2 R].
double admissible_M(double C, double R);

// -- certification of numerator-bound subsets ---------------------------------

struct SubsetCertificate {
  bool admissible = false;
  std::string failed_check;  // empty when admissible
  double hull_gap = 0.0;
  double closure_violation = 0.0;
  double ratio_excess = 0.0;  // max_j (projection ratio - 1), misspecified only
  double implied_C = 0.0;
  double required_gap = 0.0;      // d * eps^2
};

/// Certifies a ball for the numerator bound: mixture closure, hull
/// separation above d eps^2, d > C + 1 with C the implied thickness constant,
/// and (misspecified) projection ratios at most 1.
SubsetCertificate certify_subset(RegimeMetric& metric, const Ball& ball, double d,
                                 double epsilon, double implied_C, std::size_t n_mixtures,
                                 std::uint64_t seed);

}  // namespace predrate
