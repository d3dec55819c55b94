#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "predrate/geometry.hpp"
#include "predrate/inference.hpp"
#include "predrate/models.hpp"

namespace predrate {

struct ExperimentPlan {
  RegimeSetup setup;
  RateSchedule schedule;
  ConditionParams params;
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;

  std::uint64_t replication_seed(std::size_t rep) const { return seed + rep; }
};

/// Runs task(rep) for rep = 0..count-1 on up to `jobs` threads and returns the
/// results in replication order. The first exception thrown is rethrown.
template <typename Task>
auto run_replications(std::size_t count, std::size_t jobs, Task&& task)
    -> std::vector<decltype(task(std::size_t{}))> {
  using Result = decltype(task(std::size_t{}));
  std::vector<std::optional<Result>> slots(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= count) return;
      try {
        slots[rep].emplace(task(rep));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Result> out;
  out.reserve(count);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// -- data ----------------------------------------------------------------------

/// n observations from the data member of `truth`. iid and misspecified draws
/// use the inverse CDF of the piecewise-linear density on its grid; regression
/// draws Y_i = theta(x_i) + Z at design indices 0..n-1; Markov draws Y_0 from
/// the stationary law followed by n transitions, so n + 1 observations.
std::vector<Observation> generate_data(Regime regime, const FamilyMember& truth, std::size_t n,
                                       std::uint64_t seed);

/// Number of observations making up a sample of size n (n + 1 for Markov).
std::size_t sample_length(Regime regime, std::size_t n);

// -- fitted rates --------------------------------------------------------------

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double fitted_constant = 0.0;  // max_n statistic / eps_n^2
  std::vector<std::size_t> excluded;  // schedule positions with nonpositive statistics
};

/// Least squares of log statistic on log n. Needs at least 3 usable points.
RateFit fit_rate(std::span<const std::size_t> n_values, std::span<const double> statistic,
                 std::span<const double> epsilons);

// -- Cesaro KL of predictive densities -----------------------------------------

struct CesaroReplication {
  std::vector<double> cesaro;        // running mean at each schedule n
  double convexity_violation = 0.0;  // max of h(f*, f_bar_n) - mean h(f*, f_hat), iid regimes
};

/// The regime's KL between the truth and the predictive density before each
/// update: K (iid), K_star (misspecified), K at index i (regression), K at the
/// realized previous state (Markov, after absorbing Y_0).
CesaroReplication cesaro_kl_run(const RegimeSetup& setup, std::span<const std::size_t> n_values,
                                std::uint64_t seed, std::size_t predictive_points = 201);

struct CesaroReport {
  std::vector<std::size_t> n_values;
  std::vector<double> epsilon;
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<double> median;
  std::vector<double> upper_quartile;
  double worst_convexity_violation = 0.0;
  RateFit fit;
  std::vector<std::vector<double>> per_replication;  // [rep][schedule position]
};

CesaroReport cesaro_experiment(const ExperimentPlan& plan, std::size_t predictive_points = 201);

// -- numerator bound -----------------------------------------------------------

/// How the set A_n is built at each n.
struct SubsetRecipe {
  enum class Kind { explicit_ball, cover_ball };
  Kind kind = Kind::cover_ball;
  std::size_t center = 0;                 // explicit_ball
  std::vector<std::size_t> members;       // explicit_ball; radius is the farthest member
  std::size_t ball_index = 0;             // cover_ball: position in the greedy cover
  std::size_t closure_mixtures = 32;
};

/// The ball A_n of `recipe` at n. cover_ball covers B_n = {target > M eps_n}
/// with balls of radius M eps_n / 2. Throws std::runtime_error when the cover
/// has no ball at that position.
Ball build_subset(RegimeMetric& metric, const SubsetRecipe& recipe, double M, double epsilon);

struct NumeratorRow {
  std::size_t n = 0;
  double epsilon = 0.0;
  std::vector<std::size_t> subset;
  double prior_mass = 0.0;
  SubsetCertificate certificate;
  double mean_sqrt_L = 0.0;
  double standard_error = 0.0;
  double bound = 0.0;          // Pi(A)^(1/2) exp(-d n eps^2)
  bool pass = false;
  double tight_d = 0.0;        // hull gap / eps^2
  double tight_bound = 0.0;    // Pi(A)^(1/2) exp(-n hull gap)
  bool tight_pass = false;
};

struct NumeratorReport {
  std::vector<NumeratorRow> rows;
  bool pass = false;
  std::string failure;  // "subset not admissible: <check>" or empty
};

/// Certifies A_n (throws std::runtime_error("subset not admissible: <check>")
/// when `require_certificate` and a check fails), then compares the Monte Carlo
/// mean of sqrt(L_{n,n}) with Pi(A_n)^(1/2) exp(-d n eps_n^2) + 3 SE.
NumeratorReport verify_numerator_bound(const ExperimentPlan& plan, const SubsetRecipe& recipe,
                                       bool require_certificate = true);

/// E sqrt(L_{n,n}) for A = {atom j} computed from per-step affinities:
/// Pi_j^(1/2) prod_i (1 - gap_i), with the Markov product (including the
/// stationary factor for Y_0) evaluated by a discretized transfer operator.
double exact_singleton_sqrt_numerator(const RegimeSetup& setup, std::size_t j, std::size_t n,
                                      std::size_t operator_points = 1201);

// -- evidence -------------------------------------------------------------------

struct EvidenceReport {
  std::vector<std::size_t> n_values;
  std::vector<double> threshold_log;    // -c n eps^2
  std::vector<double> fraction_below;
  std::vector<double> implied_C;
  std::vector<bool> c_admissible;       // c > C + 1
  double trend = 0.0;                   // slope of fraction on n
  std::vector<std::vector<double>> log_I;  // [rep][schedule position]
};

EvidenceReport verify_evidence_bound(const ExperimentPlan& plan);

// -- posterior concentration ----------------------------------------------------

struct MassRow {
  std::size_t n = 0;
  double epsilon = 0.0;
  std::size_t target_size = 0;           // |B_n|
  double median = 0.0;
  double upper_quartile = 0.0;
  double fraction_above_eta = 0.0;
  double median_reference_weight = 0.0;  // posterior weight of the reference atom
  double median_small_set = 0.0;         // Pi_n(U_n) when configured
};

struct MassReport {
  std::vector<MassRow> rows;
  bool decreasing = false;  // median Pi_n(B_n) nonincreasing along the schedule
  std::vector<std::vector<double>> per_replication;  // [rep][schedule position]
};

/// B_n = atoms whose target distance to the truth exceeds M eps_n.
MassReport posterior_mass_path(const ExperimentPlan& plan, double M,
                               std::span<const std::size_t> small_set = {});

}  // namespace predrate
