#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "predrate/ar1.hpp"
#include "predrate/divergences.hpp"

namespace predrate {

enum class Regime { iid, misspecified, regression, markov };

std::string_view to_string(Regime regime);
std::optional<Regime> parse_regime(std::string_view name);

/// theta(x_1..x_n) for fixed-design regression Y_i ~ N(theta(x_i), 1).
class RegressionFunction {
 public:
  RegressionFunction(std::vector<double> values_at_design, std::vector<double> design_points);

  std::span<const double> values() const { return values_; }
  std::span<const double> design() const { return design_; }
  std::size_t size() const { return values_.size(); }
  double at(std::size_t index) const;

 private:
  std::vector<double> values_;
  std::vector<double> design_;
};

/// Equally spaced design x_i = i / n, i = 1..n.
std::vector<double> default_design(std::size_t n);

enum class MemberKind { iid_density, regression_function, markov_param };

struct FamilyMember {
  std::size_t id = 0;
  std::variant<GridDensity, RegressionFunction, MarkovParam> payload{MarkovParam{}};

  MemberKind kind() const { return static_cast<MemberKind>(payload.index()); }
  const GridDensity& density() const { return std::get<GridDensity>(payload); }
  const RegressionFunction& regression() const { return std::get<RegressionFunction>(payload); }
  const MarkovParam& markov() const { return std::get<MarkovParam>(payload); }
};

/// Members are identified by position: family[j].id == j.
using Family = std::vector<FamilyMember>;

/// Finite-support prior over a family. Weights are normalized on construction.
class AtomicPrior {
 public:
  AtomicPrior(Family family, std::vector<double> weights);
  static AtomicPrior uniform(Family family);

  const Family& family() const { return family_; }
  std::size_t size() const { return family_.size(); }
  MemberKind kind() const { return family_.front().kind(); }
  std::span<const double> weights() const { return weights_; }
  std::span<const double> log_weights() const { return log_weights_; }
  double mass(std::span<const std::size_t> ids) const;

 private:
  Family family_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
};

/// Where an observation sits in the data sequence. Regression members read
/// `index` (0-based design position); Markov members read `previous`, and an
/// empty `previous` marks the initial draw from the stationary law.
struct Context {
  std::size_t index = 0;
  std::optional<double> previous;
};

struct Observation {
  double y = 0.0;
  Context context;
};

/// The data-generating member and the member in the denominator of the
/// likelihood ratio. They coincide except under misspecification, where the
/// reference is the KL projection of the data density onto the family.
struct Truth {
  FamilyMember data;
  FamilyMember reference;

  bool misspecified() const { return data.id != reference.id; }
  static Truth well_specified(const FamilyMember& member) { return {member, member}; }
};

// -- family construction ------------------------------------------------------

/// Throws std::invalid_argument("grid clips density") when a mean is closer
/// than 6 sd to a grid edge.
Family build_gaussian_location_family(const Grid& grid, std::span<const double> means, double sd);

struct LinearCoefficients {
  double intercept = 0.0;
  double slope = 0.0;
};
RegressionFunction linear_regression_function(std::span<const double> design,
                                              LinearCoefficients coefficients);
Family build_regression_family(std::span<const double> design,
                               std::span<const LinearCoefficients> coefficients);
/// Throws std::domain_error("no stationary density") for |theta| >= 1.
Family build_markov_family(std::span<const double> thetas, double noise_sd = 1.0);

// -- densities ----------------------------------------------------------------

/// log f(y | context). Throws std::out_of_range when y lies outside the grid of
/// an iid member or the index lies outside the design of a regression member.
double log_likelihood(const FamilyMember& member, const Context& context, double y);
double likelihood(const FamilyMember& member, const Context& context, double y);

/// log f_j(y | context) for every member of an iid, regression or Markov
/// family at once; iid members must share a grid.
void log_likelihoods(const Family& family, const Observation& obs, std::span<double> out);

GridDensity stationary_density(const MarkovParam& param, const Grid& grid);
GridDensity transition_density(const MarkovParam& param, double previous, const Grid& grid);

/// Grid on which the conditional densities of `members` at `context` are
/// compared: the shared grid for iid members, otherwise an interval reaching
/// `half_width` standard deviations beyond the extreme conditional means.
Grid observation_grid(std::span<const FamilyMember> members, const Context& context,
                      std::size_t points, double half_width = 10.0);
GridDensity conditional_density(const FamilyMember& member, const Context& context,
                                const Grid& grid);

// -- KL projection ------------------------------------------------------------

struct Projection {
  std::size_t index = 0;
  double k_min = 0.0;
};

/// argmin_j K(f_star, family[j]), ties to the smallest index.
Projection kl_projection(const GridDensity& f_star, const Family& family);

struct ContinuousProjection {
  double parameter = 0.0;
  double k_min = 0.0;
};

/// Scan over [lo, hi] at `scan_step`, then golden-section refinement of the
/// best bracket down to `tolerance`.
ContinuousProjection kl_projection_continuous(
    const GridDensity& f_star, const std::function<GridDensity(double)>& member, double lo,
    double hi, double scan_step = 1e-2, double tolerance = 1e-6);

/// Projection onto {(1 - t) f1 + t f2 : t in [0, 1]}. After the scan and golden
/// section, an interior optimum is polished by Newton steps on the first-order
/// condition int (f2 - f1) / f_t f_star = 0.
ContinuousProjection project_onto_mixture_segment(const GridDensity& f_star,
                                                  const GridDensity& f1, const GridDensity& f2);

/// A prior whose family excludes the data density f_star, with f_circ located.
class MisspecifiedSetup {
 public:
  MisspecifiedSetup(std::shared_ptr<const AtomicPrior> prior, GridDensity true_density);

  const AtomicPrior& prior() const { return *prior_; }
  std::shared_ptr<const AtomicPrior> prior_ptr() const { return prior_; }
  const GridDensity& true_density() const { return true_density_; }
  std::size_t projection_id() const { return projection_.index; }
  double projection_kl() const { return projection_.k_min; }
  Truth truth() const;

 private:
  std::shared_ptr<const AtomicPrior> prior_;
  GridDensity true_density_;
  Projection projection_;
};

}  // namespace predrate
