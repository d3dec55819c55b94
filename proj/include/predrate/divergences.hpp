#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "predrate/ar1.hpp"

namespace predrate {

/// Uniform grid on [lower, upper] with trapezoidal quadrature weights. This is
/// the discretized dominating measure every density in the library lives on.
class Grid {
 public:
  Grid(double lower, double upper, std::size_t points);

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  std::size_t points() const { return points_; }
  double spacing() const { return spacing_; }

  double node(std::size_t k) const;
  double weight(std::size_t k) const;
  bool contains(double y) const { return y >= lower_ && y <= upper_; }

  /// Trapezoidal integral of samples taken at the nodes.
  double integrate(std::span<const double> samples) const;

  /// Same interval with every cell halved (2 * points - 1 nodes, nested).
  Grid refined() const;

  bool operator==(const Grid&) const = default;

 private:
  double lower_;
  double upper_;
  std::size_t points_;
  double spacing_;
};

/// Smallest density value kept on a grid; anything below is raised to it and
/// the density is marked as tail-truncated.
inline constexpr double kPositivityFloor = 1e-300;

/// A probability density sampled on a Grid, renormalized at construction so
/// that its trapezoidal integral is 1. Immutable.
class GridDensity {
 public:
  /// From nonnegative samples. Logs are taken after flooring.
  static GridDensity from_values(Grid grid, std::vector<double> values);
  /// From log-density samples (need not be normalized). Logs stay exact in the
  /// tails even where the linear value underflows to the floor.
  static GridDensity from_log_values(Grid grid, std::vector<double> log_values);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> log_values() const { return log_values_; }
  bool floored() const { return floored_; }
  double mass() const { return grid_.integrate(values_); }

  /// Log density at y by linear interpolation of the log samples. Throws
  /// std::out_of_range outside the grid.
  double log_at(double y) const;
  double at(double y) const;

  /// Plain-text form: "grid <lower> <upper> <points>" then one value per line.
  std::string to_text() const;
  static GridDensity from_text(std::string_view text);

 private:
  GridDensity(Grid grid, std::vector<double> values, std::vector<double> log_values,
              bool floored);

  Grid grid_;
  std::vector<double> values_;
  std::vector<double> log_values_;
  bool floored_ = false;
};

GridDensity gaussian_density(const Grid& grid, double mean, double sd);

/// Pointwise mixture sum_j weights[j] * components[j], formed in log space.
/// Weights are normalized internally.
GridDensity mixture(std::span<const GridDensity> components, std::span<const double> weights);

/// True when either density carries floored values, i.e. a comparison of the
/// two may be affected by tail truncation.
bool tail_truncated(const GridDensity& f, const GridDensity& g);

// -- divergences between two densities on a shared grid ---------------------
// All throw std::invalid_argument("incompatible grids") on a grid mismatch.

/// K(f, g) = int log(f/g) f. The first argument is the weighting density.
double kl(const GridDensity& f, const GridDensity& g);
/// V(f, g) = int log(f/g)^2 f (uncentered second moment).
double v_divergence(const GridDensity& f, const GridDensity& g);
/// H(f, g) = sqrt(int (sqrt f - sqrt g)^2), clamped to [0, sqrt 2].
double hellinger(const GridDensity& f, const GridDensity& g);
/// 1 - int sqrt(f g), the affinity gap H^2 / 2.
double h_affinity_gap(const GridDensity& f, const GridDensity& g);

// -- misspecification-adapted functionals -----------------------------------
// f_circ is the KL projection of the data density f_star onto the model.

/// int log(f_circ / f) f_star, equal to K(f_star, f) - K(f_star, f_circ).
double kl_contrast(const GridDensity& f_circ, const GridDensity& f, const GridDensity& f_star);
/// int log(f_circ / f)^2 f_star.
double v_star(const GridDensity& f_circ, const GridDensity& f, const GridDensity& f_star);
/// sqrt(int (sqrt f - sqrt f_circ)^2 f_star / f_circ).
double weighted_hellinger(const GridDensity& f_circ, const GridDensity& f,
                          const GridDensity& f_star);
/// Weighted Hellinger distance between two arbitrary densities a and b with
/// the weight f_star / f_circ.
double weighted_hellinger_between(const GridDensity& a, const GridDensity& b,
                                  const GridDensity& f_circ, const GridDensity& f_star);
/// 1 - int sqrt(f / f_circ) f_star.
double h_star(const GridDensity& f_circ, const GridDensity& f, const GridDensity& f_star);
/// int (f / f_circ) f_star. At most 1 over a convex model; this is the
/// certificate that makes weighted_hellinger^2 / 2 <= h_star.
double projection_ratio_mass(const GridDensity& f_circ, const GridDensity& f,
                             const GridDensity& f_star);

// -- sequences of densities (independent, non-identically distributed) ------

/// sqrt(mean_i H(a_i, b_i)^2). Throws on length mismatch or empty input.
double mean_hellinger(std::span<const GridDensity> seq_a, std::span<const GridDensity> seq_b);
/// max_i H(a_i, b_i).
double max_hellinger(std::span<const GridDensity> seq_a, std::span<const GridDensity> seq_b);

// -- point-mass (counting measure) analogues ---------------------------------

double kl_atoms(std::span<const double> p, std::span<const double> q);
double v_atoms(std::span<const double> p, std::span<const double> q);

// -- Markov transition families ---------------------------------------------

/// A probability measure on the state space, used to average per-state
/// Hellinger distances.
struct StateWeighting {
  enum class Kind { stationary_density, explicit_density, two_point_mixture };
  Kind kind;
  GridDensity density;
};

StateWeighting stationary_weighting(const MarkovParam& param, std::size_t points = 481,
                                    double half_width_sd = 12.0);
StateWeighting explicit_weighting(GridDensity density);
/// Equal-weight mixture of N(-shift, sd^2) and N(shift, sd^2).
StateWeighting two_point_weighting(double shift, double sd, std::size_t points = 481);

/// Quadrature resolution for the Markov functionals.
struct MarkovQuadrature {
  std::size_t state_points = 481;        // stationary-law grid, +-half_width sd
  std::size_t observation_points = 801;  // per-state transition grid
  double half_width = 12.0;              // in standard deviations
  std::size_t window_points = 101;       // states scanned for the truncated sup
};

struct TransitionDivergences {
  double K = 0.0;
  double V = 0.0;
  double H = 0.0;
};

/// K_y, V_y, H_y between the transition densities of a and b at state y.
TransitionDivergences transition_divergences(const MarkovParam& a, const MarkovParam& b,
                                             double state, const MarkovQuadrature& q = {});

struct MarkovDivergences {
  double K = 0.0;                // int K_y u_{theta*}(y) dy
  double V = 0.0;                // int V_y u_{theta*}(y) dy
  double H_Q = 0.0;              // int H_y Q(dy)
  double H_inf_truncated = 0.0;  // sup_{|y| <= window} H_y
};

/// Throws std::domain_error("no stationary density") when theta_star is not
/// stationary and std::invalid_argument for a nonpositive window.
MarkovDivergences markov_divergences(const MarkovParam& theta_star, const MarkovParam& theta,
                                     const StateWeighting& weighting, double state_window,
                                     const MarkovQuadrature& q = {});

/// sup_{|y| <= window} H_y(a, b) alone.
double markov_sup_hellinger(const MarkovParam& a, const MarkovParam& b, double state_window,
                            const MarkovQuadrature& q = {});

}  // namespace predrate
