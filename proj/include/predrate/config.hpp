#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "predrate/experiments.hpp"
#include "predrate/geometry.hpp"
#include "predrate/models.hpp"

namespace predrate {

/// Every verification the runner knows, in execution order.
const std::vector<std::string>& known_verifications();
/// The verifications that need no simulation beyond a few sample paths.
bool is_static_verification(std::string_view name);

struct GridSpec {
  double lower = -10.0;
  double upper = 10.0;
  std::size_t points = 401;
};

struct FamilySpec {
  std::string kind;                          // gaussian_location | linear_regression | ar1
  std::vector<double> means;                 // gaussian_location
  double sd = 1.0;
  std::vector<LinearCoefficients> coefficients;  // linear_regression
  std::size_t design_size = 0;               // 0 means the largest n of the schedule
  std::vector<double> thetas;                // ar1
  std::vector<double> weights;               // empty means uniform
  double state_window = 0.0;                 // ar1; 0 means 5 stationary sd
  double theta0_bound = 1.0;                 // ar1
};

/// Either an atom of the family or an explicit parameter of the regime's kind.
struct TruthSpec {
  std::optional<std::size_t> atom;
  std::optional<double> mean;                // iid regimes
  double sd = 1.0;
  std::optional<LinearCoefficients> coefficients;  // regression
  std::optional<double> theta;               // markov
};

struct VerifySpec {
  std::vector<std::string> names;
  SubsetRecipe subset;
  std::vector<std::size_t> small_set;
  std::size_t predictive_points = 201;
  std::size_t identity_trials = 20;
};

/// Acceptance thresholds applied by the runner; reported with every result.
struct AcceptanceCaps {
  double fraction_cap = 0.05;          // in-probability statements at the largest n
  double fitted_constant_cap = 1.0e3;  // "bounded multiplier" of rate claims
  std::optional<std::pair<double, double>> slope_range;  // Cesaro fit slope
};

struct RunConfig {
  std::string source;
  Regime regime = Regime::iid;
  GridSpec grid;
  FamilySpec family;
  TruthSpec truth;
  RateSchedule schedule;
  ConditionParams params;
  bool allow_weak_constants = false;  // permits c, d or r <= C + 1
  std::size_t replications = 100;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  VerifySpec verify;
  AcceptanceCaps acceptance;
  std::string output_directory = "predrate_out";
  int verbosity = 1;
};

/// All problems found in a configuration, each with its line reference.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses and validates a YAML plan. Throws ConfigError listing every problem;
/// no partially valid config is ever returned.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, std::string source = "<text>");

/// The regime setup (prior, truth, quadrature) described by a config.
RegimeSetup build_setup(const RunConfig& config);
ExperimentPlan build_plan(const RunConfig& config);

}  // namespace predrate
