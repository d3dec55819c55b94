#include "predrate/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace predrate {

const std::vector<std::string>& known_verifications() {
  static const std::vector<std::string> names{
      "factorization", "conditional-identity", "thickness",      "separation",     "cover",
      "sieve",         "cesaro",               "numerator-bound", "evidence-bound", "posterior-mass"};
  return names;
}

bool is_static_verification(std::string_view name) {
  return name == "factorization" || name == "conditional-identity" || name == "thickness" ||
         name == "separation" || name == "cover" || name == "sieve";
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += sep;
    out += parts[k];
  }
  return out;
}

std::string error_summary(const std::vector<std::string>& errors) {
  return "invalid configuration:\n  " + join(errors, "\n  ");
}

int line_of(const YAML::Node& node) { return node.Mark().line + 1; }

/// Collects every problem instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  void error(int line, const std::string& message) {
    errors_.push_back(source_ + ":" + std::to_string(line) + ": " + message);
  }
  void error(const YAML::Node& at, const std::string& message) { error(line_of(at), message); }
  void error(const std::string& message) { errors_.push_back(source_ + ": " + message); }
  const std::vector<std::string>& errors() const { return errors_; }

  using Section = std::map<std::string, YAML::Node>;

  /// Keys of a mapping, rejecting duplicates (both lines cited) and keys
  /// outside `allowed`.
  Section section(const YAML::Node& node, const std::string& path,
                  const std::set<std::string>& allowed, bool top_level = false) {
    Section out;
    if (!node.IsMap()) {
      error(node, path.empty() ? "configuration must be a mapping" : "'" + path + "' must be a mapping");
      return out;
    }
    std::map<std::string, int> first_line;
    for (auto it = node.begin(); it != node.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      const std::string full = path.empty() ? key : path + "." + key;
      const int line = line_of(it->first);
      if (auto seen = first_line.find(key); seen != first_line.end()) {
        error(line, std::string(top_level ? "duplicated section '" : "duplicated key '") + full +
                        "' (first at line " + std::to_string(seen->second) + ", again at line " +
                        std::to_string(line) + ")");
        continue;
      }
      first_line[key] = line;
      if (!allowed.count(key)) {
        error(line, std::string(top_level ? "unknown section '" : "unknown key '") + full + "'");
        continue;
      }
      out[key] = it->second;
    }
    return out;
  }

  template <typename T>
  std::optional<T> get(const Section& s, const std::string& key, const std::string& path) {
    const auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    return convert<T>(it->second, path + "." + key);
  }

  template <typename T>
  std::optional<T> convert(const YAML::Node& node, const std::string& what) {
    try {
      if (!node.IsScalar()) throw YAML::BadConversion(node.Mark());
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        const std::string text = node.as<std::string>();
        if (!text.empty() && text.front() == '-') {
          error(node, "'" + what + "' must be a nonnegative integer");
          return std::nullopt;
        }
        return static_cast<T>(node.as<unsigned long long>());
      } else {
        return node.as<T>();
      }
    } catch (const YAML::Exception&) {
      error(node, "'" + what + "' has the wrong type");
      return std::nullopt;
    }
  }

  template <typename T>
  std::optional<std::vector<T>> list(const Section& s, const std::string& key, const std::string& path) {
    const auto it = s.find(key);
    if (it == s.end()) return std::nullopt;
    const YAML::Node& node = it->second;
    if (!node.IsSequence()) {
      error(node, "'" + path + "." + key + "' must be a list");
      return std::nullopt;
    }
    std::vector<T> out;
    bool ok = true;
    for (std::size_t k = 0; k < node.size(); ++k) {
      auto v = convert<T>(node[k], path + "." + key + "[" + std::to_string(k) + "]");
      if (v) {
        out.push_back(*v);
      } else {
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return out;
  }

  int line(const Section& s, const std::string& key, int fallback = 0) const {
    const auto it = s.find(key);
    return it == s.end() ? fallback : line_of(it->second);
  }

 private:
  std::string source_;
  std::vector<std::string> errors_;
};

template <typename T>
void assign(std::optional<T> v, T& target) {
  if (v) target = *v;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(error_summary(errors)), errors_(std::move(errors)) {}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path.string() + ": cannot read configuration file"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

RunConfig parse_config_text(std::string_view text, std::string source) {
  Reader r(source);
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError({source + ":" + std::to_string(e.mark.line + 1) + ": syntax error: " + e.msg});
  }

  RunConfig cfg;
  cfg.source = source;
  const auto top = r.section(root, "", {"plan", "grid", "family", "truth", "schedule", "params", "verify",
                                        "acceptance"},
                             true);
  const bool top_ok = r.errors().empty();
  for (const char* required : {"plan", "family", "truth", "schedule", "verify"}) {
    if (!top.count(required) && top_ok) r.error(std::string("missing section '") + required + "'");
  }
  auto sub = [&](const std::string& name, const std::set<std::string>& allowed) {
    const auto it = top.find(name);
    return it == top.end() ? Reader::Section{} : r.section(it->second, name, allowed);
  };

  // plan
  const auto plan = sub("plan", {"regime", "replications", "seed", "jobs", "verbosity", "output"});
  bool regime_known = false;
  if (auto name = r.get<std::string>(plan, "regime", "plan")) {
    if (auto regime = parse_regime(*name)) {
      cfg.regime = *regime;
      regime_known = true;
    } else {
      r.error(r.line(plan, "regime"), "unknown regime '" + *name + "' (iid, misspecified, regression, markov)");
    }
  } else if (top.count("plan")) {
    r.error(line_of(top.at("plan")), "missing key 'plan.regime'");
  }
  assign(r.get<std::size_t>(plan, "replications", "plan"), cfg.replications);
  assign(r.get<std::uint64_t>(plan, "seed", "plan"), cfg.seed);
  assign(r.get<std::size_t>(plan, "jobs", "plan"), cfg.jobs);
  assign(r.get<int>(plan, "verbosity", "plan"), cfg.verbosity);
  assign(r.get<std::string>(plan, "output", "plan"), cfg.output_directory);
  if (cfg.replications < 1) r.error(r.line(plan, "replications"), "'plan.replications' must be at least 1");
  if (cfg.jobs < 1) r.error(r.line(plan, "jobs"), "'plan.jobs' must be at least 1");

  // grid
  const auto grid = sub("grid", {"lower", "upper", "points"});
  assign(r.get<double>(grid, "lower", "grid"), cfg.grid.lower);
  assign(r.get<double>(grid, "upper", "grid"), cfg.grid.upper);
  assign(r.get<std::size_t>(grid, "points", "grid"), cfg.grid.points);
  if (!(cfg.grid.lower < cfg.grid.upper)) r.error(r.line(grid, "lower"), "grid needs lower < upper");
  if (cfg.grid.points < 3) r.error(r.line(grid, "points"), "grid needs at least 3 points");

  // family
  const auto family = sub("family", {"kind", "means", "sd", "coefficients", "design_size", "thetas", "weights",
                                     "state_window", "theta0_bound"});
  const int family_line = top.count("family") ? line_of(top.at("family")) : 0;
  assign(r.get<std::string>(family, "kind", "family"), cfg.family.kind);
  assign(r.list<double>(family, "means", "family"), cfg.family.means);
  assign(r.get<double>(family, "sd", "family"), cfg.family.sd);
  assign(r.get<std::size_t>(family, "design_size", "family"), cfg.family.design_size);
  assign(r.list<double>(family, "thetas", "family"), cfg.family.thetas);
  assign(r.list<double>(family, "weights", "family"), cfg.family.weights);
  assign(r.get<double>(family, "state_window", "family"), cfg.family.state_window);
  assign(r.get<double>(family, "theta0_bound", "family"), cfg.family.theta0_bound);
  if (const auto it = family.find("coefficients"); it != family.end()) {
    const YAML::Node& node = it->second;
    if (!node.IsSequence()) {
      r.error(node, "'family.coefficients' must be a list of [intercept, slope] pairs");
    } else {
      for (std::size_t k = 0; k < node.size(); ++k) {
        if (!node[k].IsSequence() || node[k].size() != 2) {
          r.error(node[k], "'family.coefficients' entries must be [intercept, slope] pairs");
          continue;
        }
        const auto a = r.convert<double>(node[k][0], "family.coefficients");
        const auto b = r.convert<double>(node[k][1], "family.coefficients");
        if (a && b) cfg.family.coefficients.push_back({*a, *b});
      }
    }
  }
  const std::map<Regime, std::string> kind_for{{Regime::iid, "gaussian_location"},
                                               {Regime::misspecified, "gaussian_location"},
                                               {Regime::regression, "linear_regression"},
                                               {Regime::markov, "ar1"}};
  std::size_t family_size = 0;
  if (top.count("family")) {
    if (cfg.family.kind.empty()) {
      r.error(family_line, "missing key 'family.kind'");
    } else if (regime_known && cfg.family.kind != kind_for.at(cfg.regime)) {
      r.error(r.line(family, "kind"), "family kind '" + cfg.family.kind + "' does not fit regime '" +
                                          std::string(to_string(cfg.regime)) + "' (expected '" +
                                          kind_for.at(cfg.regime) + "')");
    }
    if (cfg.family.kind == "gaussian_location") {
      family_size = cfg.family.means.size();
      if (family_size == 0) r.error(family_line, "'family.means' must be a nonempty list");
      if (!(cfg.family.sd > 0.0)) r.error(r.line(family, "sd", family_line), "'family.sd' must be positive");
    } else if (cfg.family.kind == "linear_regression") {
      family_size = cfg.family.coefficients.size();
      if (family_size == 0) r.error(family_line, "'family.coefficients' must be a nonempty list");
    } else if (cfg.family.kind == "ar1") {
      family_size = cfg.family.thetas.size();
      if (family_size == 0) r.error(family_line, "'family.thetas' must be a nonempty list");
      for (double t : cfg.family.thetas) {
        if (!(std::abs(t) < 1.0)) {
          r.error(r.line(family, "thetas"), "AR(1) coefficient " + std::to_string(t) + " has no stationary density");
        }
      }
      if (!(cfg.family.theta0_bound > 0.0)) r.error(r.line(family, "theta0_bound"), "'family.theta0_bound' must be positive");
    } else if (!cfg.family.kind.empty()) {
      r.error(r.line(family, "kind"), "unknown family kind '" + cfg.family.kind + "'");
    }
    if (!cfg.family.weights.empty()) {
      if (cfg.family.weights.size() != family_size) {
        r.error(r.line(family, "weights"), "'family.weights' needs one weight per member");
      }
      if (std::any_of(cfg.family.weights.begin(), cfg.family.weights.end(), [](double w) { return !(w > 0.0); })) {
        r.error(r.line(family, "weights"), "'family.weights' must be positive");
      }
    }
  }

  // truth
  const auto truth = sub("truth", {"atom", "mean", "sd", "intercept", "slope", "theta"});
  const int truth_line = top.count("truth") ? line_of(top.at("truth")) : 0;
  cfg.truth.atom = r.get<std::size_t>(truth, "atom", "truth");
  cfg.truth.mean = r.get<double>(truth, "mean", "truth");
  assign(r.get<double>(truth, "sd", "truth"), cfg.truth.sd);
  cfg.truth.theta = r.get<double>(truth, "theta", "truth");
  const auto intercept = r.get<double>(truth, "intercept", "truth");
  const auto slope = r.get<double>(truth, "slope", "truth");
  if (intercept || slope) {
    if (!(intercept && slope)) {
      r.error(truth_line, "a regression truth needs both 'intercept' and 'slope'");
    } else {
      cfg.truth.coefficients = LinearCoefficients{*intercept, *slope};
    }
  }
  if (top.count("truth") && regime_known) {
    const bool explicit_param = cfg.regime == Regime::regression ? cfg.truth.coefficients.has_value()
                                : cfg.regime == Regime::markov   ? cfg.truth.theta.has_value()
                                                                 : cfg.truth.mean.has_value();
    if (cfg.regime == Regime::misspecified) {
      if (cfg.truth.atom) r.error(r.line(truth, "atom"), "a misspecified truth lies outside the family; give 'mean' and 'sd'");
      if (!cfg.truth.mean) r.error(truth_line, "a misspecified truth needs 'truth.mean'");
    } else if (cfg.truth.atom.has_value() == explicit_param) {
      r.error(truth_line, "give exactly one of 'truth.atom' or the regime's explicit truth parameter");
    }
    if (cfg.truth.atom && family_size > 0 && *cfg.truth.atom >= family_size) {
      r.error(r.line(truth, "atom"), "'truth.atom' is not a member of the family");
    }
    if (cfg.truth.theta && !(std::abs(*cfg.truth.theta) < 1.0)) {
      r.error(r.line(truth, "theta"), "truth AR(1) coefficient has no stationary density");
    }
    if (!(cfg.truth.sd > 0.0)) r.error(r.line(truth, "sd"), "'truth.sd' must be positive");
  }

  // schedule
  const auto schedule = sub("schedule", {"n", "a", "gamma", "kappa"});
  const int schedule_line = top.count("schedule") ? line_of(top.at("schedule")) : 0;
  if (auto ns = r.list<std::size_t>(schedule, "n", "schedule")) cfg.schedule.n_values = *ns;
  assign(r.get<double>(schedule, "a", "schedule"), cfg.schedule.a);
  assign(r.get<double>(schedule, "gamma", "schedule"), cfg.schedule.gamma);
  assign(r.get<double>(schedule, "kappa", "schedule"), cfg.schedule.kappa);
  if (top.count("schedule")) {
    if (cfg.schedule.n_values.empty()) {
      r.error(schedule_line, "'schedule.n' must be a nonempty list");
    } else {
      try {
        cfg.schedule.validate();
      } catch (const std::invalid_argument& e) {
        r.error(schedule_line, std::string("schedule: ") + e.what());
      }
    }
  }
  if (cfg.regime == Regime::regression && cfg.family.design_size > 0 && !cfg.schedule.n_values.empty() &&
      cfg.family.design_size < cfg.schedule.n_values.back()) {
    r.error(r.line(family, "design_size"), "'family.design_size' is smaller than the largest n");
  }

  // params
  const auto params = sub("params", {"C", "c", "d", "r", "beta", "M", "eta", "allow_weak_constants"});
  assign(r.get<double>(params, "C", "params"), cfg.params.C);
  assign(r.get<double>(params, "c", "params"), cfg.params.c);
  assign(r.get<double>(params, "d", "params"), cfg.params.d);
  assign(r.get<double>(params, "r", "params"), cfg.params.r);
  assign(r.get<double>(params, "beta", "params"), cfg.params.beta);
  assign(r.get<double>(params, "M", "params"), cfg.params.M);
  assign(r.get<double>(params, "eta", "params"), cfg.params.eta);
  assign(r.get<bool>(params, "allow_weak_constants", "params"), cfg.allow_weak_constants);
  const int params_line = top.count("params") ? line_of(top.at("params")) : 0;
  if (!(cfg.params.beta > 1.0)) {
    std::ostringstream msg;
    msg << "'params.beta' = " << cfg.params.beta << " violates Condition P's \"beta > 1\" requirement";
    r.error(r.line(params, "beta", params_line), msg.str());
  }
  if (!(cfg.params.C > 0.0)) r.error(r.line(params, "C", params_line), "'params.C' must be positive");
  if (!(cfg.params.M > 0.0)) r.error(r.line(params, "M", params_line), "'params.M' must be positive");
  if (!(cfg.params.eta > 0.0 && cfg.params.eta < 1.0)) {
    r.error(r.line(params, "eta", params_line), "'params.eta' must lie in (0, 1)");
  }
  if (!cfg.allow_weak_constants) {
    const std::pair<const char*, double> constants[] = {{"c", cfg.params.c}, {"d", cfg.params.d}, {"r", cfg.params.r}};
    for (const auto& [name, value] : constants) {
      if (!(value > cfg.params.C + 1.0)) {
        std::ostringstream msg;
        msg << "'params." << name << "' = " << value << " must exceed C + 1 = " << cfg.params.C + 1.0
            << " (set 'params.allow_weak_constants: true' to override)";
        r.error(r.line(params, name, params_line), msg.str());
      }
    }
  }

  // verify
  const auto verify = sub("verify", {"names", "subset", "small_set", "predictive_points", "identity_trials"});
  const int verify_line = top.count("verify") ? line_of(top.at("verify")) : 0;
  if (auto names = r.list<std::string>(verify, "names", "verify")) cfg.verify.names = *names;
  if (top.count("verify") && cfg.verify.names.empty()) r.error(verify_line, "'verify.names' must be a nonempty list");
  for (const auto& name : cfg.verify.names) {
    const auto& known = known_verifications();
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      r.error(r.line(verify, "names", verify_line), "unknown verification '" + name + "' (known: " + join(known, ", ") + ")");
    }
  }
  if (auto small = r.list<std::size_t>(verify, "small_set", "verify")) cfg.verify.small_set = *small;
  assign(r.get<std::size_t>(verify, "predictive_points", "verify"), cfg.verify.predictive_points);
  assign(r.get<std::size_t>(verify, "identity_trials", "verify"), cfg.verify.identity_trials);
  if (cfg.verify.predictive_points < 3) r.error(r.line(verify, "predictive_points"), "'verify.predictive_points' must be at least 3");
  if (const auto it = verify.find("subset"); it != verify.end()) {
    const auto subset = r.section(it->second, "verify.subset", {"kind", "ball_index", "center", "members", "closure_mixtures"});
    const std::string kind = r.get<std::string>(subset, "kind", "verify.subset").value_or("cover_ball");
    if (kind == "cover_ball") {
      cfg.verify.subset.kind = SubsetRecipe::Kind::cover_ball;
    } else if (kind == "explicit_ball") {
      cfg.verify.subset.kind = SubsetRecipe::Kind::explicit_ball;
    } else {
      r.error(r.line(subset, "kind"), "unknown subset kind '" + kind + "' (cover_ball, explicit_ball)");
    }
    assign(r.get<std::size_t>(subset, "ball_index", "verify.subset"), cfg.verify.subset.ball_index);
    assign(r.get<std::size_t>(subset, "center", "verify.subset"), cfg.verify.subset.center);
    assign(r.list<std::size_t>(subset, "members", "verify.subset"), cfg.verify.subset.members);
    assign(r.get<std::size_t>(subset, "closure_mixtures", "verify.subset"), cfg.verify.subset.closure_mixtures);
    if (cfg.verify.subset.kind == SubsetRecipe::Kind::explicit_ball) {
      if (cfg.verify.subset.members.empty()) r.error(it->second, "an explicit subset needs 'members'");
      for (std::size_t id : cfg.verify.subset.members) {
        if (family_size > 0 && id >= family_size) r.error(r.line(subset, "members"), "subset member outside the family");
      }
      if (family_size > 0 && cfg.verify.subset.center >= family_size) {
        r.error(r.line(subset, "center"), "subset center outside the family");
      }
    }
  }
  for (std::size_t id : cfg.verify.small_set) {
    if (family_size > 0 && id >= family_size) r.error(r.line(verify, "small_set"), "small-set member outside the family");
  }

  // acceptance caps
  const auto caps = sub("acceptance", {"fraction_cap", "fitted_constant_cap", "slope_range"});
  assign(r.get<double>(caps, "fraction_cap", "acceptance"), cfg.acceptance.fraction_cap);
  assign(r.get<double>(caps, "fitted_constant_cap", "acceptance"), cfg.acceptance.fitted_constant_cap);
  if (auto range = r.list<double>(caps, "slope_range", "acceptance")) {
    if (range->size() != 2 || !((*range)[0] <= (*range)[1])) {
      r.error(r.line(caps, "slope_range"), "'acceptance.slope_range' must be [low, high]");
    } else {
      cfg.acceptance.slope_range = std::make_pair((*range)[0], (*range)[1]);
    }
  }

  if (r.errors().empty()) {
    // Construction problems (a grid clipping a density, for instance) are
    // configuration errors too.
    try {
      build_setup(cfg);
    } catch (const std::exception& e) {
      r.error(std::string("cannot build the model: ") + e.what());
    }
  }
  if (!r.errors().empty()) throw ConfigError(r.errors());
  return cfg;
}

RegimeSetup build_setup(const RunConfig& config) {
  const Grid grid(config.grid.lower, config.grid.upper, config.grid.points);
  const FamilySpec& fs = config.family;
  Family family;
  std::vector<double> design;
  if (fs.kind == "gaussian_location") {
    family = build_gaussian_location_family(grid, fs.means, fs.sd);
  } else if (fs.kind == "linear_regression") {
    const std::size_t size = fs.design_size > 0 ? fs.design_size : config.schedule.n_values.back();
    design = default_design(size);
    family = build_regression_family(design, fs.coefficients);
  } else if (fs.kind == "ar1") {
    family = build_markov_family(fs.thetas);
  } else {
    throw std::invalid_argument("unknown family kind '" + fs.kind + "'");
  }
  const std::size_t size = family.size();
  auto prior = std::make_shared<const AtomicPrior>(
      fs.weights.empty() ? AtomicPrior::uniform(std::move(family)) : AtomicPrior(std::move(family), fs.weights));

  RegimeSetup setup;
  setup.regime = config.regime;
  setup.prior = prior;
  setup.conditional_points = config.verify.predictive_points;
  setup.state_window = fs.state_window;
  setup.theta0_bound = fs.theta0_bound;
  const TruthSpec& ts = config.truth;
  if (config.regime == Regime::misspecified) {
    const MisspecifiedSetup ms(prior, gaussian_density(grid, *ts.mean, ts.sd));
    setup.truth = ms.truth();
  } else if (ts.atom) {
    setup.truth = Truth::well_specified(prior->family().at(*ts.atom));
  } else {
    FamilyMember member;
    member.id = size;  // outside the family
    if (config.regime == Regime::iid) {
      if (!(ts.mean.has_value())) throw std::invalid_argument("truth needs a mean");
      if (std::min(*ts.mean - grid.lower(), grid.upper() - *ts.mean) < 6.0 * ts.sd) {
        throw std::invalid_argument("grid clips density");
      }
      member.payload = gaussian_density(grid, *ts.mean, ts.sd);
    } else if (config.regime == Regime::regression) {
      member.payload = linear_regression_function(design, *ts.coefficients);
    } else {
      member.payload = MarkovParam{*ts.theta, 1.0};
    }
    setup.truth = Truth::well_specified(member);
  }
  return setup;
}

ExperimentPlan build_plan(const RunConfig& config) {
  ExperimentPlan plan;
  plan.setup = build_setup(config);
  plan.schedule = config.schedule;
  plan.params = config.params;
  plan.replications = config.replications;
  plan.seed = config.seed;
  plan.jobs = config.jobs;
  return plan;
}

}  // namespace predrate
