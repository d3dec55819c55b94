#include "predrate/run.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "predrate/experiments.hpp"
#include "predrate/inference.hpp"

namespace predrate {

namespace fs = std::filesystem;

std::optional<Command> parse_command(std::string_view name) {
  if (name == "check") return Command::check;
  if (name == "simulate") return Command::simulate;
  if (name == "sieve") return Command::sieve;
  if (name == "report") return Command::report;
  return std::nullopt;
}

namespace {

using Cell = CsvTable::Cell;

Cell count(std::size_t v) { return static_cast<std::uint64_t>(v); }

std::string ids_text(std::span<const std::size_t> ids) {
  std::string out;
  for (std::size_t k = 0; k < ids.size(); ++k) out += (k ? " " : "") + std::to_string(ids[k]);
  return out;
}

std::vector<std::size_t> far_atoms(RegimeMetric& metric, double radius) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < metric.size(); ++j) {
    if (metric.target_distance(j) > radius) out.push_back(j);
  }
  return out;
}

bool nonincreasing(std::span<const double> xs) {
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (xs[k] > xs[k - 1]) return false;
  }
  return true;
}

/// Shared state of one run.
struct RunState {
  const RunConfig& config;
  ExperimentPlan plan;
  fs::path out_dir;
  std::ostream& log;

  std::uint64_t seed() const { return config.seed; }
  void write(const std::string& name, const CsvTable& table) const { table.write(out_dir / (name + ".csv")); }
};

// ------------------------------------------------------------ verifications

VerificationOutcome verify_factorization(RunState& ctx) {
  const auto& setup = ctx.plan.setup;
  const std::size_t n = ctx.config.schedule.n_values.back();
  const std::size_t trials = std::min(ctx.config.replications, ctx.config.verify.identity_trials);
  CsvTable t("factorization",
             {{"replication", "index"}, {"n", "observations"}, {"log_joint_direct", "nats"},
              {"log_joint_factored", "nats"}, {"abs_diff", "nats"}, {"pass", "bool"}},
             "log of the prior-integrated likelihood, once as a log-sum-exp over atoms of full products and once as "
             "the sum of log predictive densities along sequential updates; pass when abs_diff <= 1e-9 max(1, |log joint|)",
             ctx.seed());
  bool pass = true;
  double worst = 0.0;
  for (std::size_t rep = 0; rep < trials; ++rep) {
    const auto data = generate_data(setup.regime, setup.truth.data, n, ctx.plan.replication_seed(rep));
    const auto f = factorization_check(setup.prior, data);
    const bool ok = f.abs_diff <= 1e-9 * std::max(1.0, std::abs(f.log_joint_direct));
    pass = pass && ok;
    worst = std::max(worst, f.abs_diff);
    t.add_row({count(rep), count(n), f.log_joint_direct, f.log_joint_factored, f.abs_diff, ok});
  }
  ctx.write("factorization", t);
  return {"factorization", pass, "worst abs_diff " + format_number(worst)};
}

VerificationOutcome verify_conditional_identity(RunState& ctx) {
  const auto& setup = ctx.plan.setup;
  const std::size_t n = ctx.config.schedule.n_values.front();
  const std::size_t trials = ctx.config.verify.identity_trials;
  CsvTable t("conditional-identity",
             {{"trial", "index"}, {"step", "observations absorbed"}, {"subset", "atom ids"}, {"lhs", "1"},
              {"rhs", "1"}, {"abs_diff", "1"}, {"pass", "bool"}},
             "conditional expectation of the square-root step ratio of the restricted numerator path (lhs, pointwise "
             "quadrature) against one minus the regime's affinity gap of the restricted predictive (rhs); pass when "
             "abs_diff < 1e-9",
             ctx.seed());
  std::mt19937_64 rng(ctx.seed());
  bool pass = true;
  double worst = 0.0;
  const std::size_t atoms = setup.prior->size();
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const auto data = generate_data(setup.regime, setup.truth.data, n, ctx.plan.replication_seed(trial));
    const std::size_t step = std::uniform_int_distribution<std::size_t>(0, data.size() - 1)(rng);
    std::vector<std::size_t> subset;
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < atoms; ++j) {
      if (coin(rng)) subset.push_back(j);
    }
    if (subset.empty()) subset.push_back(std::uniform_int_distribution<std::size_t>(0, atoms - 1)(rng));
    PosteriorState state(setup.prior, setup.truth.reference);
    for (std::size_t i = 0; i < step; ++i) state.absorb(data[i]);
    const auto id = conditional_sqrt_ratio_identity(state, subset, data[step].context, setup.truth);
    const bool ok = id.abs_diff < 1e-9;
    pass = pass && ok;
    worst = std::max(worst, id.abs_diff);
    t.add_row({count(trial), count(step), ids_text(subset), id.lhs, id.rhs, id.abs_diff, ok});
  }
  ctx.write("conditional-identity", t);
  return {"conditional-identity", pass, "worst abs_diff " + format_number(worst)};
}

VerificationOutcome verify_thickness(RunState& ctx) {
  const auto rows = thickness_profile(ctx.plan.setup, ctx.config.schedule);
  CsvTable t("thickness",
             {{"n", "observations"}, {"epsilon", "1"}, {"neighborhood_mass", "prior probability"},
              {"implied_C", "1"}, {"declared_C", "1"}, {"pass", "bool"}},
             "prior mass of the atoms whose K and V to the truth are both at most epsilon_n^2 (the regime's K and V); "
             "implied_C = -log(mass) / (n epsilon_n^2); pass when implied_C <= declared C",
             ctx.seed());
  bool pass = true;
  double worst = 0.0;
  for (const auto& r : rows) {
    const bool ok = r.implied_C <= ctx.config.params.C;
    pass = pass && ok;
    worst = std::max(worst, r.implied_C);
    t.add_row({count(r.n), r.epsilon, r.neighborhood_mass, r.implied_C, ctx.config.params.C, ok});
  }
  ctx.write("thickness", t);
  return {"thickness", pass, "largest implied C " + format_number(worst)};
}

VerificationOutcome verify_separation(RunState& ctx) {
  const auto& cfg = ctx.config;
  CsvTable t("separation",
             {{"n", "observations"}, {"epsilon", "1"}, {"center", "atom id"}, {"radius", "ball metric"},
              {"subset", "atom ids"}, {"prior_mass", "prior probability"}, {"hull_gap", "affinity gap"},
              {"required_gap", "affinity gap"}, {"closure_violation", "affinity gap"},
              {"ratio_excess", "1"}, {"implied_C", "1"}, {"admissible", "bool"}, {"failed_check", "text"}},
             "certification of the numerator-bound subset: mixture closure, projection ratio (misspecified), hull "
             "separation above d epsilon_n^2 in the regime's affinity gap, and d > C + 1",
             ctx.seed());
  bool pass = true;
  std::string detail = "all subsets admissible";
  for (std::size_t k = 0; k < cfg.schedule.n_values.size(); ++k) {
    const std::size_t n = cfg.schedule.n_values[k];
    const double eps = cfg.schedule.epsilon(n);
    RegimeMetric metric(ctx.plan.setup, n);
    Ball ball;
    try {
      ball = build_subset(metric, cfg.verify.subset, cfg.params.M, eps);
    } catch (const std::runtime_error& e) {
      pass = false;
      detail = std::string("subset not admissible: ") + e.what();
      t.add_row({count(n), eps, count(0), 0.0, std::string(), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, false, detail});
      continue;
    }
    const double implied_C = thickness_at(metric, eps).implied_C;
    const auto cert = certify_subset(metric, ball, cfg.params.d, eps, implied_C, cfg.verify.subset.closure_mixtures,
                                     cfg.seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
    if (!cert.admissible && pass) {
      pass = false;
      detail = "subset not admissible: " + cert.failed_check;
    }
    t.add_row({count(n), eps, count(ball.center_id), ball.radius, ids_text(ball.member_ids),
               ctx.plan.setup.prior->mass(ball.member_ids), cert.hull_gap, cert.required_gap,
               cert.closure_violation, cert.ratio_excess, cert.implied_C, cert.admissible, cert.failed_check});
  }
  ctx.write("separation", t);
  return {"separation", pass, detail};
}

struct CoverRow {
  std::size_t n = 0;
  double epsilon = 0.0;
  std::vector<std::size_t> target;
  std::vector<Ball> balls;
};

std::vector<CoverRow> covers(RunState& ctx) {
  std::vector<CoverRow> out;
  for (std::size_t n : ctx.config.schedule.n_values) {
    const double eps = ctx.config.schedule.epsilon(n);
    RegimeMetric metric(ctx.plan.setup, n);
    CoverRow row{n, eps, far_atoms(metric, ctx.config.params.M * eps), {}};
    row.balls = greedy_cover(metric, row.target, 0.5 * ctx.config.params.M * eps);
    out.push_back(std::move(row));
  }
  return out;
}

VerificationOutcome verify_cover(RunState& ctx) {
  const auto& cfg = ctx.config;
  const auto rows = covers(ctx);
  CsvTable t("cover",
             {{"n", "observations"}, {"epsilon", "1"}, {"radius", "ball metric"}, {"target_size", "atoms"},
              {"balls", "count"}, {"log_cover_count", "nats"}, {"entropy_constant", "1"}, {"implied_C", "1"},
              {"covered", "bool"}},
             "greedy farthest-point cover of B_n = {target distance > M epsilon_n} by balls of radius M epsilon_n / 2; "
             "entropy_constant = log(balls) / (n epsilon_n^2); pass when every target atom lies within the radius of "
             "a center",
             ctx.seed());
  bool pass = true;
  double fitted_R = 0.0, fitted_C = 0.0;
  for (const auto& row : rows) {
    RegimeMetric metric(ctx.plan.setup, row.n);
    std::vector<bool> seen(metric.size(), false);
    bool ok = true;
    for (const auto& b : row.balls) {
      for (std::size_t id : b.member_ids) {
        seen[id] = true;
        ok = ok && metric.ball_distance(b.center_id, id) <= b.radius;
      }
    }
    for (std::size_t id : row.target) ok = ok && seen[id];
    pass = pass && ok;
    const double ne2 = static_cast<double>(row.n) * row.epsilon * row.epsilon;
    const double log_count = row.balls.empty() ? 0.0 : std::log(static_cast<double>(row.balls.size()));
    const double R = log_count / ne2;
    const double C = thickness_at(metric, row.epsilon).implied_C;
    fitted_R = std::max(fitted_R, R);
    fitted_C = std::max(fitted_C, C);
    t.add_row({count(row.n), row.epsilon, 0.5 * cfg.params.M * row.epsilon, count(row.target.size()),
               count(row.balls.size()), log_count, R, C, ok});
  }
  const double M = std::isfinite(fitted_C) ? admissible_M(fitted_C, fitted_R) : std::numeric_limits<double>::infinity();
  t.add_note("fitted C = " + format_number(fitted_C) + ", fitted R = " + format_number(fitted_R) +
             ", smallest admissible M = " + format_number(M) + ", configured M = " + format_number(cfg.params.M));
  ctx.write("cover", t);
  return {"cover", pass, "admissible M " + format_number(M) + " (configured " + format_number(cfg.params.M) + ")"};
}

VerificationOutcome verify_sieve(RunState& ctx) {
  const auto& cfg = ctx.config;
  const auto rows = covers(ctx);
  CsvTable t("sieve",
             {{"n", "observations"}, {"epsilon", "1"}, {"balls", "count"}, {"S_n", "1"}, {"discounted_S_n", "1"},
              {"J_n", "count"}, {"covering_exhausted", "bool"}, {"complement_mass", "prior probability"},
              {"tail_sum_bound", "prior probability"}, {"log_cover_count", "nats"}, {"entropy_bound", "nats"},
              {"mass_bound_holds", "bool"}, {"entropy_bound_holds", "bool"}, {"complement_constant", "1"},
              {"entropy_constant", "1"}, {"pass", "bool"}},
             "sieve from the cover sorted by prior mass: J_n = min{j : j^(beta-1) >= S_n^beta exp(r n epsilon_n^2)}; "
             "checks complement mass <= sum_{j > J_n} S_n^beta / j^beta, ball masses <= S_n^beta / j^beta and "
             "log J_n <= (r + beta c) / (beta - 1) n epsilon_n^2",
             ctx.seed());
  bool pass = true;
  for (const auto& row : rows) {
    const auto s = build_sieve_from_cover(row.balls, *ctx.plan.setup.prior, cfg.params.beta, cfg.params.r,
                                          cfg.params.c, row.n, row.epsilon);
    const double discounted =
        condition_p_sum(s.ball_masses, cfg.params.beta, cfg.params.c, row.n, row.epsilon).discounted;
    const bool ok = s.complement_mass <= s.tail_sum_bound + 1e-15 && s.mass_bound_holds && s.entropy_bound_holds;
    pass = pass && ok;
    t.add_row({count(row.n), row.epsilon, count(s.balls.size()), s.S_n, discounted, count(s.J_n), s.covering_exhausted,
               s.complement_mass, s.tail_sum_bound, s.log_cover_count, s.entropy_bound, s.mass_bound_holds,
               s.entropy_bound_holds, s.complement_constant, s.entropy_constant, ok});
  }
  ctx.write("sieve", t);
  return {"sieve", pass, pass ? "sieve bounds hold" : "a sieve bound failed"};
}

VerificationOutcome verify_cesaro(RunState& ctx) {
  const auto& cfg = ctx.config;
  const auto r = cesaro_experiment(ctx.plan, cfg.verify.predictive_points);
  CsvTable t("cesaro",
             {{"n", "observations"}, {"epsilon", "1"}, {"mean", "nats"}, {"standard_error", "nats"},
              {"median", "nats"}, {"upper_quartile", "nats"}, {"mean_over_epsilon_sq", "1"}},
             "running mean over i <= n of the regime's KL from the truth to the predictive density before update i "
             "(K, K* against the projection, per-index K, or K at the realized previous state), averaged over "
             "replications",
             ctx.seed());
  for (std::size_t k = 0; k < r.n_values.size(); ++k) {
    t.add_row({count(r.n_values[k]), r.epsilon[k], r.mean[k], r.standard_error[k], r.median[k], r.upper_quartile[k],
               r.mean[k] / (r.epsilon[k] * r.epsilon[k])});
  }
  const bool fitted = r.fit.excluded.size() + 3 <= r.n_values.size();
  t.add_note("fit: slope = " + format_number(r.fit.slope) + ", intercept = " + format_number(r.fit.intercept) +
             ", r_squared = " + format_number(r.fit.r_squared) + ", fitted_constant = " +
             format_number(r.fit.fitted_constant) + ", worst convexity violation = " +
             format_number(r.worst_convexity_violation) + ", replications = " + std::to_string(cfg.replications));
  ctx.write("cesaro", t);

  std::vector<std::string> problems;
  if (!nonincreasing(r.median)) problems.push_back("medians not decreasing");
  if (!(r.fit.fitted_constant <= cfg.acceptance.fitted_constant_cap)) problems.push_back("fitted constant above cap");
  if (r.worst_convexity_violation > 1e-9) problems.push_back("convexity chain violated");
  if (cfg.acceptance.slope_range) {
    const auto [lo, hi] = *cfg.acceptance.slope_range;
    if (!fitted || r.fit.slope < lo || r.fit.slope > hi) problems.push_back("slope outside range");
  }
  std::string detail = "slope " + format_number(r.fit.slope) + ", fitted constant " + format_number(r.fit.fitted_constant);
  for (const auto& p : problems) detail += "; " + p;
  return {"cesaro", problems.empty(), detail};
}

VerificationOutcome verify_numerator(RunState& ctx) {
  NumeratorReport r;
  try {
    r = verify_numerator_bound(ctx.plan, ctx.config.verify.subset, false);
  } catch (const std::runtime_error& e) {
    return {"numerator-bound", false, std::string("subset not admissible: ") + e.what()};
  }
  CsvTable t("numerator-bound",
             {{"n", "observations"}, {"epsilon", "1"}, {"subset", "atom ids"}, {"prior_mass", "prior probability"},
              {"hull_gap", "affinity gap"}, {"implied_C", "1"}, {"admissible", "bool"}, {"failed_check", "text"},
              {"mean_sqrt_L", "1"}, {"standard_error", "1"}, {"bound", "1"}, {"pass", "bool"}, {"tight_d", "1"},
              {"tight_bound", "1"}, {"tight_pass", "bool"}},
             "Monte Carlo mean of sqrt(L_{n,n}), the restricted numerator over the certified subset A_n, against "
             "Pi(A_n)^(1/2) exp(-d n epsilon_n^2); pass when mean <= bound + 3 standard errors",
             ctx.seed());
  for (const auto& row : r.rows) {
    t.add_row({count(row.n), row.epsilon, ids_text(row.subset), row.prior_mass, row.certificate.hull_gap,
               row.certificate.implied_C, row.certificate.admissible, row.certificate.failed_check, row.mean_sqrt_L,
               row.standard_error, row.bound, row.pass, row.tight_d, row.tight_bound, row.tight_pass});
  }
  t.add_note("d = " + format_number(ctx.config.params.d) + ", replications = " + std::to_string(ctx.config.replications));
  ctx.write("numerator-bound", t);
  return {"numerator-bound", r.pass, r.failure.empty() ? (r.pass ? "bound holds" : "bound exceeded") : r.failure};
}

VerificationOutcome verify_evidence(RunState& ctx) {
  const auto& cfg = ctx.config;
  const auto r = verify_evidence_bound(ctx.plan);
  CsvTable t("evidence-bound",
             {{"n", "observations"}, {"threshold_log", "nats"}, {"fraction_below", "replication fraction"},
              {"implied_C", "1"}, {"c_admissible", "bool"}},
             "fraction of replications with evidence I_n (prior integral of the likelihood ratio against the "
             "reference) at or below exp(-c n epsilon_n^2)",
             ctx.seed());
  bool admissible = true;
  for (std::size_t k = 0; k < r.n_values.size(); ++k) {
    admissible = admissible && r.c_admissible[k];
    t.add_row({count(r.n_values[k]), r.threshold_log[k], r.fraction_below[k], r.implied_C[k], r.c_admissible[k]});
  }
  t.add_note("trend (slope of fraction on n) = " + format_number(r.trend));
  ctx.write("evidence-bound", t);
  std::vector<std::string> problems;
  if (!admissible) problems.push_back("c <= C + 1 at some n");
  if (r.trend > 0.0) problems.push_back("fraction increasing");
  if (!(r.fraction_below.back() <= cfg.acceptance.fraction_cap)) problems.push_back("fraction above cap at largest n");
  std::string detail = "fraction at largest n " + format_number(r.fraction_below.back());
  for (const auto& p : problems) detail += "; " + p;
  return {"evidence-bound", problems.empty(), detail};
}

VerificationOutcome verify_posterior_mass(RunState& ctx) {
  const auto& cfg = ctx.config;
  const auto r = posterior_mass_path(ctx.plan, cfg.params.M, cfg.verify.small_set);
  CsvTable t("posterior-mass",
             {{"n", "observations"}, {"epsilon", "1"}, {"target_size", "atoms"}, {"median", "posterior probability"},
              {"upper_quartile", "posterior probability"}, {"fraction_above_eta", "replication fraction"},
              {"median_reference_weight", "posterior probability"}, {"median_small_set", "posterior probability"}},
             "posterior mass of B_n = {target distance to the truth > M epsilon_n} across replications, with the "
             "posterior weight of the reference atom and of the configured small set",
             ctx.seed());
  std::vector<double> fractions;
  for (const auto& row : r.rows) {
    fractions.push_back(row.fraction_above_eta);
    t.add_row({count(row.n), row.epsilon, count(row.target_size), row.median, row.upper_quartile,
               row.fraction_above_eta, row.median_reference_weight, row.median_small_set});
  }
  t.add_note("eta = " + format_number(cfg.params.eta) + ", M = " + format_number(cfg.params.M));
  ctx.write("posterior-mass", t);
  std::vector<std::string> problems;
  if (!r.decreasing) problems.push_back("median mass not decreasing");
  if (!nonincreasing(fractions)) problems.push_back("fraction above eta increasing");
  if (!(fractions.back() <= cfg.acceptance.fraction_cap)) problems.push_back("fraction above eta over cap at largest n");
  std::string detail = "median mass at largest n " + format_number(r.rows.back().median);
  for (const auto& p : problems) detail += "; " + p;
  return {"posterior-mass", problems.empty(), detail};
}

using Verification = std::function<VerificationOutcome(RunState&)>;

const std::map<std::string, Verification>& registry() {
  static const std::map<std::string, Verification> table{
      {"factorization", verify_factorization},   {"conditional-identity", verify_conditional_identity},
      {"thickness", verify_thickness},           {"separation", verify_separation},
      {"cover", verify_cover},                   {"sieve", verify_sieve},
      {"cesaro", verify_cesaro},                 {"numerator-bound", verify_numerator},
      {"evidence-bound", verify_evidence},       {"posterior-mass", verify_posterior_mass}};
  return table;
}

bool selected_for(Command command, const std::string& name) {
  switch (command) {
    case Command::check:
      return is_static_verification(name);
    case Command::sieve:
      return name == "cover" || name == "sieve";
    default:
      return true;
  }
}

int report_command(const fs::path& dir, std::ostream& out, std::ostream& err) {
  std::vector<fs::path> summaries;
  if (fs::exists(dir / "summary.csv")) summaries.push_back(dir / "summary.csv");
  if (fs::is_directory(dir)) {
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory() && fs::exists(entry.path() / "summary.csv")) subdirs.push_back(entry.path());
    }
    std::sort(subdirs.begin(), subdirs.end());
    for (const auto& s : subdirs) summaries.push_back(s / "summary.csv");
  }
  if (summaries.empty()) {
    err << "no summary.csv under " << dir.string() << "\n";
    return exit_status::runtime_error;
  }
  CsvTable table("report", {{"run", "directory"}, {"verification", "name"}, {"status", "pass|fail"}, {"detail", "text"}},
                 "collected pass/fail status of every verification found under the output directory", 0);
  bool all = true;
  for (const auto& path : summaries) {
    const std::string run = fs::relative(path.parent_path(), dir).string();
    for (const auto& o : read_summary(path)) {
      all = all && o.pass;
      table.add_row({run, o.name, std::string(o.pass ? "pass" : "fail"), o.detail});
      out << (o.pass ? "PASS " : "FAIL ") << run << " " << o.name << ": " << o.detail << "\n";
    }
  }
  table.write(dir / "report.csv");
  return all ? exit_status::pass : exit_status::fail;
}

}  // namespace

std::vector<VerificationOutcome> run_verifications(const RunConfig& config, Command command,
                                                   const fs::path& out_dir, std::ostream& log) {
  RunState ctx{config, build_plan(config), out_dir, log};
  fs::create_directories(out_dir);
  std::vector<std::string> names;
  if (command == Command::sieve) {
    names = {"cover", "sieve"};
  } else {
    for (const auto& name : known_verifications()) {
      if (std::find(config.verify.names.begin(), config.verify.names.end(), name) != config.verify.names.end() &&
          selected_for(command, name)) {
        names.push_back(name);
      }
    }
  }
  std::vector<VerificationOutcome> outcomes;
  for (const auto& name : names) {
    if (config.verbosity > 0) log << "running " << name << "\n";
    outcomes.push_back(registry().at(name)(ctx));
    if (config.verbosity > 0) log << (outcomes.back().pass ? "  pass: " : "  FAIL: ") << outcomes.back().detail << "\n";
  }
  summary_table(outcomes, config.seed, config.source).write(out_dir / "summary.csv");
  return outcomes;
}

int run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.command == Command::report) {
      fs::path dir = options.out.value_or("predrate_out");
      if (!options.out && options.config) dir = parse_config(*options.config).output_directory;
      return report_command(dir, out, err);
    }
    if (!options.config) {
      err << "configuration error: --config is required\n";
      return exit_status::config_error;
    }
    RunConfig config = parse_config(*options.config);
    if (options.seed) config.seed = *options.seed;
    if (options.jobs) {
      if (*options.jobs < 1) throw ConfigError({"--jobs must be at least 1"});
      config.jobs = *options.jobs;
    }
    if (options.verify) {
      const auto& known = known_verifications();
      std::vector<std::string> bad;
      for (const auto& name : *options.verify) {
        if (std::find(known.begin(), known.end(), name) == known.end()) bad.push_back("--verify: unknown verification '" + name + "'");
      }
      if (!bad.empty()) throw ConfigError(bad);
      config.verify.names = *options.verify;
    }
    const fs::path dir = options.out.value_or(config.output_directory);
    const auto outcomes = run_verifications(config, options.command, dir, err);
    bool all = true;
    for (const auto& o : outcomes) {
      all = all && o.pass;
      out << (o.pass ? "PASS " : "FAIL ") << o.name << ": " << o.detail << "\n";
    }
    return all ? exit_status::pass : exit_status::fail;
  } catch (const ConfigError& e) {
    err << "configuration error:\n";
    for (const auto& msg : e.errors()) err << "  " << msg << "\n";
    return exit_status::config_error;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return exit_status::runtime_error;
  }
}

}  // namespace predrate
