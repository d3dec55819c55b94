#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "predrate/config.hpp"
#include "predrate/report.hpp"

namespace predrate {

namespace exit_status {
constexpr int pass = 0;
constexpr int fail = 2;
constexpr int config_error = 3;
constexpr int runtime_error = 4;
}  // namespace exit_status

/// check: static verifications; simulate: every selected verification;
/// sieve: the covering and sieve construction; report: summary of existing
/// output directories.
enum class Command { check, simulate, sieve, report };
std::optional<Command> parse_command(std::string_view name);

struct RunOptions {
  Command command = Command::simulate;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::vector<std::string>> verify;
};

/// Runs the verifications of `command` selected by the config, writing one CSV
/// per verification and summary.csv into `out_dir`.
std::vector<VerificationOutcome> run_verifications(const RunConfig& config, Command command,
                                                   const std::filesystem::path& out_dir,
                                                   std::ostream& log);

/// Full command: parse, apply overrides, run, report. Returns an exit status.
int run(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace predrate
