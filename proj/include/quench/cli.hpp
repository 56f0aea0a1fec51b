#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quench/constants.hpp"
#include "quench/diagnostics.hpp"
#include "quench/oracles.hpp"
#include "quench/solver.hpp"

namespace quench {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_config = 2;

inline constexpr int laws_schema_version = 1;
inline constexpr int summary_schema_version = 1;

// Environment variable that replaces output_dir.
inline constexpr const char* output_dir_env = "QUENCH_OUTPUT_DIR";

// Everything a run depends on. Flat key = value text; see config_keys().
struct RunConfig {
  ModelParams model;
  double d0 = 0.0;
  double d1 = 0.0;
  double T = 1e-6;
  int cells = 2000;
  int core_cells = 200;
  double refinement_ratio = 1.2;
  double U_stop = 1e6;
  double t_max = 1.0;
  double rel_tol = 1e-6;
  long max_steps = 5'000'000;
  double sample_ds = 0.02;
  double snapshot_ds = 0.25;
  double fit_window = 0.4;
  bool regrid = true;
  bool mode_damping = false;
  double damping_ds = 1.0;
  std::string theta_amplitude = "full";  // full | radial
  std::string output_dir = "quench_out";
};

struct ConfigKey {
  std::string name;
  std::string default_text;
  std::string doc;
};

// All keys in serialization order, with their defaults.
const std::vector<ConfigKey>& config_keys();

// Shortest decimal string that reads back to the same double.
std::string format_double(double v);
// Whole-string decimal parse; throws ConfigError naming the key on failure.
double parse_double(std::string_view text, std::string_view key = {});

// Sets one key from its text form. Throws ConfigError for unknown keys or
// malformed values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

// Lines "key = value"; '#' starts a comment; blank lines are skipped. Keys
// may appear once. Unlisted keys keep their defaults.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& file);
// Every key in config_keys() order, one per line.
std::string serialize_config(const RunConfig& config);

// Range checks beyond parsing (grid sizes, tolerances, enumerations). Throws
// ConfigError. The critical-regime check is separate: derive_constants.
void validate(const RunConfig& config);

ModelParams to_model_params(const RunConfig& config);
RunOptions to_run_options(const RunConfig& config);
ProfileContext diagnostics_context(const RunConfig& config, const DerivedConstants& c);

struct ProfileErrorSummary {
  std::vector<ProfileError> series;
  double first_s = 0.0;
  double first_error = 0.0;
  double final_s = 0.0;
  double final_error = 0.0;
  double decrease = 0.0;        // 1 - final/first
  double tail_span = 5.0;       // width in s of the trailing window
  double tail_scaled_min = 0.0;
  double tail_scaled_max = 0.0;
  bool tail_monotone_growth = false;
};

ProfileErrorSummary summarize_profile_errors(const Trajectory& traj, const Time& T_est, const ProfileContext& ctx,
                                             double tail_span = 5.0);

// Diagnostics of one finished trajectory. Each part records its own failure
// message instead of throwing.
struct RunDiagnostics {
  bool available = false;
  std::string notice;
  std::vector<std::string> errors;

  TEstimate T_est;
  std::optional<EnergyIdentity> energy;
  std::optional<LawFit> theta_law;
  std::optional<ThetaPrimeResidual> theta_prime;
  std::optional<ProfileErrorSummary> profile;
  std::vector<AnnulusRatio> annuli;
  std::optional<ModeHistory> modes;
  std::optional<P2Report> p2;
};

RunDiagnostics diagnose_trajectory(const Trajectory& traj, const RunConfig& config);

struct RunRecord {
  RunConfig config;
  Trajectory trajectory;
  RunDiagnostics diagnostics;
  std::string error;  // solver failure, if any
  double wall_seconds = 0.0;
};

// Runs the solver and the diagnostics; never throws for solver failures.
RunRecord execute_run(const RunConfig& config);

// Writes config.txt, trajectory.csv, snapshots.csv, profile_<i>.csv,
// profile_error.csv, modes.csv, laws.json and summary.json.
void write_run(const std::filesystem::path& dir, const RunRecord& record);
// Rewrites the diagnostic files (profile_error.csv, modes.csv, laws.json,
// summary.json) only.
void write_diagnostics(const std::filesystem::path& dir, const RunRecord& record);
// Reads back what write_run stored; diagnostics are left empty.
RunRecord read_run(const std::filesystem::path& dir);

// Nonzero when the run did not reach a usable end or a diagnostic failed.
int run_exit_code(const RunRecord& record);

std::string summary_json(const RunRecord& record);
std::string laws_json(const RunRecord& record);

// Subcommands. Each returns its process exit code and reports on out/err.
int cmd_constants(const RunConfig& config, bool json, std::ostream& out, std::ostream& err);
int cmd_run(RunConfig config, std::ostream& out, std::ostream& err);
int cmd_diagnose(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);
int cmd_selftest(const SelfTestOptions& options, std::ostream& out, std::ostream& err);

// One axis of a sweep: key = v1, v2, ...
struct SweepAxis {
  std::string key;
  std::vector<double> values;
};
SweepAxis parse_sweep_axis(std::string_view text);
int cmd_sweep(RunConfig config, const std::vector<SweepAxis>& axes, int jobs, std::ostream& out,
              std::ostream& err);

// Applies the output-directory environment override, if set.
void apply_environment(RunConfig& config);

}  // namespace quench
