/**
 * @file cli_io.hpp
 * @brief Run configuration (sectioned INI), its effective echo, and the
 * output tree written by a run or sweep.
 *
 * Output layout under the chosen directory:
 *
 *     summary.json                 scalars, Cauchy differences and verdicts
 *     config.ini                   effective configuration
 *     manifest.json                every file written, including itself
 *     member_<gamma>/series.csv    one row per snapshot
 *     member_<gamma>/steps.csv     time-step log and mass ledger
 *     member_<gamma>/field_<k>.csv x[,y],u,p in row-major cell order
 *     plots/member_scalars.csv     gamma,quantity,value
 *     plots/cauchy.csv             gamma,quantity,value (gamma of the upper member)
 *
 * A `.partial` marker exists while writing and is removed on success.
 */
#pragma once

#include "hsbl/model.hpp"
#include "hsbl/oracle.hpp"
#include "hsbl/sweep.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsbl {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::string key_path = {}, int line = 0,
                std::optional<Assumption> assumption = std::nullopt);

    const std::string& key_path() const { return key_path_; }
    int line() const { return line_; }
    const std::optional<Assumption>& assumption() const { return assumption_; }

private:
    std::string key_path_;
    int line_;
    std::optional<Assumption> assumption_;
};

enum class InitialKind { Zero, Uniform, Step, Hat };

std::string to_string(InitialKind k);
InitialKind parse_initial_kind(const std::string& name);

struct RunConfig {
    int config_version = 1;

    GridSpec grid{1, {Interval{0.0, 1.0}, Interval{0.0, 1.0}}, {200, 50}};

    MobilityPreset preset = MobilityPreset::Linear;
    SourceKind source = SourceKind::Linear;
    double source_scale = 1.0;
    double p_max = 1.0;
    double delta = 0.1;
    Regularization regularization = Regularization::Linear;
    bool test_override = false;

    double gamma = 8.0;
    double alpha = 2.0;

    InitialKind initial = InitialKind::Step;
    double initial_value = 0.9;
    double initial_position = 0.3;  ///< step: value for x < position
    double initial_center_x = 0.5;  ///< hat center
    double initial_center_y = 0.5;
    double initial_radius = 0.2;    ///< hat radius
    double flux_left = 0.5;
    double flux_right = 0.05;
    double flux_bottom = 0.0;
    double flux_top = 0.0;
    double flux_floor = 0.05;
    double horizon = 1.0;

    SolverConfig solver = default_solver(1.0);

    std::vector<double> ladder{4.0, 8.0, 16.0, 32.0, 64.0, 128.0};
    int parallel = 1;
    bool refine_for_ba = true;
    double contour_fraction = 1e-3;
    std::vector<double> trace_cluster{1e-3, 1e-2, 1e-1};

    DiagnosticsOptions diagnostics;

    /// Solver defaults with snapshots at 1e-3, 1e-2 and every T/20.
    static SolverConfig default_solver(double horizon);

    InitialDensity initial_density() const;
    BoundaryFlux boundary_flux() const;
    SourceFunction source_function() const;

    /// Sweep over `ladder`; when `single_gamma` is set, a one-member plan.
    SweepPlan plan(std::optional<double> single_gamma = std::nullopt) const;
};

/// Parses and validates.  Throws ConfigError with a line number for syntax
/// errors and unknown keys, and with a key path for invalid values.
RunConfig parse_config(const std::string& text);

/// Reads a file and parses it.
RunConfig load_config(const std::filesystem::path& path);

/// Range and model-level checks (also run by parse_config).
void validate_config(const RunConfig& cfg);

/// Effective configuration with every default materialized, doubles at 17 significant digits.
std::string echo_config(const RunConfig& cfg);

/// 17 significant digits.
std::string format_number(double v);

/// Writes the output tree and returns the manifest (paths relative to out_dir).
std::vector<std::string> emit_outputs(const SweepReport& report, const RunConfig& cfg,
                                      const std::filesystem::path& out_dir);

/// Writes oracle checks to out_dir/oracle.json.
void emit_oracle_report(const std::vector<OracleCheck>& checks, const std::filesystem::path& out_dir);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Throws std::out_of_range for an unknown column.
    std::vector<double> column(const std::string& name) const;
};

/// Numeric CSV with one header row.
CsvTable read_csv(const std::filesystem::path& path);

/// Rebuilds a member trajectory from its series.csv times and field_<k>.csv files.
Trajectory read_member_trajectory(const std::filesystem::path& member_dir);

std::string member_dir_name(double gamma);

struct VerifyResult {
    int members = 0;
    int compared = 0;    ///< scalar values compared
    int mismatches = 0;  ///< values not bit-identical
    std::vector<std::string> messages;
};

/// Recomputes every member's series from stored fields and compares bit for bit.
VerifyResult verify_outputs(const std::filesystem::path& out_dir);

}  // namespace hsbl
