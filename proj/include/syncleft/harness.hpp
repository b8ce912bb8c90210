#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "syncleft/cme.hpp"
#include "syncleft/config.hpp"
#include "syncleft/mean_field.hpp"
#include "syncleft/pbs.hpp"
#include "syncleft/reference_models.hpp"

namespace syncleft {

/// Scenario parameters plus the PBS ensemble knobs, as read from a config
/// file or preset.
struct LoadedConfig {
    ScenarioConfig scenario;
    double dt_pbs = 0.05;
    int trials = 6000;
    std::uint64_t seed = 12345;
    int threads = 0;

    PbsConfig pbs_config() const;
    void validate() const;
};

/// Built-in scenario presets S0, S1, S2. Geometry (D, a, kappa_d) uses the
/// documented library defaults. Throws ConfigError for unknown names.
LoadedConfig preset(std::string_view name);

/// Parses a [scenario]/[pde]/[cme]/[pbs] key-value config file into base.
/// Unknown keys and malformed values raise ConfigError with file:line.
/// When warn_missing_geometry is set, absent D/a/kappa_d keys are reported
/// on stderr as filled from defaults.
void parse_config_file(const std::filesystem::path& path, LoadedConfig& base,
                       bool warn_missing_geometry);

/// Loads and validates a config file on top of the library defaults.
LoadedConfig load_config(const std::filesystem::path& path);

/// FNV-1a hash of the canonical config serialization, as a hex string.
std::string config_hash(const LoadedConfig& config);

/// Total variation distance ½·Σ|p−q|; supports unify by zero-padding.
double tvd(const UnivariatePmf& p, const UnivariatePmf& q);

/// Expected TVD between the true pmf and an empirical pmf from `trials`
/// independent draws: ½·Σ sqrt(p_i(1−p_i)/trials). The input is normalized
/// first.
double expected_sampling_tvd(const UnivariatePmf& pmf, int trials);

struct TvdEntry {
    double t_us;
    Variable variable;
    std::string model_a;
    std::string model_b;
    double value;
};

struct MomentEntry {
    double t_us;
    Variable variable;
    std::string model;
    double mean;
    double variance;
};

struct SeriesEntry {
    double t_us;
    Variable variable;
    std::string model;  ///< cme | binomial | pbs
    UnivariatePmf pmf;
};

struct NoiseEntry {
    double t_us;
    Variable variable;
    double expected_tvd;
};

struct ComparisonReport {
    std::string config_hash;
    std::vector<double> sample_times;
    double mass_deficit_final = 0.0;
    std::vector<TvdEntry> tvds;
    std::vector<MomentEntry> moment_table;
    std::vector<SeriesEntry> series;
    std::vector<NoiseEntry> sampling_noise;
    std::map<std::string, double> runtime_seconds;
    bool pbs_clamp_warning = false;
};

struct RunOptions {
    std::filesystem::path out_dir;
    bool with_pbs = true;
    bool write_plot_data = true;
    std::size_t max_window_states = 4'000'000;
};

// Individual pipeline stages; each writes its CSV artifacts into out_dir.
MeanFieldSolution run_mean_field_stage(const ScenarioConfig& config,
                                       const std::filesystem::path& out_dir);
CmeTrajectory run_cme_stage(const ScenarioConfig& config, const MeanFieldSolution& meanfield,
                            const std::filesystem::path& out_dir,
                            std::size_t max_window_states = 4'000'000);
EmpiricalDistribution run_pbs_stage(const LoadedConfig& config,
                                    const std::filesystem::path& out_dir);

/// Full pipeline: mean field → CME → reference models → PBS → comparisons.
/// Writes all CSV artifacts, report.json and runtime.json (wall-clock stage
/// timings, the only non-reproducible output) into options.out_dir.
ComparisonReport run_scenario(const LoadedConfig& config, const RunOptions& options);

/// Long-format pmf overlay data for external plotting tools.
void emit_plot_data(const ComparisonReport& report, const std::filesystem::path& path);

}  // namespace syncleft
