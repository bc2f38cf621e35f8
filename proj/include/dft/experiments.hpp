#pragma once

#include <string>

namespace dft {

/// Flat configuration for the CLI experiments; parsed from key=value files
/// and command-line overrides, then validated before anything is written.
struct RunConfig {
    std::string command;

    std::string metric = "euclidean";
    double r_dom = 1.0;
    std::string phantom = "gaussian";
    int grid = 128;
    int angles = 180;
    int offsets = 0;  // 0 picks 2*grid + 1
    int n_beta = 64;
    int n_alpha = 64;
    double quad_step = 0.0;  // 0 picks half the grid spacing
    double rank_tol = 1e-6;
    unsigned seed = 12345;
    std::string output_dir = "out";

    // excess arithmetic
    int N = 2, n = 2, nprime = 1, k = 0;  // k = 0 means "no degree"

    // ray selection for conjugate-scan / bolker-check
    double beta = 0.0, alpha = 0.3;

    // probe data for order-probe / artifact-demo
    double x0x = 0.0, x0y = 0.0;
    double xi0x = 1.0, xi0y = 0.0;
    double freq_min = 8.0, freq_max = 64.0;
    int freq_count = 7;

    /// Throws ValidationError on out-of-range values or unknown command.
    void validate() const;
};

/// key=value lines; '#' starts a comment; unknown keys are rejected.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// Executes the configured experiment, writes its artifacts and a JSON
/// manifest (inputs, seed, wall time, outputs with checksums, error if any)
/// into output_dir. Returns the process exit code: 0 success, 2 validation
/// error, 3 numerical-consistency failure.
int run(const RunConfig& cfg);

}  // namespace dft
