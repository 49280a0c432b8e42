#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "crcop/sampler.hpp"

namespace crcop::cli {

/// Everything a command run needs, assembled from the JSON config file plus
/// command-line overrides. Field defaults are the scaled-down quick profile;
/// `full_scale` restores the heavyweight replication counts.
struct RunConfig {
    std::uint64_t seed = 20260808;
    std::string out_dir = ".";
    std::size_t threads = 0; // 0 = hardware concurrency
    bool full_scale = false;

    DgpConfig dgp; // defaults: theta 2, gamma 0.5, beta01 1, beta11 1, beta12 2, z ~ N(0, 2^2)

    struct Study {
        std::vector<double> taus{0.1, 0.5, 0.9};
        std::vector<std::size_t> sizes{100, 200, 400};
        std::size_t reps = 100;
        bool reps_set = false;
    } study;

    struct Sweep {
        std::string variable = "sigma_z"; // sigma_z | beta12 | gamma
        double from = 0.0;
        double to = 0.0;
        double step = 0.0;
        bool grid_set = false;
        std::size_t reps_per_point = 20;
        std::size_t n_per_rep = 1000;
        bool reps_set = false;
    } sweep;

    struct Fit {
        std::string input;
        std::string model = "structural"; // structural | cox-csh
    } fit;

    /// Applies full-scale counts and per-variable sweep grid defaults.
    void finalize();
};

RunConfig load_config(const std::string& json_path);

/// One grid point of a sweep: Cox cause-specific estimates over the
/// replications plus the deterministic averaged-LHR predictions.
struct SweepPoint {
    double value = 0.0;
    double alpha1_mean = 0.0, alpha1_p5 = 0.0, alpha1_p95 = 0.0, alpha1_sd = 0.0;
    double alpha2_mean = 0.0, alpha2_p5 = 0.0, alpha2_p95 = 0.0, alpha2_sd = 0.0;
    double alpha1_pred = 0.0, alpha2_pred = 0.0;
    std::size_t n_converged = 0;
};

int run_simulate(const RunConfig& cfg, std::ostream& log);
int run_study(const RunConfig& cfg, std::ostream& log);
int run_sweep(const RunConfig& cfg, std::ostream& log);
int run_fit(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// The sweep computation behind run_sweep, exposed so tests can drive the
/// same code path without going through the filesystem.
std::vector<SweepPoint> compute_sweep(const RunConfig& cfg);

} // namespace crcop::cli
