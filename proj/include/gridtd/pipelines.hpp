#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gridtd/cosim_transient.hpp"

namespace gridtd {

/// Exit-code contract shared by the pipelines: 0 success, 1 usage/input
/// error, 2 solver failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolver = 2;

struct ProfileSource {
    std::string dir;  // empty when synthetic
    bool synthetic = false;
    int zone_count = 3;
    std::string start = "2020-01-01 00:00";
    int minutes = 24 * 60;
    std::uint64_t seed = 1;
    double noise = 0.01;

    std::string describe() const;
};

std::vector<ZoneProfile> resolve_profiles(const ProfileSource& src);

struct SteadyPipelineArgs {
    std::string case_path;
    std::string out_dir;
    std::string from;  // "YYYY-MM-DD HH:MM"; empty = profile start
    std::string to;    // exclusive; empty = from + 10 minutes
    ProfileSource profiles;
    double load_scale = 1.0;
    double eps = 1e-6;
    int case_index = 1;
    std::uint64_t seed = 0;
    int jobs = 1;
};

/// Emits case_<k>/pf_input_<k>.txt + pf_result_<k>.csv + manifest.json.
/// Returns the exit code; message carries the human-readable outcome.
int run_steady_pipeline(const SteadyPipelineArgs& args, std::string* message);

struct TransientPipelineArgs {
    std::string case_path;
    std::string out_dir;
    ProfileSource profiles;
    int n = 1;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::map<std::string, double> kind_weights;  // empty = uniform
};

/// Emits forced_oscillation/ and natural_oscillation/ row directories plus
/// manifest.csv and manifest.json. Failed rows become warnings, not errors.
int run_transient_pipeline(const TransientPipelineArgs& args, std::string* message);

}  // namespace gridtd
