#pragma once

#include "gridtd/powerflow.hpp"
#include "gridtd/profiles.hpp"
#include "gridtd/records.hpp"

namespace gridtd {

/// Zone assignments driving the case from a profile set.
struct ProfileBindings {
    std::map<int, size_t> load_zone;        // load bus id -> zone index
    std::map<size_t, size_t> windgen_zone;  // generator index -> zone index
    // PV plants follow the zone of their feeder's coupling bus.
};

/// Round-robin zones over the sorted load buses; wind generators on zone 0.
ProfileBindings default_bindings(const NetworkModel& net, size_t zone_count);

/// Per-minute resolved simulation inputs.
struct OperatingPoint {
    MinuteStamp t = 0;
    std::map<int, double> load_scale;            // load bus id -> multiplier
    std::map<size_t, double> wind_p;             // generator index -> pu output
    std::vector<std::vector<double>> pv_p;       // per feeder, per plant, system pu
};

OperatingPoint operating_point_at(const NetworkModel& net,
                                  const std::vector<ZoneProfile>& zones,
                                  const ProfileBindings& bindings, MinuteStamp t);

/// Thermal dispatch and load assembly for one operating point; shared by the
/// outer loop and the transient initializer.
PfInputs assemble_pf_inputs(const NetworkModel& net, const OperatingPoint& op,
                            const std::map<int, std::pair<double, double>>& feeder_load);

struct TdSolution {
    PfSolution pf;
    std::vector<FeederSolution> feeders;
    int outer_iterations = 0;
    std::vector<double> history;  // ||V^n - V^{n-1}||_2 per outer iteration
};

TdSolution iterate_td_powerflow(const NetworkModel& net, const OperatingPoint& op, double eps,
                                int max_outer_iter, double inner_tol = 1e-8,
                                int inner_max_iter = 20);

struct SteadyRunConfig {
    MinuteStamp start = 0;
    MinuteStamp end = 0;  // exclusive
    double load_scale = 1.0;  // global stress multiplier on top of profiles
    double eps = 1e-6;
    int max_outer_iter = 30;
    double inner_tol = 1e-8;
    int inner_max_iter = 20;
};

struct SteadySeries {
    ChannelFrame frame;
    std::string metadata;  // mirrors the pf_input description files
};

SteadySeries run_steady_series(const NetworkModel& net, const std::vector<ZoneProfile>& zones,
                               const ProfileBindings& bindings, const SteadyRunConfig& config);

}  // namespace gridtd
