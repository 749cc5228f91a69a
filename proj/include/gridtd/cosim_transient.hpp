#pragma once

#include <cstdint>

#include "gridtd/cosim_steady.hpp"
#include "gridtd/device.hpp"

namespace gridtd {

enum class EventKind {
    BranchFault,
    BranchTrip,
    BusFault,
    BusTrip,
    GenTrip,
    ForcedOscillation,
};

std::string event_kind_name(EventKind k);
EventKind event_kind_from(const std::string& name);

struct ScenarioSpec {
    EventKind kind = EventKind::BusFault;
    int target_bus = -1;     // bus fault / trip
    int target_branch = -1;  // branch fault / trip, index into net.branches
    int target_gen = -1;     // generator trip / forced oscillation
    double t_on = 1.0;       // s
    double t_clear = -1.0;   // s; < 0 means no clearing (trips, oscillation)
    double fault_b = -1e4;   // fault shunt susceptance, pu
    double osc_amp = 0.05;   // pu
    double osc_freq = 1.0;   // Hz
    double duration = 4.0;   // s
    double sample_rate = 240.0;
    std::uint64_t seed = 0;
    MinuteStamp operating_point = 0;

    std::string target_label(const NetworkModel& net) const;
};

struct TransientResult {
    ChannelFrame trans;  // VOLT/POWR/VARS channels
    ChannelFrame dist;   // "<couplingBus>.<node>.<phase>" voltage magnitudes
    ChannelFrame diagnostics;  // FREQ <bus> per generator, per-unit slip (not exported)
    EventKind kind = EventKind::BusFault;
    int label_bus = -1;  // nearest bus to the event
};

struct TransientOptions {
    double dt = 1.0 / 960.0;   // internal step; output decimated to sample_rate
    int inverter_substeps = 64;
    double init_eps = 1e-11;   // boundary consistency tolerance at setup
};

TransientResult run_transient_scenario(const NetworkModel& net, const ScenarioSpec& spec,
                                       const std::vector<ZoneProfile>& zones,
                                       const ProfileBindings& bindings,
                                       const TransientOptions& opts = {});

using KindWeights = std::map<EventKind, double>;

/// Uniform weights over all six kinds.
KindWeights uniform_kind_weights();

ScenarioSpec sample_scenario(const NetworkModel& net, std::uint64_t seed,
                             const KindWeights& weights, MinuteStamp op_min, MinuteStamp op_max);

struct BatchRow {
    int row = -1;
    ScenarioSpec spec;
    std::string status;  // "ok" or the failure message
};

struct BatchManifest {
    std::vector<BatchRow> rows;
};

/// Runs n sampled scenarios, writing row_<i>/trans.csv and row_<i>/dist.csv
/// plus manifest.csv under out_dir. When route_by_kind is set, rows land in
/// forced_oscillation/ or natural_oscillation/ subdirectories.
BatchManifest run_batch(const NetworkModel& net, const std::vector<ZoneProfile>& zones,
                        const ProfileBindings& bindings, int n, std::uint64_t seed,
                        const std::string& out_dir, const KindWeights& weights,
                        bool route_by_kind = false, int jobs = 1,
                        const TransientOptions& opts = {});

void write_manifest_csv(const BatchManifest& manifest, const NetworkModel& net,
                        const std::string& path);

}  // namespace gridtd
