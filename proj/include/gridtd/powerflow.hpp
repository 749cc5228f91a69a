#pragma once

#include <map>
#include <optional>

#include "gridtd/grid_model.hpp"

namespace gridtd {

struct PfSolution {
    std::vector<double> vm;  // per bus, net.buses order
    std::vector<double> va;  // radians, slack at 0
    std::vector<double> branch_p;  // from-end, net.branches order (0 when out of service)
    std::vector<double> branch_q;
    int iterations = 0;
    double max_mismatch = 0.0;
    double slack_p = 0.0;  // slack generation picked up
    double slack_q = 0.0;

    Complex voltage(int bus_index) const {
        return std::polar(vm[bus_index], va[bus_index]);
    }
};

/// Per-solve adjustments applied on top of the case data.
struct PfInputs {
    double load_scale = 1.0;                      // global multiplier on every LoadSpec
    std::map<int, std::pair<double, double>> extra_load;  // bus id -> (P, Q) added
    std::map<size_t, double> gen_p;               // generator index -> p_set override
    // Generators treated as profile-driven negative load (P injection, Q = 0);
    // their bus is solved as PQ unless another generator holds it.
    std::map<size_t, double> gen_as_injection;    // generator index -> P injected
};

PfSolution solve_transmission_pf(const NetworkModel& net, const PfInputs& inputs = {},
                                 double tol = 1e-8, int max_iter = 20);

struct FeederSolution {
    // per node (feeder.nodes order), phases A/B/C
    std::vector<std::array<Complex, 3>> node_v;
    double total_p = 0.0;  // three-phase power drawn at the coupling node
    double total_q = 0.0;
    int iterations = 0;
};

struct FeederInputs {
    double load_scale = 1.0;
    // PV output as local negative load, per plant index, system-base pu (steady mode).
    std::vector<double> pv_p;
    // Direct per-node per-phase current injections, network frame, system base
    // (transient mode; injections add to whatever pv_p models).
    std::map<std::string, std::array<Complex, 3>> injections;
    // When present, loads are constant-impedance with these per-phase
    // admittances (system base) instead of constant-power.
    const std::map<std::string, std::array<Complex, 3>>* load_admittance = nullptr;
};

FeederSolution solve_feeder_pf(const FeederModel& feeder, double source_vm, double source_va,
                               const FeederInputs& inputs = {}, double tol = 1e-8,
                               int max_iter = 50);

/// Equivalent (P, Q) the feeder presents to its transmission bus.
inline std::pair<double, double> feeder_as_load(const FeederSolution& sol) {
    return {sol.total_p, sol.total_q};
}

/// Sum of generation, load and series losses of a converged solution,
/// recomputed from bus voltages (test oracle support).
struct PowerBalance {
    double generation = 0.0;
    double load = 0.0;
    double losses = 0.0;
};
PowerBalance power_balance(const NetworkModel& net, const PfInputs& inputs,
                           const PfSolution& sol);

}  // namespace gridtd
