#pragma once

#include <functional>

#include <Eigen/Dense>

#include "gridtd/grid_model.hpp"

namespace gridtd {

/// dq states of the inverter-interfaced PV plant, per-unit on the plant base.
struct InverterState {
    double p = 0.0;         // filtered active power
    double q = 0.0;         // filtered reactive power
    double delta = 0.0;     // angle of the inverter frame vs the network frame, rad
    double omega = 0.0;     // rad/s
    double vod_star = 1.0;  // voltage controller reference (q reference is 0)
    double xi_d = 0.0, xi_q = 0.0;    // voltage controller integrators
    double psi_d = 0.0, psi_q = 0.0;  // current controller integrators
    double i_ld = 0.0, i_lq = 0.0;    // filter inductor currents
    double v_od = 1.0, v_oq = 0.0;    // filter capacitor voltages

    static constexpr int kSize = 13;
    Eigen::Matrix<double, kSize, 1> to_vector() const;
    static InverterState from_vector(const Eigen::Matrix<double, kSize, 1>& x);
};

/// Algebraic grid interface: output currents at the filter terminal, dq frame.
struct GridInterface {
    double i_od = 0.0;
    double i_oq = 0.0;
};

InverterState inverter_derivatives(const InverterState& s, const GridInterface& g,
                                   const InverterParams& p);

/// Analytic Jacobian of inverter_derivatives w.r.t. the 13 states (grid
/// interface currents held fixed).
Eigen::Matrix<double, 13, 13> inverter_jacobian(const InverterState& s, const GridInterface& g,
                                                const InverterParams& p);

/// Output currents through the coupling branch to a bus phasor expressed in
/// the network frame; the result is in the inverter dq frame.
GridInterface coupling_currents(const InverterState& s, const InverterParams& p, Complex v_bus);

/// Inverter terminal phasor in the network frame.
Complex terminal_phasor(const InverterState& s);

/// Complex current injected into the bus, network frame, plant base.
Complex injection_phasor(const InverterState& s, const InverterParams& p, Complex v_bus);

/// Equilibrium against a fixed bus phasor v_terminal (angle 0) delivering
/// p_target (per-unit, plant base) of filtered active power. The returned
/// params copy carries the adjusted P* setpoint.
struct InverterEquilibrium {
    InverterState state;
    GridInterface grid;
    InverterParams params;
};
InverterEquilibrium inverter_init(const InverterParams& p, double v_terminal, double p_target);

/// Same solve against an arbitrary complex bus phasor.
InverterEquilibrium inverter_init_at(const InverterParams& p, Complex v_bus, double p_target);

struct GenState {
    double delta = 0.0;  // rad
    double omega = 0.0;  // rad/s, nominal at omega_0
    double p_m = 0.0;    // mechanical power, pu

    static constexpr int kSize = 3;
};

/// Classical swing + first-order governor. Droop and damping act on the
/// per-unit slip (omega - omega_0)/omega_0 so R is the usual per-unit droop.
GenState generator_derivatives(const GenState& s, double p_e, const GeneratorSpec& spec,
                               double p_ref, double omega_0);

/// Classical 4th-order Runge-Kutta step; throws NonFinite on NaN/Inf output.
Eigen::VectorXd rk4_step(const Eigen::VectorXd& state,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& derivs,
                         double dt);

}  // namespace gridtd
