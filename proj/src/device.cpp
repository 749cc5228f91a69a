#include "gridtd/device.hpp"

#include <cmath>

#include "gridtd/errors.hpp"

namespace gridtd {

Eigen::Matrix<double, 13, 1> InverterState::to_vector() const {
    Eigen::Matrix<double, 13, 1> x;
    x << p, q, delta, omega, vod_star, xi_d, xi_q, psi_d, psi_q, i_ld, i_lq, v_od, v_oq;
    return x;
}

InverterState InverterState::from_vector(const Eigen::Matrix<double, 13, 1>& x) {
    InverterState s;
    s.p = x[0];
    s.q = x[1];
    s.delta = x[2];
    s.omega = x[3];
    s.vod_star = x[4];
    s.xi_d = x[5];
    s.xi_q = x[6];
    s.psi_d = x[7];
    s.psi_q = x[8];
    s.i_ld = x[9];
    s.i_lq = x[10];
    s.v_od = x[11];
    s.v_oq = x[12];
    return s;
}

// Per-unit reactances l_f, c_f translate to integration constants L = l_f/w0,
// C = c_f/w0 (seconds) so the cross terms w*L*i and w*C*v stay in per-unit.
InverterState inverter_derivatives(const InverterState& s, const GridInterface& g,
                                   const InverterParams& p) {
    const double lh = p.l_f / p.omega_0;
    const double ch = p.c_f / p.omega_0;

    const double i_ld_ref = p.k_iv * s.xi_d + p.f_ff * g.i_od +
                            p.k_pv * (s.vod_star - s.v_od) - p.c_f * s.v_oq;
    const double i_lq_ref = p.k_iv * s.xi_q + p.f_ff * g.i_oq + p.k_pv * (0.0 - s.v_oq) +
                            p.c_f * s.v_od;
    const double v_id = p.k_ic * s.psi_d + p.k_pc * (i_ld_ref - s.i_ld) - p.l_f * s.i_lq;
    const double v_iq = p.k_ic * s.psi_q + p.k_pc * (i_lq_ref - s.i_lq) + p.l_f * s.i_ld;

    InverterState d;
    d.p = -p.omega_c * s.p + p.omega_c * (s.v_od * g.i_od + s.v_oq * g.i_oq);
    d.q = -p.omega_c * s.q + p.omega_c * (s.v_oq * g.i_od - s.v_od * g.i_oq);
    d.delta = s.omega - p.omega_0;
    d.omega = (-p.d_f * (s.omega - p.omega_0) + p.p_star - s.p) / p.m_f;
    d.vod_star = (p.d_v * (p.q_star - s.q) - (s.vod_star - p.e_star)) / p.m_v;
    d.xi_d = s.vod_star - s.v_od;
    d.xi_q = -s.v_oq;
    d.psi_d = i_ld_ref - s.i_ld;
    d.psi_q = i_lq_ref - s.i_lq;
    d.i_ld = (-p.r_f * s.i_ld + s.omega * lh * s.i_lq + v_id - s.v_od) / lh;
    d.i_lq = (-p.r_f * s.i_lq - s.omega * lh * s.i_ld + v_iq - s.v_oq) / lh;
    d.v_od = (s.omega * ch * s.v_oq + s.i_ld - g.i_od) / ch;
    d.v_oq = (-s.omega * ch * s.v_od + s.i_lq - g.i_oq) / ch;
    return d;
}

Eigen::Matrix<double, 13, 13> inverter_jacobian(const InverterState& s, const GridInterface& g,
                                                const InverterParams& p) {
    enum { P, Q, DELTA, OMEGA, VSTAR, XID, XIQ, PSID, PSIQ, ILD, ILQ, VOD, VOQ };
    const double lh = p.l_f / p.omega_0;
    const double ch = p.c_f / p.omega_0;
    Eigen::Matrix<double, 13, 13> j = Eigen::Matrix<double, 13, 13>::Zero();

    j(P, P) = -p.omega_c;
    j(P, VOD) = p.omega_c * g.i_od;
    j(P, VOQ) = p.omega_c * g.i_oq;

    j(Q, Q) = -p.omega_c;
    j(Q, VOQ) = p.omega_c * g.i_od;
    j(Q, VOD) = -p.omega_c * g.i_oq;

    j(DELTA, OMEGA) = 1.0;

    j(OMEGA, OMEGA) = -p.d_f / p.m_f;
    j(OMEGA, P) = -1.0 / p.m_f;

    j(VSTAR, Q) = -p.d_v / p.m_v;
    j(VSTAR, VSTAR) = -1.0 / p.m_v;

    j(XID, VSTAR) = 1.0;
    j(XID, VOD) = -1.0;
    j(XIQ, VOQ) = -1.0;

    // i_ld_ref partials (i_od/i_oq held fixed)
    j(PSID, XID) = p.k_iv;
    j(PSID, VSTAR) = p.k_pv;
    j(PSID, VOD) = -p.k_pv;
    j(PSID, VOQ) = -p.c_f;
    j(PSID, ILD) = -1.0;

    j(PSIQ, XIQ) = p.k_iv;
    j(PSIQ, VOQ) = -p.k_pv;
    j(PSIQ, VOD) = p.c_f;
    j(PSIQ, ILQ) = -1.0;

    j(ILD, OMEGA) = s.i_lq;
    j(ILD, ILQ) = s.omega - p.omega_0;
    j(ILD, ILD) = -(p.r_f + p.k_pc) / lh;
    j(ILD, PSID) = p.k_ic / lh;
    j(ILD, XID) = p.k_pc * p.k_iv / lh;
    j(ILD, VSTAR) = p.k_pc * p.k_pv / lh;
    j(ILD, VOD) = (-p.k_pc * p.k_pv - 1.0) / lh;
    j(ILD, VOQ) = -p.k_pc * p.c_f / lh;

    j(ILQ, OMEGA) = -s.i_ld;
    j(ILQ, ILD) = -(s.omega - p.omega_0);
    j(ILQ, ILQ) = -(p.r_f + p.k_pc) / lh;
    j(ILQ, PSIQ) = p.k_ic / lh;
    j(ILQ, XIQ) = p.k_pc * p.k_iv / lh;
    j(ILQ, VOQ) = (-p.k_pc * p.k_pv - 1.0) / lh;
    j(ILQ, VOD) = p.k_pc * p.c_f / lh;

    j(VOD, OMEGA) = s.v_oq;
    j(VOD, VOQ) = s.omega;
    j(VOD, ILD) = 1.0 / ch;

    j(VOQ, OMEGA) = -s.v_od;
    j(VOQ, VOD) = -s.omega;
    j(VOQ, ILQ) = 1.0 / ch;
    return j;
}

Complex terminal_phasor(const InverterState& s) {
    return Complex(s.v_od, s.v_oq) * std::polar(1.0, s.delta);
}

Complex injection_phasor(const InverterState& s, const InverterParams& p, Complex v_bus) {
    return (terminal_phasor(s) - v_bus) / Complex(p.r_c, p.x_c);
}

GridInterface coupling_currents(const InverterState& s, const InverterParams& p, Complex v_bus) {
    const Complex i_net = injection_phasor(s, p, v_bus);
    const Complex i_dq = i_net * std::polar(1.0, -s.delta);
    return {i_dq.real(), i_dq.imag()};
}

InverterEquilibrium inverter_init_at(const InverterParams& p, Complex v_bus, double p_target) {
    InverterParams pc = p;
    pc.p_star = p_target;

    // Rough phasor solve across the coupling branch seeds Newton.
    const double vmag = std::abs(v_bus);
    const double theta = std::arg(v_bus);
    const double sin_arg = p_target * pc.x_c / std::max(vmag, 0.1);
    InverterState s;
    s.omega = pc.omega_0;
    s.delta = theta + (std::abs(sin_arg) < 1.0 ? std::asin(sin_arg) : 0.5);
    s.p = p_target;
    s.q = 0.0;
    s.v_od = std::max(vmag, 0.5);
    s.v_oq = 0.0;
    s.vod_star = s.v_od;
    {
        GridInterface g = coupling_currents(s, pc, v_bus);
        s.i_ld = g.i_od - pc.c_f * s.v_oq;
        s.i_lq = g.i_oq + pc.c_f * s.v_od;
        s.xi_d = (s.i_ld - pc.f_ff * g.i_od + pc.c_f * s.v_oq) / pc.k_iv;
        s.xi_q = (s.i_lq - pc.f_ff * g.i_oq - pc.c_f * s.v_od) / pc.k_iv;
        s.psi_d = (pc.r_f * s.i_ld + s.v_od) / pc.k_ic;
        s.psi_q = (pc.r_f * s.i_lq + s.v_oq) / pc.k_ic;
    }

    auto residual = [&](const InverterState& st) {
        GridInterface g = coupling_currents(st, pc, v_bus);
        return inverter_derivatives(st, g, pc).to_vector();
    };

    Eigen::Matrix<double, 13, 1> x = s.to_vector();
    Eigen::Matrix<double, 13, 1> f = residual(InverterState::from_vector(x));
    // Scale per-equation so the fast filter rows do not dominate the norm.
    double fn = f.norm();
    const int max_iter = 80;
    bool ok = false;
    for (int it = 0; it < max_iter; ++it) {
        if (!f.allFinite()) break;
        if (fn < 1e-10) {
            ok = true;
            break;
        }
        Eigen::Matrix<double, 13, 13> jac;
        for (int c = 0; c < 13; ++c) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
            Eigen::Matrix<double, 13, 1> xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            jac.col(c) = (residual(InverterState::from_vector(xp)) -
                          residual(InverterState::from_vector(xm))) /
                         (2 * h);
        }
        Eigen::FullPivLU<Eigen::Matrix<double, 13, 13>> lu(jac);
        if (!lu.isInvertible()) break;
        Eigen::Matrix<double, 13, 1> dx = lu.solve(-f);
        double step = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 25; ++ls) {
            Eigen::Matrix<double, 13, 1> xn = x + step * dx;
            Eigen::Matrix<double, 13, 1> fnew = residual(InverterState::from_vector(xn));
            if (fnew.allFinite() && fnew.norm() < fn) {
                x = xn;
                f = fnew;
                fn = f.norm();
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    if (!ok) throw NoEquilibrium("inverter equilibrium solve failed (residual " +
                                 std::to_string(fn) + ")");

    InverterEquilibrium eq;
    eq.state = InverterState::from_vector(x);
    eq.grid = coupling_currents(eq.state, pc, v_bus);
    eq.params = pc;
    if (std::abs(eq.state.p - p_target) > 1e-6)
        throw NoEquilibrium("inverter equilibrium does not deliver the power target");
    return eq;
}

InverterEquilibrium inverter_init(const InverterParams& p, double v_terminal, double p_target) {
    return inverter_init_at(p, Complex(v_terminal, 0.0), p_target);
}

GenState generator_derivatives(const GenState& s, double p_e, const GeneratorSpec& spec,
                               double p_ref, double omega_0) {
    const double slip = (s.omega - omega_0) / omega_0;
    GenState d;
    d.delta = s.omega - omega_0;
    d.omega = omega_0 * (s.p_m - p_e - spec.damping_d * slip) / spec.inertia_m;
    d.p_m = (-s.p_m + p_ref - slip / spec.droop_r) / spec.t_gov;
    return d;
}

Eigen::VectorXd rk4_step(const Eigen::VectorXd& state,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& derivs,
                         double dt) {
    if (dt <= 0) throw NonFinite("rk4_step requires dt > 0");
    const Eigen::VectorXd k1 = derivs(state);
    const Eigen::VectorXd k2 = derivs(state + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = derivs(state + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = derivs(state + dt * k3);
    Eigen::VectorXd out = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!out.allFinite()) throw NonFinite("rk4_step produced a non-finite state");
    return out;
}

}  // namespace gridtd
