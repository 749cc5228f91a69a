#include <doctest.h>

#include <cmath>

#include "gridtd/device.hpp"
#include "gridtd/errors.hpp"

using namespace gridtd;
using doctest::Approx;

namespace {

Eigen::VectorXd inv_derivs_vec(const Eigen::VectorXd& x, const GridInterface& g,
                               const InverterParams& p) {
    const InverterState s = InverterState::from_vector(x);
    return inverter_derivatives(s, g, p).to_vector();
}

}  // namespace

TEST_CASE("analytic inverter Jacobian matches finite differences") {
    InverterParams p;
    p.p_star = 0.4;
    auto eq = inverter_init(p, 1.0, 0.4);
    // Perturb away from the equilibrium so nothing is accidentally zero.
    InverterState s = eq.state;
    s.p += 0.03;
    s.delta += 0.01;
    s.i_ld += 0.05;
    s.v_oq += 0.02;
    const GridInterface g{0.35, -0.1};

    const auto jac = inverter_jacobian(s, g, p);
    const Eigen::VectorXd x0 = s.to_vector();
    const double h = 1e-6;
    for (int j = 0; j < InverterState::kSize; ++j) {
        Eigen::VectorXd xp = x0, xm = x0;
        xp[j] += h;
        xm[j] -= h;
        const Eigen::VectorXd col = (inv_derivs_vec(xp, g, p) - inv_derivs_vec(xm, g, p)) / (2 * h);
        for (int i = 0; i < InverterState::kSize; ++i)
            CHECK(std::abs(jac(i, j) - col[i]) < 1e-4 * std::max(1.0, std::abs(col[i])));
    }
}

TEST_CASE("inverter equilibrium has vanishing derivatives") {
    InverterParams p;
    auto eq = inverter_init(p, 1.0, 0.5);
    const auto d = inverter_derivatives(eq.state, eq.grid, eq.params).to_vector();
    CHECK(d.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(eq.state.p == Approx(0.5).epsilon(1e-7));
    CHECK(eq.state.omega == Approx(p.omega_0).epsilon(1e-9));
}

TEST_CASE("dark plant holds zero output power and output current") {
    InverterParams p;
    auto eq = inverter_init(p, 1.0, 0.0);
    CHECK(std::abs(eq.state.p) < 1e-8);
    CHECK(std::abs(eq.state.q) < 1e-8);
    CHECK(eq.state.omega == Approx(p.omega_0).epsilon(1e-9));
    CHECK(std::abs(eq.grid.i_od) < 1e-8);
    CHECK(std::abs(eq.grid.i_oq) < 1e-8);
    CHECK(std::abs(injection_phasor(eq.state, eq.params, Complex(1.0, 0.0))) < 1e-8);
}

TEST_CASE("impossible setpoint has no equilibrium") {
    InverterParams p;
    CHECK_THROWS_AS(inverter_init(p, 1.0, 10.0), NoEquilibrium);
}

TEST_CASE("frequency rises when output power is below the setpoint") {
    InverterParams p;
    auto eq = inverter_init(p, 1.0, 0.5);
    InverterState s = eq.state;
    s.p = 0.3;  // measured power below P*
    const auto d = inverter_derivatives(s, eq.grid, eq.params);
    const auto base = inverter_derivatives(eq.state, eq.grid, eq.params);
    // The droop loop accelerates the virtual rotor when P* exceeds measured power.
    CHECK(std::abs(base.omega) < 1e-9);
    CHECK(d.omega > 1.0);
}

TEST_CASE("inverter holds its equilibrium over one second of integration") {
    InverterParams p;
    auto eq = inverter_init(p, 1.0, 0.5);
    const GridInterface g = eq.grid;
    Eigen::VectorXd x = eq.state.to_vector();
    const double dt = 1.0 / 960.0 / 64.0;
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    auto fn = [&](const Eigen::VectorXd& v) { return inv_derivs_vec(v, g, eq.params); };
    for (int k = 0; k < steps; ++k) x = rk4_step(x, fn, dt);
    CHECK((x - eq.state.to_vector()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("generator equilibrium and droop response") {
    GeneratorSpec spec;
    spec.inertia_m = 6.0;
    spec.damping_d = 0.0;
    spec.droop_r = 0.05;
    spec.t_gov = 0.5;
    const double omega_0 = 2 * M_PI * 60.0;

    GenState s;
    s.omega = omega_0;
    s.p_m = 0.7;
    const auto d0 = generator_derivatives(s, 0.7, spec, 0.7, omega_0);
    CHECK(std::abs(d0.delta) < 1e-12);
    CHECK(std::abs(d0.omega) < 1e-12);
    CHECK(std::abs(d0.p_m) < 1e-12);

    SUBCASE("rotor accelerates when electrical power drops") {
        const auto d = generator_derivatives(s, 0.6, spec, 0.7, omega_0);
        CHECK(d.omega > 0.0);
    }

    SUBCASE("single machine settles at slip = -R * delta_p") {
        // Integrate swing + governor against a fixed extra electrical load;
        // the steady slip follows from 0 = p_ref - slip/R - p_e.
        const double dp = 0.1;
        Eigen::VectorXd x(3);
        x << 0.0, omega_0, 0.7;
        auto fn = [&](const Eigen::VectorXd& v) {
            GenState g{v[0], v[1], v[2]};
            const auto dd = generator_derivatives(g, 0.7 + dp, spec, 0.7, omega_0);
            Eigen::VectorXd out(3);
            out << dd.delta, dd.omega, dd.p_m;
            return out;
        };
        const double dt = 1e-3;
        for (int k = 0; k < 60000; ++k) x = rk4_step(x, fn, dt);
        const double slip = (x[1] - omega_0) / omega_0;
        CHECK(slip == Approx(-spec.droop_r * dp).epsilon(1e-3));
        CHECK(x[2] == Approx(0.7 + dp).epsilon(1e-3));
    }
}

TEST_CASE("rk4 integrator basics") {
    SUBCASE("zero derivative is a fixed point") {
        Eigen::VectorXd x(2);
        x << 1.5, -2.0;
        auto zero = [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()).eval(); };
        CHECK((rk4_step(x, zero, 0.1) - x).norm() == 0.0);
    }
    SUBCASE("exponential decay, single step") {
        Eigen::VectorXd x(1);
        x << 1.0;
        auto fn = [](const Eigen::VectorXd& v) { return (-v).eval(); };
        const Eigen::VectorXd y = rk4_step(x, fn, 0.1);
        CHECK(y[0] == Approx(0.9048375).epsilon(1e-9));  // RK4 polynomial for dt = 0.1
        CHECK(std::abs(y[0] - std::exp(-0.1)) < 1e-7);
    }
    SUBCASE("global error scales as dt^4") {
        auto fn = [](const Eigen::VectorXd& v) { return (-v).eval(); };
        auto err_with = [&](double dt) {
            Eigen::VectorXd x(1);
            x << 1.0;
            const int n = static_cast<int>(std::lround(1.0 / dt));
            for (int k = 0; k < n; ++k) x = rk4_step(x, fn, dt);
            return std::abs(x[0] - std::exp(-1.0));
        };
        const double ratio = err_with(0.02) / err_with(0.01);
        CHECK(ratio > 12.0);
        CHECK(ratio < 20.0);
    }
    SUBCASE("non-finite derivative is reported") {
        Eigen::VectorXd x(1);
        x << 1.0;
        auto bad = [](const Eigen::VectorXd& v) {
            Eigen::VectorXd out(1);
            out << 1.0 / (v[0] - v[0]);
            return out;
        };
        CHECK_THROWS_AS(rk4_step(x, bad, 0.1), NonFinite);
    }
}
