#include "gridtd/powerflow.hpp"

#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "gridtd/errors.hpp"

namespace gridtd {

namespace {

struct BusSpec {
    double p = 0.0;  // specified net injection
    double q = 0.0;
    bool pv = false;      // voltage held
    double vset = 1.0;
};

}  // namespace

PfSolution solve_transmission_pf(const NetworkModel& net, const PfInputs& inputs, double tol,
                                 int max_iter) {
    if (tol <= 0) throw ValidationError("pf tolerance must be positive");
    const int n = static_cast<int>(net.buses.size());
    const Eigen::MatrixXcd y = build_ybus(net);
    const Eigen::MatrixXd g = y.real();
    const Eigen::MatrixXd b = y.imag();

    int slack = -1;
    std::vector<BusSpec> spec(n);
    for (int i = 0; i < n; ++i) {
        if (net.buses[i].kind == BusKind::Slack) slack = i;
    }

    for (size_t gi = 0; gi < net.generators.size(); ++gi) {
        const auto& gen = net.generators[gi];
        const int i = net.bus_index(gen.bus);
        if (auto it = inputs.gen_as_injection.find(gi); it != inputs.gen_as_injection.end()) {
            spec[i].p += it->second;
            continue;
        }
        double p = gen.p_set;
        if (auto it = inputs.gen_p.find(gi); it != inputs.gen_p.end()) p = it->second;
        spec[i].p += p;
        spec[i].pv = true;
        spec[i].vset = net.buses[i].v_setpoint;
    }
    if (slack >= 0) spec[slack].pv = true, spec[slack].vset = net.buses[slack].v_setpoint;

    for (const auto& l : net.loads) {
        const int i = net.bus_index(l.bus);
        spec[i].p -= l.p * l.scale * inputs.load_scale;
        spec[i].q -= l.q * l.scale * inputs.load_scale;
    }
    for (const auto& [bus, pq] : inputs.extra_load) {
        const int i = net.bus_index(bus);
        if (i < 0) throw ValidationError("extra load at unknown bus " + std::to_string(bus));
        spec[i].p -= pq.first;
        spec[i].q -= pq.second;
    }

    // Unknown ordering: angles at all non-slack buses, magnitudes at PQ buses.
    std::vector<int> ang_of;  // unknown index -> bus
    std::vector<int> mag_of;
    for (int i = 0; i < n; ++i)
        if (i != slack) ang_of.push_back(i);
    for (int i = 0; i < n; ++i)
        if (i != slack && !spec[i].pv) mag_of.push_back(i);
    const int na = static_cast<int>(ang_of.size());
    const int nm = static_cast<int>(mag_of.size());
    const int nu = na + nm;

    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);  // flat start
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i)
        if (spec[i].pv) vm[i] = spec[i].vset;

    auto injections = [&](Eigen::VectorXd& p, Eigen::VectorXd& q) {
        p.setZero(n);
        q.setZero(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (g(i, j) == 0.0 && b(i, j) == 0.0) continue;
                const double th = va[i] - va[j];
                const double c = std::cos(th), s = std::sin(th);
                p[i] += vm[i] * vm[j] * (g(i, j) * c + b(i, j) * s);
                q[i] += vm[i] * vm[j] * (g(i, j) * s - b(i, j) * c);
            }
    };

    Eigen::VectorXd pcalc(n), qcalc(n);
    double max_mis = 0.0;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        injections(pcalc, qcalc);
        Eigen::VectorXd mis(nu);
        for (int k = 0; k < na; ++k) mis[k] = spec[ang_of[k]].p - pcalc[ang_of[k]];
        for (int k = 0; k < nm; ++k) mis[na + k] = spec[mag_of[k]].q - qcalc[mag_of[k]];
        max_mis = nu > 0 ? mis.cwiseAbs().maxCoeff() : 0.0;
        if (!std::isfinite(max_mis))
            throw NoConvergence(max_mis, iter, "power flow diverged (non-finite mismatch)");
        if (max_mis <= tol) break;

        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nu, nu);
        for (int r = 0; r < na; ++r) {
            const int i = ang_of[r];
            for (int c = 0; c < na; ++c) {
                const int j = ang_of[c];
                if (i == j)
                    jac(r, c) = -qcalc[i] - b(i, i) * vm[i] * vm[i];
                else {
                    const double th = va[i] - va[j];
                    jac(r, c) = vm[i] * vm[j] * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
                }
            }
            for (int c = 0; c < nm; ++c) {
                const int j = mag_of[c];
                if (i == j)
                    jac(r, na + c) = pcalc[i] / vm[i] + g(i, i) * vm[i];
                else {
                    const double th = va[i] - va[j];
                    jac(r, na + c) = vm[i] * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                }
            }
        }
        for (int r = 0; r < nm; ++r) {
            const int i = mag_of[r];
            for (int c = 0; c < na; ++c) {
                const int j = ang_of[c];
                if (i == j)
                    jac(na + r, c) = pcalc[i] - g(i, i) * vm[i] * vm[i];
                else {
                    const double th = va[i] - va[j];
                    jac(na + r, c) =
                        -vm[i] * vm[j] * (g(i, j) * std::cos(th) + b(i, j) * std::sin(th));
                }
            }
            for (int c = 0; c < nm; ++c) {
                const int j = mag_of[c];
                if (i == j)
                    jac(na + r, na + c) = qcalc[i] / vm[i] - b(i, i) * vm[i];
                else {
                    const double th = va[i] - va[j];
                    jac(na + r, na + c) =
                        vm[i] * (g(i, j) * std::sin(th) - b(i, j) * std::cos(th));
                }
            }
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible())
            throw NoConvergence(max_mis, iter, "power flow Jacobian singular");
        Eigen::VectorXd dx = lu.solve(mis);
        if (!dx.allFinite())
            throw NoConvergence(max_mis, iter, "power flow update non-finite");
        for (int k = 0; k < na; ++k) va[ang_of[k]] += dx[k];
        for (int k = 0; k < nm; ++k) vm[mag_of[k]] += dx[na + k];
        if ((vm.array() <= 0).any())
            throw NoConvergence(max_mis, iter + 1, "power flow voltage collapsed");
    }
    if (max_mis > tol)
        throw NoConvergence(max_mis, iter,
                            "power flow did not converge in " + std::to_string(max_iter) +
                                " iterations (max mismatch " + std::to_string(max_mis) + ")");

    PfSolution sol;
    sol.iterations = iter;
    sol.max_mismatch = max_mis;
    sol.vm.assign(vm.data(), vm.data() + n);
    sol.va.assign(va.data(), va.data() + n);
    injections(pcalc, qcalc);
    if (slack >= 0) {
        // Slack generation = computed injection plus whatever load sits on the
        // slack bus itself (its generator p_set does not constrain the solve).
        double p_nongen = 0.0, q_nongen = 0.0;
        for (const auto& l : net.loads)
            if (net.bus_index(l.bus) == slack) {
                p_nongen -= l.p * l.scale * inputs.load_scale;
                q_nongen -= l.q * l.scale * inputs.load_scale;
            }
        for (const auto& [bus, pq] : inputs.extra_load)
            if (net.bus_index(bus) == slack) {
                p_nongen -= pq.first;
                q_nongen -= pq.second;
            }
        sol.slack_p = pcalc[slack] - p_nongen;
        sol.slack_q = qcalc[slack] - q_nongen;
    }

    sol.branch_p.assign(net.branches.size(), 0.0);
    sol.branch_q.assign(net.branches.size(), 0.0);
    for (size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (!br.in_service) continue;
        const int i = net.bus_index(br.from);
        const int j = net.bus_index(br.to);
        const Complex vi = std::polar(vm[i], va[i]);
        const Complex vj = std::polar(vm[j], va[j]);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex s = vi * std::conj(ys * (vi - vj) + Complex(0, br.b / 2.0) * vi);
        sol.branch_p[k] = s.real();
        sol.branch_q[k] = s.imag();
    }
    return sol;
}

PowerBalance power_balance(const NetworkModel& net, const PfInputs& inputs,
                           const PfSolution& sol) {
    PowerBalance bal;
    for (size_t gi = 0; gi < net.generators.size(); ++gi) {
        if (net.bus_index(net.generators[gi].bus) == net.bus_index(net.slack_bus())) continue;
        if (auto it = inputs.gen_as_injection.find(gi); it != inputs.gen_as_injection.end()) {
            bal.generation += it->second;
            continue;
        }
        double p = net.generators[gi].p_set;
        if (auto it = inputs.gen_p.find(gi); it != inputs.gen_p.end()) p = it->second;
        bal.generation += p;
    }
    bal.generation += sol.slack_p;
    for (const auto& l : net.loads) bal.load += l.p * l.scale * inputs.load_scale;
    for (const auto& [bus, pq] : inputs.extra_load) bal.load += pq.first;
    for (size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (!br.in_service) continue;
        const int i = net.bus_index(br.from);
        const int j = net.bus_index(br.to);
        const Complex vi = sol.voltage(i);
        const Complex vj = sol.voltage(j);
        const Complex yb = 1.0 / Complex(br.r, br.x);
        const Complex iflow = yb * (vi - vj);
        bal.losses += (std::norm(iflow) * br.r);
    }
    return bal;
}

FeederSolution solve_feeder_pf(const FeederModel& feeder, double source_vm, double source_va,
                               const FeederInputs& inputs, double tol, int max_iter) {
    if (source_vm <= 0) throw ValidationError("feeder source voltage must be positive");
    const size_t n = feeder.nodes.size();
    std::map<std::string, int> idx;
    for (size_t i = 0; i < n; ++i) idx[feeder.nodes[i]] = static_cast<int>(i);

    // Tree structure from the root (nodes[0]).
    std::vector<int> parent(n, -1);
    std::vector<const FeederSection*> up_section(n, nullptr);
    std::vector<std::vector<int>> children(n);
    {
        std::vector<std::vector<std::pair<int, const FeederSection*>>> adj(n);
        for (const auto& s : feeder.sections) {
            const int a = idx.at(s.from), b = idx.at(s.to);
            adj[a].push_back({b, &s});
            adj[b].push_back({a, &s});
        }
        std::vector<int> stack{0};
        std::vector<bool> seen(n, false);
        seen[0] = true;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (auto [v, sec] : adj[u])
                if (!seen[v]) {
                    seen[v] = true;
                    parent[v] = u;
                    up_section[v] = sec;
                    children[u].push_back(v);
                    stack.push_back(v);
                }
        }
    }
    // Depth-first order with children after parents, for the sweeps.
    std::vector<int> order;
    {
        std::vector<int> stack{0};
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            order.push_back(u);
            for (int v : children[u]) stack.push_back(v);
        }
    }

    // Per-node constant-power loads and PV-as-negative-load (steady mode).
    std::vector<std::array<Complex, 3>> s_load(n, {Complex(0), Complex(0), Complex(0)});
    for (const auto& l : feeder.loads) {
        const int i = idx.at(l.node);
        for (int ph = 0; ph < 3; ++ph)
            s_load[i][ph] += Complex(l.p[ph], l.q[ph]) * inputs.load_scale;
    }
    if (!inputs.pv_p.empty()) {
        if (inputs.pv_p.size() != feeder.pv_plants.size())
            throw ValidationError("pv_p size does not match pv plant count");
        for (size_t k = 0; k < feeder.pv_plants.size(); ++k) {
            const int i = idx.at(feeder.pv_plants[k].node);
            for (int ph = 0; ph < 3; ++ph) s_load[i][ph] -= Complex(inputs.pv_p[k] / 3.0, 0.0);
        }
    }
    std::vector<std::array<Complex, 3>> i_inj(n, {Complex(0), Complex(0), Complex(0)});
    for (const auto& [node, cur] : inputs.injections) {
        const int i = idx.at(node);
        for (int ph = 0; ph < 3; ++ph) i_inj[i][ph] += cur[ph];
    }

    const Complex a = std::polar(1.0, -2.0 * M_PI / 3.0);  // 120 degree lag
    const std::array<Complex, 3> vsrc = {std::polar(source_vm, source_va),
                                         std::polar(source_vm, source_va) * a,
                                         std::polar(source_vm, source_va) * a * a};

    std::vector<std::array<Complex, 3>> v(n, vsrc);
    std::vector<std::array<Complex, 3>> i_branch(n);  // current through up_section[i]
    const bool impedance_loads = inputs.load_admittance != nullptr;

    int iter = 0;
    double dv = 0.0;
    std::array<Complex, 3> root_current{};
    for (; iter < max_iter; ++iter) {
        // Backward: node currents, accumulated up the tree.
        std::vector<std::array<Complex, 3>> acc(n, {Complex(0), Complex(0), Complex(0)});
        for (int i = static_cast<int>(n) - 1; i >= 0; --i) {
            const int u = order[i];
            for (int ph = 0; ph < 3; ++ph) {
                Complex il(0.0, 0.0);
                if (impedance_loads) {
                    auto it = inputs.load_admittance->find(feeder.nodes[u]);
                    if (it != inputs.load_admittance->end()) il = it->second[ph] * v[u][ph];
                } else if (s_load[u][ph] != Complex(0.0)) {
                    if (std::abs(v[u][ph]) < 1e-9)
                        throw VoltageCollapse("feeder node " + feeder.nodes[u] +
                                              " voltage vanished during sweep");
                    il = std::conj(s_load[u][ph] / v[u][ph]);
                }
                acc[u][ph] += il - i_inj[u][ph];
            }
            if (u != 0) {
                i_branch[u] = acc[u];
                for (int ph = 0; ph < 3; ++ph) acc[parent[u]][ph] += acc[u][ph];
            } else {
                root_current = acc[0];
            }
        }
        // Forward: voltage drops from the root.
        dv = 0.0;
        for (int u : order) {
            if (u == 0) continue;
            const auto& z = up_section[u]->z;
            Eigen::Vector3cd ib(i_branch[u][0], i_branch[u][1], i_branch[u][2]);
            Eigen::Vector3cd vp(v[parent[u]][0], v[parent[u]][1], v[parent[u]][2]);
            Eigen::Vector3cd vn = vp - z * ib;
            for (int ph = 0; ph < 3; ++ph) {
                dv = std::max(dv, std::abs(vn[ph] - v[u][ph]));
                v[u][ph] = vn[ph];
                if (!impedance_loads && std::abs(v[u][ph]) < 0.2)
                    throw VoltageCollapse("feeder node " + feeder.nodes[u] +
                                          " below 0.2 pu during sweep");
            }
        }
        if (dv < tol) {
            ++iter;
            break;
        }
    }
    if (dv >= tol)
        throw NoConvergence(dv, iter, "feeder sweep did not converge (max dV " +
                                          std::to_string(dv) + ")");

    FeederSolution sol;
    sol.iterations = iter;
    sol.node_v = v;
    Complex s_total(0.0, 0.0);
    for (int ph = 0; ph < 3; ++ph) s_total += vsrc[ph] * std::conj(root_current[ph]);
    sol.total_p = s_total.real();
    sol.total_q = s_total.imag();
    return sol;
}

}  // namespace gridtd
