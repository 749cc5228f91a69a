#include "gridtd/cosim_transient.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <set>

#include "gridtd/errors.hpp"

namespace gridtd {

namespace fs = std::filesystem;

static constexpr double kOmega0 = 2.0 * M_PI * 60.0;

std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::BranchFault: return "branch_fault";
        case EventKind::BranchTrip: return "branch_trip";
        case EventKind::BusFault: return "bus_fault";
        case EventKind::BusTrip: return "bus_trip";
        case EventKind::GenTrip: return "gen_trip";
        case EventKind::ForcedOscillation: return "forced_oscillation";
    }
    return "?";
}

EventKind event_kind_from(const std::string& name) {
    for (EventKind k : {EventKind::BranchFault, EventKind::BranchTrip, EventKind::BusFault,
                        EventKind::BusTrip, EventKind::GenTrip, EventKind::ForcedOscillation})
        if (event_kind_name(k) == name) return k;
    throw ParseError("unknown event kind '" + name + "'");
}

std::string ScenarioSpec::target_label(const NetworkModel& net) const {
    switch (kind) {
        case EventKind::BusFault:
        case EventKind::BusTrip:
            return std::to_string(target_bus);
        case EventKind::BranchFault:
        case EventKind::BranchTrip: {
            const auto& br = net.branches.at(target_branch);
            return std::to_string(br.from) + "-" + std::to_string(br.to);
        }
        case EventKind::GenTrip:
        case EventKind::ForcedOscillation:
            return std::to_string(net.generators.at(target_gen).bus);
    }
    return "?";
}

namespace {

// Balanced three-phase rotation factors, A/B/C.
const std::array<Complex, 3> kPhase = {Complex(1.0, 0.0), std::polar(1.0, -2.0 * M_PI / 3.0),
                                       std::polar(1.0, 2.0 * M_PI / 3.0)};

Complex positive_sequence(const std::array<Complex, 3>& v) {
    return (v[0] + v[1] / kPhase[1] + v[2] / kPhase[2]) / 3.0;
}

struct PlantRt {
    InverterParams params;
    InverterState state;
    std::string node;
    double s_scale = 0.0;  // plant base MVA / system base MVA
};

struct FeederRt {
    const FeederModel* model = nullptr;
    int bus_idx = -1;
    double load_scale = 1.0;
    std::map<std::string, std::array<Complex, 3>> load_adm;
    std::vector<PlantRt> plants;
    std::vector<std::array<Complex, 3>> node_v;
    Complex boundary_inj{0.0, 0.0};  // current injected into the coupling bus
};

struct GenRt {
    size_t gi = 0;
    int bus_idx = -1;
    double e_mag = 1.0;
    GenState state;
    double p_ref = 0.0;
    bool active = true;
    bool forced = false;  // oscillation target
};

struct WindRt {
    size_t gi = 0;
    int bus_idx = -1;
    Complex s_ref{0.0, 0.0};     // held P/Q output
    Complex current{0.0, 0.0};   // injection for the next network solve
    double i_max = 0.0;          // converter current limit
    bool active = true;
};

class TransientSim {
  public:
    TransientSim(const NetworkModel& net, const ScenarioSpec& spec,
                 const std::vector<ZoneProfile>& zones, const ProfileBindings& bindings,
                 const TransientOptions& opts)
        : net_(net), spec_(spec), opts_(opts) {
        op_ = operating_point_at(net, zones, bindings, spec.operating_point);
        initialize();
    }

    TransientResult run();

  private:
    void initialize();
    void consistency_iteration(TdSolution& td);
    void anchor(const PfSolution& pf);
    void rebuild_network();
    Eigen::VectorXcd solve_network(const std::vector<double>& gen_delta) const;
    double gen_pe(const GenRt& g, const Eigen::VectorXcd& v, double delta) const;
    void advance_feeders();
    void advance_generators(double t);
    void record(TransientResult& result, double tstamp);
    void check_finite(double t) const;

    bool bus_active(int idx) const { return active_index_[idx] >= 0; }

    const NetworkModel& net_;
    ScenarioSpec spec_;
    TransientOptions opts_;
    OperatingPoint op_;

    std::vector<GenRt> gens_;
    std::vector<WindRt> winds_;
    std::vector<FeederRt> feeders_;
    Eigen::VectorXcd load_adm_;  // anchored constant-impedance loads per bus

    // Event configuration.
    bool fault_on_ = false;
    bool trip_done_ = false;
    int tripped_bus_ = -1;     // bus index
    int tripped_branch_ = -1;  // branch index
    int midpoint_col_ = -1;    // solve column of the branch-fault midpoint

    std::vector<int> active_index_;  // bus index -> solve column (-1 inactive)
    int dim_ = 0;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
    Eigen::VectorXcd v_;  // full-length bus solution (0 at inactive buses)
    mutable Complex v_mid_{0.0, 0.0};
};

void TransientSim::initialize() {
    TdSolution td;
    try {
        td = iterate_td_powerflow(net_, op_, 1e-10, 100, 1e-10, 40);
    } catch (const std::exception& e) {
        throw InitFailure(std::string("steady operating point unavailable: ") + e.what());
    }

    // Feeder runtime setup (plants, scales, anchored voltages come later).
    feeders_.resize(net_.feeders.size());
    for (size_t fi = 0; fi < net_.feeders.size(); ++fi) {
        auto& frt = feeders_[fi];
        frt.model = &net_.feeders[fi];
        frt.bus_idx = net_.bus_index(frt.model->coupling_bus);
        if (auto it = op_.load_scale.find(frt.model->coupling_bus); it != op_.load_scale.end())
            frt.load_scale = it->second;
        frt.node_v = td.feeders[fi].node_v;
        for (size_t k = 0; k < frt.model->pv_plants.size(); ++k) {
            const auto& plant = frt.model->pv_plants[k];
            if (plant.kva <= 0) continue;
            PlantRt prt;
            prt.params = plant.params;
            prt.node = plant.node;
            prt.s_scale = plant.kva / 1000.0 / net_.base_mva;
            frt.plants.push_back(prt);
        }
    }

    consistency_iteration(td);
    anchor(td.pf);
    rebuild_network();

    std::vector<double> deltas;
    for (const auto& g : gens_) deltas.push_back(g.state.delta);
    v_ = solve_network(deltas);
}

// Refines the steady T+D point into a fixed point of the transient algebraic
// system: inverters at dynamic equilibrium against their node voltages, and
// boundary powers consistent on both sides.
void TransientSim::consistency_iteration(TdSolution& td) {
    std::map<int, std::pair<double, double>> feeder_load;
    for (size_t fi = 0; fi < feeders_.size(); ++fi)
        feeder_load[feeders_[fi].model->coupling_bus] = feeder_as_load(td.feeders[fi]);

    PfSolution pf = td.pf;
    for (int outer = 0; outer < 80; ++outer) {
        double dv_boundary = 0.0;
        for (size_t fi = 0; fi < feeders_.size(); ++fi) {
            auto& frt = feeders_[fi];
            const auto& model = *frt.model;
            const Complex vb = pf.voltage(frt.bus_idx);
            std::map<std::string, int> nidx;
            for (size_t i = 0; i < model.nodes.size(); ++i) nidx[model.nodes[i]] = (int)i;

            FeederSolution fsol = td.feeders[fi];
            fsol.node_v = frt.node_v;
            for (int inner = 0; inner < 60; ++inner) {
                FeederInputs fin;
                fin.load_scale = frt.load_scale;
                size_t pi = 0;
                for (auto& prt : frt.plants) {
                    const Complex v_node =
                        positive_sequence(fsol.node_v[nidx.at(prt.node)]);
                    // Plant power target in plant base.
                    double p_sys = 0.0;
                    {
                        size_t k = 0;
                        for (size_t pk = 0; pk < model.pv_plants.size(); ++pk) {
                            if (model.pv_plants[pk].kva <= 0) continue;
                            if (k == pi) {
                                p_sys = op_.pv_p.empty() ? 0.0 : op_.pv_p[fi][pk];
                                break;
                            }
                            ++k;
                        }
                    }
                    const double p_plant = p_sys / prt.s_scale;
                    InverterEquilibrium eq;
                    try {
                        eq = inverter_init_at(prt.params, v_node, p_plant);
                    } catch (const NoEquilibrium& e) {
                        throw InitFailure(std::string("PV equilibrium at feeder node ") +
                                          prt.node + ": " + e.what());
                    }
                    prt.state = eq.state;
                    prt.params = eq.params;
                    const Complex inj =
                        injection_phasor(prt.state, prt.params, v_node) * prt.s_scale;
                    auto& cur = fin.injections[prt.node];
                    for (int ph = 0; ph < 3; ++ph) cur[ph] += inj * kPhase[ph];
                    ++pi;
                }
                FeederSolution next =
                    solve_feeder_pf(model, std::abs(vb), std::arg(vb), fin, 1e-13, 200);
                double dn = 0.0;
                for (size_t i = 0; i < next.node_v.size(); ++i)
                    for (int ph = 0; ph < 3; ++ph)
                        dn = std::max(dn, std::abs(next.node_v[i][ph] - fsol.node_v[i][ph]));
                fsol = next;
                if (dn < 1e-13) break;
            }
            frt.node_v = fsol.node_v;
            td.feeders[fi] = fsol;
            feeder_load[model.coupling_bus] = feeder_as_load(fsol);
        }

        const PfInputs in = assemble_pf_inputs(net_, op_, feeder_load);
        PfSolution next = solve_transmission_pf(net_, in, 1e-12, 40);
        for (const auto& frt : feeders_)
            dv_boundary = std::max(dv_boundary, std::abs(next.voltage(frt.bus_idx) -
                                                         pf.voltage(frt.bus_idx)));
        pf = next;
        if (dv_boundary < opts_.init_eps) {
            td.pf = pf;
            return;
        }
    }
    throw InitFailure("transient boundary consistency iteration did not converge");
}

void TransientSim::anchor(const PfSolution& pf) {
    const int n = static_cast<int>(net_.buses.size());
    const Eigen::MatrixXcd ybus = build_ybus(net_);

    // Constant-impedance lumped loads at the anchored voltages.
    load_adm_ = Eigen::VectorXcd::Zero(n);
    std::vector<Complex> s_load(n, Complex(0, 0));
    for (const auto& l : net_.loads) {
        double scale = l.scale;
        if (auto it = op_.load_scale.find(l.bus); it != op_.load_scale.end())
            scale *= it->second;
        s_load[net_.bus_index(l.bus)] += Complex(l.p, l.q) * scale;
    }
    Eigen::VectorXcd vfull(n);
    for (int i = 0; i < n; ++i) vfull[i] = pf.voltage(i);
    for (int i = 0; i < n; ++i)
        if (s_load[i] != Complex(0, 0))
            load_adm_[i] = std::conj(s_load[i]) / std::norm(vfull[i]);

    // Feeder loads anchored per node and phase.
    for (auto& frt : feeders_) {
        const auto& model = *frt.model;
        std::map<std::string, int> nidx;
        for (size_t i = 0; i < model.nodes.size(); ++i) nidx[model.nodes[i]] = (int)i;
        for (const auto& l : model.loads) {
            auto& adm = frt.load_adm[l.node];
            const auto& v3 = frt.node_v[nidx.at(l.node)];
            for (int ph = 0; ph < 3; ++ph) {
                const Complex s = Complex(l.p[ph], l.q[ph]) * frt.load_scale;
                adm[ph] = (s == Complex(0, 0)) ? Complex(0, 0)
                                               : std::conj(s) / std::norm(v3[ph]);
            }
        }
        // Anchored boundary injection, from one sweep in impedance mode so the
        // t=0 exchange reproduces the converged point exactly.
        const Complex vb = vfull[frt.bus_idx];
        FeederInputs fin;
        fin.load_scale = frt.load_scale;
        fin.load_admittance = &frt.load_adm;
        for (const auto& prt : frt.plants) {
            const Complex v_node = positive_sequence(frt.node_v[nidx.at(prt.node)]);
            const Complex inj = injection_phasor(prt.state, prt.params, v_node) * prt.s_scale;
            auto& cur = fin.injections[prt.node];
            for (int ph = 0; ph < 3; ++ph) cur[ph] += inj * kPhase[ph];
        }
        FeederSolution fsol = solve_feeder_pf(model, std::abs(vb), std::arg(vb), fin, 1e-13, 200);
        frt.node_v = fsol.node_v;
        frt.boundary_inj = -std::conj(Complex(fsol.total_p, fsol.total_q) / vb);
    }

    // Wind units hold constant power; their current tracks the bus voltage
    // step by step, up to a converter current limit.
    for (const auto& [gi, p] : op_.wind_p) {
        WindRt w;
        w.gi = gi;
        w.bus_idx = net_.bus_index(net_.generators[gi].bus);
        w.s_ref = Complex(p, 0.0);
        w.current = std::conj(w.s_ref / vfull[w.bus_idx]);
        w.i_max = 2.0 * std::abs(w.current);
        winds_.push_back(w);
    }

    // Classical machines behind transient reactance at the anchored point.
    const Eigen::VectorXcd i_net = ybus * vfull;
    for (size_t gi = 0; gi < net_.generators.size(); ++gi) {
        if (op_.wind_p.count(gi)) continue;
        const auto& g = net_.generators[gi];
        const int bi = net_.bus_index(g.bus);
        // Generator current = network injection plus the local anchored load.
        const Complex i_load = load_adm_[bi] * vfull[bi];
        Complex i_gen = i_net[bi] + i_load;
        for (const auto& frt : feeders_)
            if (frt.bus_idx == bi) i_gen -= frt.boundary_inj;
        for (const auto& w : winds_)
            if (w.bus_idx == bi) i_gen -= w.current;
        const Complex e = vfull[bi] + Complex(0, g.xd_prime) * i_gen;
        GenRt grt;
        grt.gi = gi;
        grt.bus_idx = bi;
        grt.e_mag = std::abs(e);
        grt.state.delta = std::arg(e);
        grt.state.omega = kOmega0;
        grt.state.p_m = (e * std::conj(i_gen)).real();
        grt.p_ref = grt.state.p_m;
        grt.forced = spec_.kind == EventKind::ForcedOscillation &&
                     static_cast<int>(gi) == spec_.target_gen;
        gens_.push_back(grt);
    }
}

void TransientSim::rebuild_network() {
    const int n = static_cast<int>(net_.buses.size());
    active_index_.assign(n, -1);
    int col = 0;
    for (int i = 0; i < n; ++i) {
        if (trip_done_ && spec_.kind == EventKind::BusTrip && i == tripped_bus_) continue;
        active_index_[i] = col++;
    }
    const bool mid_fault = fault_on_ && spec_.kind == EventKind::BranchFault;
    midpoint_col_ = mid_fault ? col++ : -1;
    dim_ = col;

    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(dim_, dim_);
    for (size_t k = 0; k < net_.branches.size(); ++k) {
        const auto& br = net_.branches[k];
        if (!br.in_service) continue;
        if (trip_done_ && spec_.kind == EventKind::BranchTrip &&
            static_cast<int>(k) == tripped_branch_)
            continue;
        const int i = active_index_[net_.bus_index(br.from)];
        const int j = active_index_[net_.bus_index(br.to)];
        if (i < 0 || j < 0) continue;  // branch isolated with a tripped bus
        const Complex ysh(0.0, br.b / 2.0);
        if (mid_fault && static_cast<int>(k) == spec_.target_branch) {
            // Split into two half-impedance sections around the midpoint.
            const Complex yh = 1.0 / (Complex(br.r, br.x) / 2.0);
            const int m = midpoint_col_;
            y(i, i) += yh + ysh;
            y(m, m) += 2.0 * yh;
            y(j, j) += yh + ysh;
            y(i, m) -= yh;
            y(m, i) -= yh;
            y(j, m) -= yh;
            y(m, j) -= yh;
            continue;
        }
        const Complex ys = 1.0 / Complex(br.r, br.x);
        y(i, i) += ys + ysh;
        y(j, j) += ys + ysh;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    for (int i = 0; i < n; ++i)
        if (active_index_[i] >= 0) y(active_index_[i], active_index_[i]) += load_adm_[i];
    for (const auto& g : gens_) {
        if (!g.active) continue;
        const int c = active_index_[g.bus_idx];
        if (c >= 0)
            y(c, c) += 1.0 / Complex(0.0, net_.generators[g.gi].xd_prime);
    }
    if (fault_on_) {
        if (spec_.kind == EventKind::BusFault) {
            const int c = active_index_[net_.bus_index(spec_.target_bus)];
            if (c >= 0) y(c, c) += Complex(0.0, spec_.fault_b);
        } else if (spec_.kind == EventKind::BranchFault) {
            y(midpoint_col_, midpoint_col_) += Complex(0.0, spec_.fault_b);
        }
    }
    lu_.compute(y);
}

Eigen::VectorXcd TransientSim::solve_network(const std::vector<double>& gen_delta) const {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim_);
    size_t k = 0;
    for (const auto& g : gens_) {
        const double delta = gen_delta[k++];
        if (!g.active) continue;
        const int c = active_index_[g.bus_idx];
        if (c < 0) continue;
        rhs[c] += std::polar(g.e_mag, delta) / Complex(0.0, net_.generators[g.gi].xd_prime);
    }
    for (const auto& w : winds_) {
        if (!w.active) continue;
        const int c = active_index_[w.bus_idx];
        if (c >= 0) rhs[c] += w.current;
    }
    for (const auto& f : feeders_) {
        const int c = active_index_[f.bus_idx];
        if (c >= 0) rhs[c] += f.boundary_inj;
    }
    const Eigen::VectorXcd sol = lu_.solve(rhs);
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(net_.buses.size());
    for (size_t i = 0; i < net_.buses.size(); ++i)
        if (active_index_[i] >= 0) out[i] = sol[active_index_[i]];
    v_mid_ = midpoint_col_ >= 0 ? sol[midpoint_col_] : Complex(0, 0);
    return out;
}

double TransientSim::gen_pe(const GenRt& g, const Eigen::VectorXcd& v, double delta) const {
    const Complex e = std::polar(g.e_mag, delta);
    const Complex i_out = (e - v[g.bus_idx]) / Complex(0.0, net_.generators[g.gi].xd_prime);
    return (e * std::conj(i_out)).real();
}

void TransientSim::advance_feeders() {
    const double dt_sub = opts_.dt / opts_.inverter_substeps;
    for (auto& frt : feeders_) {
        const auto& model = *frt.model;
        std::map<std::string, int> nidx;
        for (size_t i = 0; i < model.nodes.size(); ++i) nidx[model.nodes[i]] = (int)i;
        const Complex vb = v_[frt.bus_idx];

        FeederInputs fin;
        fin.load_scale = frt.load_scale;
        fin.load_admittance = &frt.load_adm;
        for (auto& prt : frt.plants) {
            const Complex v_node = positive_sequence(frt.node_v[nidx.at(prt.node)]);
            Eigen::VectorXd x = prt.state.to_vector();
            auto derivs = [&](const Eigen::VectorXd& xv) -> Eigen::VectorXd {
                const InverterState s = InverterState::from_vector(xv);
                const GridInterface g = coupling_currents(s, prt.params, v_node);
                return inverter_derivatives(s, g, prt.params).to_vector();
            };
            for (int m = 0; m < opts_.inverter_substeps; ++m) x = rk4_step(x, derivs, dt_sub);
            prt.state = InverterState::from_vector(x);
            const Complex inj = injection_phasor(prt.state, prt.params, v_node) * prt.s_scale;
            auto& cur = fin.injections[prt.node];
            for (int ph = 0; ph < 3; ++ph) cur[ph] += inj * kPhase[ph];
        }
        const double vb_mag = std::abs(vb);
        if (vb_mag < 1e-6) {
            // Coupling bus collapsed (close-in fault); feeder rides through on
            // a near-zero source and injects nothing back.
            frt.boundary_inj = Complex(0, 0);
            FeederSolution fsol =
                solve_feeder_pf(model, 1e-6, 0.0, fin, 1e-12, 200);
            frt.node_v = fsol.node_v;
            continue;
        }
        FeederSolution fsol = solve_feeder_pf(model, vb_mag, std::arg(vb), fin, 1e-12, 200);
        frt.node_v = fsol.node_v;
        frt.boundary_inj = -std::conj(Complex(fsol.total_p, fsol.total_q) / vb);
    }
}

void TransientSim::advance_generators(double t) {
    std::vector<size_t> idx;
    for (size_t k = 0; k < gens_.size(); ++k)
        if (gens_[k].active) idx.push_back(k);
    if (idx.empty()) return;

    Eigen::VectorXd x(3 * idx.size());
    for (size_t k = 0; k < idx.size(); ++k) {
        const auto& s = gens_[idx[k]].state;
        x[3 * k] = s.delta;
        x[3 * k + 1] = s.omega;
        x[3 * k + 2] = s.p_m;
    }
    auto derivs = [&](const Eigen::VectorXd& xv) -> Eigen::VectorXd {
        std::vector<double> deltas;
        size_t j = 0;
        for (size_t k = 0; k < gens_.size(); ++k) {
            if (gens_[k].active)
                deltas.push_back(xv[3 * (j++)]);
            else
                deltas.push_back(gens_[k].state.delta);
        }
        const Eigen::VectorXcd v = solve_network(deltas);
        Eigen::VectorXd d(xv.size());
        for (size_t k = 0; k < idx.size(); ++k) {
            const auto& g = gens_[idx[k]];
            GenState s;
            s.delta = xv[3 * k];
            s.omega = xv[3 * k + 1];
            s.p_m = xv[3 * k + 2];
            double p_ref = g.p_ref;
            if (g.forced && t >= spec_.t_on)
                p_ref += spec_.osc_amp *
                         std::sin(2.0 * M_PI * spec_.osc_freq * (t - spec_.t_on));
            const double p_e = gen_pe(g, v, s.delta);
            const GenState ds =
                generator_derivatives(s, p_e, net_.generators[g.gi], p_ref, kOmega0);
            d[3 * k] = ds.delta;
            d[3 * k + 1] = ds.omega;
            d[3 * k + 2] = ds.p_m;
        }
        return d;
    };
    const Eigen::VectorXd xn = rk4_step(x, derivs, opts_.dt);
    for (size_t k = 0; k < idx.size(); ++k) {
        auto& s = gens_[idx[k]].state;
        s.delta = xn[3 * k];
        s.omega = xn[3 * k + 1];
        s.p_m = xn[3 * k + 2];
    }
}

void TransientSim::record(TransientResult& result, double tstamp) {
    result.trans.time_s.push_back(tstamp);
    result.dist.time_s.push_back(tstamp);
    result.diagnostics.time_s.push_back(tstamp);
    size_t c = 0;
    for (size_t i = 0; i < net_.buses.size(); ++i)
        result.trans.values[c++].push_back(std::abs(v_[i]));
    for (size_t k = 0; k < net_.branches.size(); ++k) {
        const auto& br = net_.branches[k];
        if (!br.in_service) continue;
        Complex s(0, 0);
        const int bi = net_.bus_index(br.from);
        const int bj = net_.bus_index(br.to);
        const bool tripped = trip_done_ && spec_.kind == EventKind::BranchTrip &&
                             static_cast<int>(k) == tripped_branch_;
        const bool dead = !bus_active(bi) || !bus_active(bj);
        if (!tripped && !dead) {
            const Complex vi = v_[bi];
            if (fault_on_ && spec_.kind == EventKind::BranchFault &&
                static_cast<int>(k) == spec_.target_branch) {
                const Complex yh = 1.0 / (Complex(br.r, br.x) / 2.0);
                s = vi * std::conj(yh * (vi - v_mid_) + Complex(0, br.b / 2.0) * vi);
            } else {
                const Complex ys = 1.0 / Complex(br.r, br.x);
                s = vi * std::conj(ys * (vi - v_[bj]) + Complex(0, br.b / 2.0) * vi);
            }
        }
        result.trans.values[c++].push_back(s.real());
        result.trans.values[c++].push_back(s.imag());
    }
    size_t dc = 0;
    for (const auto& frt : feeders_)
        for (const auto& v3 : frt.node_v)
            for (int ph = 0; ph < 3; ++ph)
                result.dist.values[dc++].push_back(std::abs(v3[ph]));
    size_t gc = 0;
    for (const auto& g : gens_)
        result.diagnostics.values[gc++].push_back(
            g.active ? (g.state.omega - kOmega0) / kOmega0 : 0.0);
}

void TransientSim::check_finite(double t) const {
    if (!v_.allFinite() || v_.cwiseAbs().maxCoeff() > 20.0)
        throw NumericalBlowup(t, "network voltages out of bounds");
    for (const auto& g : gens_) {
        if (!std::isfinite(g.state.delta) || !std::isfinite(g.state.omega) ||
            !std::isfinite(g.state.p_m) || std::abs(g.state.omega - kOmega0) / kOmega0 > 0.5)
            throw NumericalBlowup(t, "generator state out of bounds");
    }
    for (const auto& frt : feeders_)
        for (const auto& prt : frt.plants) {
            const auto x = prt.state.to_vector();
            if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e3)
                throw NumericalBlowup(t, "inverter state out of bounds");
        }
}

TransientResult TransientSim::run() {
    TransientResult result;
    result.kind = spec_.kind;
    switch (spec_.kind) {
        case EventKind::BusFault:
        case EventKind::BusTrip:
            result.label_bus = spec_.target_bus;
            break;
        case EventKind::BranchFault:
        case EventKind::BranchTrip:
            result.label_bus = net_.branches.at(spec_.target_branch).from;
            break;
        case EventKind::GenTrip:
        case EventKind::ForcedOscillation:
            result.label_bus = net_.generators.at(spec_.target_gen).bus;
            break;
    }
    tripped_bus_ = spec_.target_bus >= 0 ? net_.bus_index(spec_.target_bus) : -1;
    tripped_branch_ = spec_.target_branch;

    for (const auto& b : net_.buses)
        result.trans.add_channel("VOLT " + std::to_string(b.id), {});
    for (const auto& br : net_.branches) {
        if (!br.in_service) continue;
        const std::string tail = std::to_string(br.from) + " TO " + std::to_string(br.to) +
                                 " CKT '" + br.ckt + "'";
        result.trans.add_channel("POWR " + tail, {});
        result.trans.add_channel("VARS " + tail, {});
    }
    for (const auto& frt : feeders_)
        for (const auto& node : frt.model->nodes)
            for (int ph = 1; ph <= 3; ++ph)
                result.dist.add_channel(std::to_string(frt.model->coupling_bus) + "." + node +
                                            "." + std::to_string(ph),
                                        {});
    for (const auto& g : gens_)
        result.diagnostics.add_channel("FREQ " + std::to_string(net_.generators[g.gi].bus), {});

    const int rows = static_cast<int>(std::lround(spec_.duration * spec_.sample_rate));
    const int per_sample = static_cast<int>(std::lround(1.0 / (spec_.sample_rate * opts_.dt)));
    const int total_steps = (rows - 1) * per_sample;

    for (int k = 0; k <= total_steps; ++k) {
        const double t = k * opts_.dt;
        // Event configuration for this instant.
        bool want_fault = false, want_trip = trip_done_;
        const bool clears = spec_.t_clear >= 0;
        const bool in_window = t >= spec_.t_on && (!clears || t < spec_.t_clear);
        switch (spec_.kind) {
            case EventKind::BusFault:
            case EventKind::BranchFault:
                want_fault = in_window;
                break;
            case EventKind::BranchTrip:
            case EventKind::BusTrip:
                want_trip = trip_done_ || t >= spec_.t_on;
                break;
            case EventKind::GenTrip:
                if (!trip_done_ && t >= spec_.t_on) {
                    want_trip = true;
                    for (auto& g : gens_)
                        if (static_cast<int>(g.gi) == spec_.target_gen) g.active = false;
                    for (auto& w : winds_)
                        if (static_cast<int>(w.gi) == spec_.target_gen) w.active = false;
                }
                break;
            case EventKind::ForcedOscillation:
                break;
        }
        if (want_fault != fault_on_ || want_trip != trip_done_) {
            fault_on_ = want_fault;
            trip_done_ = want_trip;
            rebuild_network();
        }
        {
            std::vector<double> deltas;
            for (const auto& g : gens_) deltas.push_back(g.state.delta);
            v_ = solve_network(deltas);
        }
        check_finite(t);
        // Re-aim the constant-power wind injections at the fresh voltages;
        // during a deep local sag the last current is held instead.
        for (auto& w : winds_) {
            if (!w.active || !bus_active(w.bus_idx)) continue;
            const Complex vb = v_[w.bus_idx];
            if (std::abs(vb) > 0.2) {
                Complex i = std::conj(w.s_ref / vb);
                const double mag = std::abs(i);
                if (mag > w.i_max) i *= w.i_max / mag;
                w.current = i;
            }
        }
        if (k % per_sample == 0) record(result, t);
        if (k == total_steps) break;

        advance_feeders();
        advance_generators(t);
    }
    return result;
}

}  // namespace

TransientResult run_transient_scenario(const NetworkModel& net, const ScenarioSpec& spec,
                                       const std::vector<ZoneProfile>& zones,
                                       const ProfileBindings& bindings,
                                       const TransientOptions& opts) {
    TransientSim sim(net, spec, zones, bindings, opts);
    return sim.run();
}

KindWeights uniform_kind_weights() {
    KindWeights w;
    for (EventKind k : {EventKind::BranchFault, EventKind::BranchTrip, EventKind::BusFault,
                        EventKind::BusTrip, EventKind::GenTrip, EventKind::ForcedOscillation})
        w[k] = 1.0 / 6.0;
    return w;
}

namespace {

bool connected_without(const NetworkModel& net, int skip_bus, int skip_branch) {
    std::map<int, std::vector<int>> adj;
    for (size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (!br.in_service || static_cast<int>(k) == skip_branch) continue;
        if (br.from == skip_bus || br.to == skip_bus) continue;
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    const int start = net.slack_bus();
    if (start == skip_bus) return false;
    std::set<int> seen{start};
    std::vector<int> stack{start};
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int w : adj[u])
            if (seen.insert(w).second) stack.push_back(w);
    }
    size_t expect = net.buses.size() - (skip_bus >= 0 ? 1 : 0);
    return seen.size() == expect;
}

}  // namespace

ScenarioSpec sample_scenario(const NetworkModel& net, std::uint64_t seed,
                             const KindWeights& weights, MinuteStamp op_min,
                             MinuteStamp op_max) {
    double wsum = 0;
    for (const auto& [k, w] : weights) wsum += w;
    if (std::abs(wsum - 1.0) > 1e-9)
        throw ValidationError("kind weights must sum to 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    // Fixed draw order keeps specs stable across kinds for a given seed.
    const double u_kind = uni(rng);
    const double u_target = uni(rng);
    const double u_ton = uni(rng);
    const double u_dur = uni(rng);
    const double u_freq = uni(rng);
    const double u_amp = uni(rng);
    const double u_op = uni(rng);

    ScenarioSpec spec;
    spec.seed = seed;
    double acc = 0;
    spec.kind = weights.rbegin()->first;
    for (const auto& [k, w] : weights) {
        acc += w;
        if (u_kind < acc) {
            spec.kind = k;
            break;
        }
    }
    spec.t_on = 0.5 + u_ton;
    const double fault_dur = 0.05 + 0.15 * u_dur;
    spec.osc_freq = 0.1 + 1.9 * u_freq;
    spec.osc_amp = 0.02 + 0.08 * u_amp;
    spec.operating_point =
        op_min + static_cast<MinuteStamp>(u_op * static_cast<double>(op_max - op_min + 1));

    auto pick = [&](size_t count) { return static_cast<size_t>(u_target * count); };

    switch (spec.kind) {
        case EventKind::BranchFault:
        case EventKind::BranchTrip: {
            std::vector<int> eligible;
            for (size_t k = 0; k < net.branches.size(); ++k) {
                if (!net.branches[k].in_service) continue;
                if (spec.kind == EventKind::BranchTrip &&
                    !connected_without(net, -1, static_cast<int>(k)))
                    continue;
                eligible.push_back(static_cast<int>(k));
            }
            if (eligible.empty()) throw NoEligibleTarget("no eligible branch");
            spec.target_branch = eligible[pick(eligible.size())];
            if (spec.kind == EventKind::BranchFault) spec.t_clear = spec.t_on + fault_dur;
            break;
        }
        case EventKind::BusFault: {
            spec.target_bus = net.buses[pick(net.buses.size())].id;
            spec.t_clear = spec.t_on + fault_dur;
            break;
        }
        case EventKind::BusTrip: {
            std::set<int> gen_buses, coupling_buses;
            for (const auto& g : net.generators) gen_buses.insert(g.bus);
            for (const auto& f : net.feeders) coupling_buses.insert(f.coupling_bus);
            std::vector<int> eligible;
            for (const auto& b : net.buses) {
                if (b.kind == BusKind::Slack || gen_buses.count(b.id) ||
                    coupling_buses.count(b.id))
                    continue;
                if (!connected_without(net, b.id, -1)) continue;
                eligible.push_back(b.id);
            }
            if (eligible.empty()) throw NoEligibleTarget("no eligible bus for tripping");
            spec.target_bus = eligible[pick(eligible.size())];
            break;
        }
        case EventKind::GenTrip: {
            std::vector<int> eligible;
            const int slack = net.slack_bus();
            for (size_t gi = 0; gi < net.generators.size(); ++gi)
                if (net.generators[gi].bus != slack) eligible.push_back(static_cast<int>(gi));
            if (eligible.empty())
                throw NoEligibleTarget("no generator can trip without removing the slack");
            spec.target_gen = eligible[pick(eligible.size())];
            break;
        }
        case EventKind::ForcedOscillation: {
            std::vector<int> eligible;
            for (size_t gi = 0; gi < net.generators.size(); ++gi)
                if (net.generators[gi].kind == GenKind::Thermal)
                    eligible.push_back(static_cast<int>(gi));
            if (eligible.empty()) throw NoEligibleTarget("no governor-equipped generator");
            spec.target_gen = eligible[pick(eligible.size())];
            break;
        }
    }
    return spec;
}

static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void write_manifest_csv(const BatchManifest& manifest, const NetworkModel& net,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "row,kind,target,t_on,t_clear,status\n";
    for (const auto& r : manifest.rows) {
        out << r.row << "," << event_kind_name(r.spec.kind) << ","
            << r.spec.target_label(net) << "," << format_value(r.spec.t_on) << ",";
        if (r.spec.t_clear >= 0) out << format_value(r.spec.t_clear);
        out << "," << r.status << "\n";
    }
}

BatchManifest run_batch(const NetworkModel& net, const std::vector<ZoneProfile>& zones,
                        const ProfileBindings& bindings, int n, std::uint64_t seed,
                        const std::string& out_dir, const KindWeights& weights,
                        bool route_by_kind, int jobs, const TransientOptions& opts) {
    if (n < 1) throw ValidationError("batch size must be >= 1");
    if (zones.empty()) throw ValidationError("profiles required for transient batches");
    MinuteStamp op_min = zones[0].start, op_max = zones[0].start + zones[0].size() - 1;
    for (const auto& z : zones) {
        op_min = std::max(op_min, z.start);
        op_max = std::min(op_max, z.start + static_cast<MinuteStamp>(z.size()) - 1);
    }
    if (op_min > op_max) throw ValidationError("profile zones have no common time window");

    fs::create_directories(out_dir);
    BatchManifest manifest;
    manifest.rows.resize(n);

    auto run_row = [&](int i) {
        BatchRow row;
        row.row = i;
        try {
            row.spec = sample_scenario(net, splitmix64(seed + static_cast<std::uint64_t>(i)),
                                       weights, op_min, op_max);
            TransientResult result = run_transient_scenario(net, row.spec, zones, bindings, opts);
            fs::path dir = fs::path(out_dir);
            if (route_by_kind)
                dir /= (row.spec.kind == EventKind::ForcedOscillation ? "forced_oscillation"
                                                                      : "natural_oscillation");
            dir /= "row_" + std::to_string(i);
            fs::create_directories(dir);
            write_trans_csv(result.trans, (dir / "trans.csv").string());
            write_dist_csv(result.dist, (dir / "dist.csv").string());
            row.status = "ok";
        } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            row.status = "failed: " + msg;
        }
        manifest.rows[i] = row;
    };

    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) run_row(i);
    } else {
        std::vector<std::future<void>> pending;
        for (int i = 0; i < n; ++i) {
            pending.push_back(std::async(std::launch::async, run_row, i));
            if (static_cast<int>(pending.size()) >= jobs) {
                pending.front().get();
                pending.erase(pending.begin());
            }
        }
        for (auto& f : pending) f.get();
    }
    write_manifest_csv(manifest, net, (fs::path(out_dir) / "manifest.csv").string());
    return manifest;
}

}  // namespace gridtd
