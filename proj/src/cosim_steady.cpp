#include "gridtd/cosim_steady.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gridtd/errors.hpp"

namespace gridtd {

ProfileBindings default_bindings(const NetworkModel& net, size_t zone_count) {
    if (zone_count == 0) throw ValidationError("no profile zones to bind");
    ProfileBindings b;
    std::vector<int> load_buses;
    for (const auto& l : net.loads) load_buses.push_back(l.bus);
    std::sort(load_buses.begin(), load_buses.end());
    load_buses.erase(std::unique(load_buses.begin(), load_buses.end()), load_buses.end());
    for (size_t i = 0; i < load_buses.size(); ++i)
        b.load_zone[load_buses[i]] = i % zone_count;
    for (size_t gi = 0; gi < net.generators.size(); ++gi)
        if (net.generators[gi].kind == GenKind::Wind) b.windgen_zone[gi] = 0;
    return b;
}

OperatingPoint operating_point_at(const NetworkModel& net,
                                  const std::vector<ZoneProfile>& zones,
                                  const ProfileBindings& bindings, MinuteStamp t) {
    OperatingPoint op;
    op.t = t;
    for (const auto& [bus, zi] : bindings.load_zone) {
        const auto& z = zones.at(zi);
        op.load_scale[bus] = z.at(z.load_power, t);
    }
    for (const auto& [gi, zi] : bindings.windgen_zone) {
        const auto& z = zones.at(zi);
        // Profile is per-unit of nominal; nominal is the unit's capacity.
        op.wind_p[gi] = z.at(z.wind_power, t) * net.generators.at(gi).p_max;
    }
    op.pv_p.resize(net.feeders.size());
    for (size_t fi = 0; fi < net.feeders.size(); ++fi) {
        const auto& f = net.feeders[fi];
        size_t zi = 0;
        if (auto it = bindings.load_zone.find(f.coupling_bus); it != bindings.load_zone.end())
            zi = it->second;
        const auto& z = zones.at(zi % zones.size());
        const double solar = z.at(z.solar_power, t);
        for (const auto& plant : f.pv_plants)
            op.pv_p[fi].push_back(solar * plant.kva / 1000.0 / net.base_mva);
    }
    return op;
}

PfInputs assemble_pf_inputs(const NetworkModel& net, const OperatingPoint& op,
                            const std::map<int, std::pair<double, double>>& feeder_load) {
    PfInputs in;
    // Per-bus load scaling rides on LoadSpec.scale via extra_load deltas.
    for (const auto& l : net.loads) {
        double scale = 1.0;
        if (auto it = op.load_scale.find(l.bus); it != op.load_scale.end()) scale = it->second;
        const double dp = l.p * l.scale * (scale - 1.0);
        const double dq = l.q * l.scale * (scale - 1.0);
        if (dp != 0.0 || dq != 0.0) {
            auto& e = in.extra_load[l.bus];
            e.first += dp;
            e.second += dq;
        }
    }
    for (const auto& [bus, pq] : feeder_load) {
        auto& e = in.extra_load[bus];
        e.first += pq.first;
        e.second += pq.second;
    }
    // Profile-driven wind runs as a fixed injection (negative load).
    double wind_total = 0;
    for (const auto& [gi, p] : op.wind_p) {
        in.gen_as_injection[gi] = p;
        wind_total += p;
    }
    // Residual demand split over thermal units in proportion to capacity.
    double demand = 0;
    for (const auto& l : net.loads) {
        double scale = 1.0;
        if (auto it = op.load_scale.find(l.bus); it != op.load_scale.end()) scale = it->second;
        demand += l.p * l.scale * scale;
    }
    for (const auto& [bus, pq] : feeder_load) demand += pq.first;
    const double residual = std::max(demand - wind_total, 0.0);
    double thermal_cap = 0;
    for (size_t gi = 0; gi < net.generators.size(); ++gi)
        if (!op.wind_p.count(gi)) thermal_cap += net.generators[gi].p_max;
    if (thermal_cap > 0) {
        for (size_t gi = 0; gi < net.generators.size(); ++gi) {
            if (op.wind_p.count(gi)) continue;
            const auto& g = net.generators[gi];
            in.gen_p[gi] = std::clamp(residual * g.p_max / thermal_cap, g.p_min, g.p_max);
        }
    }
    return in;
}

TdSolution iterate_td_powerflow(const NetworkModel& net, const OperatingPoint& op, double eps,
                                int max_outer_iter, double inner_tol, int inner_max_iter) {
    if (eps <= 0) throw ValidationError("outer tolerance must be positive");
    const size_t nf = net.feeders.size();
    TdSolution td;
    td.feeders.resize(nf);

    // Flat start for the boundary exchange.
    std::vector<Complex> v_prev(net.buses.size(), Complex(1.0, 0.0));
    std::map<int, std::pair<double, double>> feeder_load;
    bool have_pf = false;
    PfSolution pf;

    for (int n = 1; n <= max_outer_iter; ++n) {
        for (size_t fi = 0; fi < nf; ++fi) {
            const auto& f = net.feeders[fi];
            const int bi = net.bus_index(f.coupling_bus);
            const Complex vb = v_prev[bi];
            FeederInputs fin;
            if (auto it = op.load_scale.find(f.coupling_bus); it != op.load_scale.end())
                fin.load_scale = it->second;
            if (!op.pv_p.empty()) fin.pv_p = op.pv_p[fi];
            try {
                td.feeders[fi] = solve_feeder_pf(f, std::abs(vb), std::arg(vb), fin);
            } catch (const NoConvergence& e) {
                throw NoConvergence(e.max_mismatch, e.iterations,
                                    std::string("feeder at bus ") +
                                        std::to_string(f.coupling_bus) + ": " + e.what());
            }
            feeder_load[f.coupling_bus] = feeder_as_load(td.feeders[fi]);
        }

        const PfInputs in = assemble_pf_inputs(net, op, feeder_load);
        pf = solve_transmission_pf(net, in, inner_tol, inner_max_iter);
        have_pf = true;

        double norm2 = 0;
        for (size_t i = 0; i < net.buses.size(); ++i) {
            const Complex vi = pf.voltage(static_cast<int>(i));
            norm2 += std::norm(vi - v_prev[i]);
            v_prev[i] = vi;
        }
        const double diff = std::sqrt(norm2);
        td.history.push_back(diff);
        td.outer_iterations = n;
        if (diff <= eps) {
            td.pf = pf;
            return td;
        }
    }
    throw OuterNoConvergence(td.history, "T+D outer loop did not converge in " +
                                             std::to_string(max_outer_iter) + " iterations");
}

static std::string trimmed_ckt(const std::string& ckt) {
    auto end = ckt.find_last_not_of(' ');
    return end == std::string::npos ? ckt : ckt.substr(0, end + 1);
}

SteadySeries run_steady_series(const NetworkModel& net, const std::vector<ZoneProfile>& zones,
                               const ProfileBindings& bindings, const SteadyRunConfig& config) {
    if (config.start >= config.end) throw ValidationError("steady run needs start < end");
    SteadySeries out;
    auto& frame = out.frame;
    for (const auto& b : net.buses) {
        frame.add_channel("Vm_" + std::to_string(b.id), {});
        frame.add_channel("Va_" + std::to_string(b.id), {});
    }
    std::vector<size_t> flow_branch;
    for (size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (!br.in_service) continue;
        const std::string tag = std::to_string(br.from) + "_" + std::to_string(br.to) + "_" +
                                trimmed_ckt(br.ckt);
        frame.add_channel("P_" + tag, {});
        frame.add_channel("Q_" + tag, {});
        flow_branch.push_back(k);
    }

    for (MinuteStamp t = config.start; t < config.end; ++t) {
        OperatingPoint op = operating_point_at(net, zones, bindings, t);
        if (config.load_scale != 1.0) {
            std::set<int> scaled_buses;
            for (const auto& l : net.loads) scaled_buses.insert(l.bus);
            for (const auto& f : net.feeders) scaled_buses.insert(f.coupling_bus);
            for (int bus : scaled_buses) {
                auto [it, inserted] = op.load_scale.emplace(bus, config.load_scale);
                if (!inserted) it->second *= config.load_scale;
            }
        }
        TdSolution td;
        try {
            td = iterate_td_powerflow(net, op, config.eps, config.max_outer_iter,
                                      config.inner_tol, config.inner_max_iter);
        } catch (const NoConvergence& e) {
            throw NoConvergence(e.max_mismatch, e.iterations,
                                "at " + minute_to_text(t) + ": " + e.what());
        } catch (const OuterNoConvergence& e) {
            throw OuterNoConvergence(e.history, "at " + minute_to_text(t) + ": " + e.what());
        }
        frame.time_text.push_back(minute_to_text(t));
        size_t c = 0;
        for (size_t i = 0; i < net.buses.size(); ++i) {
            frame.values[c++].push_back(td.pf.vm[i]);
            frame.values[c++].push_back(td.pf.va[i]);
        }
        for (size_t k : flow_branch) {
            frame.values[c++].push_back(td.pf.branch_p[k]);
            frame.values[c++].push_back(td.pf.branch_q[k]);
        }
    }

    std::ostringstream meta;
    meta << "steady-state T+D series\n";
    meta << "window: " << minute_to_text(config.start) << " .. " << minute_to_text(config.end)
         << " (exclusive), step 1 minute\n";
    meta << "outer eps: " << config.eps << ", max outer iterations: " << config.max_outer_iter
         << "\n";
    meta << "zone bindings (load bus -> zone):\n";
    for (const auto& [bus, zi] : bindings.load_zone)
        meta << "  " << bus << " -> " << zones.at(zi).zone << "\n";
    for (const auto& [gi, zi] : bindings.windgen_zone)
        meta << "wind generator at bus " << net.generators.at(gi).bus << " -> "
             << zones.at(zi).zone << "\n";
    out.metadata = meta.str();
    return out;
}

}  // namespace gridtd
