#include "gridtd/grid_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridtd/errors.hpp"

namespace gridtd {

using nlohmann::json;

int NetworkModel::slack_bus() const {
    for (const auto& b : buses)
        if (b.kind == BusKind::Slack) return b.id;
    return -1;
}

const Bus* NetworkModel::find_bus(int id) const {
    for (const auto& b : buses)
        if (b.id == id) return &b;
    return nullptr;
}

int NetworkModel::bus_index(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

static std::string kind_name(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::Generator: return "generator";
        case BusKind::Load: return "load";
        case BusKind::Coupling: return "coupling";
    }
    return "?";
}

static BusKind kind_from(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "generator") return BusKind::Generator;
    if (s == "load") return BusKind::Load;
    if (s == "coupling") return BusKind::Coupling;
    throw ParseError("unknown bus kind '" + s + "'");
}

void validate(const NetworkModel& net) {
    if (net.base_mva <= 0) throw ValidationError("base_mva must be positive");
    int slack_count = 0;
    std::set<int> ids;
    for (const auto& b : net.buses) {
        if (!ids.insert(b.id).second)
            throw ValidationError("duplicate bus id " + std::to_string(b.id));
        if (b.base_kv <= 0)
            throw ValidationError("bus " + std::to_string(b.id) + " base_kv must be positive");
        if (b.kind == BusKind::Slack) ++slack_count;
    }
    if (slack_count != 1)
        throw ValidationError("exactly one slack bus required, found " +
                              std::to_string(slack_count));

    std::set<std::tuple<int, int, std::string>> branch_keys;
    for (const auto& br : net.branches) {
        if (br.x == 0.0)
            throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " has zero reactance");
        if (br.from == br.to)
            throw ValidationError("branch at bus " + std::to_string(br.from) +
                                  " connects a bus to itself");
        if (!ids.count(br.from) || !ids.count(br.to))
            throw ValidationError("branch " + std::to_string(br.from) + "-" +
                                  std::to_string(br.to) + " references a dangling bus id");
        if (!branch_keys.insert({br.from, br.to, br.ckt}).second)
            throw ValidationError("duplicate branch (" + std::to_string(br.from) + ", " +
                                  std::to_string(br.to) + ", '" + br.ckt + "')");
    }

    for (const auto& g : net.generators) {
        if (!ids.count(g.bus))
            throw ValidationError("generator references dangling bus " + std::to_string(g.bus));
        if (!(g.p_min <= g.p_set && g.p_set <= g.p_max))
            throw ValidationError("generator at bus " + std::to_string(g.bus) +
                                  " violates p_min <= p_set <= p_max");
        if (g.inertia_m <= 0)
            throw ValidationError("generator at bus " + std::to_string(g.bus) + " needs M > 0");
        if (g.t_gov <= 0)
            throw ValidationError("generator at bus " + std::to_string(g.bus) + " needs T_g > 0");
        if (g.droop_r <= 0)
            throw ValidationError("generator at bus " + std::to_string(g.bus) + " needs R > 0");
    }
    for (const auto& l : net.loads) {
        if (!ids.count(l.bus))
            throw ValidationError("load references dangling bus " + std::to_string(l.bus));
        if (l.scale < 0)
            throw ValidationError("load at bus " + std::to_string(l.bus) + " has scale < 0");
    }

    for (const auto& f : net.feeders) {
        const Bus* cb = net.find_bus(f.coupling_bus);
        if (!cb)
            throw ValidationError("feeder references dangling coupling bus " +
                                  std::to_string(f.coupling_bus));
        if (cb->kind != BusKind::Load && cb->kind != BusKind::Coupling)
            throw ValidationError("feeder coupling bus " + std::to_string(f.coupling_bus) +
                                  " must be a load-kind bus");
        if (f.nodes.empty()) throw ValidationError("feeder has no nodes");
        std::set<std::string> node_set(f.nodes.begin(), f.nodes.end());
        if (node_set.size() != f.nodes.size())
            throw ValidationError("feeder has duplicate node labels");

        // Radiality: the section graph must be a tree rooted at nodes[0].
        if (f.sections.size() != f.nodes.size() - 1)
            throw ValidationError("feeder not radial");
        std::map<std::string, std::vector<std::string>> adj;
        for (const auto& s : f.sections) {
            if (!node_set.count(s.from) || !node_set.count(s.to))
                throw ValidationError("feeder section references unknown node");
            if (!s.z.isApprox(s.z.transpose(), 1e-12))
                throw ValidationError("feeder section " + s.from + "-" + s.to +
                                      " impedance matrix not symmetric");
            adj[s.from].push_back(s.to);
            adj[s.to].push_back(s.from);
        }
        std::set<std::string> seen{f.nodes[0]};
        std::vector<std::string> stack{f.nodes[0]};
        while (!stack.empty()) {
            auto n = stack.back();
            stack.pop_back();
            for (const auto& m : adj[n])
                if (seen.insert(m).second) stack.push_back(m);
        }
        if (seen.size() != f.nodes.size()) throw ValidationError("feeder not radial");

        for (const auto& l : f.loads)
            if (!node_set.count(l.node))
                throw ValidationError("feeder load at unknown node " + l.node);
        for (const auto& p : f.pv_plants)
            if (!node_set.count(p.node))
                throw ValidationError("feeder PV plant at unknown node " + p.node);
    }

    // Connectivity over in-service branches.
    if (!net.buses.empty()) {
        std::map<int, std::vector<int>> adj;
        for (const auto& br : net.branches)
            if (br.in_service) {
                adj[br.from].push_back(br.to);
                adj[br.to].push_back(br.from);
            }
        std::set<int> seen{net.buses[0].id};
        std::vector<int> stack{net.buses[0].id};
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            for (int m : adj[n])
                if (seen.insert(m).second) stack.push_back(m);
        }
        if (seen.size() != net.buses.size())
            throw ValidationError("network not connected with all in-service branches");
    }
}

static json z3_to_json(const Eigen::Matrix3cd& z) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) {
        json row = json::array();
        for (int j = 0; j < 3; ++j) row.push_back({z(i, j).real(), z(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

static Eigen::Matrix3cd z3_from_json(const json& j) {
    Eigen::Matrix3cd z;
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c)
            z(i, c) = Complex(j.at(i).at(c).at(0).get<double>(), j.at(i).at(c).at(1).get<double>());
    return z;
}

static json inverter_to_json(const InverterParams& p) {
    return json{{"omega_c", p.omega_c}, {"omega_0", p.omega_0}, {"p_star", p.p_star},
                {"q_star", p.q_star},   {"e_star", p.e_star},   {"m_f", p.m_f},
                {"d_f", p.d_f},         {"m_v", p.m_v},         {"d_v", p.d_v},
                {"k_iv", p.k_iv},       {"k_pv", p.k_pv},       {"f", p.f_ff},
                {"k_ic", p.k_ic},       {"k_pc", p.k_pc},       {"r_f", p.r_f},
                {"l_f", p.l_f},         {"c_f", p.c_f},         {"r_c", p.r_c},
                {"x_c", p.x_c}};
}

static InverterParams inverter_from_json(const json& j) {
    InverterParams p;  // defaults fill anything a case omits
    auto get = [&](const char* k, double& dst) {
        if (j.contains(k)) dst = j.at(k).get<double>();
    };
    get("omega_c", p.omega_c);
    get("omega_0", p.omega_0);
    get("p_star", p.p_star);
    get("q_star", p.q_star);
    get("e_star", p.e_star);
    get("m_f", p.m_f);
    get("d_f", p.d_f);
    get("m_v", p.m_v);
    get("d_v", p.d_v);
    get("k_iv", p.k_iv);
    get("k_pv", p.k_pv);
    get("f", p.f_ff);
    get("k_ic", p.k_ic);
    get("k_pc", p.k_pc);
    get("r_f", p.r_f);
    get("l_f", p.l_f);
    get("c_f", p.c_f);
    get("r_c", p.r_c);
    get("x_c", p.x_c);
    return p;
}

std::string case_to_json(const NetworkModel& net) {
    json j;
    j["base_mva"] = net.base_mva;
    j["buses"] = json::array();
    for (const auto& b : net.buses)
        j["buses"].push_back({{"id", b.id},
                              {"kind", kind_name(b.kind)},
                              {"base_kv", b.base_kv},
                              {"v_setpoint", b.v_setpoint}});
    j["branches"] = json::array();
    for (const auto& br : net.branches)
        j["branches"].push_back({{"from", br.from},
                                 {"to", br.to},
                                 {"ckt", br.ckt},
                                 {"r", br.r},
                                 {"x", br.x},
                                 {"b", br.b},
                                 {"status", br.in_service ? 1 : 0}});
    j["generators"] = json::array();
    for (const auto& g : net.generators)
        j["generators"].push_back({{"bus", g.bus},
                                   {"p_set", g.p_set},
                                   {"p_min", g.p_min},
                                   {"p_max", g.p_max},
                                   {"M", g.inertia_m},
                                   {"D", g.damping_d},
                                   {"xd_prime", g.xd_prime},
                                   {"R", g.droop_r},
                                   {"T_g", g.t_gov},
                                   {"kind", g.kind == GenKind::Wind ? "wind" : "thermal"}});
    j["loads"] = json::array();
    for (const auto& l : net.loads)
        j["loads"].push_back({{"bus", l.bus}, {"p", l.p}, {"q", l.q}, {"scale", l.scale}});
    j["feeders"] = json::array();
    for (const auto& f : net.feeders) {
        json jf;
        jf["coupling_bus"] = f.coupling_bus;
        jf["nodes"] = f.nodes;
        jf["sections"] = json::array();
        for (const auto& s : f.sections)
            jf["sections"].push_back({{"from", s.from}, {"to", s.to}, {"z", z3_to_json(s.z)}});
        jf["loads"] = json::array();
        for (const auto& l : f.loads)
            jf["loads"].push_back({{"node", l.node},
                                   {"p", {l.p[0], l.p[1], l.p[2]}},
                                   {"q", {l.q[0], l.q[1], l.q[2]}}});
        jf["pv_plants"] = json::array();
        for (const auto& p : f.pv_plants)
            jf["pv_plants"].push_back(
                {{"node", p.node}, {"params", inverter_to_json(p.params)}, {"kva", p.kva}});
        j["feeders"].push_back(jf);
    }
    return j.dump(2);
}

NetworkModel parse_case_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed case file: ") + e.what());
    }
    NetworkModel net;
    try {
        net.base_mva = j.value("base_mva", 100.0);
        for (const auto& jb : j.at("buses")) {
            Bus b;
            b.id = jb.at("id").get<int>();
            b.kind = kind_from(jb.at("kind").get<std::string>());
            b.base_kv = jb.at("base_kv").get<double>();
            b.v_setpoint = jb.value("v_setpoint", 1.0);
            net.buses.push_back(b);
        }
        for (const auto& jb : j.value("branches", json::array())) {
            Branch br;
            br.from = jb.at("from").get<int>();
            br.to = jb.at("to").get<int>();
            br.ckt = jb.value("ckt", std::string("1 "));
            br.r = jb.at("r").get<double>();
            br.x = jb.at("x").get<double>();
            br.b = jb.value("b", 0.0);
            br.in_service = jb.value("status", 1) != 0;
            net.branches.push_back(br);
        }
        for (const auto& jg : j.value("generators", json::array())) {
            GeneratorSpec g;
            g.bus = jg.at("bus").get<int>();
            g.p_set = jg.at("p_set").get<double>();
            g.p_min = jg.value("p_min", 0.0);
            g.p_max = jg.value("p_max", g.p_set);
            g.inertia_m = jg.value("M", 6.0);
            g.damping_d = jg.value("D", 2.0);
            g.xd_prime = jg.value("xd_prime", 0.25);
            g.droop_r = jg.value("R", 0.05);
            g.t_gov = jg.value("T_g", 0.5);
            g.kind = jg.value("kind", std::string("thermal")) == "wind" ? GenKind::Wind
                                                                        : GenKind::Thermal;
            net.generators.push_back(g);
        }
        for (const auto& jl : j.value("loads", json::array())) {
            LoadSpec l;
            l.bus = jl.at("bus").get<int>();
            l.p = jl.at("p").get<double>();
            l.q = jl.at("q").get<double>();
            l.scale = jl.value("scale", 1.0);
            net.loads.push_back(l);
        }
        for (const auto& jf : j.value("feeders", json::array())) {
            FeederModel f;
            f.coupling_bus = jf.at("coupling_bus").get<int>();
            f.nodes = jf.at("nodes").get<std::vector<std::string>>();
            for (const auto& js : jf.value("sections", json::array())) {
                FeederSection s;
                s.from = js.at("from").get<std::string>();
                s.to = js.at("to").get<std::string>();
                s.z = z3_from_json(js.at("z"));
                f.sections.push_back(s);
            }
            for (const auto& jl : jf.value("loads", json::array())) {
                FeederPhaseLoad l;
                l.node = jl.at("node").get<std::string>();
                for (int ph = 0; ph < 3; ++ph) {
                    l.p[ph] = jl.at("p").at(ph).get<double>();
                    l.q[ph] = jl.at("q").at(ph).get<double>();
                }
                f.loads.push_back(l);
            }
            for (const auto& jp : jf.value("pv_plants", json::array())) {
                PvPlant p;
                p.node = jp.at("node").get<std::string>();
                p.params = inverter_from_json(jp.value("params", json::object()));
                p.kva = jp.at("kva").get<double>();
                f.pv_plants.push_back(p);
            }
            net.feeders.push_back(f);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed case file: ") + e.what());
    }
    validate(net);
    return net;
}

NetworkModel load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case_json(ss.str());
}

void write_case(const NetworkModel& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write case file: " + path);
    out << case_to_json(net) << "\n";
}

bool operator==(const NetworkModel& a, const NetworkModel& b) {
    return case_to_json(a) == case_to_json(b);
}

Eigen::MatrixXcd build_ybus(const NetworkModel& net) {
    const int n = static_cast<int>(net.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& br : net.branches) {
        if (!br.in_service) continue;
        const int i = net.bus_index(br.from);
        const int j = net.bus_index(br.to);
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ysh(0.0, br.b / 2.0);
        y(i, i) += ys + ysh;
        y(j, j) += ys + ysh;
        y(i, j) -= ys;
        y(j, i) -= ys;
    }
    return y;
}

}  // namespace gridtd
