#pragma once

#include <array>
#include <complex>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gridtd {

using Complex = std::complex<double>;

enum class BusKind { Slack, Generator, Load, Coupling };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double base_kv = 230.0;
    double v_setpoint = 1.0;  // generator/slack only
};

struct Branch {
    int from = 0;
    int to = 0;
    std::string ckt = "1 ";  // raw circuit label, trailing space kept
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;  // total line charging
    bool in_service = true;
};

enum class GenKind { Thermal, Wind };

struct GeneratorSpec {
    int bus = 0;
    double p_set = 0.0;
    double p_min = 0.0;
    double p_max = 1.0;
    double inertia_m = 6.0;   // s^2
    double damping_d = 2.0;   // pu
    double xd_prime = 0.25;   // pu
    double droop_r = 0.05;    // pu
    double t_gov = 0.5;       // s
    GenKind kind = GenKind::Thermal;
};

struct LoadSpec {
    int bus = 0;
    double p = 0.0;
    double q = 0.0;
    double scale = 1.0;
};

// Inverter controller/filter constants, per-unit on the plant's own kVA base.
struct InverterParams {
    double omega_c = 2 * 3.14159265358979323846 * 30.0;
    double omega_0 = 2 * 3.14159265358979323846 * 60.0;
    double p_star = 0.0;
    double q_star = 0.0;
    double e_star = 1.0;
    double m_f = 0.0133;
    double d_f = 0.26525823848649224;  // 1% frequency droop: 1/(0.01*omega_0)
    double m_v = 0.02;
    double d_v = 0.05;  // 5% voltage droop
    double k_iv = 390.0;
    double k_pv = 0.05;
    double f_ff = 0.75;
    double k_ic = 1.6e4;
    double k_pc = 10.0;
    double r_f = 0.005;
    double l_f = 0.08;  // pu reactance at omega_0
    double c_f = 0.07;  // pu susceptance at omega_0
    // Coupling branch from filter terminal to the feeder node.
    double r_c = 0.03;
    double x_c = 0.10;
};

struct PvPlant {
    std::string node;
    InverterParams params;
    double kva = 0.0;  // nominal apparent power, kVA
};

struct FeederSection {
    std::string from;
    std::string to;
    // 3x3 per-phase series impedance, per-unit.
    Eigen::Matrix3cd z;
};

struct FeederPhaseLoad {
    std::string node;
    // per-phase (p, q), per-unit on system base
    std::array<double, 3> p{0, 0, 0};
    std::array<double, 3> q{0, 0, 0};
};

struct FeederModel {
    int coupling_bus = 0;
    std::vector<std::string> nodes;  // nodes[0] is the root (source) node
    std::vector<FeederSection> sections;
    std::vector<FeederPhaseLoad> loads;
    std::vector<PvPlant> pv_plants;
};

struct NetworkModel {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<GeneratorSpec> generators;
    std::vector<LoadSpec> loads;
    std::vector<FeederModel> feeders;

    int slack_bus() const;
    const Bus* find_bus(int id) const;
    int bus_index(int id) const;  // -1 if absent
};

bool operator==(const NetworkModel& a, const NetworkModel& b);

/// Checks all model invariants, throwing ValidationError on the first violation.
void validate(const NetworkModel& net);

NetworkModel load_case(const std::string& path);
void write_case(const NetworkModel& net, const std::string& path);
NetworkModel parse_case_json(const std::string& text);
std::string case_to_json(const NetworkModel& net);

/// Dense bus admittance matrix ordered as net.buses.
Eigen::MatrixXcd build_ybus(const NetworkModel& net);

}  // namespace gridtd
