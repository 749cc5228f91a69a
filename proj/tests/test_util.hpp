#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "gridtd/grid_model.hpp"
#include "gridtd/profiles.hpp"

namespace testutil {

inline std::string case_path(const std::string& name) {
    return std::string(GRIDTD_CASE_DIR) + "/" + name;
}

/// Slack--load pair over one reactance-only branch.
inline gridtd::NetworkModel two_bus(double x = 0.1, double p_load = 0.5, double q_load = 0.0) {
    gridtd::NetworkModel net;
    net.base_mva = 100.0;
    net.buses.push_back({1, gridtd::BusKind::Slack, 230.0, 1.0});
    net.buses.push_back({2, gridtd::BusKind::Load, 230.0, 1.0});
    net.branches.push_back({1, 2, "1 ", 0.0, x, 0.0, true});
    net.loads.push_back({2, p_load, q_load, 1.0});
    return net;
}

/// Scratch directory cleaned up on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

/// Flat zone profile: everything constant, suitable for stationarity checks.
inline gridtd::ZoneProfile flat_zone(const std::string& name, gridtd::MinuteStamp start,
                                     int minutes, double load = 1.0, double wind = 0.4,
                                     double solar = 0.5) {
    gridtd::ZoneProfile z;
    z.zone = name;
    z.start = start;
    z.load_power.assign(minutes, load);
    z.wind_power.assign(minutes, wind);
    z.solar_power.assign(minutes, solar);
    z.dhi.assign(minutes, 100.0);
    z.dni.assign(minutes, 400.0);
    z.ghi.assign(minutes, 500.0);
    z.dew_point.assign(minutes, 10.0);
    z.solar_zenith.assign(minutes, 45.0);
    z.wind_speed.assign(minutes, 8.0);
    z.rel_humidity.assign(minutes, 60.0);
    z.temperature.assign(minutes, 20.0);
    return z;
}

}  // namespace testutil
