#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gridtd {

/// Minutes since the Unix epoch; all profile grids are uniform at 1 minute.
using MinuteStamp = std::int64_t;

MinuteStamp parse_minute(const std::string& text);   // "YYYY-MM-DD HH:MM[:SS]"
std::string minute_to_text(MinuteStamp m);           // "YYYY-MM-DD HH:MM:SS"

struct ZoneProfile {
    std::string zone;
    MinuteStamp start = 0;  // first sample
    std::vector<double> load_power;   // normalized, 3-year mean = 1
    std::vector<double> wind_power;   // per-unit of nominal
    std::vector<double> solar_power;  // per-unit of nominal
    std::vector<double> dhi, dni, ghi;          // W/m^2
    std::vector<double> dew_point;              // degC
    std::vector<double> solar_zenith;           // deg
    std::vector<double> wind_speed;             // m/s
    std::vector<double> rel_humidity;           // %
    std::vector<double> temperature;            // degC

    size_t size() const { return load_power.size(); }
    bool covers(MinuteStamp t) const {
        return t >= start && t < start + static_cast<MinuteStamp>(size());
    }
    double at(const std::vector<double>& s, MinuteStamp t) const;
};

struct WindCurve {
    double cut_in = 3.0;
    double rated = 12.0;
    double cut_out = 25.0;
};

struct PvParams {
    double p_dc0 = 1.0;      // per-unit at 1000 W/m^2 and 25 degC cell
    double gamma = -0.004;   // 1/degC
    double noct = 45.0;      // degC
};

double wind_power(double v, const WindCurve& curve);
double solar_power(double ghi, double temp_air, const PvParams& p);

std::vector<double> normalize_load(const std::vector<double>& series);

/// Linear interpolation of (stamp, value) samples onto the minute grid
/// [first stamp, last stamp]; endpoints held outside the sample range.
struct TimedSeries {
    std::vector<MinuteStamp> stamps;
    std::vector<double> values;
};
TimedSeries to_minute_grid(const TimedSeries& coarse);

ZoneProfile read_zone_csv(const std::string& path);
void write_zone_csv(const ZoneProfile& zp, const std::string& path);

struct SynthConfig {
    MinuteStamp start = 0;
    int minutes = 24 * 60;
    std::uint64_t seed = 1;
    double diurnal = 0.10;      // 24 h load tone amplitude
    double semidiurnal = 0.05;  // 12 h
    double weekly = 0.07;       // 1 week
    double noise = 0.01;        // load noise std; 0 gives pure tones
};

/// Deterministic synthetic zone profile (load tones + plausible weather),
/// with wind/solar power derived from the default curve and PV parameters.
ZoneProfile synth_zone_profile(const std::string& zone, const SynthConfig& cfg);

/// Loads every ISO_zone_*.csv in a directory, sorted by filename.
std::vector<ZoneProfile> load_profile_dir(const std::string& dir);

}  // namespace gridtd
