#include "gridtd/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <random>

#include "gridtd/errors.hpp"
#include "gridtd/records.hpp"

namespace gridtd {

namespace fs = std::filesystem;

MinuteStamp parse_minute(const std::string& text) {
    std::tm tm{};
    int y, mo, d, h, mi, s = 0;
    char sep;
    if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s) < 6)
        throw ParseError("bad timestamp '" + text + "'");
    tm.tm_year = y - 1900;
    tm.tm_mon = mo - 1;
    tm.tm_mday = d;
    tm.tm_hour = h;
    tm.tm_min = mi;
    tm.tm_sec = 0;
    time_t t = timegm(&tm);
    if (t == static_cast<time_t>(-1)) throw ParseError("bad timestamp '" + text + "'");
    return t / 60;
}

std::string minute_to_text(MinuteStamp m) {
    time_t t = static_cast<time_t>(m) * 60;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:%02d", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

double ZoneProfile::at(const std::vector<double>& s, MinuteStamp t) const {
    if (!covers(t)) throw ProfileGap("profile gap at " + minute_to_text(t));
    return s[static_cast<size_t>(t - start)];
}

double wind_power(double v, const WindCurve& curve) {
    if (v < curve.cut_in || v >= curve.cut_out) return 0.0;
    if (v >= curve.rated) return 1.0;
    const double v3 = v * v * v;
    const double ci3 = curve.cut_in * curve.cut_in * curve.cut_in;
    const double r3 = curve.rated * curve.rated * curve.rated;
    return (v3 - ci3) / (r3 - ci3);
}

double solar_power(double ghi, double temp_air, const PvParams& p) {
    const double cell = temp_air + (p.noct - 20.0) / 800.0 * ghi;
    const double out = p.p_dc0 * (ghi / 1000.0) * (1.0 + p.gamma * (cell - 25.0));
    return std::max(out, 0.0);
}

std::vector<double> normalize_load(const std::vector<double>& series) {
    if (series.empty()) throw DegenerateSeries("empty load series");
    double mean = 0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    if (mean <= 0) throw DegenerateSeries("load series mean not positive");
    std::vector<double> out(series.size());
    for (size_t i = 0; i < series.size(); ++i) out[i] = series[i] / mean;
    return out;
}

TimedSeries to_minute_grid(const TimedSeries& coarse) {
    if (coarse.stamps.empty()) throw ParseError("empty input series");
    for (size_t i = 1; i < coarse.stamps.size(); ++i)
        if (coarse.stamps[i] <= coarse.stamps[i - 1])
            throw ParseError("timestamps not monotone");
    TimedSeries out;
    const MinuteStamp t0 = coarse.stamps.front();
    const MinuteStamp t1 = coarse.stamps.back();
    size_t k = 0;
    for (MinuteStamp t = t0; t <= t1; ++t) {
        while (k + 1 < coarse.stamps.size() && coarse.stamps[k + 1] <= t) ++k;
        double v;
        if (t <= coarse.stamps.front())
            v = coarse.values.front();
        else if (t >= coarse.stamps.back())
            v = coarse.values.back();
        else {
            const double frac = double(t - coarse.stamps[k]) /
                                double(coarse.stamps[k + 1] - coarse.stamps[k]);
            v = coarse.values[k] + frac * (coarse.values[k + 1] - coarse.values[k]);
        }
        out.stamps.push_back(t);
        out.values.push_back(v);
    }
    return out;
}

// Column order follows the dataset schema, including its "Solar Zeinth Angle"
// spelling, kept for bit compatibility.
static const char* kZoneHeaders[] = {
    "load_power", "wind_power", "solar_power", "DHI", "DNI", "GHI",
    "Dew Point", "Solar Zeinth Angle", "Wind Speed", "Relative Humidity", "Temperature"};

ZoneProfile read_zone_csv(const std::string& path) {
    auto frame = read_frame_csv(path, true);
    for (const char* h : kZoneHeaders)
        if (frame.channel(h) < 0)
            throw SchemaMismatch(path + ": missing zone column '" + std::string(h) + "'");
    ZoneProfile zp;
    zp.zone = fs::path(path).stem().string();
    if (frame.rows() == 0) throw ParseError(path + ": no data rows");
    zp.start = parse_minute(frame.time_text.front());
    zp.load_power = frame.series("load_power");
    zp.wind_power = frame.series("wind_power");
    zp.solar_power = frame.series("solar_power");
    zp.dhi = frame.series("DHI");
    zp.dni = frame.series("DNI");
    zp.ghi = frame.series("GHI");
    zp.dew_point = frame.series("Dew Point");
    zp.solar_zenith = frame.series("Solar Zeinth Angle");
    zp.wind_speed = frame.series("Wind Speed");
    zp.rel_humidity = frame.series("Relative Humidity");
    zp.temperature = frame.series("Temperature");
    return zp;
}

void write_zone_csv(const ZoneProfile& zp, const std::string& path) {
    ChannelFrame frame;
    for (size_t i = 0; i < zp.size(); ++i)
        frame.time_text.push_back(minute_to_text(zp.start + static_cast<MinuteStamp>(i)));
    frame.add_channel("load_power", zp.load_power);
    frame.add_channel("wind_power", zp.wind_power);
    frame.add_channel("solar_power", zp.solar_power);
    frame.add_channel("DHI", zp.dhi);
    frame.add_channel("DNI", zp.dni);
    frame.add_channel("GHI", zp.ghi);
    frame.add_channel("Dew Point", zp.dew_point);
    frame.add_channel("Solar Zeinth Angle", zp.solar_zenith);
    frame.add_channel("Wind Speed", zp.wind_speed);
    frame.add_channel("Relative Humidity", zp.rel_humidity);
    frame.add_channel("Temperature", zp.temperature);
    write_frame_csv(frame, path, "time");
}

ZoneProfile synth_zone_profile(const std::string& zone, const SynthConfig& cfg) {
    ZoneProfile zp;
    zp.zone = zone;
    zp.start = cfg.start;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double phase_d = uni(rng) * 2 * M_PI;

    const int n = cfg.minutes;
    zp.load_power.reserve(n);
    double wind_ar = 8.0;  // slow AR(1) wind speed around 8 m/s
    const WindCurve curve;
    const PvParams pv;
    for (int i = 0; i < n; ++i) {
        const double tmin = static_cast<double>(i);
        const double thour = tmin / 60.0;
        double load = 1.0 + cfg.diurnal * std::sin(2 * M_PI * thour / 24.0 + phase_d) +
                      cfg.semidiurnal * std::sin(2 * M_PI * thour / 12.0) +
                      cfg.weekly * std::sin(2 * M_PI * thour / (24.0 * 7.0));
        if (cfg.noise > 0) load += cfg.noise * gauss(rng);
        zp.load_power.push_back(load);

        // Hour-of-day from the absolute stamp so GHI peaks at local noon.
        const double hod = std::fmod(static_cast<double>(cfg.start + i), 1440.0) / 60.0;
        const double sun = std::max(0.0, std::sin(M_PI * (hod - 6.0) / 12.0));
        const double ghi = 950.0 * sun * sun;
        const double zenith = 90.0 - 80.0 * sun;
        const double dhi = 0.25 * ghi;
        const double dni = sun > 0 ? (ghi - dhi) / std::max(sun, 0.05) : 0.0;
        const double temp = 15.0 + 8.0 * std::sin(2 * M_PI * (hod - 9.0) / 24.0);
        if (cfg.noise > 0)
            wind_ar = 8.0 + 0.999 * (wind_ar - 8.0) + 0.12 * gauss(rng);
        const double wspd = std::clamp(wind_ar, 0.0, 30.0);

        zp.ghi.push_back(ghi);
        zp.dhi.push_back(dhi);
        zp.dni.push_back(dni);
        zp.solar_zenith.push_back(zenith);
        zp.dew_point.push_back(temp - 5.0);
        zp.temperature.push_back(temp);
        zp.rel_humidity.push_back(60.0);
        zp.wind_speed.push_back(wspd);
        zp.wind_power.push_back(wind_power(wspd, curve));
        zp.solar_power.push_back(solar_power(ghi, temp, pv));
    }
    zp.load_power = normalize_load(zp.load_power);
    return zp;
}

std::vector<ZoneProfile> load_profile_dir(const std::string& dir) {
    std::vector<std::string> files;
    if (!fs::is_directory(dir)) throw ParseError("profiles directory not found: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.find("zone_") != std::string::npos && e.path().extension() == ".csv")
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw ParseError("no *zone_*.csv profiles in " + dir);
    std::vector<ZoneProfile> out;
    for (const auto& f : files) out.push_back(read_zone_csv(f));
    return out;
}

}  // namespace gridtd
