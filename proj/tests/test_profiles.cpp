#include <doctest.h>

#include <fstream>

#include "gridtd/errors.hpp"
#include "gridtd/profiles.hpp"
#include "test_util.hpp"

using namespace gridtd;
using doctest::Approx;

TEST_CASE("minute stamps round trip") {
    const std::string text = "2020-03-01 06:07:00";
    CHECK(minute_to_text(parse_minute(text)) == text);
    CHECK(parse_minute("2020-03-01 06:07") == parse_minute(text));
    CHECK(parse_minute("2020-01-01 00:01") == parse_minute("2020-01-01 00:00") + 1);
    CHECK_THROWS_AS(parse_minute("yesterday"), ParseError);
}

TEST_CASE("wind power curve") {
    WindCurve c;
    CHECK(wind_power(2.0, c) == 0.0);
    CHECK(wind_power(12.0, c) == 1.0);
    CHECK(wind_power(18.0, c) == 1.0);
    CHECK(wind_power(25.0, c) == 0.0);
    CHECK(wind_power(7.5, c) == Approx((7.5 * 7.5 * 7.5 - 27.0) / (1728.0 - 27.0)).epsilon(1e-12));

    SUBCASE("monotone between cut-in and rated") {
        double prev = 0.0;
        for (double v = c.cut_in; v <= c.rated; v += 0.05) {
            const double p = wind_power(v, c);
            CHECK(p >= prev);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            prev = p;
        }
    }
}

TEST_CASE("solar power model") {
    PvParams p;
    CHECK(solar_power(0.0, 30.0, p) == 0.0);
    // Air temperature chosen so the cell sits exactly at 25 degC under full sun.
    CHECK(solar_power(1000.0, -6.25, p) == Approx(p.p_dc0).epsilon(1e-12));
    CHECK(solar_power(800.0, 20.0, p) == Approx(0.736).epsilon(1e-12));
    CHECK(solar_power(100.0, 60.0, p) >= 0.0);
}

TEST_CASE("normalize_load") {
    SUBCASE("constant maps to ones") {
        auto out = normalize_load({7.0, 7.0, 7.0});
        for (double v : out) CHECK(v == Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("mean becomes one") {
        auto out = normalize_load({1.0, 3.0});
        CHECK(out[0] == Approx(0.5).epsilon(1e-15));
        CHECK(out[1] == Approx(1.5).epsilon(1e-15));
    }
    CHECK_THROWS_AS(normalize_load({}), DegenerateSeries);
    CHECK_THROWS_AS(normalize_load({1.0, -1.0}), DegenerateSeries);
}

TEST_CASE("to_minute_grid interpolation") {
    TimedSeries coarse;
    coarse.stamps = {0, 10};
    coarse.values = {0.0, 1.0};
    auto fine = to_minute_grid(coarse);
    REQUIRE(fine.stamps.size() == 11);
    CHECK(fine.values[0] == Approx(0.0));
    CHECK(fine.values[5] == Approx(0.5).epsilon(1e-12));
    CHECK(fine.values[10] == Approx(1.0));

    SUBCASE("exact sample points are preserved") {
        TimedSeries s;
        s.stamps = {100, 102, 105};
        s.values = {2.0, 4.0, 1.0};
        auto g = to_minute_grid(s);
        CHECK(g.values[0] == Approx(2.0));
        CHECK(g.values[2] == Approx(4.0));
        CHECK(g.values[5] == Approx(1.0));
        CHECK(g.values[1] == Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("constant input stays constant") {
        TimedSeries s;
        s.stamps = {0, 60};
        s.values = {3.5, 3.5};
        for (double v : to_minute_grid(s).values) CHECK(v == Approx(3.5));
    }
    SUBCASE("non-monotone stamps are rejected") {
        TimedSeries s;
        s.stamps = {5, 5};
        s.values = {1.0, 2.0};
        CHECK_THROWS_AS(to_minute_grid(s), ParseError);
    }
}

TEST_CASE("zone CSV round trip keeps schema headers") {
    ZoneProfile zp =
        testutil::flat_zone("ISO_zone_T", parse_minute("2020-01-01 00:00"), 5, 1.2, 0.3, 0.6);
    zp.temperature = {10, 11, 12, 13, 14};
    testutil::TempDir dir("profiles");
    const std::string path = dir.file("ISO_zone_T.csv");
    write_zone_csv(zp, path);

    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("Solar Zeinth Angle") != std::string::npos);
    CHECK(header.find("Relative Humidity") != std::string::npos);

    ZoneProfile back = read_zone_csv(path);
    CHECK(back.zone == "ISO_zone_T");
    CHECK(back.start == zp.start);
    REQUIRE(back.size() == zp.size());
    CHECK(back.load_power == zp.load_power);
    CHECK(back.temperature == zp.temperature);

    SUBCASE("missing column is a schema error") {
        const std::string bad = dir.file("bad.csv");
        std::ofstream out(bad);
        out << "time,load_power\n2020-01-01 00:00:00,1.0\n";
        out.close();
        CHECK_THROWS_AS(read_zone_csv(bad), SchemaMismatch);
    }
}

TEST_CASE("profile lookup and coverage") {
    ZoneProfile zp = testutil::flat_zone("Z", parse_minute("2020-01-01 00:00"), 3);
    zp.load_power = {1.0, 2.0, 3.0};
    const MinuteStamp t0 = zp.start;
    CHECK(zp.at(zp.load_power, t0 + 1) == 2.0);
    CHECK_THROWS_AS(zp.at(zp.load_power, t0 + 3), ProfileGap);
    CHECK_THROWS_AS(zp.at(zp.load_power, t0 - 1), ProfileGap);
}

TEST_CASE("synthetic zones are deterministic and physical") {
    SynthConfig cfg;
    cfg.start = parse_minute("2020-06-01 00:00");
    cfg.minutes = 2 * 24 * 60;
    cfg.seed = 42;
    ZoneProfile a = synth_zone_profile("Z1", cfg);
    ZoneProfile b = synth_zone_profile("Z1", cfg);
    REQUIRE(a.size() == static_cast<size_t>(cfg.minutes));
    CHECK(a.load_power == b.load_power);
    CHECK(a.wind_speed == b.wind_speed);
    CHECK(a.ghi == b.ghi);

    ZoneProfile c = synth_zone_profile("Z1", [&] {
        SynthConfig o = cfg;
        o.seed = 43;
        return o;
    }());
    CHECK(a.load_power != c.load_power);

    double mean = 0;
    for (double v : a.load_power) {
        CHECK(v > 0.0);
        mean += v;
    }
    mean /= static_cast<double>(a.size());
    CHECK(mean == Approx(1.0).epsilon(0.05));
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.wind_power[i] >= 0.0);
        CHECK(a.wind_power[i] <= 1.0);
        CHECK(a.solar_power[i] >= 0.0);
        CHECK(a.ghi[i] >= 0.0);
        // Derived powers must match the conversion models applied to weather.
        CHECK(a.wind_power[i] == Approx(wind_power(a.wind_speed[i], WindCurve{})).epsilon(1e-12));
        CHECK(a.solar_power[i] ==
              Approx(solar_power(a.ghi[i], a.temperature[i], PvParams{})).epsilon(1e-12));
    }
}
