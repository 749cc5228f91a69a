#include <doctest.h>

#include <set>

#include "gridtd/errors.hpp"
#include "gridtd/grid_model.hpp"
#include "test_util.hpp"

using namespace gridtd;

TEST_CASE("shipped t23like case loads and validates") {
    NetworkModel net = load_case(testutil::case_path("t23like.json"));
    validate(net);
    CHECK(net.buses.size() == 23);
    CHECK(net.generators.size() == 6);
    std::set<int> load_buses;
    for (const auto& l : net.loads) load_buses.insert(l.bus);
    CHECK(load_buses.size() == 7);
    CHECK(net.feeders.size() == 2);
}

TEST_CASE("minimal two-bus case validates") {
    NetworkModel net = testutil::two_bus();
    validate(net);
    CHECK(net.buses.size() == 2);
    CHECK(net.branches.size() == 1);
}

TEST_CASE("feeder section loop is rejected as non-radial") {
    NetworkModel net = load_case(testutil::case_path("f13like.json"));
    validate(net);
    auto& f = net.feeders[0];
    // Replace one lateral with a duplicate of an existing edge: same edge
    // count, but 633-634 and 634-633 now form a loop and 646 is unreachable.
    for (auto& s : f.sections)
        if (s.from == "645" && s.to == "646") {
            s.from = "634";
            s.to = "633";
        }
    CHECK_THROWS_WITH_AS(validate(net), "feeder not radial", ValidationError);
}

TEST_CASE("validation catches malformed networks") {
    SUBCASE("duplicate bus id") {
        auto net = testutil::two_bus();
        net.buses.push_back({2, BusKind::Load, 230.0, 1.0});
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SUBCASE("zero branch reactance") {
        auto net = testutil::two_bus(0.1);
        net.branches[0].x = 0.0;
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SUBCASE("two slack buses") {
        auto net = testutil::two_bus();
        net.buses[1].kind = BusKind::Slack;
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SUBCASE("generator at unknown bus") {
        auto net = testutil::two_bus();
        GeneratorSpec g;
        g.bus = 99;
        g.p_set = 0.1;
        g.p_max = 0.5;
        net.generators.push_back(g);
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SUBCASE("disconnected bus") {
        auto net = testutil::two_bus();
        net.buses.push_back({3, BusKind::Load, 230.0, 1.0});
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
    SUBCASE("duplicate branch key") {
        auto net = testutil::two_bus();
        net.branches.push_back(net.branches[0]);
        CHECK_THROWS_AS(validate(net), ValidationError);
    }
}

TEST_CASE("case JSON round-trips exactly") {
    NetworkModel net = load_case(testutil::case_path("t23like.json"));
    const std::string text = case_to_json(net);
    NetworkModel again = parse_case_json(text);
    CHECK(net == again);
    CHECK(case_to_json(again) == text);
}

TEST_CASE("ybus assembly") {
    SUBCASE("single branch x=0.1") {
        auto net = testutil::two_bus(0.1, 0.0, 0.0);
        auto y = build_ybus(net);
        CHECK(y(0, 0).imag() == doctest::Approx(-10.0));
        CHECK(y(0, 1).imag() == doctest::Approx(10.0));
        CHECK(y(1, 0).imag() == doctest::Approx(10.0));
        CHECK(y(1, 1).imag() == doctest::Approx(-10.0));
        CHECK(y(0, 0).real() == doctest::Approx(0.0));
    }
    SUBCASE("out-of-service branch contributes nothing") {
        auto net = testutil::two_bus();
        net.branches[0].in_service = false;
        auto y = build_ybus(net);
        CHECK(std::abs(y(0, 1)) == doctest::Approx(0.0));
        CHECK(std::abs(y(0, 0)) == doctest::Approx(0.0));
    }
    SUBCASE("row sums vanish without shunts") {
        NetworkModel net;
        net.base_mva = 100.0;
        net.buses.push_back({1, BusKind::Slack, 230.0, 1.0});
        net.buses.push_back({2, BusKind::Load, 230.0, 1.0});
        net.buses.push_back({3, BusKind::Load, 230.0, 1.0});
        net.branches.push_back({1, 2, "1 ", 0.01, 0.1, 0.0, true});
        net.branches.push_back({2, 3, "1 ", 0.01, 0.1, 0.0, true});
        net.branches.push_back({3, 1, "1 ", 0.01, 0.1, 0.0, true});
        auto y = build_ybus(net);
        for (int i = 0; i < 3; ++i) CHECK(std::abs(y.row(i).sum()) < 1e-12);
    }
}
