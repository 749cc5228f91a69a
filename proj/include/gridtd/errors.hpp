#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridtd {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence : std::runtime_error {
    double max_mismatch;
    int iterations;
    NoConvergence(double mismatch, int iters, const std::string& what)
        : std::runtime_error(what), max_mismatch(mismatch), iterations(iters) {}
};

struct VoltageCollapse : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OuterNoConvergence : std::runtime_error {
    std::vector<double> history;
    OuterNoConvergence(std::vector<double> h, const std::string& what)
        : std::runtime_error(what), history(std::move(h)) {}
};

struct NoEquilibrium : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalBlowup : std::runtime_error {
    double t;
    NumericalBlowup(double time, const std::string& what)
        : std::runtime_error(what), t(time) {}
};

struct InitFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProfileGap : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoEligibleTarget : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateSeries : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroActual : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooShort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateCovariance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gridtd
