#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridtd/records.hpp"

namespace gridtd {

struct PointErrors {
    double rmse = 0.0;
    double mae = 0.0;
    double mape = 0.0;  // fraction, not percent
};

PointErrors point_errors(const std::vector<double>& y, const std::vector<double>& y_hat);

struct ForecastEval {
    std::vector<double> y;
    std::vector<double> y_hat;
    std::vector<double> y_l;
    std::vector<double> y_u;
    double a = 0.05;
    std::string horizon;
};

double mean_interval_score(const ForecastEval& ev);

/// Persistence benchmark: prediction at origin t for t + horizon is y[t].
/// Returns the N - horizon predictions aligned with y[horizon..N-1].
std::vector<double> naive_forecast(const std::vector<double>& y, size_t horizon);

/// Macro recall over the classes present in y_true.
double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

/// Mean over distinct true labels of the mean |prediction - label| within
/// that label's samples.
double macro_mae(const std::vector<int>& y_true, const std::vector<int>& y_pred);

struct Psd {
    std::vector<double> frequency;  // one-sided, DC..Nyquist
    std::vector<double> density;
};

/// Welch estimate: Hann window, 50% overlap, segment-mean detrend, one-sided
/// scaling. nperseg = 0 picks 256 (shrunk so at least two segments fit).
Psd power_spectral_density(const std::vector<double>& series, double sample_interval,
                           size_t nperseg = 0);

struct ModeEstimate {
    double frequency = 0.0;  // Hz
    double damping = 0.0;    // 1/s, positive = decaying
    double amplitude = 0.0;
    double energy = 0.0;  // amplitude^2 * window length
};

/// Matrix-pencil estimation of damped sinusoids, conjugate pairs merged,
/// sorted by descending energy.
std::vector<ModeEstimate> estimate_modes(const std::vector<double>& series, double sample_rate,
                                         int order);

struct BusScore {
    int bus = -1;
    double score = 0.0;
};

struct WindowSpec {
    size_t begin = 0;  // row index, inclusive
    size_t end = 0;    // exclusive
};

/// Ranks buses by per-channel disturbance signatures (entropy, spread, level
/// shift, crest factor), z-scored across channels. channel_bus maps each
/// channel to its bus; when empty, bus ids are parsed from the channel names
/// ("VOLT 151", "POWR 151 TO 152 ...", "3005.633.1").
std::vector<BusScore> pmu_signature_localize(const ChannelFrame& frame, WindowSpec pre,
                                             WindowSpec event,
                                             const std::vector<int>& channel_bus = {});

struct FidelityResult {
    double autocorr_diff = 0.0;
    double crosscorr_diff = 0.0;
    int skipped = 0;  // constant-channel terms left out
};

FidelityResult correlation_fidelity(const std::vector<std::vector<double>>& real_set,
                                    const std::vector<std::vector<double>>& synth_set,
                                    int max_lag = 100);

struct PcaProjection {
    Eigen::MatrixXd a_coords;  // rows = samples of A, cols = k
    Eigen::MatrixXd b_coords;
    std::vector<double> explained_variance;  // ratio per kept component
};

/// Principal basis fit on A alone; both sets projected into it.
PcaProjection pca_project(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int k = 2);

}  // namespace gridtd
