#include "gridtd/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include <fftw3.h>

#include "gridtd/errors.hpp"

namespace gridtd {

PointErrors point_errors(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.empty() || y.size() != y_hat.size())
        throw ValidationError("point_errors needs equal nonempty series");
    double se = 0, ae = 0, ape = 0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double e = y_hat[i] - y[i];
        se += e * e;
        ae += std::abs(e);
        if (y[i] == 0.0) throw ZeroActual("actual value is zero at index " + std::to_string(i));
        ape += std::abs(e / y[i]);
    }
    const double n = static_cast<double>(y.size());
    return {std::sqrt(se / n), ae / n, ape / n};
}

double mean_interval_score(const ForecastEval& ev) {
    const size_t n = ev.y.size();
    if (n == 0 || ev.y_l.size() != n || ev.y_u.size() != n)
        throw ValidationError("mean_interval_score needs equal nonempty series");
    if (ev.a <= 0 || ev.a >= 1) throw ValidationError("significance must lie in (0, 1)");
    double sum = 0;
    for (size_t i = 0; i < n; ++i) {
        if (ev.y_l[i] > ev.y_u[i]) throw ValidationError("interval bounds are inverted");
        sum += ev.y_u[i] - ev.y_l[i];
        if (ev.y[i] < ev.y_l[i]) sum += 2.0 / ev.a * (ev.y_l[i] - ev.y[i]);
        if (ev.y[i] > ev.y_u[i]) sum += 2.0 / ev.a * (ev.y[i] - ev.y_u[i]);
    }
    return sum / static_cast<double>(n);
}

std::vector<double> naive_forecast(const std::vector<double>& y, size_t horizon) {
    if (y.empty()) throw ValidationError("naive_forecast needs a nonempty history");
    if (horizon == 0 || horizon >= y.size()) return {};
    return std::vector<double>(y.begin(), y.end() - static_cast<long>(horizon));
}

double balanced_accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw ValidationError("balanced_accuracy needs equal nonempty label vectors");
    std::map<int, std::pair<int, int>> per_class;  // label -> (hits, count)
    for (size_t i = 0; i < y_true.size(); ++i) {
        auto& [hits, count] = per_class[y_true[i]];
        ++count;
        if (y_pred[i] == y_true[i]) ++hits;
    }
    double sum = 0;
    for (const auto& [label, hc] : per_class)
        sum += static_cast<double>(hc.first) / static_cast<double>(hc.second);
    return sum / static_cast<double>(per_class.size());
}

double macro_mae(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw ValidationError("macro_mae needs equal nonempty label vectors");
    std::map<int, std::pair<double, int>> per_class;  // label -> (abs err sum, count)
    for (size_t i = 0; i < y_true.size(); ++i) {
        auto& [err, count] = per_class[y_true[i]];
        err += std::abs(y_pred[i] - y_true[i]);
        ++count;
    }
    double sum = 0;
    for (const auto& [label, ec] : per_class) sum += ec.first / ec.second;
    return sum / static_cast<double>(per_class.size());
}

Psd power_spectral_density(const std::vector<double>& series, double sample_interval,
                           size_t nperseg) {
    if (sample_interval <= 0) throw ValidationError("sample interval must be positive");
    const size_t n = series.size();
    if (nperseg == 0) nperseg = 256;
    // Shrink the segment so at least two half-overlapped segments fit.
    if (n < nperseg + nperseg / 2) nperseg = 2 * n / 3;
    if (nperseg < 8) throw TooShort("series too short for a Welch estimate");
    const size_t step = nperseg / 2;
    const size_t nseg = (n - nperseg) / step + 1;
    if (nseg < 2) throw TooShort("series shorter than two Welch segments");

    std::vector<double> window(nperseg);
    double u = 0;
    for (size_t i = 0; i < nperseg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / nperseg));
        u += window[i] * window[i];
    }

    const size_t nbins = nperseg / 2 + 1;
    std::vector<double> in(nperseg);
    std::vector<std::complex<double>> out(nbins);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(nperseg), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE);

    std::vector<double> pxx(nbins, 0.0);
    for (size_t s = 0; s < nseg; ++s) {
        const double* seg = series.data() + s * step;
        double mean = 0;
        for (size_t i = 0; i < nperseg; ++i) mean += seg[i];
        mean /= static_cast<double>(nperseg);
        for (size_t i = 0; i < nperseg; ++i) in[i] = (seg[i] - mean) * window[i];
        fftw_execute(plan);
        for (size_t k = 0; k < nbins; ++k) pxx[k] += std::norm(out[k]);
    }
    fftw_destroy_plan(plan);

    const double fs = 1.0 / sample_interval;
    const double scale = 1.0 / (fs * u * static_cast<double>(nseg));
    Psd psd;
    psd.frequency.resize(nbins);
    psd.density.resize(nbins);
    for (size_t k = 0; k < nbins; ++k) {
        psd.frequency[k] = static_cast<double>(k) * fs / static_cast<double>(nperseg);
        double d = pxx[k] * scale;
        const bool interior = k != 0 && !(nperseg % 2 == 0 && k == nbins - 1);
        psd.density[k] = interior ? 2.0 * d : d;
    }
    return psd;
}

std::vector<ModeEstimate> estimate_modes(const std::vector<double>& series, double sample_rate,
                                         int order) {
    const int n = static_cast<int>(series.size());
    if (order < 1) throw ValidationError("model order must be >= 1");
    if (n < 4 * order) throw RankDeficient("series shorter than 4x the model order");

    const int pencil = n / 2;
    const int rows = n - pencil;
    Eigen::MatrixXd hankel(rows, pencil + 1);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j <= pencil; ++j) hankel(i, j) = series[i + j];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(hankel, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] <= 0) throw RankDeficient("zero signal");
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > sv[0] * 1e-8) ++rank;
    const int m = std::min(order, rank);

    const Eigen::MatrixXd v = svd.matrixV().leftCols(m);
    const Eigen::MatrixXd v1 = v.topRows(pencil);
    const Eigen::MatrixXd v2 = v.bottomRows(pencil);
    const Eigen::MatrixXd a =
        (v1.transpose() * v1).ldlt().solve(v1.transpose() * v2);
    Eigen::EigenSolver<Eigen::MatrixXd> eig(a);
    if (eig.info() != Eigen::Success) throw RankDeficient("pencil eigenproblem failed");
    const Eigen::VectorXcd z = eig.eigenvalues();

    // Complex amplitudes by least squares against the Vandermonde basis.
    Eigen::MatrixXcd vand(n, m);
    for (int j = 0; j < m; ++j) {
        std::complex<double> p(1.0, 0.0);
        for (int i = 0; i < n; ++i) {
            vand(i, j) = p;
            p *= z[j];
        }
    }
    Eigen::VectorXcd rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = series[i];
    const Eigen::VectorXcd c = vand.colPivHouseholderQr().solve(rhs);

    std::vector<bool> used(m, false);
    std::vector<ModeEstimate> modes;
    for (int i = 0; i < m; ++i) {
        if (used[i]) continue;
        used[i] = true;
        const std::complex<double> lam = std::log(z[i]) * sample_rate;
        ModeEstimate mode;
        mode.frequency = std::abs(lam.imag()) / (2.0 * M_PI);
        mode.damping = -lam.real();
        double amp = std::abs(c[i]);
        // Merge the conjugate partner of an oscillatory mode.
        if (std::abs(z[i].imag()) > 1e-12) {
            int best = -1;
            double bestd = 1e-6 * std::max(1.0, std::abs(z[i]));
            for (int j = i + 1; j < m; ++j) {
                if (used[j]) continue;
                const double d = std::abs(z[j] - std::conj(z[i]));
                if (d < bestd) {
                    bestd = d;
                    best = j;
                }
            }
            if (best >= 0) {
                used[best] = true;
                amp = std::abs(c[i]) + std::abs(c[best]);
            } else {
                amp = 2.0 * std::abs(c[i]);
            }
        }
        mode.amplitude = amp;
        mode.energy = amp * amp * static_cast<double>(n);
        modes.push_back(mode);
    }
    std::sort(modes.begin(), modes.end(),
              [](const ModeEstimate& x, const ModeEstimate& y) { return x.energy > y.energy; });
    return modes;
}

namespace {

int bus_from_channel_name(const std::string& name) {
    auto leading_int = [](const std::string& s) {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos == 0) throw std::invalid_argument(s);
        return v;
    };
    try {
        if (name.rfind("VOLT ", 0) == 0 || name.rfind("POWR ", 0) == 0 ||
            name.rfind("VARS ", 0) == 0 || name.rfind("FREQ ", 0) == 0)
            return leading_int(name.substr(5));
        if (name.rfind("Vm_", 0) == 0 || name.rfind("Va_", 0) == 0)
            return leading_int(name.substr(3));
        if (name.rfind("P_", 0) == 0 || name.rfind("Q_", 0) == 0)
            return leading_int(name.substr(2));
        return leading_int(name);  // "3005.633.1" style: coupling bus prefix
    } catch (const std::exception&) {
        throw ValidationError("cannot map channel '" + name + "' to a bus");
    }
}

std::vector<double> zscore(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> z(v.size(), 0.0);
    if (sd > 0)
        for (size_t i = 0; i < v.size(); ++i) z[i] = (v[i] - mean) / sd;
    return z;
}

}  // namespace

std::vector<BusScore> pmu_signature_localize(const ChannelFrame& frame, WindowSpec pre,
                                             WindowSpec event,
                                             const std::vector<int>& channel_bus) {
    const size_t rows = frame.rows();
    if (pre.begin >= pre.end || event.begin >= event.end || pre.end > rows || event.end > rows)
        throw ValidationError("analysis windows must be nonempty and inside the frame");
    const size_t nc = frame.names.size();
    if (nc == 0) throw ValidationError("frame has no channels");
    if (!channel_bus.empty() && channel_bus.size() != nc)
        throw ValidationError("channel -> bus map size mismatch");

    std::vector<double> entropy(nc), sdev(nc), range(nc), shift(nc), crest(nc);
    for (size_t c = 0; c < nc; ++c) {
        const auto& v = frame.values[c];
        double lo = v[event.begin], hi = v[event.begin];
        double mean = 0, peak = 0, sq = 0;
        for (size_t i = event.begin; i < event.end; ++i) {
            lo = std::min(lo, v[i]);
            hi = std::max(hi, v[i]);
            mean += v[i];
            peak = std::max(peak, std::abs(v[i]));
            sq += v[i] * v[i];
        }
        const double ne = static_cast<double>(event.end - event.begin);
        mean /= ne;
        double var = 0;
        for (size_t i = event.begin; i < event.end; ++i) var += (v[i] - mean) * (v[i] - mean);
        sdev[c] = std::sqrt(var / ne);
        range[c] = hi - lo;
        const double rms = std::sqrt(sq / ne);
        crest[c] = rms > 0 ? peak / rms : 0.0;

        double pre_mean = 0;
        for (size_t i = pre.begin; i < pre.end; ++i) pre_mean += v[i];
        pre_mean /= static_cast<double>(pre.end - pre.begin);
        shift[c] = std::abs(mean - pre_mean);

        if (hi > lo) {
            std::array<int, 16> hist{};
            for (size_t i = event.begin; i < event.end; ++i) {
                int b = static_cast<int>((v[i] - lo) / (hi - lo) * 16.0);
                hist[std::min(b, 15)]++;
            }
            double h = 0;
            for (int count : hist)
                if (count > 0) {
                    const double p = count / ne;
                    h -= p * std::log2(p);
                }
            entropy[c] = h;
        }
    }

    const auto ze = zscore(entropy), zs = zscore(sdev), zr = zscore(range), zm = zscore(shift),
               zc = zscore(crest);
    std::map<int, double> best;
    for (size_t c = 0; c < nc; ++c) {
        const double score = (ze[c] + zs[c] + zr[c] + zm[c] + zc[c]) / 5.0;
        const int bus =
            channel_bus.empty() ? bus_from_channel_name(frame.names[c]) : channel_bus[c];
        auto [it, inserted] = best.emplace(bus, score);
        if (!inserted) it->second = std::max(it->second, score);
    }
    std::vector<BusScore> ranked;
    for (const auto& [bus, score] : best) ranked.push_back({bus, score});
    std::stable_sort(ranked.begin(), ranked.end(), [](const BusScore& x, const BusScore& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.bus < y.bus;
    });
    return ranked;
}

namespace {

struct SeriesStats {
    double mean = 0;
    double var = 0;  // sum of squared deviations
};

SeriesStats stats_of(const std::vector<double>& x) {
    SeriesStats s;
    for (double v : x) s.mean += v;
    s.mean /= static_cast<double>(x.size());
    for (double v : x) s.var += (v - s.mean) * (v - s.mean);
    return s;
}

// Autocorrelation coefficient at a lag, normalized by the full-series variance.
double acf(const std::vector<double>& x, const SeriesStats& s, int lag) {
    double num = 0;
    for (size_t t = 0; t + lag < x.size(); ++t)
        num += (x[t] - s.mean) * (x[t + lag] - s.mean);
    return num / s.var;
}

double pearson(const std::vector<double>& x, const SeriesStats& sx, const std::vector<double>& y,
               const SeriesStats& sy) {
    double num = 0;
    for (size_t t = 0; t < x.size(); ++t) num += (x[t] - sx.mean) * (y[t] - sy.mean);
    return num / std::sqrt(sx.var * sy.var);
}

}  // namespace

FidelityResult correlation_fidelity(const std::vector<std::vector<double>>& real_set,
                                    const std::vector<std::vector<double>>& synth_set,
                                    int max_lag) {
    if (real_set.empty() || real_set.size() != synth_set.size())
        throw ValidationError("sets must carry the same nonzero channel count");
    const size_t len = real_set[0].size();
    for (const auto& ch : real_set)
        if (ch.size() != len) throw ValidationError("ragged channel lengths");
    for (const auto& ch : synth_set)
        if (ch.size() != len) throw ValidationError("sets must share the series length");
    if (len < static_cast<size_t>(max_lag) + 2)
        throw TooShort("series shorter than the autocorrelation lag range");

    const size_t nc = real_set.size();
    std::vector<SeriesStats> rs(nc), ss(nc);
    for (size_t c = 0; c < nc; ++c) {
        rs[c] = stats_of(real_set[c]);
        ss[c] = stats_of(synth_set[c]);
    }

    FidelityResult out;
    for (size_t c = 0; c < nc; ++c) {
        if (rs[c].var <= 0 || ss[c].var <= 0) {
            out.skipped += max_lag;
            continue;
        }
        for (int lag = 1; lag <= max_lag; ++lag)
            out.autocorr_diff +=
                std::abs(acf(real_set[c], rs[c], lag) - acf(synth_set[c], ss[c], lag));
    }
    for (size_t i = 0; i < nc; ++i)
        for (size_t j = i + 1; j < nc; ++j) {
            if (rs[i].var <= 0 || rs[j].var <= 0 || ss[i].var <= 0 || ss[j].var <= 0) {
                ++out.skipped;
                continue;
            }
            out.crosscorr_diff += std::abs(pearson(real_set[i], rs[i], real_set[j], rs[j]) -
                                           pearson(synth_set[i], ss[i], synth_set[j], ss[j]));
        }
    return out;
}

PcaProjection pca_project(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int k) {
    if (a.rows() < 2) throw ValidationError("need at least two samples to fit a basis");
    if (a.cols() != b.cols()) throw ValidationError("sample widths differ between sets");
    if (k < 1 || k > a.cols()) throw ValidationError("component count out of range");

    const Eigen::RowVectorXd mean = a.colwise().mean();
    const Eigen::MatrixXd centered = a.rowwise() - mean;
    const Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(a.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DegenerateCovariance("eigendecomposition failed");
    const double total = eig.eigenvalues().cwiseMax(0.0).sum();
    if (total <= 0) throw DegenerateCovariance("set A has zero variance");

    // Eigenvalues come back ascending; take the top k.
    const long n = eig.eigenvalues().size();
    Eigen::MatrixXd basis(a.cols(), k);
    PcaProjection out;
    for (int j = 0; j < k; ++j) {
        basis.col(j) = eig.eigenvectors().col(n - 1 - j);
        out.explained_variance.push_back(std::max(eig.eigenvalues()[n - 1 - j], 0.0) / total);
    }
    out.a_coords = centered * basis;
    out.b_coords = (b.rowwise() - mean) * basis;
    return out;
}

}  // namespace gridtd
