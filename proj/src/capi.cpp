#include "gridtd.h"

#include <cstring>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "gridtd/errors.hpp"
#include "gridtd/manifest.hpp"
#include "gridtd/metrics.hpp"
#include "gridtd/pipelines.hpp"

using nlohmann::json;

struct gridtd_net {
    gridtd::NetworkModel model;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

void copy_out(const std::string& s, char* buf, size_t len) {
    if (!buf || len == 0) return;
    const size_t n = std::min(s.size(), len - 1);
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
}

int classify(const std::exception& e) {
    if (dynamic_cast<const gridtd::ParseError*>(&e) ||
        dynamic_cast<const gridtd::ValidationError*>(&e) ||
        dynamic_cast<const gridtd::ProfileGap*>(&e) ||
        dynamic_cast<const gridtd::SchemaMismatch*>(&e) ||
        dynamic_cast<const json::exception*>(&e))
        return GRIDTD_EINPUT;
    return GRIDTD_ESOLVER;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    }
}

gridtd::ProfileSource profiles_from_json(const json& j) {
    gridtd::ProfileSource src;
    if (!j.is_object()) throw gridtd::ValidationError("profiles must be an object");
    if (j.value("synthetic", false)) {
        src.synthetic = true;
        src.zone_count = j.value("zones", 3);
        src.start = j.value("start", std::string("2020-01-01 00:00"));
        src.minutes = j.value("minutes", 24 * 60);
        src.seed = j.value("seed", std::uint64_t(1));
        src.noise = j.value("noise", 0.01);
    } else {
        src.dir = j.value("dir", std::string());
    }
    return src;
}

}  // namespace

extern "C" {

const char* gridtd_version(void) { return gridtd::kToolVersion; }

const char* gridtd_last_error(void) { return g_last_error.c_str(); }

int gridtd_net_load(const char* path, gridtd_net** out) {
    return guarded([&] {
        if (!path || !out) throw gridtd::ValidationError("null argument");
        auto* handle = new gridtd_net{gridtd::load_case(path)};
        *out = handle;
        return GRIDTD_OK;
    });
}

void gridtd_net_free(gridtd_net* net) { delete net; }

int gridtd_net_validate(const gridtd_net* net) {
    return guarded([&] {
        if (!net) throw gridtd::ValidationError("null handle");
        gridtd::validate(net->model);
        return GRIDTD_OK;
    });
}

int gridtd_net_summary(const gridtd_net* net, char* buf, size_t len) {
    return guarded([&] {
        if (!net) throw gridtd::ValidationError("null handle");
        const auto& m = net->model;
        std::ostringstream s;
        s << m.buses.size() << " buses, " << m.branches.size() << " branches, "
          << m.generators.size() << " generators, " << m.loads.size() << " loads, "
          << m.feeders.size() << " feeders (base " << m.base_mva << " MVA)";
        copy_out(s.str(), buf, len);
        return GRIDTD_OK;
    });
}

int gridtd_pf(const gridtd_net* net, double load_scale, const char* out_csv, char* summary,
              size_t len) {
    return guarded([&] {
        if (!net) throw gridtd::ValidationError("null handle");
        gridtd::validate(net->model);
        gridtd::OperatingPoint op;
        if (load_scale != 1.0) {
            for (const auto& l : net->model.loads) op.load_scale[l.bus] = load_scale;
            for (const auto& f : net->model.feeders)
                op.load_scale[f.coupling_bus] = load_scale;
        }
        op.pv_p.resize(net->model.feeders.size());
        const gridtd::TdSolution td = gridtd::iterate_td_powerflow(net->model, op, 1e-6, 30);

        if (out_csv) {
            gridtd::ChannelFrame frame;
            frame.time_text.push_back("t0");
            size_t c = 0;
            for (const auto& b : net->model.buses) {
                frame.add_channel("Vm_" + std::to_string(b.id), {td.pf.vm[c]});
                frame.add_channel("Va_" + std::to_string(b.id), {td.pf.va[c]});
                ++c;
            }
            for (size_t k = 0; k < net->model.branches.size(); ++k) {
                const auto& br = net->model.branches[k];
                if (!br.in_service) continue;
                std::string ckt = br.ckt;
                if (auto e = ckt.find_last_not_of(' '); e != std::string::npos)
                    ckt = ckt.substr(0, e + 1);
                const std::string tag =
                    std::to_string(br.from) + "_" + std::to_string(br.to) + "_" + ckt;
                frame.add_channel("P_" + tag, {td.pf.branch_p[k]});
                frame.add_channel("Q_" + tag, {td.pf.branch_q[k]});
            }
            gridtd::write_pf_result(frame, out_csv);
        }
        std::ostringstream s;
        s << "converged: " << td.outer_iterations << " outer, " << td.pf.iterations
          << " inner iterations, mismatch " << td.pf.max_mismatch << ", slack P "
          << td.pf.slack_p << " Q " << td.pf.slack_q;
        copy_out(s.str(), summary, len);
        return GRIDTD_OK;
    });
}

int gridtd_steady(const char* config_json, char* message, size_t len) {
    return guarded([&] {
        const json j = json::parse(config_json ? config_json : "");
        gridtd::SteadyPipelineArgs args;
        args.case_path = j.value("case", std::string());
        args.out_dir = j.value("out", std::string());
        args.from = j.value("from", std::string());
        args.to = j.value("to", std::string());
        args.profiles = profiles_from_json(j.value("profiles", json::object()));
        args.load_scale = j.value("load_scale", 1.0);
        args.eps = j.value("eps", 1e-6);
        args.case_index = j.value("case_index", 1);
        args.jobs = j.value("jobs", 1);
        std::string msg;
        const int code = gridtd::run_steady_pipeline(args, &msg);
        if (code != gridtd::kExitOk) set_error(msg);
        copy_out(msg, message, len);
        return code;
    });
}

int gridtd_transient(const char* config_json, char* message, size_t len) {
    return guarded([&] {
        const json j = json::parse(config_json ? config_json : "");
        gridtd::TransientPipelineArgs args;
        args.case_path = j.value("case", std::string());
        args.out_dir = j.value("out", std::string());
        args.profiles = profiles_from_json(j.value("profiles", json::object()));
        args.n = j.value("n", 1);
        args.seed = j.value("seed", std::uint64_t(0));
        args.jobs = j.value("jobs", 1);
        if (j.contains("kind_weights"))
            for (const auto& [name, w] : j.at("kind_weights").items())
                args.kind_weights[name] = w.get<double>();
        std::string msg;
        const int code = gridtd::run_transient_pipeline(args, &msg);
        if (code != gridtd::kExitOk) set_error(msg);
        copy_out(msg, message, len);
        return code;
    });
}

int gridtd_synth_profiles(const char* config_json, char* message, size_t len) {
    return guarded([&] {
        const json j = json::parse(config_json ? config_json : "");
        gridtd::ProfileSource src;
        src.synthetic = true;
        src.zone_count = j.value("zones", 3);
        src.start = j.value("start", std::string("2020-01-01 00:00"));
        src.minutes = j.value("minutes", 24 * 60);
        src.seed = j.value("seed", std::uint64_t(1));
        src.noise = j.value("noise", 0.01);
        const std::string out_dir = j.value("out", std::string());
        if (out_dir.empty()) throw gridtd::ValidationError("output directory required");
        std::filesystem::create_directories(out_dir);
        const auto zones = gridtd::resolve_profiles(src);
        for (const auto& z : zones)
            gridtd::write_zone_csv(
                z, (std::filesystem::path(out_dir) / ("ISO_zone_" + z.zone + ".csv")).string());
        copy_out("wrote " + std::to_string(zones.size()) + " zone files to " + out_dir, message,
                 len);
        return GRIDTD_OK;
    });
}

namespace {

int metrics_impl(const json& j, std::string& msg) {
    using namespace gridtd;
    const std::string task = j.value("task", std::string());
    const std::string out_path = j.value("out", std::string());
    if (out_path.empty()) throw ValidationError("output report path required");

    ChannelFrame report;
    if (task == "forecast") {
        const ChannelFrame in = read_frame_csv(j.at("in").get<std::string>(), true);
        const size_t horizon = j.value("horizon", 60);
        report.add_channel("rmse", {});
        report.add_channel("mae", {});
        report.add_channel("mape", {});
        for (size_t c = 0; c < in.names.size(); ++c) {
            const auto& y = in.values[c];
            const std::vector<double> y_hat = naive_forecast(y, horizon);
            const std::vector<double> actual(y.begin() + static_cast<long>(horizon), y.end());
            const PointErrors pe = point_errors(actual, y_hat);
            report.time_text.push_back(in.names[c]);
            report.values[0].push_back(pe.rmse);
            report.values[1].push_back(pe.mae);
            report.values[2].push_back(pe.mape);
        }
        write_frame_csv(report, out_path, "channel");
        msg = "forecast report for " + std::to_string(in.names.size()) + " channel(s)";
    } else if (task == "events") {
        const ChannelFrame in = read_frame_csv(j.at("in").get<std::string>(), true);
        std::vector<int> y_true, y_pred;
        for (double v : in.series("y_true")) y_true.push_back(static_cast<int>(v));
        for (double v : in.series("y_pred")) y_pred.push_back(static_cast<int>(v));
        report.time_text.push_back("all");
        report.add_channel("balanced_accuracy", {balanced_accuracy(y_true, y_pred)});
        report.add_channel("macro_mae", {macro_mae(y_true, y_pred)});
        write_frame_csv(report, out_path, "scope");
        msg = "event report over " + std::to_string(y_true.size()) + " samples";
    } else if (task == "fidelity") {
        const ChannelFrame real = read_frame_csv(j.at("real").get<std::string>(), true);
        const ChannelFrame synth = read_frame_csv(j.at("synthetic").get<std::string>(), true);
        const FidelityResult r =
            correlation_fidelity(real.values, synth.values, j.value("max_lag", 100));
        report.time_text.push_back("all");
        report.add_channel("autocorr_diff", {r.autocorr_diff});
        report.add_channel("crosscorr_diff", {r.crosscorr_diff});
        report.add_channel("skipped_terms", {static_cast<double>(r.skipped)});
        write_frame_csv(report, out_path, "scope");
        msg = "fidelity report over " + std::to_string(real.names.size()) + " channel(s)";
    } else if (task == "psd") {
        const std::string in_path = j.at("in").get<std::string>();
        const bool text_time = j.value("time_is_text", true);
        const ChannelFrame in = read_frame_csv(in_path, text_time);
        const auto& series = in.series(j.at("channel").get<std::string>());
        const double dt = j.value("sample_interval", 60.0);
        const Psd psd =
            power_spectral_density(series, dt, j.value("nperseg", std::size_t(0)));
        for (double f : psd.frequency) report.time_s.push_back(f);
        report.add_channel("density", psd.density);
        write_frame_csv(report, out_path, "frequency_hz");
        msg = "psd with " + std::to_string(psd.frequency.size()) + " bins";
    } else if (task == "modes") {
        const ChannelFrame in = read_frame_csv(j.at("in").get<std::string>(),
                                               j.value("time_is_text", false));
        std::vector<double> series = in.series(j.at("channel").get<std::string>());
        const size_t from_row = j.value("from_row", std::size_t(0));
        if (from_row >= series.size()) throw ValidationError("from_row beyond series");
        series.erase(series.begin(), series.begin() + static_cast<long>(from_row));
        const auto modes = estimate_modes(series, j.value("sample_rate", 240.0),
                                          j.value("order", 10));
        report.add_channel("frequency_hz", {});
        report.add_channel("damping", {});
        report.add_channel("amplitude", {});
        report.add_channel("energy", {});
        int rank = 1;
        for (const auto& m : modes) {
            report.time_text.push_back(std::to_string(rank++));
            report.values[0].push_back(m.frequency);
            report.values[1].push_back(m.damping);
            report.values[2].push_back(m.amplitude);
            report.values[3].push_back(m.energy);
        }
        write_frame_csv(report, out_path, "rank");
        msg = std::to_string(modes.size()) + " modes";
    } else {
        throw ValidationError("unknown metrics task '" + task + "'");
    }
    return GRIDTD_OK;
}

}  // namespace

int gridtd_metrics(const char* config_json, char* message, size_t len) {
    return guarded([&] {
        const json j = json::parse(config_json ? config_json : "");
        std::string msg;
        const int code = metrics_impl(j, msg);
        copy_out(msg, message, len);
        return code;
    });
}

}  // extern "C"
