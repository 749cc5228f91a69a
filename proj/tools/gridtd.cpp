#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gridtd.h"

namespace {

// Minimal JSON string escaping for paths and timestamps.
std::string jstr(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

struct ProfileOpts {
    std::string dir;
    bool synthetic = false;
    int zones = 3;
    std::string start = "2020-01-01 00:00";
    int minutes = 24 * 60;
    double noise = 0.01;

    void attach(CLI::App* cmd) {
        cmd->add_option("--profiles", dir, "directory of ISO_zone_*.csv files");
        cmd->add_flag("--synth", synthetic, "use synthetic profiles instead of files");
        cmd->add_option("--zones", zones, "synthetic zone count");
        cmd->add_option("--start", start, "synthetic profile start (YYYY-MM-DD HH:MM)");
        cmd->add_option("--minutes", minutes, "synthetic profile length in minutes");
        cmd->add_option("--noise", noise, "synthetic load noise std");
    }

    std::string json(std::uint64_t seed) const {
        std::ostringstream j;
        if (synthetic) {
            j << "{\"synthetic\":true,\"zones\":" << zones << ",\"start\":" << jstr(start)
              << ",\"minutes\":" << minutes << ",\"seed\":" << seed << ",\"noise\":" << noise
              << "}";
        } else {
            j << "{\"dir\":" << jstr(dir) << "}";
        }
        return j.str();
    }
};

int report(int code, const char* message) {
    if (code == GRIDTD_OK) {
        if (message[0]) std::printf("%s\n", message);
    } else {
        const char* detail = message[0] ? message : gridtd_last_error();
        std::fprintf(stderr, "error: %s\n", detail);
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridtd - transmission+distribution grid simulation toolkit"};
    app.fallthrough();  // accept the global --seed/--jobs/--out after a subcommand too
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(gridtd_version()));

    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out_dir;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_option("--jobs", jobs, "parallel workers")->capture_default_str();
    app.add_option("--out", out_dir, "output directory or file");

    char message[4096] = {0};

    // --- validate ---------------------------------------------------------
    auto* validate = app.add_subcommand("validate", "check a case file's invariants");
    std::string validate_case;
    validate->add_option("case", validate_case, "case JSON path")->required();
    validate->callback([&] {
        gridtd_net* net = nullptr;
        int code = gridtd_net_load(validate_case.c_str(), &net);
        if (code == GRIDTD_OK) code = gridtd_net_validate(net);
        if (code == GRIDTD_OK) {
            gridtd_net_summary(net, message, sizeof(message));
            std::printf("ok: %s\n", message);
        } else {
            std::fprintf(stderr, "error: %s\n", gridtd_last_error());
        }
        gridtd_net_free(net);
        std::exit(code);
    });

    // --- pf ----------------------------------------------------------------
    auto* pf = app.add_subcommand("pf", "single coupled power-flow solve");
    std::string pf_case;
    double pf_scale = 1.0;
    pf->add_option("case", pf_case, "case JSON path")->required();
    pf->add_option("--load-scale", pf_scale, "uniform load multiplier")
        ->capture_default_str();
    pf->callback([&] {
        gridtd_net* net = nullptr;
        int code = gridtd_net_load(pf_case.c_str(), &net);
        if (code == GRIDTD_OK)
            code = gridtd_pf(net, pf_scale, out_dir.empty() ? nullptr : out_dir.c_str(),
                             message, sizeof(message));
        gridtd_net_free(net);
        std::exit(report(code, message));
    });

    // --- steady --------------------------------------------------------------
    auto* steady = app.add_subcommand("steady", "minute-level steady-state series");
    std::string steady_case, steady_from, steady_to;
    double steady_scale = 1.0, steady_eps = 1e-6;
    int steady_index = 1;
    ProfileOpts steady_profiles;
    steady->add_option("case", steady_case, "case JSON path")->required();
    steady->add_option("--from", steady_from, "window start (YYYY-MM-DD HH:MM)");
    steady->add_option("--to", steady_to, "window end, exclusive");
    steady->add_option("--load-scale", steady_scale, "stress multiplier")
        ->capture_default_str();
    steady->add_option("--eps", steady_eps, "outer-loop tolerance")->capture_default_str();
    steady->add_option("--case-index", steady_index, "output folder index")
        ->capture_default_str();
    steady_profiles.attach(steady);
    steady->callback([&] {
        std::ostringstream j;
        j << "{\"case\":" << jstr(steady_case) << ",\"out\":" << jstr(out_dir)
          << ",\"from\":" << jstr(steady_from) << ",\"to\":" << jstr(steady_to)
          << ",\"profiles\":" << steady_profiles.json(seed) << ",\"load_scale\":" << steady_scale
          << ",\"eps\":" << steady_eps << ",\"case_index\":" << steady_index
          << ",\"jobs\":" << jobs << "}";
        std::exit(report(gridtd_steady(j.str().c_str(), message, sizeof(message)), message));
    });

    // --- transient ------------------------------------------------------------
    auto* transient = app.add_subcommand("transient", "randomized transient scenario batch");
    std::string transient_case;
    int transient_n = 1;
    std::vector<std::string> weight_args;
    ProfileOpts transient_profiles;
    transient->add_option("case", transient_case, "case JSON path")->required();
    transient->add_option("--n", transient_n, "scenario count")->capture_default_str();
    transient->add_option("--kind-weights", weight_args,
                          "kind=weight pairs, e.g. bus_fault=1.0");
    transient_profiles.attach(transient);
    transient->callback([&] {
        std::ostringstream j;
        j << "{\"case\":" << jstr(transient_case) << ",\"out\":" << jstr(out_dir)
          << ",\"profiles\":" << transient_profiles.json(seed ? seed : 1)
          << ",\"n\":" << transient_n << ",\"seed\":" << seed << ",\"jobs\":" << jobs;
        if (!weight_args.empty()) {
            j << ",\"kind_weights\":{";
            for (size_t i = 0; i < weight_args.size(); ++i) {
                const auto eq = weight_args[i].find('=');
                if (eq == std::string::npos) {
                    std::fprintf(stderr, "error: expected kind=weight, got '%s'\n",
                                 weight_args[i].c_str());
                    std::exit(GRIDTD_EINPUT);
                }
                if (i) j << ",";
                j << jstr(weight_args[i].substr(0, eq)) << ":" << weight_args[i].substr(eq + 1);
            }
            j << "}";
        }
        j << "}";
        std::exit(report(gridtd_transient(j.str().c_str(), message, sizeof(message)), message));
    });

    // --- synth-profiles --------------------------------------------------------
    auto* synth = app.add_subcommand("synth-profiles", "write synthetic zone CSVs");
    int synth_zones = 3, synth_minutes = 24 * 60;
    std::string synth_start = "2020-01-01 00:00";
    double synth_noise = 0.01;
    synth->add_option("--zones", synth_zones, "zone count")->capture_default_str();
    synth->add_option("--start", synth_start, "start (YYYY-MM-DD HH:MM)")
        ->capture_default_str();
    synth->add_option("--minutes", synth_minutes, "length in minutes")->capture_default_str();
    synth->add_option("--noise", synth_noise, "load noise std")->capture_default_str();
    synth->callback([&] {
        std::ostringstream j;
        j << "{\"out\":" << jstr(out_dir) << ",\"zones\":" << synth_zones
          << ",\"start\":" << jstr(synth_start) << ",\"minutes\":" << synth_minutes
          << ",\"seed\":" << (seed ? seed : 1) << ",\"noise\":" << synth_noise << "}";
        std::exit(
            report(gridtd_synth_profiles(j.str().c_str(), message, sizeof(message)), message));
    });

    // --- metrics -----------------------------------------------------------------
    auto* metrics = app.add_subcommand("metrics", "analysis reports from CSV inputs");
    metrics->require_subcommand(1);
    std::string m_in, m_real, m_synth, m_channel;
    int m_horizon = 60, m_order = 10, m_max_lag = 100;
    std::size_t m_nperseg = 0, m_from_row = 0;
    double m_dt = 60.0, m_rate = 240.0;

    auto* m_forecast = metrics->add_subcommand("forecast", "persistence-benchmark errors");
    m_forecast->add_option("--in", m_in, "series CSV")->required();
    m_forecast->add_option("--horizon", m_horizon, "steps ahead")->capture_default_str();
    m_forecast->callback([&] {
        std::ostringstream j;
        j << "{\"task\":\"forecast\",\"in\":" << jstr(m_in) << ",\"out\":" << jstr(out_dir)
          << ",\"horizon\":" << m_horizon << "}";
        std::exit(report(gridtd_metrics(j.str().c_str(), message, sizeof(message)), message));
    });

    auto* m_events = metrics->add_subcommand("events", "classification scores");
    m_events->add_option("--in", m_in, "CSV with y_true,y_pred columns")->required();
    m_events->callback([&] {
        std::ostringstream j;
        j << "{\"task\":\"events\",\"in\":" << jstr(m_in) << ",\"out\":" << jstr(out_dir) << "}";
        std::exit(report(gridtd_metrics(j.str().c_str(), message, sizeof(message)), message));
    });

    auto* m_fid = metrics->add_subcommand("fidelity", "correlation fidelity of synthetic data");
    m_fid->add_option("--real", m_real, "real set CSV")->required();
    m_fid->add_option("--synthetic", m_synth, "synthetic set CSV")->required();
    m_fid->add_option("--max-lag", m_max_lag, "autocorrelation lags")->capture_default_str();
    m_fid->callback([&] {
        std::ostringstream j;
        j << "{\"task\":\"fidelity\",\"real\":" << jstr(m_real)
          << ",\"synthetic\":" << jstr(m_synth) << ",\"out\":" << jstr(out_dir)
          << ",\"max_lag\":" << m_max_lag << "}";
        std::exit(report(gridtd_metrics(j.str().c_str(), message, sizeof(message)), message));
    });

    auto* m_psd = metrics->add_subcommand("psd", "Welch power spectral density");
    bool m_seconds = false;
    m_psd->add_option("--in", m_in, "series CSV")->required();
    m_psd->add_option("--channel", m_channel, "channel name")->required();
    m_psd->add_option("--sample-interval", m_dt, "seconds between samples")
        ->capture_default_str();
    m_psd->add_option("--nperseg", m_nperseg, "segment length (0 = auto)")
        ->capture_default_str();
    m_psd->add_flag("--seconds-time", m_seconds, "time column is numeric seconds");
    m_psd->callback([&] {
        std::ostringstream j;
        j << "{\"task\":\"psd\",\"in\":" << jstr(m_in) << ",\"channel\":" << jstr(m_channel)
          << ",\"out\":" << jstr(out_dir) << ",\"sample_interval\":" << m_dt
          << ",\"nperseg\":" << m_nperseg << ",\"time_is_text\":" << (m_seconds ? "false" : "true")
          << "}";
        std::exit(report(gridtd_metrics(j.str().c_str(), message, sizeof(message)), message));
    });

    auto* m_modes = metrics->add_subcommand("modes", "ringdown modal estimates");
    m_modes->add_option("--in", m_in, "series CSV")->required();
    m_modes->add_option("--channel", m_channel, "channel name")->required();
    m_modes->add_option("--sample-rate", m_rate, "Hz")->capture_default_str();
    m_modes->add_option("--order", m_order, "model order")->capture_default_str();
    m_modes->add_option("--from-row", m_from_row, "skip rows before the ringdown")
        ->capture_default_str();
    m_modes->callback([&] {
        std::ostringstream j;
        j << "{\"task\":\"modes\",\"in\":" << jstr(m_in) << ",\"channel\":" << jstr(m_channel)
          << ",\"out\":" << jstr(out_dir) << ",\"sample_rate\":" << m_rate
          << ",\"order\":" << m_order << ",\"from_row\":" << m_from_row << "}";
        std::exit(report(gridtd_metrics(j.str().c_str(), message, sizeof(message)), message));
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}
