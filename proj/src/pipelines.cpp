#include "gridtd/pipelines.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gridtd/errors.hpp"
#include "gridtd/manifest.hpp"

namespace gridtd {

namespace fs = std::filesystem;

std::string ProfileSource::describe() const {
    if (!synthetic) return dir;
    std::ostringstream s;
    s << "synthetic seed=" << seed << " zones=" << zone_count << " start=" << start
      << " minutes=" << minutes;
    return s.str();
}

std::vector<ZoneProfile> resolve_profiles(const ProfileSource& src) {
    if (!src.synthetic) {
        if (src.dir.empty() || !fs::is_directory(src.dir))
            throw ParseError("profiles directory not found: " + src.dir);
        auto zones = load_profile_dir(src.dir);
        if (zones.empty()) throw ParseError("no zone CSV files in " + src.dir);
        return zones;
    }
    if (src.zone_count < 1) throw ValidationError("need at least one synthetic zone");
    SynthConfig cfg;
    cfg.start = parse_minute(src.start);
    cfg.minutes = src.minutes;
    cfg.noise = src.noise;
    std::vector<ZoneProfile> zones;
    for (int z = 0; z < src.zone_count; ++z) {
        cfg.seed = src.seed + static_cast<std::uint64_t>(z);
        zones.push_back(synth_zone_profile("Z" + std::to_string(z + 1), cfg));
    }
    return zones;
}

int run_steady_pipeline(const SteadyPipelineArgs& args, std::string* message) {
    RunManifest manifest;
    manifest.command = "steady";
    manifest.case_path = args.case_path;
    manifest.profile_source = args.profiles.describe();
    manifest.seed = args.profiles.seed;
    manifest.started = now_utc_text();

    NetworkModel net;
    std::vector<ZoneProfile> zones;
    SteadyRunConfig cfg;
    try {
        net = load_case(args.case_path);
        validate(net);
        zones = resolve_profiles(args.profiles);
        cfg.start = args.from.empty() ? zones[0].start : parse_minute(args.from);
        cfg.end = args.to.empty() ? cfg.start + 10 : parse_minute(args.to);
        cfg.load_scale = args.load_scale;
        cfg.eps = args.eps;
        if (args.out_dir.empty()) throw ValidationError("output directory required");
        for (const auto& z : zones)
            if (!z.covers(cfg.start) || !z.covers(cfg.end - 1))
                throw ProfileGap("window not covered by zone " + z.zone);
    } catch (const std::exception& e) {
        if (message) *message = std::string("input error: ") + e.what();
        return kExitUsage;
    }

    const fs::path out(args.out_dir);
    const fs::path case_dir = out / ("case_" + std::to_string(args.case_index));
    try {
        const ProfileBindings bindings = default_bindings(net, zones.size());
        const SteadySeries series = run_steady_series(net, zones, bindings, cfg);
        fs::create_directories(case_dir);
        const std::string k = std::to_string(args.case_index);
        const fs::path input_path = case_dir / ("pf_input_" + k + ".txt");
        const fs::path result_path = case_dir / ("pf_result_" + k + ".csv");
        {
            std::ofstream meta(input_path);
            meta << "case: " << args.case_path << "\n" << series.metadata;
        }
        write_pf_result(series.frame, result_path.string());
        manifest_add_output(manifest, args.out_dir, input_path.string());
        manifest_add_output(manifest, args.out_dir, result_path.string());
        manifest.finished = now_utc_text();
        write_run_manifest(manifest, (out / "manifest.json").string());
        if (message)
            *message = "wrote " + std::to_string(series.frame.rows()) + " timestamps to " +
                       case_dir.string();
        return kExitOk;
    } catch (const std::exception& e) {
        // No partial data: a failed window leaves only the manifest behind.
        std::error_code ec;
        fs::remove_all(case_dir, ec);
        manifest.warnings.push_back(std::string("solver failure: ") + e.what());
        manifest.finished = now_utc_text();
        fs::create_directories(out);
        write_run_manifest(manifest, (out / "manifest.json").string());
        if (message) *message = std::string("solver failure: ") + e.what();
        return kExitSolver;
    }
}

int run_transient_pipeline(const TransientPipelineArgs& args, std::string* message) {
    RunManifest manifest;
    manifest.command = "transient";
    manifest.case_path = args.case_path;
    manifest.profile_source = args.profiles.describe();
    manifest.seed = args.seed;
    manifest.started = now_utc_text();

    NetworkModel net;
    std::vector<ZoneProfile> zones;
    KindWeights weights = uniform_kind_weights();
    try {
        net = load_case(args.case_path);
        validate(net);
        zones = resolve_profiles(args.profiles);
        if (args.n < 1) throw ValidationError("scenario count must be >= 1");
        if (args.out_dir.empty()) throw ValidationError("output directory required");
        if (!args.kind_weights.empty()) {
            weights.clear();
            for (const auto& [name, w] : args.kind_weights) {
                if (w < 0) throw ValidationError("negative kind weight");
                if (w > 0) weights[event_kind_from(name)] = w;
            }
            double sum = 0;
            for (const auto& [k, w] : weights) sum += w;
            if (sum <= 0) throw ValidationError("kind weights sum to zero");
            for (auto& [k, w] : weights) w /= sum;
        }
    } catch (const std::exception& e) {
        if (message) *message = std::string("input error: ") + e.what();
        return kExitUsage;
    }

    try {
        const ProfileBindings bindings = default_bindings(net, zones.size());
        const BatchManifest batch =
            run_batch(net, zones, bindings, args.n, args.seed, args.out_dir, weights,
                      /*route_by_kind=*/true, args.jobs);
        int failures = 0;
        for (const auto& row : batch.rows) {
            if (row.status != "ok") {
                ++failures;
                manifest.warnings.push_back("row " + std::to_string(row.row) + " " + row.status);
                continue;
            }
            const fs::path dir = fs::path(args.out_dir) /
                                 (row.spec.kind == EventKind::ForcedOscillation
                                      ? "forced_oscillation"
                                      : "natural_oscillation") /
                                 ("row_" + std::to_string(row.row));
            manifest_add_output(manifest, args.out_dir, (dir / "trans.csv").string());
            manifest_add_output(manifest, args.out_dir, (dir / "dist.csv").string());
        }
        manifest_add_output(manifest, args.out_dir,
                            (fs::path(args.out_dir) / "manifest.csv").string());
        manifest.finished = now_utc_text();
        write_run_manifest(manifest, (fs::path(args.out_dir) / "manifest.json").string());
        if (message) {
            std::ostringstream s;
            s << (args.n - failures) << "/" << args.n << " scenarios written to "
              << args.out_dir;
            if (failures > 0) s << " (" << failures << " failed; see manifest warnings)";
            *message = s.str();
        }
        return kExitOk;
    } catch (const std::exception& e) {
        if (message) *message = std::string("batch failure: ") + e.what();
        return kExitSolver;
    }
}

}  // namespace gridtd
