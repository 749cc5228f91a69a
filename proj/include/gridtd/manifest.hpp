#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace gridtd {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 digest of the file contents.
std::string sha256_file(const std::string& path);

/// Run provenance: every emitted file is listed with its digest so reruns can
/// be compared byte-for-byte.
struct RunManifest {
    std::string command;
    std::string case_path;
    std::string profile_source;  // directory or "synthetic seed=<n>"
    std::uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    std::string started;   // ISO UTC wall time
    std::string finished;
    std::vector<std::pair<std::string, std::string>> outputs;  // rel. path, digest
    std::vector<std::string> warnings;
};

std::string now_utc_text();

/// Digests path (on disk) and records it under its path relative to base_dir.
void manifest_add_output(RunManifest& m, const std::string& base_dir, const std::string& path);

void write_run_manifest(const RunManifest& m, const std::string& path);

}  // namespace gridtd
