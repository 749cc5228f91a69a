#include "gridtd/manifest.hpp"

#include <ctime>
#include <filesystem>
#include <fstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "gridtd/errors.hpp"

namespace gridtd {

namespace fs = std::filesystem;

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string now_utc_text() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void manifest_add_output(RunManifest& m, const std::string& base_dir, const std::string& path) {
    m.outputs.emplace_back(fs::relative(path, base_dir).generic_string(), sha256_file(path));
}

void write_run_manifest(const RunManifest& m, const std::string& path) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["case"] = m.case_path;
    j["profiles"] = m.profile_source;
    j["seed"] = m.seed;
    j["tool_version"] = m.tool_version;
    j["started"] = m.started;
    j["finished"] = m.finished;
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& [rel, digest] : m.outputs)
        j["outputs"].push_back({{"path", rel}, {"sha256", digest}});
    j["warnings"] = m.warnings;
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace gridtd
