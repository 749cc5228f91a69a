#include "gridtd/records.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include "gridtd/errors.hpp"

namespace gridtd {

int ChannelFrame::channel(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<double>& ChannelFrame::series(const std::string& name) {
    int i = channel(name);
    if (i < 0) throw SchemaMismatch("no channel named '" + name + "'");
    return values[i];
}

const std::vector<double>& ChannelFrame::series(const std::string& name) const {
    int i = channel(name);
    if (i < 0) throw SchemaMismatch("no channel named '" + name + "'");
    return values[i];
}

void ChannelFrame::add_channel(const std::string& name, std::vector<double> v) {
    if (channel(name) >= 0) throw SchemaMismatch("duplicate channel name '" + name + "'");
    names.push_back(name);
    values.push_back(std::move(v));
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

static std::string format_seconds(double t) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", t);
    return buf;
}

// Splits one CSV line; quoted fields may contain commas (transient headers
// carry circuit labels like '1 ' which are not quoted fields themselves, but
// dist headers never contain commas, so a plain split suffices).
static std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

static void write_csv(const ChannelFrame& frame, const std::string& path,
                      const std::string& time_header) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << time_header;
    for (const auto& n : frame.names) out << "," << n;
    out << "\n";
    const bool textual = !frame.time_text.empty();
    for (size_t r = 0; r < frame.rows(); ++r) {
        out << (textual ? frame.time_text[r] : format_seconds(frame.time_s[r]));
        for (const auto& v : frame.values) out << "," << format_value(v[r]);
        out << "\n";
    }
}

static ChannelFrame read_csv(const std::string& path, bool time_is_text) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    auto header = split_csv(line);
    if (header.empty()) throw ParseError(path + ": empty header");
    ChannelFrame frame;
    frame.names.assign(header.begin() + 1, header.end());
    frame.values.assign(frame.names.size(), {});
    size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++row;
        auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(row) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        if (time_is_text)
            frame.time_text.push_back(cells[0]);
        else {
            try {
                frame.time_s.push_back(std::stod(cells[0]));
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(row) + " bad time value");
            }
        }
        for (size_t c = 1; c < cells.size(); ++c) {
            try {
                frame.values[c - 1].push_back(std::stod(cells[c]));
            } catch (const std::exception&) {
                throw ParseError(path + ": row " + std::to_string(row) + " column " +
                                 std::to_string(c + 1) + " not numeric");
            }
        }
    }
    return frame;
}

void write_frame_csv(const ChannelFrame& frame, const std::string& path,
                     const std::string& time_header) {
    write_csv(frame, path, time_header);
}

ChannelFrame read_frame_csv(const std::string& path, bool time_is_text) {
    return read_csv(path, time_is_text);
}

static const std::regex kPfPattern(R"(^(Vm_\S+|Va_\S+|P_\S+_\S+_\S+|Q_\S+_\S+_\S+)$)");

void write_pf_result(const ChannelFrame& frame, const std::string& path) {
    for (const auto& n : frame.names)
        if (!std::regex_match(n, kPfPattern))
            throw SchemaMismatch("channel '" + n + "' does not match the pf_result schema");
    write_csv(frame, path, "time");
}

ChannelFrame read_pf_result(const std::string& path) {
    auto frame = read_csv(path, true);
    for (const auto& n : frame.names)
        if (!std::regex_match(n, kPfPattern))
            throw SchemaMismatch("channel '" + n + "' does not match the pf_result schema");
    return frame;
}

static const std::regex kTransPattern(
    R"(^(VOLT \d+|(POWR|VARS) \d+ TO \d+ CKT '[^']*')$)");

void write_trans_csv(const ChannelFrame& frame, const std::string& path) {
    for (const auto& n : frame.names)
        if (!std::regex_match(n, kTransPattern))
            throw SchemaMismatch("channel '" + n + "' does not match the trans schema");
    write_csv(frame, path, "Time(s)");
}

ChannelFrame read_trans_csv(const std::string& path) {
    auto frame = read_csv(path, false);
    for (const auto& n : frame.names)
        if (!std::regex_match(n, kTransPattern))
            throw SchemaMismatch("channel '" + n + "' does not match the trans schema");
    return frame;
}

static const std::regex kDistPattern(R"(^\d+\.[^.]+\.[123]$)");

void write_dist_csv(const ChannelFrame& frame, const std::string& path) {
    for (const auto& n : frame.names)
        if (!std::regex_match(n, kDistPattern))
            throw SchemaMismatch("channel '" + n + "' does not match the dist schema");
    write_csv(frame, path, "Time(s)");
}

ChannelFrame read_dist_csv(const std::string& path) {
    auto frame = read_csv(path, false);
    for (const auto& n : frame.names)
        if (!std::regex_match(n, kDistPattern))
            throw SchemaMismatch("channel '" + n + "' does not match the dist schema");
    return frame;
}

}  // namespace gridtd
