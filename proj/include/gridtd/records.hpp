#pragma once

#include <string>
#include <vector>

namespace gridtd {

/// Uniformly sampled named measurement channels. The time column is either
/// textual timestamps (minute data) or seconds (transient data); exactly one
/// of time_text / time_s is populated.
struct ChannelFrame {
    std::vector<std::string> time_text;  // ISO timestamps for minute data
    std::vector<double> time_s;          // seconds for transient data
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;  // one series per name

    size_t rows() const { return time_text.empty() ? time_s.size() : time_text.size(); }
    size_t cols() const { return names.size(); }
    int channel(const std::string& name) const;
    std::vector<double>& series(const std::string& name);
    const std::vector<double>& series(const std::string& name) const;
    void add_channel(const std::string& name, std::vector<double> v);
};

/// Formats a double as shortest decimal text at 9 significant digits.
std::string format_value(double v);

void write_pf_result(const ChannelFrame& frame, const std::string& path);
ChannelFrame read_pf_result(const std::string& path);

struct TransientFrames {
    ChannelFrame trans;
    // dist channels are pre-named "<couplingBus>.<node>.<phase>"
    ChannelFrame dist;
};

void write_trans_csv(const ChannelFrame& frame, const std::string& path);
void write_dist_csv(const ChannelFrame& frame, const std::string& path);
ChannelFrame read_trans_csv(const std::string& path);
ChannelFrame read_dist_csv(const std::string& path);

/// Generic CSV frame I/O used by the zone-profile and metric reports.
void write_frame_csv(const ChannelFrame& frame, const std::string& path,
                     const std::string& time_header);
ChannelFrame read_frame_csv(const std::string& path, bool time_is_text);

}  // namespace gridtd
