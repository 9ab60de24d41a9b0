#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "lcrdo/engine.hpp"

namespace lcrdo {

inline constexpr const char* kResultSchema = "lcrdo.result/1";

// Shortest round-trip decimal form; identical bits always print identically.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double failed");
    return std::string(buf.data(), end);
}

// The headline numbers of a run, shared by the JSON export and its reader.
struct ResultSummary {
    std::string label;
    std::string policy;
    std::uint64_t seed = 0;
    double d0 = 0.0;
    double d_M = 0.0;
    double temporal_ratio = 0.0;
    std::optional<double> avg_ssim;
    std::array<double, 3> packet_drop_rate_by_priority{};
    std::array<double, 3> frame_completion_rate{};
    std::size_t gof_count = 0;
    std::size_t switches = 0;
    std::size_t trace_rows = 0;

    friend bool operator==(const ResultSummary&, const ResultSummary&) = default;
};

inline ResultSummary summarize(const RunResult& r) {
    ResultSummary s;
    s.label = r.config.label;
    s.policy = std::string(to_string(r.config.policy));
    s.seed = r.config.seed;
    s.d0 = r.report.d0;
    s.d_M = r.report.d_M;
    s.temporal_ratio = r.report.temporal_ratio;
    s.avg_ssim = r.report.avg_ssim;
    s.packet_drop_rate_by_priority = r.report.packet_drop_rate_by_priority;
    s.frame_completion_rate = r.report.frame_completion_rate;
    s.gof_count = r.report.per_gof.size();
    s.switches = r.switches.size();
    s.trace_rows = r.trace.size();
    return s;
}

namespace detail {

using nlohmann::ordered_json;

inline ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

inline ordered_json path_json(const CircularPath& p) {
    return {{"x", p.center.x},
            {"y", p.center.y},
            {"radius", p.radius},
            {"angular_speed", p.angular_speed},
            {"phase0", p.phase0}};
}

inline ordered_json channel_json(const ChannelParams& c) {
    return {{"alpha", c.alpha},
            {"ref_loss_db", c.ref_loss_db},
            {"d0", c.d0},
            {"tx_power_dbm", c.tx_power_dbm},
            {"drop_midpoint_dbm", c.drop_midpoint_dbm},
            {"drop_steepness", c.drop_steepness},
            {"interference_collision_prob", c.interference_collision_prob},
            {"rssi_min_dbm", c.rssi_min_dbm},
            {"rssi_max_dbm", c.rssi_max_dbm}};
}

inline ordered_json encoder_json(const EncoderProfile& e) {
    return {{"name", e.name},
            {"family", to_string(e.family)},
            {"frames", e.gof.frames_per_priority},
            {"packets", e.gof.packets_per_frame},
            {"gof_period", e.gof.gof_period},
            {"frame_rate", e.gof.frame_rate},
            {"quality", e.quality},
            {"delta_per_key", e.delta_per_key},
            {"payload_bytes", e.payload_bytes},
            {"effective_payload_bytes", e.effective_payload_bytes()},
            {"bitrate_cap_bps", optional_number(e.bitrate_cap_bps)},
            {"width", e.width},
            {"height", e.height}};
}

inline ordered_json config_json(const SimConfig& c) {
    ordered_json j = {{"label", c.label},
                      {"seed", c.seed},
                      {"policy", to_string(c.policy)},
                      {"packet_budget", c.packet_budget},
                      {"duration", c.duration},
                      {"loss_model", to_string(c.loss_model)},
                      {"topology",
                       {{"source", path_json(c.topology.source)},
                        {"destination", path_json(c.topology.destination)},
                        {"interferer", c.topology.interferer ? path_json(*c.topology.interferer)
                                                             : ordered_json(nullptr)}}},
                      {"channel", channel_json(c.channel)},
                      {"calibration",
                       {{"enabled", c.calibrate}, {"target", c.calibration_target}, {"tol", c.calibration_tol}}},
                      {"mac",
                       {{"max_retries", c.mac.max_retries},
                        {"tx_duration", c.mac.tx_duration},
                        {"ack_duration", c.mac.ack_duration},
                        {"beacon_interval", c.mac.beacon_interval},
                        {"phy_rate_bps", c.mac.phy_rate_bps}}},
                      {"gof",
                       {{"frames", c.gof.frames_per_priority},
                        {"packets", c.gof.packets_per_frame},
                        {"period", c.gof.gof_period},
                        {"frame_rate", c.gof.frame_rate},
                        {"payload_bytes", c.payload_bytes}}}};
    if (c.beacon_driven()) {
        j["encoder1"] = encoder_json(c.encoder1);
        j["encoder2"] = encoder_json(c.encoder2);
        j["encoder_lock"] = to_string(c.encoder_lock);
        j["app_retry"] = c.app_retry;
        j["hysteresis"] = {{"x1", c.x1}, {"x2", c.x2}};
        j["playout_delay"] = c.playout_delay;
    }
    j["content_seed"] = c.content_seed;
    j["metrics"] = {{"d0", c.metrics.d0},
                    {"ssim", c.metrics.ssim},
                    {"ssim_window", c.metrics.ssim_window},
                    {"best_frames", c.metrics.best_frames},
                    {"worst_frames", c.metrics.worst_frames}};
    return j;
}

}  // namespace detail

inline nlohmann::ordered_json result_json(const RunResult& r) {
    using detail::ordered_json;
    const DistortionReport& rep = r.report;
    ordered_json per_gof = ordered_json::array();
    for (const auto& g : rep.per_gof) {
        per_gof.push_back({{"gof_index", g.record.gof_index},
                           {"encoder", g.record.encoder},
                           {"n_f1", g.record.n_f1()},
                           {"n_f2", g.record.n_f2()},
                           {"n_f3", g.record.n_f3()},
                           {"expected", g.record.expected},
                           {"frames_lost", g.record.frames_lost()},
                           {"d_m", g.d_m}});
    }
    ordered_json switches = ordered_json::array();
    for (const auto& s : r.switches) {
        switches.push_back({{"time", s.time},
                            {"rssi", s.rssi},
                            {"from", to_string(s.from)},
                            {"to", to_string(s.to)},
                            {"cleared_packets", s.cleared_packets}});
    }
    return {{"schema", kResultSchema},
            {"seed", r.config.seed},
            {"label", r.config.label},
            {"policy", to_string(r.config.policy)},
            {"config", detail::config_json(r.config)},
            {"channel", detail::channel_json(r.channel)},
            {"mean_drop_probability", r.mean_drop_probability},
            {"distortion",
             {{"d0", rep.d0},
              {"d_M", rep.d_M},
              {"temporal_ratio", rep.temporal_ratio},
              {"avg_ssim", detail::optional_number(rep.avg_ssim)},
              {"avg_ssim_mpeg2_decode", detail::optional_number(rep.avg_ssim_mpeg2_decode)},
              {"avg_ssim_mjpeg_decode", detail::optional_number(rep.avg_ssim_mjpeg_decode)},
              {"packet_drop_rate_by_priority", rep.packet_drop_rate_by_priority},
              {"frame_completion_rate", rep.frame_completion_rate},
              {"packets_generated", rep.packets_generated},
              {"packets_transmitted", rep.packets_transmitted},
              {"packets_delivered", rep.packets_delivered},
              {"packets_in_time", rep.packets_in_time},
              {"frames_generated", rep.frames_generated},
              {"frames_displayed", rep.frames_displayed},
              {"per_gof", per_gof}}},
            {"switches", switches},
            {"run",
             {{"end_time", r.end_time},
              {"events", r.events},
              {"beacons", r.beacons},
              {"stopped_by_duration", r.stopped_by_duration},
              {"trace_rows", r.trace.size()}}}};
}

inline ResultSummary summary_from_json(const nlohmann::ordered_json& j) {
    if (j.value("schema", std::string{}) != kResultSchema) {
        throw std::runtime_error("result JSON: unsupported schema '" + j.value("schema", std::string{}) + "'");
    }
    ResultSummary s;
    s.label = j.at("label").get<std::string>();
    s.policy = j.at("policy").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& d = j.at("distortion");
    s.d0 = d.at("d0").get<double>();
    s.d_M = d.at("d_M").get<double>();
    s.temporal_ratio = d.at("temporal_ratio").get<double>();
    if (!d.at("avg_ssim").is_null()) s.avg_ssim = d.at("avg_ssim").get<double>();
    s.packet_drop_rate_by_priority = d.at("packet_drop_rate_by_priority").get<std::array<double, 3>>();
    s.frame_completion_rate = d.at("frame_completion_rate").get<std::array<double, 3>>();
    s.gof_count = d.at("per_gof").size();
    s.switches = j.at("switches").size();
    s.trace_rows = j.at("run").at("trace_rows").get<std::size_t>();
    return s;
}

// Columns: packet_id,frame_id,encoder,priority,size,first_tx_time,attempts,bursts,delivered,arrival_time,in_time
inline void write_trace_csv(std::ostream& out, const RunResult& r) {
    out << "packet_id,frame_id,encoder,priority,size,first_tx_time,attempts,bursts,delivered,arrival_time,in_time\n";
    for (const auto& t : r.trace) {
        out << t.packet_id << ',' << t.frame_id << ',' << t.encoder << ',' << to_string(t.priority) << ','
            << t.size << ',' << format_double(t.first_tx_time) << ',' << t.attempts << ',' << t.bursts << ','
            << (t.delivered ? 1 : 0) << ',' << (t.delivered ? format_double(t.arrival_time) : std::string{}) << ','
            << (t.in_time ? 1 : 0) << '\n';
    }
}

// One row per GOF, then a summary row (row = "summary") carrying the run totals.
// Columns: row,gof_index,encoder,n_f1,n_f2,n_f3,expected_f1,expected_f2,expected_f3,frames_lost,d_m,
//          temporal_ratio,avg_ssim,drop_f1,drop_f2,drop_f3
inline void write_summary_csv(std::ostream& out, const RunResult& r) {
    const DistortionReport& rep = r.report;
    out << "row,gof_index,encoder,n_f1,n_f2,n_f3,expected_f1,expected_f2,expected_f3,frames_lost,d_m,"
           "temporal_ratio,avg_ssim,drop_f1,drop_f2,drop_f3\n";
    for (const auto& g : rep.per_gof) {
        const auto& rec = g.record;
        out << "gof," << rec.gof_index << ',' << rec.encoder << ',' << rec.n_f1() << ',' << rec.n_f2() << ','
            << rec.n_f3() << ',' << rec.expected[0] << ',' << rec.expected[1] << ',' << rec.expected[2] << ','
            << rec.frames_lost() << ',' << format_double(g.d_m) << ",,,,,\n";
    }
    std::int64_t lost = 0;
    std::array<std::int64_t, 3> n{0, 0, 0};
    std::array<std::int64_t, 3> e{0, 0, 0};
    for (const auto& g : rep.per_gof) {
        lost += g.record.frames_lost();
        for (std::size_t i = 0; i < 3; ++i) {
            n[i] += g.record.received[i];
            e[i] += g.record.expected[i];
        }
    }
    out << "summary,," << ',' << n[0] << ',' << n[1] << ',' << n[2] << ',' << e[0] << ',' << e[1] << ',' << e[2]
        << ',' << lost << ',' << format_double(rep.d_M) << ',' << format_double(rep.temporal_ratio) << ','
        << (rep.avg_ssim ? format_double(*rep.avg_ssim) : std::string{}) << ','
        << format_double(rep.packet_drop_rate_by_priority[0]) << ','
        << format_double(rep.packet_drop_rate_by_priority[1]) << ','
        << format_double(rep.packet_drop_rate_by_priority[2]) << '\n';
}

// Receiver counter against arrival time.
inline void write_plotdata_csv(std::ostream& out, const RunResult& r) {
    out << "time,counter,frame_id\n";
    for (const auto& s : r.counter_trace) out << format_double(s.time) << ',' << s.counter << ',' << s.frame_id << '\n';
}

namespace detail {

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace detail

inline void write_outputs(const RunResult& r, const std::filesystem::path& dir, bool plotdata = true) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    detail::write_file(dir / "result.json", [&](std::ostream& o) { o << result_json(r).dump(2) << '\n'; });
    detail::write_file(dir / "trace.csv", [&](std::ostream& o) { write_trace_csv(o, r); });
    detail::write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, r); });
    if (plotdata) detail::write_file(dir / "plotdata.csv", [&](std::ostream& o) { write_plotdata_csv(o, r); });
}

}  // namespace lcrdo
