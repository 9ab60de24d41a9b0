#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lcrdo/channel.hpp"
#include "lcrdo/errors.hpp"
#include "lcrdo/mac.hpp"
#include "lcrdo/media.hpp"
#include "lcrdo/metrics.hpp"
#include "lcrdo/transmitters.hpp"

namespace lcrdo {

struct MetricsOptions {
    double d0 = 0.0;  // 0 = n1 (1 + n2 (1 + n3)) of the GOF config
    bool ssim = true;
    int ssim_window = 8;
    int best_frames = 10;
    int worst_frames = 10;
};

struct SimConfig {
    std::string label;
    std::uint64_t seed = 1;
    Policy policy = Policy::LcrdoAck;

    // GOF-driven policies stop after packet_budget packets; duration (> 0)
    // additionally caps simulated time. Beacon-driven policies run for duration.
    std::int64_t packet_budget = 3500;
    double duration = 0.0;

    Topology topology = twin_orbit_topology();
    ChannelParams channel;
    bool calibrate = true;
    double calibration_target = 0.40;
    double calibration_tol = 0.005;
    LossModel loss_model = LossModel::PositionCorrelated;

    MacConfig mac;
    GofConfig gof;
    int payload_bytes = 1000;

    // Beacon-driven policies
    EncoderProfile encoder1;
    EncoderProfile encoder2;
    EncoderLock encoder_lock = EncoderLock::None;
    bool app_retry = true;
    int x1 = 30;
    int x2 = 50;
    double playout_delay = 1.0;  // s after capture

    std::uint64_t content_seed = 7;
    MetricsOptions metrics;

    bool beacon_driven() const noexcept { return uses_encoder_pair(policy); }

    double d0() const { return metrics.d0 > 0.0 ? metrics.d0 : gof.max_reduction(); }

    void validate() const {
        topology.validate();
        channel.validate();
        mac.validate();
        gof.validate();
        require(payload_bytes > 0, "run: payload_bytes must be positive");
        require(duration >= 0.0 && std::isfinite(duration), "run: duration must be finite and >= 0");
        require(playout_delay > 0.0, "run: playout_delay must be positive");
        if (calibrate) {
            require(calibration_target >= 0.0 && calibration_target <= 1.0,
                    "calibration: target must lie in [0, 1]");
            require(calibration_tol > 0.0, "calibration: tol must be positive");
        }
        require(metrics.ssim_window >= 1, "metrics: ssim_window must be >= 1");
        require(metrics.best_frames >= 0 && metrics.worst_frames >= 0 &&
                    metrics.best_frames + metrics.worst_frames >= 1,
                "metrics: best_frames + worst_frames must be >= 1");
        if (beacon_driven()) {
            encoder1.validate();
            encoder2.validate();
            require(duration > 0.0, "run: policy '" + std::string(to_string(policy)) + "' needs duration > 0");
            HysteresisController{Rssi{x1}, Rssi{x2}}.validate();
        } else {
            require(packet_budget > 0 || duration > 0.0, "run: set packet_budget or duration");
            require(packet_budget >= 0, "run: packet_budget must be >= 0");
            require(encoder_lock == EncoderLock::None, "run: encoder_lock only applies to beacon-driven policies");
            validate_d0(gof, d0());
        }
    }
};

// Sets the encoder pair to the policy's defaults (no-op for GOF-driven policies).
inline void apply_policy_defaults(SimConfig& c) {
    if (!uses_encoder_pair(c.policy)) return;
    auto [e1, e2] = encoder_pair_for(c.policy);
    c.encoder1 = e1;
    c.encoder2 = e2;
}

// ---------------------------------------------------------------------------
// INI file

namespace detail {

using boost::property_tree::ptree;

inline double period_to_speed(double period) { return period == 0.0 ? 0.0 : 2.0 * std::numbers::pi / period; }
inline double speed_to_period(double w) { return w == 0.0 ? 0.0 : 2.0 * std::numbers::pi / w; }

class IniReader {
public:
    IniReader(const ptree& root, std::string source) : root_(root), source_(std::move(source)) {
        for (const auto& [section, body] : root_) {
            if (body.empty() && !body.data().empty()) {
                throw ConfigError(source_ + ": key '" + section + "' must live inside a [section]");
            }
        }
    }

    bool has_section(const std::string& s) const { return root_.find(s) != root_.not_found(); }

    template <typename T>
    void get(const std::string& section, const std::string& key, T& out) {
        seen_.insert(section + "." + key);
        auto sec = root_.find(section);
        if (sec == root_.not_found()) return;
        auto it = sec->second.find(key);
        if (it == sec->second.not_found()) return;
        const std::string text = it->second.data();
        out = convert<T>(section, key, text);
    }

    void get_path(const std::string& section, const std::string& prefix, CircularPath& p) {
        get(section, prefix + "_x", p.center.x);
        get(section, prefix + "_y", p.center.y);
        get(section, prefix + "_radius", p.radius);
        double period = speed_to_period(p.angular_speed);
        get(section, prefix + "_period", period);
        p.angular_speed = period_to_speed(period);
        get(section, prefix + "_phase", p.phase0);
    }

    void get_triple(const std::string& section, const std::string& key, std::array<int, 3>& out) {
        std::string text;
        get(section, key, text);
        if (text.empty()) return;
        std::array<int, 3> v{};
        char c1 = 0;
        char c2 = 0;
        std::istringstream in(text);
        if (!(in >> v[0] >> c1 >> v[1] >> c2 >> v[2]) || c1 != ',' || c2 != ',' || !(in >> std::ws).eof()) {
            throw ConfigError(source_ + ": [" + section + "] " + key + " = '" + text +
                              "' is not a triple like 1,2,6");
        }
        out = v;
    }

    // Every key present must have been requested.
    void reject_unknown() const {
        for (const auto& [section, body] : root_) {
            for (const auto& [key, value] : body) {
                if (!seen_.contains(section + "." + key)) {
                    throw ConfigError(source_ + ": unknown key '" + key + "' in section [" + section + "]");
                }
            }
        }
    }

private:
    template <typename T>
    T convert(const std::string& section, const std::string& key, const std::string& text) const {
        auto fail = [&](std::string_view what) {
            return ConfigError(source_ + ": [" + section + "] " + key + " = '" + text + "' is not " +
                               std::string(what));
        };
        if constexpr (std::is_same_v<T, std::string>) {
            return text;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
            if (text == "false" || text == "0" || text == "no" || text == "off") return false;
            throw fail("a boolean");
        } else {
            std::istringstream in(text);
            T v{};
            if (!(in >> v) || !(in >> std::ws).eof()) throw fail("a number");
            if constexpr (std::is_floating_point_v<T>) {
                if (!std::isfinite(v)) throw fail("a finite number");
            }
            return v;
        }
    }

    const ptree& root_;
    std::string source_;
    std::set<std::string> seen_;
};

inline void read_encoder(IniReader& r, const std::string& section, EncoderProfile& e) {
    std::string family(to_string(e.family));
    r.get(section, "name", e.name);
    r.get(section, "family", family);
    e.family = parse_codec_family(family);
    r.get_triple(section, "frames", e.gof.frames_per_priority);
    r.get_triple(section, "packets", e.gof.packets_per_frame);
    r.get(section, "gof_period", e.gof.gof_period);
    r.get(section, "frame_rate", e.gof.frame_rate);
    r.get(section, "quality", e.quality);
    r.get(section, "delta_per_key", e.delta_per_key);
    r.get(section, "payload_bytes", e.payload_bytes);
    r.get(section, "width", e.width);
    r.get(section, "height", e.height);
    double cap = e.bitrate_cap_bps.value_or(0.0);
    r.get(section, "bitrate_cap_bps", cap);
    if (cap > 0.0) {
        e.bitrate_cap_bps = cap;
    } else {
        e.bitrate_cap_bps.reset();
    }
}

}  // namespace detail

// Parses the INI configuration. Missing keys keep their defaults; unknown
// keys and malformed values raise ConfigError naming the key.
inline SimConfig parse_config(std::istream& in, const std::string& source = "<config>") {
    boost::property_tree::ptree root;
    try {
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    detail::IniReader r(root, source);
    SimConfig c;

    std::string policy(to_string(c.policy));
    r.get("run", "policy", policy);
    c.policy = parse_policy(policy);
    apply_policy_defaults(c);

    r.get("run", "label", c.label);
    r.get("run", "seed", c.seed);
    r.get("run", "packet_budget", c.packet_budget);
    r.get("run", "duration", c.duration);
    std::string loss(to_string(c.loss_model));
    r.get("run", "loss_model", loss);
    c.loss_model = parse_loss_model(loss);
    std::string lock(to_string(c.encoder_lock));
    r.get("run", "encoder_lock", lock);
    c.encoder_lock = parse_encoder_lock(lock);
    r.get("run", "app_retry", c.app_retry);
    r.get("run", "playout_delay", c.playout_delay);
    r.get("run", "content_seed", c.content_seed);

    r.get_path("topology", "source", c.topology.source);
    r.get_path("topology", "destination", c.topology.destination);
    bool interferer = c.topology.interferer.has_value();
    r.get("topology", "interferer", interferer);
    CircularPath ip = c.topology.interferer.value_or(CircularPath{});
    r.get_path("topology", "interferer", ip);
    if (interferer) {
        c.topology.interferer = ip;
    } else {
        c.topology.interferer.reset();
    }

    r.get("channel", "alpha", c.channel.alpha);
    r.get("channel", "ref_loss_db", c.channel.ref_loss_db);
    r.get("channel", "d0", c.channel.d0);
    r.get("channel", "tx_power_dbm", c.channel.tx_power_dbm);
    r.get("channel", "drop_midpoint_dbm", c.channel.drop_midpoint_dbm);
    r.get("channel", "drop_steepness", c.channel.drop_steepness);
    r.get("channel", "interference_collision_prob", c.channel.interference_collision_prob);
    r.get("channel", "rssi_min_dbm", c.channel.rssi_min_dbm);
    r.get("channel", "rssi_max_dbm", c.channel.rssi_max_dbm);

    r.get("calibration", "enabled", c.calibrate);
    r.get("calibration", "target", c.calibration_target);
    r.get("calibration", "tol", c.calibration_tol);

    r.get("mac", "max_retries", c.mac.max_retries);
    r.get("mac", "tx_duration", c.mac.tx_duration);
    r.get("mac", "ack_duration", c.mac.ack_duration);
    r.get("mac", "beacon_interval", c.mac.beacon_interval);
    r.get("mac", "phy_rate_bps", c.mac.phy_rate_bps);

    r.get_triple("gof", "frames", c.gof.frames_per_priority);
    r.get_triple("gof", "packets", c.gof.packets_per_frame);
    r.get("gof", "period", c.gof.gof_period);
    r.get("gof", "frame_rate", c.gof.frame_rate);
    r.get("gof", "payload_bytes", c.payload_bytes);

    detail::read_encoder(r, "encoder1", c.encoder1);
    detail::read_encoder(r, "encoder2", c.encoder2);
    r.get("hysteresis", "x1", c.x1);
    r.get("hysteresis", "x2", c.x2);

    r.get("metrics", "d0", c.metrics.d0);
    r.get("metrics", "ssim", c.metrics.ssim);
    r.get("metrics", "ssim_window", c.metrics.ssim_window);
    r.get("metrics", "best_frames", c.metrics.best_frames);
    r.get("metrics", "worst_frames", c.metrics.worst_frames);

    r.reject_unknown();
    c.validate();
    return c;
}

inline SimConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

// ---------------------------------------------------------------------------
// Presets

// Mobile-link baseline comparison: twin orbits, interferer on, channel
// calibrated to a 40 % mean per-attempt drop rate, 3500-packet budget.
// A 0.45 s GOF is short enough that stop-and-wait with unbounded retries
// falls behind the source while f1-only retries keep up. One revolution is
// 23/3 GOFs, so the 23 GOF start instants fall on evenly spaced orbit phases.
inline SimConfig sim40_config(Policy policy, std::uint64_t seed = 1) {
    SimConfig c;
    c.label = std::string(to_string(policy));
    c.seed = seed;
    c.policy = policy;
    c.packet_budget = 3500;
    c.topology = twin_orbit_topology(3.45, true);
    c.calibrate = true;
    c.calibration_target = 0.40;
    c.calibration_tol = 0.005;
    c.gof = GofConfig{{1, 2, 6}, {50, 20, 10}, 0.45, 20.0};
    c.metrics.ssim = false;
    return c;
}

// Ground station at the origin, one AAV orbiting so the link sweeps from
// close range to well past the drop transition. The RSSI window puts the
// calibrated transition inside the (x1, x2) band.
inline SimConfig field_config(Policy policy, std::uint64_t seed) {
    SimConfig c;
    c.seed = seed;
    c.policy = policy;
    apply_policy_defaults(c);
    c.duration = 120.0;
    c.packet_budget = 0;
    c.topology.source = CircularPath{{250.0, 0.0}, 200.0, 2.0 * std::numbers::pi / 40.0, 0.0};
    c.topology.source.phase0 = std::numbers::pi;  // start at closest approach
    c.topology.destination = CircularPath{{0.0, 0.0}, 0.0, 0.0, 0.0};
    c.topology.interferer.reset();
    // Sharp fade edges; the RSSI scale is narrow and sits on the calibrated
    // drop midpoint (about -104.7 dBm): RSSI 50 is roughly 28% drop and
    // RSSI 30 roughly 65%.
    c.channel.drop_steepness = 2.0;
    c.channel.rssi_min_dbm = -106.25;
    c.channel.rssi_max_dbm = -101.17;
    c.calibrate = true;
    c.calibration_target = 0.40;
    c.calibration_tol = 0.005;
    c.mac.tx_duration = 0.0005;
    c.mac.ack_duration = 0.0005;
    c.mac.phy_rate_bps = 1.0e6;
    c.playout_delay = 1.0;
    c.app_retry = true;
    c.metrics.ssim = false;
    return c;
}

struct TrioCase {
    std::string label;
    SimConfig config;
};

inline bool is_trio_preset(std::string_view name) { return name == "exp1" || name == "exp2" || name == "exp3"; }

// (a) unmodified transmitter on the degraded encoder, (b) unmodified on the
// high encoder, (c) beacon-driven switching between both.
inline std::vector<TrioCase> trio_preset(std::string_view name, std::uint64_t seed) {
    Policy p{};
    std::array<std::string, 3> labels;
    if (name == "exp1") {
        p = Policy::LcrdoBeacon;
        labels = {"1a-i-frames-only", "1b-all-frames", "1c-lcrdo-beacon"};
    } else if (name == "exp2") {
        p = Policy::LcrdoAdaptiveMpeg2;
        labels = {"2a-100kbps", "2b-unlimited-rate", "2c-lcrdo-adaptive-mpeg2"};
    } else if (name == "exp3") {
        p = Policy::LcrdoAdaptiveMjpeg;
        labels = {"3a-low-quality", "3b-high-quality", "3c-lcrdo-adaptive-mjpeg"};
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected exp1 | exp2 | exp3 | sim40)");
    }
    const std::array<EncoderLock, 3> locks{EncoderLock::Encoder2, EncoderLock::Encoder1, EncoderLock::None};
    std::vector<TrioCase> out;
    for (std::size_t i = 0; i < 3; ++i) {
        SimConfig c = field_config(p, seed);
        c.label = labels[i];
        c.encoder_lock = locks[i];
        out.push_back({labels[i], c});
    }
    return out;
}

}  // namespace lcrdo
