#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "lcrdo/errors.hpp"

namespace lcrdo {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

// A node flying a fixed circle. radius == 0 describes a stationary node
// (the ground station in the field topology).
struct CircularPath {
    Vec2 center;
    double radius = 40.0;
    double angular_speed = 2.0 * std::numbers::pi / 60.0;  // rad/s
    double phase0 = 0.0;

    bool moving() const noexcept { return radius > 0.0 && angular_speed != 0.0; }

    void validate() const {
        require(radius >= 0.0 && std::isfinite(radius), "path: radius must be finite and >= 0");
        require(std::isfinite(angular_speed), "path: angular_speed must be finite");
        require(std::isfinite(center.x) && std::isfinite(center.y), "path: center must be finite");
    }
};

inline Vec2 position_at(const CircularPath& path, double t) noexcept {
    const double a = path.phase0 + path.angular_speed * t;
    return {path.center.x + path.radius * std::cos(a), path.center.y + path.radius * std::sin(a)};
}

inline double inter_node_distance(const CircularPath& a, const CircularPath& b, double t) noexcept {
    return distance(position_at(a, t), position_at(b, t));
}

struct ChannelParams {
    double alpha = 3.7;                  // path-loss exponent
    double ref_loss_db = 40.0;           // loss at d0
    double d0 = 1.0;                     // m
    double tx_power_dbm = 30.0;
    double drop_midpoint_dbm = -95.0;    // received power at which channel loss is 50 %
    double drop_steepness = 0.4;         // per dB
    double interference_collision_prob = 0.3;
    double rssi_min_dbm = -110.0;        // maps to RSSI 0
    double rssi_max_dbm = -46.5;         // maps to RSSI 127

    void validate() const {
        require(alpha > 0.0, "channel: alpha must be positive");
        require(d0 > 0.0, "channel: d0 must be positive");
        require(drop_steepness > 0.0, "channel: drop_steepness must be positive");
        require(rssi_min_dbm < rssi_max_dbm, "channel: rssi_min_dbm must be below rssi_max_dbm");
        require(interference_collision_prob >= 0.0 && interference_collision_prob <= 1.0,
                "channel: interference_collision_prob must lie in [0, 1]");
        require(std::isfinite(ref_loss_db) && std::isfinite(tx_power_dbm) && std::isfinite(drop_midpoint_dbm),
                "channel: power levels must be finite");
    }
};

// Log-distance path loss. Distances below d0 clamp to the reference loss.
inline double path_loss_db(double d, const ChannelParams& p) noexcept {
    if (!(d > p.d0)) return p.ref_loss_db;
    return p.ref_loss_db + 10.0 * p.alpha * std::log10(d / p.d0);
}

inline double received_power_dbm(double d, const ChannelParams& p) noexcept {
    return p.tx_power_dbm - path_loss_db(d, p);
}

inline double logistic(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

inline double channel_loss_probability(double d, const ChannelParams& p) noexcept {
    return logistic(p.drop_steepness * (p.drop_midpoint_dbm - received_power_dbm(d, p)));
}

// Per-attempt loss: logistic channel loss combined with an independent
// collision against the interfering node.
inline double drop_probability(double d, const ChannelParams& p, bool interferer_active) noexcept {
    const double ch = channel_loss_probability(d, p);
    if (!interferer_active) return ch;
    return 1.0 - (1.0 - ch) * (1.0 - p.interference_collision_prob);
}

class Rssi {
public:
    static constexpr std::uint8_t kInvalid = 128;
    static constexpr std::uint8_t kMax = 127;

    constexpr Rssi() noexcept = default;
    constexpr explicit Rssi(int value) : value_(static_cast<std::uint8_t>(value)) {
        if (value < 0 || value > kInvalid) throw ConfigError("rssi value out of range: " + std::to_string(value));
    }
    static constexpr Rssi invalid() noexcept {
        Rssi r;
        r.value_ = kInvalid;
        return r;
    }

    constexpr int value() const noexcept { return value_; }
    constexpr bool valid() const noexcept { return value_ <= kMax; }

    friend constexpr bool operator==(Rssi, Rssi) = default;

private:
    std::uint8_t value_ = kInvalid;
};

// Linear map of received power from [rssi_min_dbm, rssi_max_dbm] onto 0..127,
// rounded to nearest with halves going up, clamped at both ends.
inline Rssi rssi_from_power(double p_rx_dbm, const ChannelParams& p) {
    if (!std::isfinite(p_rx_dbm)) return Rssi::invalid();
    const double scaled = (p_rx_dbm - p.rssi_min_dbm) / (p.rssi_max_dbm - p.rssi_min_dbm) * Rssi::kMax;
    const double rounded = std::floor(scaled + 0.5);
    if (rounded <= 0.0) return Rssi{0};
    if (rounded >= Rssi::kMax) return Rssi{Rssi::kMax};
    return Rssi{static_cast<int>(rounded)};
}

inline Rssi rssi_at(double d, const ChannelParams& p) {
    if (!std::isfinite(d)) return Rssi::invalid();
    return rssi_from_power(received_power_dbm(d, p), p);
}

struct Beacon {
    double emit_time = 0.0;
    Rssi rssi;
    int source_node = 1;
};

// Source, destination and optional interfering node.
struct Topology {
    CircularPath source;
    CircularPath destination;
    std::optional<CircularPath> interferer;

    bool interferer_active() const noexcept { return interferer.has_value(); }

    double distance_at(double t) const noexcept { return inter_node_distance(source, destination, t); }

    // Period of the source-destination distance. Moving nodes must share one
    // angular speed magnitude; 0 means the geometry is static.
    double mobility_period() const {
        double omega = 0.0;
        for (const CircularPath* p : {&source, &destination}) {
            if (!p->moving()) continue;
            const double w = std::abs(p->angular_speed);
            if (omega == 0.0) {
                omega = w;
            } else {
                require(std::abs(w - omega) <= 1e-12 * omega, "topology: moving nodes must share angular speed");
            }
        }
        return omega == 0.0 ? 0.0 : 2.0 * std::numbers::pi / omega;
    }

    void validate() const {
        source.validate();
        destination.validate();
        if (interferer) interferer->validate();
        (void)mobility_period();
    }
};

// Simulation geometry: two AAVs on radius-40 m circles whose centres are 380 m
// apart, flying in antiphase so the separation sweeps 300..460 m.
inline Topology twin_orbit_topology(double revolution_seconds = 60.0, bool with_interferer = true) {
    const double w = 2.0 * std::numbers::pi / revolution_seconds;
    Topology t;
    t.source = CircularPath{{0.0, 0.0}, 40.0, w, 0.0};
    t.destination = CircularPath{{380.0, 0.0}, 40.0, w, std::numbers::pi};
    if (with_interferer) t.interferer = CircularPath{{190.0, 150.0}, 40.0, w, 0.0};
    return t;
}

enum class LossModel : std::uint8_t { PositionCorrelated, Iid };

inline std::string_view to_string(LossModel m) { return m == LossModel::Iid ? "iid" : "position"; }

inline LossModel parse_loss_model(std::string_view s) {
    if (s == "iid") return LossModel::Iid;
    if (s == "position" || s == "position-correlated") return LossModel::PositionCorrelated;
    throw ConfigError("unknown loss model '" + std::string(s) + "'");
}

// Time average of the per-attempt drop probability over one mobility period,
// midpoint rule on `samples` uniform instants.
inline double mean_drop_probability(const Topology& topo, const ChannelParams& p, int samples = 4096) {
    const double period = topo.mobility_period();
    const bool active = topo.interferer_active();
    if (period == 0.0) return drop_probability(topo.distance_at(0.0), p, active);
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = (i + 0.5) * period / samples;
        sum += drop_probability(topo.distance_at(t), p, active);
    }
    return sum / samples;
}

// Channel as seen by the MAC: instantaneous drop probability and RSSI.
// Iid mode replaces the position law with its time average.
class ChannelContext {
public:
    ChannelContext(Topology topo, ChannelParams params, LossModel model = LossModel::PositionCorrelated)
        : topo_(std::move(topo)), params_(params), model_(model) {
        topo_.validate();
        params_.validate();
        if (model_ == LossModel::Iid) iid_drop_ = mean_drop_probability(topo_, params_);
    }

    double distance_at(double t) const noexcept { return topo_.distance_at(t); }

    double drop_probability_at(double t) const noexcept {
        if (model_ == LossModel::Iid) return iid_drop_;
        return drop_probability(distance_at(t), params_, topo_.interferer_active());
    }

    Rssi rssi_at_time(double t) const { return rssi_at(distance_at(t), params_); }

    const Topology& topology() const noexcept { return topo_; }
    const ChannelParams& params() const noexcept { return params_; }
    LossModel loss_model() const noexcept { return model_; }

private:
    Topology topo_;
    ChannelParams params_;
    LossModel model_;
    double iid_drop_ = 0.0;
};

struct CalibrationBounds {
    double min_midpoint_dbm = -200.0;
    double max_midpoint_dbm = 0.0;
};

// Bisection on drop_midpoint_dbm until the period-averaged drop probability
// is within `tol` of `target`. The mean is increasing in the midpoint.
inline ChannelParams calibrate_channel(const Topology& topo, ChannelParams p, double target, double tol,
                                       CalibrationBounds bounds = {}) {
    p.validate();
    topo.validate();
    require(target >= 0.0 && target <= 1.0, "calibrate: target must lie in [0, 1]");
    require(tol > 0.0, "calibrate: tolerance must be positive");
    require(bounds.min_midpoint_dbm < bounds.max_midpoint_dbm, "calibrate: empty midpoint bounds");

    auto mean_at = [&](double midpoint) {
        ChannelParams q = p;
        q.drop_midpoint_dbm = midpoint;
        return mean_drop_probability(topo, q);
    };
    double lo = bounds.min_midpoint_dbm;
    double hi = bounds.max_midpoint_dbm;
    const double m_lo = mean_at(lo);
    const double m_hi = mean_at(hi);
    if (target < m_lo - tol || target > m_hi + tol) {
        throw CalibrationError("calibrate: target drop rate " + std::to_string(target) +
                               " unreachable; achievable range is [" + std::to_string(m_lo) + ", " +
                               std::to_string(m_hi) + "]");
    }
    // Bisect to convergence rather than stopping at the first point inside the
    // tolerance band, so the result does not depend on tol.
    double best = std::abs(m_lo - target) <= std::abs(m_hi - target) ? lo : hi;
    double best_err = std::min(std::abs(m_lo - target), std::abs(m_hi - target));
    for (int iter = 0; iter < 80 && hi - lo > 1e-9; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double m = mean_at(mid);
        if (std::abs(m - target) < best_err) {
            best = mid;
            best_err = std::abs(m - target);
        }
        (m < target ? lo : hi) = mid;
    }
    if (best_err <= tol) {
        p.drop_midpoint_dbm = best;
        return p;
    }
    throw CalibrationError("calibrate: bisection did not reach the target within tolerance");
}

}  // namespace lcrdo
