#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string_view>
#include <unordered_map>

#include "lcrdo/channel.hpp"
#include "lcrdo/errors.hpp"
#include "lcrdo/media.hpp"
#include "lcrdo/rng.hpp"

namespace lcrdo {

struct MacConfig {
    int max_retries = 3;          // attempts per acknowledged burst
    double tx_duration = 0.002;   // per-attempt airtime (fixed part), s
    double ack_duration = 0.0005; // ACK wait per acknowledged attempt, s
    double beacon_interval = 0.1; // s
    double phy_rate_bps = 0.0;    // > 0 adds size*8/rate to every attempt

    double attempt_airtime(int size_bytes) const noexcept {
        return tx_duration + (phy_rate_bps > 0.0 ? 8.0 * size_bytes / phy_rate_bps : 0.0);
    }

    void validate() const {
        require(max_retries >= 1, "mac: max_retries must be >= 1");
        require(tx_duration > 0.0, "mac: tx_duration must be positive");
        require(ack_duration > 0.0, "mac: ack_duration must be positive");
        require(beacon_interval > 0.0, "mac: beacon_interval must be positive");
        require(phy_rate_bps >= 0.0, "mac: phy_rate_bps must be >= 0");
    }
};

enum class MacOutcome : std::uint8_t { Delivered, Dropped };

inline std::string_view to_string(MacOutcome o) { return o == MacOutcome::Delivered ? "delivered" : "dropped"; }

struct MacResult {
    MacOutcome outcome = MacOutcome::Dropped;
    int attempts = 0;
    double completion_time = 0.0;
    double delivery_time = 0.0;  // end of the successful attempt's data frame; meaningful when delivered

    bool delivered() const noexcept { return outcome == MacOutcome::Delivered; }
};

// Bernoulli draws for transmission attempts, keyed by (packet, attempt number).
// The attempt counter of a packet persists across bursts, so application-level
// retries continue the same per-packet sequence regardless of policy.
class AttemptDraws {
public:
    explicit AttemptDraws(std::uint64_t seed) : rng_(seed) {}

    double next(PacketId packet) {
        const auto n = counters_[packet]++;
        return rng_.uniform(Stream::Channel, static_cast<std::uint64_t>(packet), n);
    }

    std::uint64_t attempts_so_far(PacketId packet) const {
        auto it = counters_.find(packet);
        return it == counters_.end() ? 0 : it->second;
    }

private:
    KeyedRng rng_;
    std::unordered_map<PacketId, std::uint64_t> counters_;
};

// Anything that yields the per-attempt drop probability at an instant.
template <typename C>
concept DropModel = requires(const C& c, double t) {
    { c.drop_probability_at(t) } -> std::convertible_to<double>;
};

// Up to max_retries attempts, each costing airtime + ACK wait, stopping at the
// first success. ACKs are lossless.
template <DropModel Channel>
MacResult transmit_acked(const Packet& pkt, double t, const Channel& channel, const MacConfig& cfg,
                         AttemptDraws& draws) {
    const double airtime = cfg.attempt_airtime(pkt.size);
    const double slot = airtime + cfg.ack_duration;
    MacResult r;
    for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
        const double start = t + attempt * slot;
        ++r.attempts;
        if (draws.next(pkt.packet_id) >= channel.drop_probability_at(start)) {
            r.outcome = MacOutcome::Delivered;
            r.delivery_time = start + airtime;
            break;
        }
    }
    r.completion_time = t + r.attempts * slot;
    return r;
}

// Single unacknowledged attempt; the sender learns nothing about the outcome.
template <DropModel Channel>
MacResult transmit_unacked(const Packet& pkt, double t, const Channel& channel, const MacConfig& cfg,
                           AttemptDraws& draws) {
    const double airtime = cfg.attempt_airtime(pkt.size);
    MacResult r;
    r.attempts = 1;
    r.completion_time = t + airtime;
    if (draws.next(pkt.packet_id) >= channel.drop_probability_at(t)) {
        r.outcome = MacOutcome::Delivered;
        r.delivery_time = t + airtime;
    }
    return r;
}

// Time of the first beacon strictly after t.
inline double next_beacon_time(double t, const MacConfig& cfg) {
    const double k = std::floor(t / cfg.beacon_interval + 1e-9) + 1.0;
    return k * cfg.beacon_interval;
}

// Beacons are delivered reliably and carry the RSSI at their emission instant.
inline Beacon next_beacon(double t, const MacConfig& cfg, const ChannelContext& channel) {
    const double at = next_beacon_time(t, cfg);
    return Beacon{at, channel.rssi_at_time(at), 1};
}

}  // namespace lcrdo
