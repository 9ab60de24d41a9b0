#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lcrdo/channel.hpp"
#include "lcrdo/errors.hpp"
#include "lcrdo/mac.hpp"
#include "lcrdo/media.hpp"

namespace lcrdo {

enum class Policy : std::uint8_t { NoAck, Ack, LcrdoAck, LcrdoBeacon, LcrdoAdaptiveMpeg2, LcrdoAdaptiveMjpeg };

inline constexpr std::array<Policy, 6> kAllPolicies{Policy::NoAck,       Policy::Ack,
                                                    Policy::LcrdoAck,    Policy::LcrdoBeacon,
                                                    Policy::LcrdoAdaptiveMpeg2, Policy::LcrdoAdaptiveMjpeg};

inline std::string_view to_string(Policy p) {
    switch (p) {
        case Policy::NoAck: return "no-ack";
        case Policy::Ack: return "ack";
        case Policy::LcrdoAck: return "lcrdo-ack";
        case Policy::LcrdoBeacon: return "lcrdo-beacon";
        case Policy::LcrdoAdaptiveMpeg2: return "lcrdo-adaptive-mpeg2";
        case Policy::LcrdoAdaptiveMjpeg: return "lcrdo-adaptive-mjpeg";
    }
    return "?";
}

inline Policy parse_policy(std::string_view s) {
    for (Policy p : kAllPolicies) {
        if (to_string(p) == s) return p;
    }
    throw ConfigError("unknown policy '" + std::string(s) +
                      "' (expected no-ack | ack | lcrdo-ack | lcrdo-beacon | lcrdo-adaptive-mpeg2 | "
                      "lcrdo-adaptive-mjpeg)");
}

// Policies that stream from a pair of encoders under beacon feedback.
constexpr bool uses_encoder_pair(Policy p) noexcept {
    return p == Policy::LcrdoBeacon || p == Policy::LcrdoAdaptiveMpeg2 || p == Policy::LcrdoAdaptiveMjpeg;
}

enum class EncoderId : std::uint8_t { Encoder1 = 0, Encoder2 = 1 };

constexpr std::size_t encoder_index(EncoderId e) noexcept { return static_cast<std::size_t>(e); }

inline std::string_view to_string(EncoderId e) { return e == EncoderId::Encoder1 ? "encoder1" : "encoder2"; }

struct TxAction {
    enum class Kind : std::uint8_t { SendAcked, SendUnacked, AdvanceGof, SwitchEncoder, Idle };

    Kind kind = Kind::Idle;
    PacketId packet = -1;
    EncoderId encoder = EncoderId::Encoder1;
    double wake_time = std::numeric_limits<double>::infinity();  // Idle: next instant worth stepping
    bool terminal = false;                                       // Idle: source exhausted

    static TxAction send_acked(PacketId id) { return {Kind::SendAcked, id}; }
    static TxAction send_unacked(PacketId id) { return {Kind::SendUnacked, id}; }
    static TxAction advance_gof() { return {Kind::AdvanceGof}; }
    static TxAction switch_encoder(EncoderId e) { return {Kind::SwitchEncoder, -1, e}; }
    static TxAction idle(double wake = std::numeric_limits<double>::infinity()) {
        return {Kind::Idle, -1, EncoderId::Encoder1, wake};
    }
    static TxAction exhausted() { return {Kind::Idle, -1, EncoderId::Encoder1, std::numeric_limits<double>::infinity(), true}; }

    friend bool operator==(const TxAction&, const TxAction&) = default;
};

inline std::string_view to_string(TxAction::Kind k) {
    switch (k) {
        case TxAction::Kind::SendAcked: return "send-acked";
        case TxAction::Kind::SendUnacked: return "send-unacked";
        case TxAction::Kind::AdvanceGof: return "advance-gof";
        case TxAction::Kind::SwitchEncoder: return "switch-encoder";
        case TxAction::Kind::Idle: return "idle";
    }
    return "?";
}

// Packet-ID boundaries of one GOF in a prioritised stream.
struct GofBounds {
    PacketId first_packet = 0;
    PacketId final_f1_packet = -1;
    PacketId final_gof_packet = -1;
    double release_time = 0.0;
    double deadline = 0.0;
};

// Read-only view over a GOF stream for the GOF-driven transmitters.
class GofStream {
public:
    explicit GofStream(std::vector<Frame> frames) : frames_(std::move(frames)) {
        for (const Frame& f : frames_) {
            if (f.packet_count == 0) continue;
            const auto g = static_cast<std::size_t>(f.gof_index);
            if (g >= gofs_.size()) {
                require(g == gofs_.size(), "gof stream: GOF indices must be contiguous");
                gofs_.push_back(GofBounds{f.first_packet_id, f.first_packet_id - 1, f.first_packet_id - 1,
                                          f.release_time, f.deadline});
            }
            auto& b = gofs_[g];
            require(f.first_packet_id == b.final_gof_packet + 1, "gof stream: packet IDs must be contiguous");
            b.final_gof_packet = f.last_packet_id();
            if (f.priority == FramePriority::F1) b.final_f1_packet = f.last_packet_id();
        }
        if (!gofs_.empty()) first_packet_ = gofs_.front().first_packet;
        for (std::size_t g = 0; g < gofs_.size(); ++g) {
            for (PacketId id = gofs_[g].first_packet; id <= gofs_[g].final_gof_packet; ++id) gof_of_.push_back(g);
        }
    }

    std::size_t gof_count() const noexcept { return gofs_.size(); }
    const GofBounds& gof(std::size_t g) const { return gofs_.at(g); }
    const std::vector<Frame>& frames() const noexcept { return frames_; }
    std::int64_t packet_count() const noexcept { return static_cast<std::int64_t>(gof_of_.size()); }
    bool empty() const noexcept { return gofs_.empty(); }
    PacketId first_packet() const noexcept { return first_packet_; }
    PacketId last_packet() const noexcept { return first_packet_ + packet_count() - 1; }
    std::size_t gof_of(PacketId id) const { return gof_of_.at(static_cast<std::size_t>(id - first_packet_)); }

private:
    std::vector<Frame> frames_;
    std::vector<GofBounds> gofs_;
    std::vector<std::size_t> gof_of_;
    PacketId first_packet_ = 0;
};

// Common driver interface used by the event loop.
class Transmitter {
public:
    virtual ~Transmitter() = default;
    // `last` carries the MAC result of the previous send action, if any.
    virtual TxAction step(double t, const std::optional<MacResult>& last) = 0;
};

// ---------------------------------------------------------------------------
// LCRDO-Ack

struct LcrdoAckState {
    int id_frame = 1;
    PacketId id_pkt = 0;
    double t_gof_timestamp = 0.0;
    double gof_period = 0.0;
    PacketId id_final_f1_pkt = -1;
    PacketId id_final_gof_pkt = -1;
    std::size_t gof = 0;
    bool awaiting_f1_result = false;
    bool exhausted = false;

    friend bool operator==(const LcrdoAckState&, const LcrdoAckState&) = default;
};

inline LcrdoAckState initial_lcrdo_ack_state(const GofStream& stream, double gof_period) {
    LcrdoAckState s;
    s.gof_period = gof_period;
    if (stream.empty()) {
        s.exhausted = true;
        return s;
    }
    const auto& g0 = stream.gof(0);
    s.id_pkt = g0.first_packet;
    s.t_gof_timestamp = g0.deadline;
    s.id_final_f1_pkt = g0.final_f1_packet;
    s.id_final_gof_pkt = g0.final_gof_packet;
    return s;
}

struct LcrdoAckStep {
    TxAction action;
    LcrdoAckState state;
};

// One externally visible step of the LCRDO-Ack loop. The outcome of an f1
// send is applied at the start of the following step ("if success, next f1
// packet"); f1 packets are re-sent until delivered or the GOF expires, while
// f2/f3 packets go out once each without feedback.
inline LcrdoAckStep step_lcrdo_ack(LcrdoAckState s, double t, const GofStream& stream,
                                   const std::optional<MacResult>& last) {
    if (s.awaiting_f1_result) {
        s.awaiting_f1_result = false;
        if (last && last->delivered()) ++s.id_pkt;
    }
    if (s.exhausted) return {TxAction::exhausted(), s};

    if (t < s.t_gof_timestamp) {
        if (s.id_frame == 1) {
            if (s.id_pkt > s.id_final_f1_pkt) {
                ++s.id_frame;  // f1 done; fall through to the f2/f3 branch
            } else {
                s.awaiting_f1_result = true;
                return {TxAction::send_acked(s.id_pkt), s};
            }
        }
        if (s.id_pkt <= s.id_final_gof_pkt) {
            const PacketId id = s.id_pkt++;
            return {TxAction::send_unacked(id), s};
        }
        return {TxAction::idle(s.t_gof_timestamp), s};
    }

    s.t_gof_timestamp += s.gof_period;
    s.id_frame = 1;
    s.id_pkt = s.id_final_gof_pkt + 1;
    ++s.gof;
    if (s.gof >= stream.gof_count()) {
        s.exhausted = true;
    } else {
        const auto& b = stream.gof(s.gof);
        s.id_final_f1_pkt = b.final_f1_packet;
        s.id_final_gof_pkt = b.final_gof_packet;
    }
    return {TxAction::advance_gof(), s};
}

class LcrdoAckTransmitter final : public Transmitter {
public:
    LcrdoAckTransmitter(const GofStream& stream, double gof_period)
        : stream_(stream), state_(initial_lcrdo_ack_state(stream, gof_period)) {}

    TxAction step(double t, const std::optional<MacResult>& last) override {
        auto [action, next] = step_lcrdo_ack(state_, t, stream_, last);
        state_ = next;
        return action;
    }

    const LcrdoAckState& state() const noexcept { return state_; }

private:
    const GofStream& stream_;
    LcrdoAckState state_;
};

// ---------------------------------------------------------------------------
// Baselines

// Sends every packet once, in stream order. Packets of a GOF whose deadline
// has passed are skipped at the source; nothing is sent before its release.
class NoAckTransmitter final : public Transmitter {
public:
    explicit NoAckTransmitter(const GofStream& stream) : stream_(stream), next_(stream.first_packet()) {}

    TxAction step(double t, const std::optional<MacResult>&) override {
        while (next_ <= stream_.last_packet()) {
            const auto g = stream_.gof_of(next_);
            const auto& b = stream_.gof(g);
            if (t >= b.deadline) {
                next_ = b.final_gof_packet + 1;
                continue;
            }
            if (t < b.release_time) return TxAction::idle(b.release_time);
            return TxAction::send_unacked(next_++);
        }
        return TxAction::exhausted();
    }

private:
    const GofStream& stream_;
    PacketId next_;
};

// Stop-and-wait: re-sends the current packet until a MAC burst delivers it,
// ignoring deadlines, so delay accumulates when the link is slower than the source.
class AckTransmitter final : public Transmitter {
public:
    explicit AckTransmitter(const GofStream& stream) : stream_(stream), next_(stream.first_packet()) {}

    TxAction step(double t, const std::optional<MacResult>& last) override {
        if (awaiting_) {
            awaiting_ = false;
            if (last && last->delivered()) ++next_;
        }
        if (next_ > stream_.last_packet()) return TxAction::exhausted();
        const auto& b = stream_.gof(stream_.gof_of(next_));
        if (t < b.release_time) return TxAction::idle(b.release_time);
        awaiting_ = true;
        return TxAction::send_acked(next_);
    }

private:
    const GofStream& stream_;
    PacketId next_;
    bool awaiting_ = false;
};

// ---------------------------------------------------------------------------
// Beacon-driven encoder switching

struct HysteresisController {
    Rssi x1{30};
    Rssi x2{50};
    EncoderId active = EncoderId::Encoder1;

    void validate() const {
        require(x1.valid() && x2.valid(), "hysteresis: thresholds must be valid RSSI values");
        require(x1.value() < x2.value(), "hysteresis: x1 must be below x2");
    }
};

struct TxQueues {
    std::array<std::deque<PacketId>, 2> queue;

    std::deque<PacketId>& of(EncoderId e) { return queue[encoder_index(e)]; }
    const std::deque<PacketId>& of(EncoderId e) const { return queue[encoder_index(e)]; }
    void clear() {
        for (auto& q : queue) q.clear();
    }
    std::size_t total() const noexcept { return queue[0].size() + queue[1].size(); }

    friend bool operator==(const TxQueues&, const TxQueues&) = default;
};

// Two-threshold switching rule. Strictly below x1 selects Encoder 2, strictly
// above x2 selects Encoder 1; a switch empties both queues. The invalid
// reading (128) and the band [x1, x2] leave everything unchanged.
inline TxAction apply_beacon(HysteresisController& ctrl, TxQueues& queues, const Beacon& beacon) {
    if (!beacon.rssi.valid()) return TxAction::idle();
    const int rssi = beacon.rssi.value();
    EncoderId target = ctrl.active;
    if (rssi < ctrl.x1.value()) {
        target = EncoderId::Encoder2;
    } else if (rssi > ctrl.x2.value()) {
        target = EncoderId::Encoder1;
    }
    if (target == ctrl.active) return TxAction::idle();
    queues.clear();
    ctrl.active = target;
    return TxAction::switch_encoder(target);
}

struct BeaconStep {
    TxAction action;
    HysteresisController controller;
    TxQueues queues;
};

inline BeaconStep on_beacon(HysteresisController controller, TxQueues queues, const Beacon& beacon) {
    TxAction a = apply_beacon(controller, queues, beacon);
    return {a, std::move(controller), std::move(queues)};
}

enum class EncoderLock : std::uint8_t { None, Encoder1, Encoder2 };

inline std::string_view to_string(EncoderLock l) {
    switch (l) {
        case EncoderLock::None: return "none";
        case EncoderLock::Encoder1: return "encoder1";
        case EncoderLock::Encoder2: return "encoder2";
    }
    return "?";
}

inline EncoderLock parse_encoder_lock(std::string_view s) {
    if (s == "none") return EncoderLock::None;
    if (s == "encoder1") return EncoderLock::Encoder1;
    if (s == "encoder2") return EncoderLock::Encoder2;
    throw ConfigError("unknown encoder lock '" + std::string(s) + "'");
}

// Streams the active encoder's queue with acknowledged MAC bursts. With
// app_retry a packet whose burst failed is sent again. A locked transmitter
// never switches and never clears its queue (the unmodified baselines).
class BeaconTransmitter final : public Transmitter {
public:
    BeaconTransmitter(HysteresisController ctrl, EncoderLock lock, bool app_retry)
        : ctrl_(ctrl), lock_(lock), app_retry_(app_retry) {
        ctrl_.validate();
        if (lock_ == EncoderLock::Encoder1) ctrl_.active = EncoderId::Encoder1;
        if (lock_ == EncoderLock::Encoder2) ctrl_.active = EncoderId::Encoder2;
    }

    EncoderId active() const noexcept { return ctrl_.active; }
    const TxQueues& queues() const noexcept { return queues_; }
    bool locked() const noexcept { return lock_ != EncoderLock::None; }

    void enqueue(EncoderId source, PacketId id) { queues_.of(source).push_back(id); }

    TxAction handle_beacon(const Beacon& b) {
        if (locked()) return TxAction::idle();
        TxAction a = apply_beacon(ctrl_, queues_, b);
        if (a.kind == TxAction::Kind::SwitchEncoder) inflight_stale_ = true;
        return a;
    }

    TxAction step(double, const std::optional<MacResult>& last) override {
        if (inflight_) {
            const bool retry = app_retry_ && !inflight_stale_ && !(last && last->delivered());
            if (retry) return TxAction::send_acked(*inflight_);
            inflight_.reset();
        }
        inflight_stale_ = false;
        auto& q = queues_.of(ctrl_.active);
        if (q.empty()) return TxAction::idle();
        inflight_ = q.front();
        q.pop_front();
        return TxAction::send_acked(*inflight_);
    }

private:
    HysteresisController ctrl_;
    TxQueues queues_;
    EncoderLock lock_;
    bool app_retry_;
    std::optional<PacketId> inflight_;
    bool inflight_stale_ = false;
};

// ---------------------------------------------------------------------------
// Encoder profiles

namespace profiles {

// MPEG2, GOF = 5 (one i, one p, three b frames) at 25 f/s, 160x120.
inline EncoderProfile mpeg2_gof5_25fps() {
    EncoderProfile p;
    p.name = "mpeg2-gof5-25fps";
    p.family = CodecFamily::Mpeg2Like;
    p.gof = GofConfig{{1, 1, 3}, {6, 2, 1}, 5.0 / 25.0, 25.0};
    p.quality = 100.0;
    p.delta_per_key = 1;
    p.payload_bytes = 1000;
    p.width = 160;
    p.height = 120;
    return p;
}

// MPEG2, i frames only at 5 f/s.
inline EncoderProfile mpeg2_gof1_5fps() {
    EncoderProfile p = mpeg2_gof5_25fps();
    p.name = "mpeg2-gof1-5fps";
    p.gof = GofConfig{{1, 0, 0}, {6, 0, 0}, 1.0 / 5.0, 5.0};
    return p;
}

inline EncoderProfile mpeg2_100kbps() {
    EncoderProfile p = mpeg2_gof5_25fps();
    p.name = "mpeg2-gof5-25fps-100kbps";
    p.bitrate_cap_bps = 100'000.0;
    return p;
}

// MJPEG/SMOKE: one JPEG key frame followed by N-1 = 7 delta frames, 320x240 at 10 f/s.
inline EncoderProfile mjpeg_smoke(double quality, int payload_bytes) {
    EncoderProfile p;
    p.name = "mjpeg-q" + std::to_string(static_cast<int>(quality)) + "-n8";
    p.family = CodecFamily::MjpegSmokeLike;
    p.gof = GofConfig{{1, 7, 0}, {12, 4, 0}, 8.0 / 10.0, 10.0};
    p.quality = quality;
    p.delta_per_key = 8;
    p.payload_bytes = payload_bytes;
    p.width = 320;
    p.height = 240;
    return p;
}

inline EncoderProfile mjpeg_q80() { return mjpeg_smoke(80.0, 1000); }
inline EncoderProfile mjpeg_q30() { return mjpeg_smoke(30.0, 450); }

}  // namespace profiles

// (Encoder 1 = high mode, Encoder 2 = degraded mode).
inline std::pair<EncoderProfile, EncoderProfile> encoder_pair_for(Policy policy) {
    switch (policy) {
        case Policy::LcrdoBeacon: return {profiles::mpeg2_gof5_25fps(), profiles::mpeg2_gof1_5fps()};
        case Policy::LcrdoAdaptiveMpeg2: return {profiles::mpeg2_gof5_25fps(), profiles::mpeg2_100kbps()};
        case Policy::LcrdoAdaptiveMjpeg: return {profiles::mjpeg_q80(), profiles::mjpeg_q30()};
        default: break;
    }
    throw ConfigError("policy '" + std::string(to_string(policy)) + "' has no encoder pair");
}

}  // namespace lcrdo
