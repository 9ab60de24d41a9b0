#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lcrdo/channel.hpp"
#include "lcrdo/config.hpp"
#include "lcrdo/errors.hpp"
#include "lcrdo/mac.hpp"
#include "lcrdo/media.hpp"
#include "lcrdo/metrics.hpp"
#include "lcrdo/receiver.hpp"
#include "lcrdo/transmitters.hpp"

namespace lcrdo {

// ---------------------------------------------------------------------------
// Results

struct PacketTraceRow {
    PacketId packet_id = 0;
    FrameId frame_id = 0;
    int encoder = 0;
    FramePriority priority = FramePriority::F1;
    int size = 0;
    double first_tx_time = 0.0;
    int attempts = 0;
    int bursts = 0;
    bool delivered = false;
    double arrival_time = 0.0;  // meaningful when delivered
    bool in_time = false;
};

struct SwitchEvent {
    double time = 0.0;
    int rssi = 0;
    EncoderId from = EncoderId::Encoder1;
    EncoderId to = EncoderId::Encoder1;
    std::size_t cleared_packets = 0;
};

struct GofSummary {
    GofReceptionRecord record;
    double d_m = 0.0;
};

struct DistortionReport {
    double d0 = 0.0;
    double d_M = 0.0;
    std::vector<GofSummary> per_gof;
    double temporal_ratio = 0.0;
    std::optional<double> avg_ssim;
    // Same packet trace decoded under each codec family.
    std::optional<double> avg_ssim_mpeg2_decode;
    std::optional<double> avg_ssim_mjpeg_decode;
    std::array<double, 3> packet_drop_rate_by_priority{0.0, 0.0, 0.0};
    std::array<std::int64_t, 3> packets_generated{0, 0, 0};
    std::array<std::int64_t, 3> packets_transmitted{0, 0, 0};
    std::array<std::int64_t, 3> packets_delivered{0, 0, 0};
    std::array<std::int64_t, 3> packets_in_time{0, 0, 0};
    std::array<double, 3> frame_completion_rate{0.0, 0.0, 0.0};
    std::int64_t frames_generated = 0;
    std::int64_t frames_displayed = 0;
};

struct RunResult {
    SimConfig config;
    ChannelParams channel;  // after calibration
    double mean_drop_probability = 0.0;
    DistortionReport report;
    std::vector<PacketTraceRow> trace;
    std::vector<SwitchEvent> switches;
    std::vector<CounterSample> counter_trace;
    std::vector<DisplayedFrame> displayed;
    double end_time = 0.0;
    std::int64_t events = 0;
    std::int64_t beacons = 0;
    bool stopped_by_duration = false;
};

// ---------------------------------------------------------------------------
// Event queue

enum class EventKind : std::uint8_t { FrameRelease, BeaconArrival, MacComplete, TxStep, SimEnd };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::FrameRelease: return "frame-release";
        case EventKind::BeaconArrival: return "beacon-arrival";
        case EventKind::MacComplete: return "mac-complete";
        case EventKind::TxStep: return "tx-step";
        case EventKind::SimEnd: return "sim-end";
    }
    return "?";
}

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::TxStep;
    std::uint64_t seq = 0;
    PacketId packet = -1;
    MacResult mac;
    std::uint64_t token = 0;

    static Event at(double t, EventKind k) {
        Event e;
        e.time = t;
        e.kind = k;
        return e;
    }
};

// Earliest time first; ties by kind (enum order), then insertion order.
class EventQueue {
public:
    void push(Event e) {
        if (e.time < now_) throw std::logic_error("event scheduled in the past");
        e.seq = next_seq_++;
        heap_.push(std::move(e));
    }

    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        now_ = e.time;
        return e;
    }

    bool empty() const noexcept { return heap_.empty(); }
    double now() const noexcept { return now_; }
    std::size_t size() const noexcept { return heap_.size(); }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const noexcept {
            if (a.time != b.time) return a.time > b.time;
            if (a.kind != b.kind) return a.kind > b.kind;
            return a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
    double now_ = 0.0;
};

// ---------------------------------------------------------------------------
// Simulation

namespace detail {

inline std::vector<Frame> gof_frames_for(const SimConfig& c) {
    const auto ppg = c.gof.packets_per_gof();
    int gofs = 0;
    if (c.packet_budget > 0) {
        gofs = static_cast<int>((c.packet_budget + ppg - 1) / ppg);
    } else {
        gofs = static_cast<int>(std::ceil(c.duration / c.gof.gof_period));
    }
    gofs = std::max(gofs, 1);
    auto frames = build_gof_stream(c.gof, gofs);
    if (c.packet_budget > 0) frames = truncate_stream(std::move(frames), c.packet_budget);
    return frames;
}

}  // namespace detail

class Simulation {
public:
    explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)), draws_(cfg_.seed) {
        cfg_.validate();
        ChannelParams params = cfg_.channel;
        if (cfg_.calibrate) {
            params = calibrate_channel(cfg_.topology, params, cfg_.calibration_target, cfg_.calibration_tol);
        }
        channel_.emplace(cfg_.topology, params, cfg_.loss_model);
    }

    RunResult run() {
        if (cfg_.beacon_driven()) {
            run_beacon_driven();
        } else {
            run_gof_driven();
        }
        return finish();
    }

private:
    // --- GOF-driven policies --------------------------------------------------

    void run_gof_driven() {
        frames_ = detail::gof_frames_for(cfg_);
        stream_.emplace(frames_);
        receiver_.emplace(std::span<const Frame>(frames_));
        index_frames();
        switch (cfg_.policy) {
            case Policy::NoAck: tx_ = std::make_unique<NoAckTransmitter>(*stream_); break;
            case Policy::Ack: tx_ = std::make_unique<AckTransmitter>(*stream_); break;
            case Policy::LcrdoAck:
                tx_ = std::make_unique<LcrdoAckTransmitter>(*stream_, cfg_.gof.gof_period);
                break;
            default: throw ConfigError("policy is not GOF-driven");
        }
        // Unbounded retries on a dead link would never end; cap at 100 stream lengths.
        end_time_ = cfg_.duration > 0.0 ? cfg_.duration : 100.0 * frames_.back().deadline;
        queue_.push(Event::at(0.0, EventKind::TxStep));
        loop();
    }

    // --- Beacon-driven policies -----------------------------------------------

    void run_beacon_driven() {
        encoders_ = {cfg_.encoder1, cfg_.encoder2};
        receiver_.emplace(std::span<const Frame>{});
        HysteresisController ctrl{Rssi{cfg_.x1}, Rssi{cfg_.x2}, EncoderId::Encoder1};
        auto beacon_tx = std::make_unique<BeaconTransmitter>(ctrl, cfg_.encoder_lock, cfg_.app_retry);
        beacon_tx_ = beacon_tx.get();
        tx_ = std::move(beacon_tx);
        end_time_ = cfg_.duration + cfg_.playout_delay;
        tx_idle_ = true;
        activate_encoder(beacon_tx_->active(), 0.0);
        queue_.push(Event::at(cfg_.mac.beacon_interval, EventKind::BeaconArrival));
        loop();
    }

    void activate_encoder(EncoderId e, double t) {
        ++token_;
        active_ = e;
        activation_time_ = t;
        slot_ = 0;
        Event ev = Event::at(t, EventKind::FrameRelease);
        ev.token = token_;
        queue_.push(ev);
    }

    void release_frame(double t) {
        if (t >= cfg_.duration) return;
        const auto ei = encoder_index(active_);
        const EncoderProfile& prof = encoders_[ei];
        const GofConfig& g = prof.gof;
        const int gof_len = g.frames_per_gof();
        const int slot = static_cast<int>(slot_ % gof_len);
        if (slot == 0) {
            gof_anchor_[ei] = next_frame_;
            ++gof_counter_[ei];
        }
        Frame f;
        f.frame_id = next_frame_++;
        f.priority = g.priority_at(slot);
        f.gof_index = gof_counter_[ei] - 1;
        f.first_packet_id = next_packet_;
        f.packet_count = g.packets_for(f.priority);
        f.release_time = t;
        f.capture_time = t;
        f.duration = 1.0 / g.frame_rate;
        f.deadline = t + cfg_.playout_delay;
        if (slot != 0) f.anchor = gof_anchor_[ei];
        f.encoder = static_cast<int>(ei);
        f.content_index = std::llround(t * encoders_[0].frame_rate());
        next_packet_ += f.packet_count;
        frames_.push_back(f);
        receiver_->add_frame(f);
        packet_frame_.resize(static_cast<std::size_t>(next_packet_), frames_.size() - 1);
        packet_size_.resize(static_cast<std::size_t>(next_packet_), prof.effective_payload_bytes());
        for (PacketId id = f.first_packet_id; id <= f.last_packet_id(); ++id) beacon_tx_->enqueue(active_, id);
        ++report_generated_[priority_index(f.priority)];

        ++slot_;
        Event next = Event::at(activation_time_ + static_cast<double>(slot_) / g.frame_rate, EventKind::FrameRelease);
        next.token = token_;
        queue_.push(next);
        if (tx_idle_) drive_tx(t, std::nullopt);
    }

    void on_beacon(double t) {
        ++beacons_;
        const Beacon b{t, channel_->rssi_at_time(t), 1};
        const EncoderId before = beacon_tx_->active();
        const std::size_t queued = beacon_tx_->queues().total();
        const TxAction a = beacon_tx_->handle_beacon(b);
        if (a.kind == TxAction::Kind::SwitchEncoder) {
            switches_.push_back(SwitchEvent{t, b.rssi.value(), before, a.encoder, queued});
            activate_encoder(a.encoder, t);
        }
        const double next = t + cfg_.mac.beacon_interval;
        if (next <= end_time_) queue_.push(Event::at(next, EventKind::BeaconArrival));
    }

    // --- Shared -----------------------------------------------------------------

    void index_frames() {
        for (std::size_t i = 0; i < frames_.size(); ++i) {
            const Frame& f = frames_[i];
            packet_frame_.resize(static_cast<std::size_t>(f.first_packet_id + f.packet_count), i);
            ++report_generated_[priority_index(f.priority)];
        }
        packet_size_.assign(packet_frame_.size(), cfg_.payload_bytes);
    }

    Packet packet(PacketId id) const {
        const Frame& f = frames_[packet_frame_.at(static_cast<std::size_t>(id))];
        return Packet{id, f.frame_id, f.priority, packet_size_[static_cast<std::size_t>(id)], f.release_time};
    }

    void loop() {
        while (!queue_.empty() && !finished_) {
            Event e = queue_.pop();
            if (e.time > end_time_) {
                stopped_by_duration_ = true;
                now_ = end_time_;
                break;
            }
            now_ = e.time;
            ++events_;
            switch (e.kind) {
                case EventKind::FrameRelease:
                    if (e.token == token_) release_frame(e.time);
                    break;
                case EventKind::BeaconArrival: on_beacon(e.time); break;
                case EventKind::MacComplete: complete_mac(e); break;
                case EventKind::TxStep: drive_tx(e.time, std::nullopt); break;
                case EventKind::SimEnd: finished_ = true; break;
            }
        }
    }

    // Steps the transmitter until it commits to something that takes time.
    void drive_tx(double t, std::optional<MacResult> last) {
        tx_idle_ = false;
        for (int guard = 0; guard < 1'000'000; ++guard) {
            const TxAction a = tx_->step(t, last);
            last.reset();
            switch (a.kind) {
                case TxAction::Kind::SendAcked:
                case TxAction::Kind::SendUnacked: {
                    const Packet p = packet(a.packet);
                    const bool acked = a.kind == TxAction::Kind::SendAcked;
                    const MacResult r = acked ? transmit_acked(p, t, *channel_, cfg_.mac, draws_)
                                              : transmit_unacked(p, t, *channel_, cfg_.mac, draws_);
                    Event e = Event::at(r.completion_time, EventKind::MacComplete);
                    e.packet = a.packet;
                    e.mac = r;
                    queue_.push(e);
                    note_burst(p, t, r);
                    return;
                }
                case TxAction::Kind::AdvanceGof:
                case TxAction::Kind::SwitchEncoder: continue;
                case TxAction::Kind::Idle:
                    if (a.terminal) {
                        queue_.push(Event::at(t, EventKind::SimEnd));
                    } else if (std::isfinite(a.wake_time)) {
                        queue_.push(Event::at(std::max(a.wake_time, t), EventKind::TxStep));
                    } else {
                        tx_idle_ = true;
                    }
                    return;
            }
        }
        throw std::logic_error("transmitter made no progress");
    }

    void note_burst(const Packet& p, double t, const MacResult& r) {
        auto [it, inserted] = trace_index_.try_emplace(p.packet_id, trace_.size());
        if (inserted) {
            PacketTraceRow row;
            row.packet_id = p.packet_id;
            row.frame_id = p.frame_id;
            row.encoder = frames_[packet_frame_[static_cast<std::size_t>(p.packet_id)]].encoder;
            row.priority = p.priority;
            row.size = p.size;
            row.first_tx_time = t;
            trace_.push_back(row);
        }
        PacketTraceRow& row = trace_[it->second];
        row.attempts += r.attempts;
        ++row.bursts;
    }

    void complete_mac(const Event& e) {
        if (e.mac.delivered()) {
            PacketTraceRow& row = trace_[trace_index_.at(e.packet)];
            if (!row.delivered) {
                row.delivered = true;
                row.arrival_time = e.mac.delivery_time;
                row.in_time = receiver_->ingest(packet(e.packet), e.mac.delivery_time) == IngestOutcome::Accepted;
            }
        }
        drive_tx(e.time, e.mac);
    }

    DisplayOptions display_options() const {
        DisplayOptions o;
        if (cfg_.beacon_driven()) {
            o.reference_rate = encoders_[0].frame_rate();
            o.reference_duration = cfg_.duration;
            o.reference_quality = encoders_[0].quality;
            o.reference_width = encoders_[0].width;
            o.reference_height = encoders_[0].height;
        } else {
            o.reference_rate = cfg_.gof.frame_rate;
            o.reference_quality = 100.0;
        }
        o.content_seed = cfg_.content_seed;
        o.compute_ssim = cfg_.metrics.ssim;
        o.ssim.window = cfg_.metrics.ssim_window;
        o.best_frames = static_cast<std::size_t>(cfg_.metrics.best_frames);
        o.worst_frames = static_cast<std::size_t>(cfg_.metrics.worst_frames);
        return o;
    }

    std::vector<DecodeProfile> decoders() const {
        if (!cfg_.beacon_driven()) return {DecodeProfile{CodecFamily::Mpeg2Like, 100.0, 160, 120}};
        std::vector<DecodeProfile> out;
        for (const auto& e : encoders_) {
            // Quality scales with the share of the payload that survives a rate cap.
            const double q = e.quality * static_cast<double>(e.effective_payload_bytes()) / e.payload_bytes;
            out.push_back(DecodeProfile{e.family, std::max(1.0, q), e.width, e.height});
        }
        return out;
    }

    RunResult finish() {
        RunResult r;
        r.config = cfg_;
        r.channel = channel_->params();
        r.mean_drop_probability = mean_drop_probability(cfg_.topology, r.channel);
        r.end_time = now_;
        r.events = events_;
        r.beacons = beacons_;
        r.stopped_by_duration = stopped_by_duration_;
        r.switches = switches_;
        r.counter_trace = receiver_->counter_trace();

        DistortionReport& rep = r.report;
        const auto records = receiver_->gof_records();
        if (cfg_.beacon_driven()) {
            rep.d0 = 0.0;  // each GOF scored against its own full-reception D0
            for (const auto& rec : records) rep.per_gof.push_back({rec, d_m(rec, rec.full_d0())});
            rep.d_M = d_M_own(records);
        } else {
            rep.d0 = cfg_.d0();
            for (const auto& rec : records) rep.per_gof.push_back({rec, d_m(rec, rep.d0)});
            rep.d_M = d_M(records, rep.d0);
        }

        rep.packets_generated = report_generated_;
        for (const auto& row : trace_) {
            const auto p = priority_index(row.priority);
            ++rep.packets_transmitted[p];
            if (row.delivered) ++rep.packets_delivered[p];
            if (row.in_time) ++rep.packets_in_time[p];
        }
        for (std::size_t p = 0; p < 3; ++p) {
            if (rep.packets_transmitted[p] > 0) {
                rep.packet_drop_rate_by_priority[p] =
                    1.0 - static_cast<double>(rep.packets_delivered[p]) / static_cast<double>(rep.packets_transmitted[p]);
            }
        }
        std::array<std::int64_t, 3> frames{0, 0, 0};
        std::array<std::int64_t, 3> complete{0, 0, 0};
        for (const Frame& f : frames_) {
            if (f.packet_count == 0) continue;
            const auto p = priority_index(f.priority);
            ++frames[p];
            if (receiver_->complete(f.frame_id)) ++complete[p];
        }
        for (std::size_t p = 0; p < 3; ++p) {
            if (frames[p] > 0) rep.frame_completion_rate[p] = static_cast<double>(complete[p]) / frames[p];
        }
        rep.frames_generated = frames[0] + frames[1] + frames[2];

        const auto opts = display_options();
        const auto decs = decoders();
        const DisplayResult shown = evaluate_display(*receiver_, decs, opts);
        rep.temporal_ratio = shown.temporal_ratio;
        rep.avg_ssim = shown.avg_ssim;
        rep.frames_displayed = static_cast<std::int64_t>(shown.displayed.size());
        r.displayed = shown.displayed;
        if (cfg_.metrics.ssim) {
            for (CodecFamily fam : {CodecFamily::Mpeg2Like, CodecFamily::MjpegSmokeLike}) {
                auto swapped = decs;
                bool same = true;
                for (auto& d : swapped) {
                    same = same && d.family == fam;
                    d.family = fam;
                }
                const auto v = same ? shown.avg_ssim : evaluate_display(*receiver_, swapped, opts).avg_ssim;
                (fam == CodecFamily::Mpeg2Like ? rep.avg_ssim_mpeg2_decode : rep.avg_ssim_mjpeg_decode) = v;
            }
        }
        r.trace = std::move(trace_);
        return r;
    }

    SimConfig cfg_;
    AttemptDraws draws_;
    std::optional<ChannelContext> channel_;
    EventQueue queue_;
    std::vector<Frame> frames_;
    std::vector<std::size_t> packet_frame_;
    std::vector<int> packet_size_;
    std::optional<GofStream> stream_;
    std::optional<Receiver> receiver_;
    std::unique_ptr<Transmitter> tx_;
    BeaconTransmitter* beacon_tx_ = nullptr;
    bool tx_idle_ = false;
    bool finished_ = false;
    bool stopped_by_duration_ = false;
    double end_time_ = 0.0;
    double now_ = 0.0;
    std::int64_t events_ = 0;
    std::int64_t beacons_ = 0;

    std::array<EncoderProfile, 2> encoders_;
    EncoderId active_ = EncoderId::Encoder1;
    double activation_time_ = 0.0;
    std::int64_t slot_ = 0;
    std::uint64_t token_ = 0;
    std::array<FrameId, 2> gof_anchor_{0, 0};
    std::array<std::int64_t, 2> gof_counter_{0, 0};
    FrameId next_frame_ = 0;
    PacketId next_packet_ = 0;

    std::array<std::int64_t, 3> report_generated_{0, 0, 0};
    std::vector<PacketTraceRow> trace_;
    std::unordered_map<PacketId, std::size_t> trace_index_;
    std::vector<SwitchEvent> switches_;
};

inline RunResult run(const SimConfig& config) { return Simulation(config).run(); }

// ---------------------------------------------------------------------------
// Comparisons

struct ComparisonRow {
    std::string label;
    Policy policy = Policy::LcrdoAck;
    std::uint64_t seed = 0;
    DistortionReport report;
    std::size_t switches = 0;
};

// Runs every policy against the same seed, hence the same per-(packet, attempt)
// channel draws.
inline std::vector<ComparisonRow> compare_transmitters(const SimConfig& base, const std::vector<Policy>& policies) {
    require(!policies.empty(), "compare: at least one policy is required");
    std::vector<ComparisonRow> rows;
    for (Policy p : policies) {
        SimConfig c = base;
        c.policy = p;
        if (uses_encoder_pair(p) != uses_encoder_pair(base.policy)) apply_policy_defaults(c);
        if (c.label.empty() || policies.size() > 1) c.label = std::string(to_string(p));
        RunResult r = run(c);
        rows.push_back({c.label, p, c.seed, std::move(r.report), r.switches.size()});
    }
    return rows;
}

inline constexpr std::array<Policy, 3> kBaselineTrio{Policy::NoAck, Policy::Ack, Policy::LcrdoAck};

// Named preset over `seeds` consecutive seeds starting at first_seed.
inline std::vector<ComparisonRow> compare_preset(std::string_view preset, int seeds, std::uint64_t first_seed = 1,
                                                 bool with_ssim = false) {
    require(seeds >= 1, "compare: --seeds must be >= 1");
    std::vector<ComparisonRow> rows;
    for (int i = 0; i < seeds; ++i) {
        const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
        if (preset == "sim40") {
            for (Policy p : kBaselineTrio) {
                SimConfig c = sim40_config(p, seed);
                c.metrics.ssim = with_ssim;
                RunResult r = run(c);
                rows.push_back({c.label, p, seed, std::move(r.report), r.switches.size()});
            }
        } else {
            for (auto& tc : trio_preset(preset, seed)) {
                tc.config.metrics.ssim = with_ssim;
                RunResult r = run(tc.config);
                rows.push_back({tc.label, tc.config.policy, seed, std::move(r.report), r.switches.size()});
            }
        }
    }
    return rows;
}

}  // namespace lcrdo
