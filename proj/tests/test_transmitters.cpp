#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "lcrdo/transmitters.hpp"

using namespace lcrdo;

namespace {

struct Observed {
    TxAction::Kind kind;
    PacketId packet;
    int id_frame;
    PacketId id_pkt;
    friend bool operator==(const Observed&, const Observed&) = default;
};

std::ostream& operator<<(std::ostream& os, const Observed& o) {
    return os << to_string(o.kind) << "(" << o.packet << ") frame=" << o.id_frame << " pkt=" << o.id_pkt;
}

MacResult mac(bool ok) {
    MacResult r;
    r.outcome = ok ? MacOutcome::Delivered : MacOutcome::Dropped;
    r.attempts = 1;
    return r;
}

// Blocking rendition of the pseudo-code: the sender waits for each MAC result
// inline. Each send costs `cost(i)` seconds of the shared clock.
template <typename Outcome, typename Cost>
std::vector<Observed> reference_run(const GofStream& s, double period, Outcome outcome, Cost cost) {
    std::vector<Observed> out;
    std::size_t g = 0;
    double t = 0.0;
    double ts = s.gof(0).deadline;
    int id_frame = 1;
    PacketId id_pkt = s.gof(0).first_packet;
    PacketId final_f1 = s.gof(0).final_f1_packet;
    PacketId final_gof = s.gof(0).final_gof_packet;
    int sends = 0;
    while (true) {
        if (t < ts) {
            if (id_frame == 1) {
                if (id_pkt <= final_f1) {
                    out.push_back({TxAction::Kind::SendAcked, id_pkt, id_frame, id_pkt});
                    const bool ok = outcome(sends);
                    t += cost(sends++);
                    if (ok) id_pkt = id_pkt + 1;
                    continue;
                }
                id_frame = id_frame + 1;
            }
            if (id_pkt <= final_gof) {
                const PacketId sent = id_pkt;
                id_pkt = id_pkt + 1;
                out.push_back({TxAction::Kind::SendUnacked, sent, id_frame, id_pkt});
                outcome(sends);
                t += cost(sends++);
                continue;
            }
            out.push_back({TxAction::Kind::Idle, -1, id_frame, id_pkt});
            t = ts;
            continue;
        }
        ts = ts + period;
        id_frame = 1;
        id_pkt = final_gof + 1;
        ++g;
        out.push_back({TxAction::Kind::AdvanceGof, -1, id_frame, id_pkt});
        if (g >= s.gof_count()) break;
        final_f1 = s.gof(g).final_f1_packet;
        final_gof = s.gof(g).final_gof_packet;
    }
    return out;
}

template <typename Outcome, typename Cost>
std::vector<Observed> library_run(const GofStream& s, double period, Outcome outcome, Cost cost) {
    std::vector<Observed> out;
    LcrdoAckState st = initial_lcrdo_ack_state(s, period);
    double t = 0.0;
    int sends = 0;
    std::optional<MacResult> last;
    for (int guard = 0; guard < 100000; ++guard) {
        const auto [a, next] = step_lcrdo_ack(st, t, s, last);
        st = next;
        last.reset();
        if (a.kind == TxAction::Kind::Idle && a.terminal) break;
        out.push_back({a.kind, a.packet, st.id_frame, st.id_pkt});
        if (a.kind == TxAction::Kind::SendAcked || a.kind == TxAction::Kind::SendUnacked) {
            last = mac(outcome(sends));
            t += cost(sends++);
        } else if (a.kind == TxAction::Kind::Idle) {
            t = a.wake_time;
        }
    }
    return out;
}

GofStream small_stream(int gofs, double period) {
    // per GOF: f1 = 2 packets, f2 = 1 packet, two f3 = 1 packet each
    return GofStream(build_gof_stream(GofConfig{{1, 1, 2}, {2, 1, 1}, period, 4.0 / period}, gofs));
}

}  // namespace

TEST(LcrdoAck, MatchesBlockingReferenceOnRandomScripts) {
    std::mt19937_64 gen(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const double period = 0.05 + 0.01 * static_cast<double>(gen() % 20);
        const GofStream s = small_stream(1 + static_cast<int>(gen() % 6), period);
        std::vector<bool> outcomes(4000);
        std::vector<double> costs(4000);
        std::bernoulli_distribution coin(0.5);
        std::uniform_real_distribution<double> c(0.001, 0.03);
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            outcomes[i] = coin(gen);
            costs[i] = c(gen);
        }
        auto outcome = [&](int i) { return static_cast<bool>(outcomes.at(static_cast<std::size_t>(i))); };
        auto cost = [&](int i) { return costs.at(static_cast<std::size_t>(i)); };
        const auto ref = reference_run(s, period, outcome, cost);
        const auto lib = library_run(s, period, outcome, cost);
        ASSERT_EQ(lib.size(), ref.size()) << "trial " << trial;
        for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_EQ(lib[i], ref[i]) << "trial " << trial << " step " << i;
    }
}

TEST(LcrdoAck, F1FailureResendsSamePacket) {
    const GofStream s = small_stream(1, 1.0);
    LcrdoAckState st = initial_lcrdo_ack_state(s, 1.0);
    auto r = step_lcrdo_ack(st, 0.0, s, std::nullopt);
    EXPECT_EQ(r.action, TxAction::send_acked(0));
    r = step_lcrdo_ack(r.state, 0.01, s, mac(false));
    EXPECT_EQ(r.action, TxAction::send_acked(0));
    EXPECT_EQ(r.state.id_pkt, 0);
    r = step_lcrdo_ack(r.state, 0.02, s, mac(true));
    EXPECT_EQ(r.action, TxAction::send_acked(1));
}

TEST(LcrdoAck, DeadlineAbortJumpsToNextGof) {
    const GofStream s = small_stream(2, 1.0);
    LcrdoAckState st = initial_lcrdo_ack_state(s, 1.0);
    auto r = step_lcrdo_ack(st, 0.0, s, std::nullopt);  // f1 packet 0
    r = step_lcrdo_ack(r.state, 1.0, s, mac(false));      // deadline reached
    EXPECT_EQ(r.action.kind, TxAction::Kind::AdvanceGof);
    EXPECT_EQ(r.state.id_frame, 1);
    EXPECT_EQ(r.state.id_pkt, 5);
    EXPECT_DOUBLE_EQ(r.state.t_gof_timestamp, 2.0);
    EXPECT_EQ(r.state.id_final_f1_pkt, 6);
    EXPECT_EQ(r.state.id_final_gof_pkt, 9);
}

TEST(LcrdoAck, InvariantsHoldAlongRandomRuns) {
    std::mt19937_64 gen(5);
    const GofStream s = small_stream(8, 0.1);
    LcrdoAckState st = initial_lcrdo_ack_state(s, 0.1);
    double t = 0.0;
    double prev_ts = st.t_gof_timestamp;
    std::optional<MacResult> last;
    for (int i = 0; i < 2000 && !st.exhausted; ++i) {
        const auto r = step_lcrdo_ack(st, t, s, last);
        st = r.state;
        last.reset();
        if (!st.exhausted) {
            EXPECT_LE(st.id_pkt, st.id_final_gof_pkt + 1);
        }
        const double steps = (st.t_gof_timestamp - prev_ts) / 0.1;
        EXPECT_NEAR(steps, std::round(steps), 1e-9);
        if (r.action.kind == TxAction::Kind::SendAcked || r.action.kind == TxAction::Kind::SendUnacked) {
            last = mac(gen() % 2 == 0);
            t += 0.013;
        } else if (r.action.kind == TxAction::Kind::Idle) {
            t = r.action.wake_time;
        }
    }
    EXPECT_TRUE(st.exhausted);
}

TEST(NoAck, SendsOnceAndSkipsExpiredGofs) {
    const GofStream s = small_stream(3, 1.0);
    NoAckTransmitter tx(s);
    EXPECT_EQ(tx.step(0.0, std::nullopt), TxAction::send_unacked(0));
    EXPECT_EQ(tx.step(0.1, mac(false)), TxAction::send_unacked(1));
    // jump past GOF 0 and GOF 1 deadlines: next packet is the start of GOF 2
    EXPECT_EQ(tx.step(2.5, mac(true)), TxAction::send_unacked(10));
    for (PacketId id = 11; id <= 14; ++id) EXPECT_EQ(tx.step(2.6, std::nullopt), TxAction::send_unacked(id));
    EXPECT_TRUE(tx.step(2.7, std::nullopt).terminal);
}

TEST(NoAck, WaitsForRelease) {
    const GofStream s = small_stream(2, 1.0);
    NoAckTransmitter tx(s);
    for (PacketId id = 0; id < 5; ++id) tx.step(0.0, std::nullopt);
    const TxAction a = tx.step(0.2, std::nullopt);
    EXPECT_EQ(a.kind, TxAction::Kind::Idle);
    EXPECT_DOUBLE_EQ(a.wake_time, 1.0);
}

TEST(Ack, StopAndWaitIgnoresDeadlines) {
    const GofStream s = small_stream(2, 1.0);
    AckTransmitter tx(s);
    EXPECT_EQ(tx.step(0.0, std::nullopt), TxAction::send_acked(0));
    EXPECT_EQ(tx.step(5.0, mac(false)), TxAction::send_acked(0));
    EXPECT_EQ(tx.step(6.0, mac(true)), TxAction::send_acked(1));
}

// ---------------------------------------------------------------------------
// Hysteresis

namespace {

Beacon beacon(int rssi) { return Beacon{0.0, rssi == 128 ? Rssi::invalid() : Rssi{rssi}, 1}; }

}  // namespace

TEST(Hysteresis, RampSwitchesExactlyTwice) {
    HysteresisController ctrl{Rssi{30}, Rssi{50}, EncoderId::Encoder2};
    TxQueues q;
    std::vector<std::pair<int, EncoderId>> switches;
    std::vector<int> ramp;
    for (int v = 0; v <= 127; ++v) ramp.push_back(v);
    for (int v = 126; v >= 0; --v) ramp.push_back(v);
    for (int v : ramp) {
        q.of(EncoderId::Encoder1).push_back(v);
        q.of(EncoderId::Encoder2).push_back(v);
        const TxAction a = apply_beacon(ctrl, q, beacon(v));
        if (a.kind == TxAction::Kind::SwitchEncoder) {
            switches.push_back({v, a.encoder});
            EXPECT_EQ(q.total(), 0u);
        } else {
            EXPECT_GT(q.total(), 0u);
        }
    }
    ASSERT_EQ(switches.size(), 2u);
    EXPECT_EQ(switches[0], std::make_pair(51, EncoderId::Encoder1));
    EXPECT_EQ(switches[1], std::make_pair(29, EncoderId::Encoder2));
}

TEST(Hysteresis, BandNeverSwitches) {
    std::mt19937_64 gen(17);
    for (EncoderId start : {EncoderId::Encoder1, EncoderId::Encoder2}) {
        HysteresisController ctrl{Rssi{30}, Rssi{50}, start};
        TxQueues q;
        for (int i = 0; i < 5000; ++i) {
            const int v = 30 + static_cast<int>(gen() % 21);  // [30, 50]
            q.of(start).push_back(i);
            EXPECT_EQ(apply_beacon(ctrl, q, beacon(v)).kind, TxAction::Kind::Idle);
        }
        EXPECT_EQ(ctrl.active, start);
        EXPECT_EQ(q.total(), 5000u);
    }
}

TEST(Hysteresis, InvalidBeaconIsInert) {
    HysteresisController ctrl{Rssi{30}, Rssi{50}, EncoderId::Encoder1};
    TxQueues q;
    q.of(EncoderId::Encoder1).push_back(1);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(apply_beacon(ctrl, q, beacon(128)).kind, TxAction::Kind::Idle);
    EXPECT_EQ(ctrl.active, EncoderId::Encoder1);
    EXPECT_EQ(q.total(), 1u);
    // the pure form leaves its inputs alone
    const auto r = on_beacon(ctrl, q, beacon(0));
    EXPECT_EQ(r.action, TxAction::switch_encoder(EncoderId::Encoder2));
    EXPECT_EQ(r.queues.total(), 0u);
    EXPECT_EQ(q.total(), 1u);
}

TEST(Hysteresis, ThresholdOrderValidated) {
    EXPECT_THROW((HysteresisController{Rssi{50}, Rssi{30}}.validate()), ConfigError);
    EXPECT_THROW((HysteresisController{Rssi{40}, Rssi{40}}.validate()), ConfigError);
    EXPECT_THROW((HysteresisController{Rssi::invalid(), Rssi{40}}.validate()), ConfigError);
}

TEST(BeaconTransmitter, AppRetryUntilDelivered) {
    BeaconTransmitter tx(HysteresisController{}, EncoderLock::None, true);
    tx.enqueue(EncoderId::Encoder1, 4);
    tx.enqueue(EncoderId::Encoder1, 5);
    EXPECT_EQ(tx.step(0.0, std::nullopt), TxAction::send_acked(4));
    EXPECT_EQ(tx.step(0.1, mac(false)), TxAction::send_acked(4));
    EXPECT_EQ(tx.step(0.2, mac(false)), TxAction::send_acked(4));
    EXPECT_EQ(tx.step(0.3, mac(true)), TxAction::send_acked(5));
    EXPECT_EQ(tx.step(0.4, mac(true)).kind, TxAction::Kind::Idle);
}

TEST(BeaconTransmitter, WithoutAppRetryMovesOn) {
    BeaconTransmitter tx(HysteresisController{}, EncoderLock::None, false);
    tx.enqueue(EncoderId::Encoder1, 4);
    tx.enqueue(EncoderId::Encoder1, 5);
    tx.step(0.0, std::nullopt);
    EXPECT_EQ(tx.step(0.1, mac(false)), TxAction::send_acked(5));
}

TEST(BeaconTransmitter, SwitchDropsQueuedAndInFlight) {
    BeaconTransmitter tx(HysteresisController{}, EncoderLock::None, true);
    for (PacketId id = 0; id < 4; ++id) tx.enqueue(EncoderId::Encoder1, id);
    EXPECT_EQ(tx.step(0.0, std::nullopt), TxAction::send_acked(0));
    EXPECT_EQ(tx.handle_beacon(beacon(10)), TxAction::switch_encoder(EncoderId::Encoder2));
    EXPECT_EQ(tx.queues().total(), 0u);
    tx.enqueue(EncoderId::Encoder2, 100);
    // packet 0 failed, but it belongs to the old encoder: not retried
    EXPECT_EQ(tx.step(0.1, mac(false)), TxAction::send_acked(100));
}

TEST(BeaconTransmitter, LockedIgnoresBeacons) {
    BeaconTransmitter tx(HysteresisController{}, EncoderLock::Encoder2, true);
    EXPECT_EQ(tx.active(), EncoderId::Encoder2);
    tx.enqueue(EncoderId::Encoder2, 1);
    EXPECT_EQ(tx.handle_beacon(beacon(127)).kind, TxAction::Kind::Idle);
    EXPECT_EQ(tx.active(), EncoderId::Encoder2);
    EXPECT_EQ(tx.queues().total(), 1u);
}

TEST(Policies, NamesRoundTrip) {
    for (Policy p : kAllPolicies) EXPECT_EQ(parse_policy(to_string(p)), p);
    EXPECT_THROW(parse_policy("tcp"), ConfigError);
    EXPECT_TRUE(uses_encoder_pair(Policy::LcrdoBeacon));
    EXPECT_FALSE(uses_encoder_pair(Policy::LcrdoAck));
    EXPECT_THROW(encoder_pair_for(Policy::NoAck), ConfigError);
}
