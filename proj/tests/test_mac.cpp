#include <gtest/gtest.h>

#include <cmath>

#include "lcrdo/mac.hpp"

using namespace lcrdo;

namespace {

struct FixedDrop {
    double q = 0.0;
    double drop_probability_at(double) const { return q; }
};

// Drop probability depends on time: lossless before `edge`, dead after.
struct StepDrop {
    double edge = 0.0;
    double drop_probability_at(double t) const { return t < edge ? 0.0 : 1.0; }
};

Packet pkt(PacketId id, int size = 1000) { return Packet{id, 0, FramePriority::F1, size, 0.0}; }

}  // namespace

TEST(Mac, AckedBurstDeliversWithOneMinusQCubed) {
    MacConfig cfg;
    for (double q : {0.1, 0.4, 0.7}) {
        AttemptDraws draws(42);
        const int n = 100000;
        int ok = 0;
        long attempts = 0;
        for (int i = 0; i < n; ++i) {
            const MacResult r = transmit_acked(pkt(i), 0.0, FixedDrop{q}, cfg, draws);
            ok += r.delivered() ? 1 : 0;
            attempts += r.attempts;
        }
        const double expected = 1.0 - q * q * q;
        const double sd = std::sqrt(expected * (1.0 - expected) / n);
        EXPECT_NEAR(static_cast<double>(ok) / n, expected, 5.0 * sd + 1e-12) << q;
        // E[attempts] = 1 + q + q^2
        EXPECT_NEAR(static_cast<double>(attempts) / n, 1.0 + q + q * q, 0.01) << q;
    }
}

TEST(Mac, UnackedSingleShotDeliversWithOneMinusQ) {
    MacConfig cfg;
    AttemptDraws draws(7);
    const int n = 100000;
    int ok = 0;
    for (int i = 0; i < n; ++i) {
        const MacResult r = transmit_unacked(pkt(i), 0.0, FixedDrop{0.4}, cfg, draws);
        EXPECT_EQ(r.attempts, 1);
        ok += r.delivered() ? 1 : 0;
    }
    EXPECT_NEAR(static_cast<double>(ok) / n, 0.6, 5.0 * std::sqrt(0.24 / n));
}

TEST(Mac, AckedTimingCountsAirtimePlusAckPerAttempt) {
    MacConfig cfg;  // 2 ms + 0.5 ms
    AttemptDraws draws(1);
    const MacResult dead = transmit_acked(pkt(0), 1.0, FixedDrop{1.0}, cfg, draws);
    EXPECT_FALSE(dead.delivered());
    EXPECT_EQ(dead.attempts, 3);
    EXPECT_NEAR(dead.completion_time, 1.0 + 3 * 0.0025, 1e-12);

    const MacResult clean = transmit_acked(pkt(1), 1.0, FixedDrop{0.0}, cfg, draws);
    EXPECT_TRUE(clean.delivered());
    EXPECT_EQ(clean.attempts, 1);
    EXPECT_NEAR(clean.completion_time, 1.0025, 1e-12);
    EXPECT_NEAR(clean.delivery_time, 1.002, 1e-12);
}

TEST(Mac, PhyRateAddsSerialisationTime) {
    MacConfig cfg;
    cfg.tx_duration = 0.0005;
    cfg.ack_duration = 0.0005;
    cfg.phy_rate_bps = 1.0e6;
    EXPECT_NEAR(cfg.attempt_airtime(1000), 0.0005 + 0.008, 1e-15);
    AttemptDraws draws(1);
    const MacResult r = transmit_unacked(pkt(0, 250), 2.0, FixedDrop{0.0}, cfg, draws);
    EXPECT_NEAR(r.completion_time, 2.0 + 0.0005 + 0.002, 1e-12);
}

TEST(Mac, EachAttemptSeesTheChannelAtItsOwnStart) {
    MacConfig cfg;
    AttemptDraws draws(3);
    // first attempt starts at 0.999, the second at 1.0015: only the first can succeed
    const MacResult r = transmit_acked(pkt(0), 0.999, StepDrop{1.0}, cfg, draws);
    EXPECT_TRUE(r.delivered());
    EXPECT_EQ(r.attempts, 1);
    AttemptDraws d2(3);
    const MacResult late = transmit_acked(pkt(0), 1.0, StepDrop{1.0}, cfg, d2);
    EXPECT_FALSE(late.delivered());
}

TEST(Mac, DrawsAreKeyedByPacketAndAttempt) {
    AttemptDraws a(11);
    AttemptDraws b(11);
    const double a5 = a.next(5);
    const double a9 = a.next(9);
    const double a5b = a.next(5);
    // reversed interleaving gives the same per-(packet, attempt) values
    EXPECT_EQ(b.next(9), a9);
    EXPECT_EQ(b.next(5), a5);
    EXPECT_EQ(b.next(5), a5b);
    EXPECT_NE(a5, a5b);
    EXPECT_EQ(a.attempts_so_far(5), 2u);
    EXPECT_EQ(a.attempts_so_far(77), 0u);
    AttemptDraws c(12);
    EXPECT_NE(c.next(5), a5);
}

TEST(Mac, AttemptCounterContinuesAcrossBursts) {
    MacConfig cfg;
    AttemptDraws a(5);
    transmit_acked(pkt(3), 0.0, FixedDrop{1.0}, cfg, a);
    EXPECT_EQ(a.attempts_so_far(3), 3u);
    transmit_unacked(pkt(3), 1.0, FixedDrop{1.0}, cfg, a);
    EXPECT_EQ(a.attempts_so_far(3), 4u);
}

TEST(Mac, BeaconScheduleIsStrictlyAfter) {
    MacConfig cfg;
    EXPECT_NEAR(next_beacon_time(0.0, cfg), 0.1, 1e-12);
    EXPECT_NEAR(next_beacon_time(0.05, cfg), 0.1, 1e-12);
    EXPECT_NEAR(next_beacon_time(0.1, cfg), 0.2, 1e-12);
    const ChannelContext ch(twin_orbit_topology(), ChannelParams{});
    const Beacon b = next_beacon(0.25, cfg, ch);
    EXPECT_NEAR(b.emit_time, 0.3, 1e-12);
    EXPECT_EQ(b.rssi, ch.rssi_at_time(b.emit_time));
}

TEST(Mac, ConfigValidation) {
    MacConfig cfg;
    cfg.max_retries = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = MacConfig{};
    cfg.tx_duration = 0.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = MacConfig{};
    cfg.phy_rate_bps = -1.0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}
