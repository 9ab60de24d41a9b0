#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "lcrdo/channel.hpp"

using namespace lcrdo;

namespace {

// Straight re-derivation of the link budget, kept apart from the library.
double oracle_drop(double d, double tx_dbm, double ref_db, double alpha, double mid, double steep, double pc) {
    const double rx = tx_dbm - (ref_db + 10.0 * alpha * std::log10(d));
    const double ch = 1.0 / (1.0 + std::exp(steep * (rx - mid)));
    return 1.0 - (1.0 - ch) * (1.0 - pc);
}

}  // namespace

TEST(Geometry, TwinOrbitSeparationSweepsThreeHundredToFourSixty) {
    const Topology t = twin_orbit_topology(60.0, true);
    double lo = 1e9;
    double hi = 0.0;
    for (int i = 0; i < 6000; ++i) {
        const double d = t.distance_at(i * 0.01);
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    EXPECT_NEAR(lo, 300.0, 1e-6);
    EXPECT_NEAR(hi, 460.0, 1e-6);
    EXPECT_NEAR(t.distance_at(0.0), 300.0, 1e-9);
    EXPECT_NEAR(t.distance_at(30.0), 460.0, 1e-9);
}

TEST(Geometry, PeriodFollowsSharedAngularSpeed) {
    EXPECT_NEAR(twin_orbit_topology(3.45).mobility_period(), 3.45, 1e-12);
    Topology t = twin_orbit_topology(10.0);
    t.destination.angular_speed *= 2.0;
    EXPECT_THROW(t.validate(), ConfigError);
}

TEST(Geometry, StationaryNodesGiveStaticDistance) {
    Topology t;
    t.source = CircularPath{{0.0, 0.0}, 0.0, 0.0, 0.0};
    t.destination = CircularPath{{30.0, 40.0}, 0.0, 0.0, 0.0};
    EXPECT_EQ(t.mobility_period(), 0.0);
    EXPECT_DOUBLE_EQ(t.distance_at(0.0), 50.0);
    EXPECT_DOUBLE_EQ(t.distance_at(123.0), 50.0);
}

TEST(Geometry, NegativeRadiusRejected) {
    CircularPath p{{0.0, 0.0}, -1.0, 0.1, 0.0};
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Channel, PathLossMatchesLogDistance) {
    ChannelParams p;
    EXPECT_DOUBLE_EQ(path_loss_db(1.0, p), 40.0);
    EXPECT_NEAR(path_loss_db(10.0, p), 40.0 + 37.0, 1e-12);
    EXPECT_NEAR(path_loss_db(100.0, p), 40.0 + 74.0, 1e-12);
    EXPECT_DOUBLE_EQ(path_loss_db(0.5, p), 40.0);  // clamped below d0
}

TEST(Channel, DropProbabilityMatchesIndependentFormula) {
    ChannelParams p;
    p.drop_midpoint_dbm = -100.0;
    for (double d = 250.0; d <= 500.0; d += 12.5) {
        EXPECT_NEAR(drop_probability(d, p, true), oracle_drop(d, 30.0, 40.0, 3.7, -100.0, 0.4, 0.3), 1e-12) << d;
        EXPECT_NEAR(drop_probability(d, p, false), oracle_drop(d, 30.0, 40.0, 3.7, -100.0, 0.4, 0.0), 1e-12) << d;
    }
}

TEST(Channel, DropProbabilityIncreasesWithDistance) {
    ChannelParams p;
    double prev = 0.0;
    for (double d = 10.0; d < 2000.0; d *= 1.1) {
        const double q = drop_probability(d, p, true);
        EXPECT_GE(q, prev);
        EXPECT_GE(q, 0.0);
        EXPECT_LE(q, 1.0);
        prev = q;
    }
}

TEST(Rssi, LinearMapRoundsHalfUpAndClamps) {
    ChannelParams p;
    p.rssi_min_dbm = 0.0;
    p.rssi_max_dbm = 127.0;  // one dBm per step
    EXPECT_EQ(rssi_from_power(-5.0, p).value(), 0);
    EXPECT_EQ(rssi_from_power(0.0, p).value(), 0);
    EXPECT_EQ(rssi_from_power(0.49, p).value(), 0);
    EXPECT_EQ(rssi_from_power(0.5, p).value(), 1);
    EXPECT_EQ(rssi_from_power(49.5, p).value(), 50);
    EXPECT_EQ(rssi_from_power(50.49, p).value(), 50);
    EXPECT_EQ(rssi_from_power(126.5, p).value(), 127);
    EXPECT_EQ(rssi_from_power(500.0, p).value(), 127);
}

TEST(Rssi, NonFiniteInputIsInvalid) {
    ChannelParams p;
    EXPECT_EQ(rssi_from_power(std::numeric_limits<double>::quiet_NaN(), p).value(), Rssi::kInvalid);
    EXPECT_FALSE(rssi_from_power(std::numeric_limits<double>::infinity(), p).valid());
    EXPECT_FALSE(rssi_at(std::numeric_limits<double>::infinity(), p).valid());
    EXPECT_THROW(Rssi{129}, ConfigError);
    EXPECT_THROW(Rssi{-1}, ConfigError);
}

TEST(Rssi, MonotoneInReceivedPower) {
    ChannelParams p;
    int prev = -1;
    for (double dbm = -130.0; dbm <= -30.0; dbm += 0.05) {
        const int v = rssi_from_power(dbm, p).value();
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Calibration, HitsTargetWithinTolerance) {
    const Topology t = twin_orbit_topology();
    for (double target : {0.35, 0.40, 0.60, 0.90}) {
        const ChannelParams p = calibrate_channel(t, ChannelParams{}, target, 0.005);
        EXPECT_NEAR(mean_drop_probability(t, p), target, 0.005) << target;
    }
}

TEST(Calibration, TimeAverageAgreesWithMonteCarlo) {
    const Topology t = twin_orbit_topology(60.0, true);
    const ChannelParams p = calibrate_channel(t, ChannelParams{}, 0.40, 0.005);
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> when(0.0, 60.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int dropped = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double d = t.distance_at(when(gen));
        if (u(gen) < oracle_drop(d, p.tx_power_dbm, p.ref_loss_db, p.alpha, p.drop_midpoint_dbm, p.drop_steepness,
                                 p.interference_collision_prob)) {
            ++dropped;
        }
    }
    EXPECT_NEAR(static_cast<double>(dropped) / n, 0.40, 0.006);
}

TEST(Calibration, ZeroTargetWithoutInterferer) {
    const Topology t = twin_orbit_topology(60.0, false);
    const ChannelParams p = calibrate_channel(t, ChannelParams{}, 0.0, 0.005);
    EXPECT_LE(mean_drop_probability(t, p), 0.005);
}

TEST(Calibration, UnreachableTargetRaises) {
    const Topology t = twin_orbit_topology(60.0, true);  // collisions alone drop 30 %
    EXPECT_THROW(calibrate_channel(t, ChannelParams{}, 0.10, 0.005), CalibrationError);
}

TEST(Calibration, BadArgumentsAreConfigErrors) {
    const Topology t = twin_orbit_topology();
    EXPECT_THROW(calibrate_channel(t, ChannelParams{}, 1.5, 0.005), ConfigError);
    EXPECT_THROW(calibrate_channel(t, ChannelParams{}, 0.4, 0.0), ConfigError);
    ChannelParams bad;
    bad.rssi_max_dbm = bad.rssi_min_dbm;
    EXPECT_THROW(calibrate_channel(t, bad, 0.4, 0.005), ConfigError);
}

TEST(ChannelContext, IidModeUsesTheTimeAverage) {
    const Topology t = twin_orbit_topology();
    const ChannelParams p = calibrate_channel(t, ChannelParams{}, 0.40, 0.005);
    const ChannelContext iid(t, p, LossModel::Iid);
    const ChannelContext pos(t, p, LossModel::PositionCorrelated);
    EXPECT_DOUBLE_EQ(iid.drop_probability_at(0.0), iid.drop_probability_at(17.3));
    EXPECT_NEAR(iid.drop_probability_at(0.0), 0.40, 0.005);
    EXPECT_LT(pos.drop_probability_at(0.0), pos.drop_probability_at(30.0));
}

TEST(ChannelContext, LossModelNames) {
    EXPECT_EQ(parse_loss_model("iid"), LossModel::Iid);
    EXPECT_EQ(parse_loss_model("position"), LossModel::PositionCorrelated);
    EXPECT_THROW(parse_loss_model("bursty"), ConfigError);
}
