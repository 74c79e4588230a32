#include <gtest/gtest.h>

#include <cmath>

#include "troopnet/events.hpp"

using namespace troopnet;

namespace {

// A track at 1 Hz from positions; nullopt is a dropout.
KinematicTrack track(AnimalId id, const std::vector<std::optional<Vec3>>& pos, double v_stat = 0.1) {
    FusedTrack f;
    f.animal = id;
    f.samples = pos;
    return flag_stationary(compute_velocity(f), v_stat);
}

std::vector<std::optional<Vec3>> still(Vec3 p, int n) { return std::vector<std::optional<Vec3>>(static_cast<std::size_t>(n), p); }

// Samples with explicit velocities, positions held fixed.
KinematicTrack synthetic(AnimalId id, const Vec3& pos, const std::vector<Vec3>& vel, double v_stat = 0.1) {
    KinematicTrack t;
    t.animal = id;
    for (std::size_t k = 0; k < vel.size(); ++k) {
        KinematicSample s;
        s.t = static_cast<TimeMs>(k) * 1000;
        s.pos = pos;
        s.vel = vel[k];
        s.speed = norm(vel[k]);
        s.valid = true;
        t.samples.push_back(s);
    }
    return flag_stationary(t, v_stat);
}

Vec3 heading(double deg, double speed) {
    const double r = deg * M_PI / 180.0;
    return {speed * std::cos(r), speed * std::sin(r), 0.0};
}

}  // namespace

TEST(Grooming, NinetySecondsClose) {
    auto ev = detect_grooming(track(1, still({1, 1, 0.5}, 90)), track(2, still({1.4, 1, 0.5}, 90)));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0], (GroomingEvent{1, 2, 0, 90000}));
    EXPECT_EQ(ev[0].duration_s(), 90.0);
}

TEST(Grooming, TooShort) {
    EXPECT_TRUE(detect_grooming(track(1, still({1, 1, 0.5}, 45)), track(2, still({1.4, 1, 0.5}, 45))).empty());
}

TEST(Grooming, TooFar) {
    EXPECT_TRUE(detect_grooming(track(1, still({1, 1, 0.5}, 120)), track(2, still({1.6, 1, 0.5}, 120))).empty());
}

TEST(Grooming, ShortDropoutMerges) {
    auto b = still({1.4, 1, 0.5}, 81);
    b[40] = std::nullopt;
    auto ev = detect_grooming(track(1, still({1, 1, 0.5}, 81)), track(2, b));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].t_start, 0);
    EXPECT_EQ(ev[0].t_end, 81000);
}

TEST(Grooming, LongBreakSplits) {
    auto b = still({1.4, 1, 0.5}, 160);
    for (int k = 70; k < 75; ++k) b[static_cast<std::size_t>(k)] = std::nullopt;
    auto ev = detect_grooming(track(1, still({1, 1, 0.5}, 160)), track(2, b));
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0].t_end, 70000);
    EXPECT_EQ(ev[1].t_start, 75000);
}

TEST(Grooming, OrdersPairIds) {
    auto ev = detect_grooming(track(5, still({1, 1, 0.5}, 60)), track(2, still({1.4, 1, 0.5}, 60)));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].a, 2);
    EXPECT_EQ(ev[0].b, 5);
}

TEST(MoveAway, DirectRetreat) {
    std::vector<std::optional<Vec3>> i;
    for (int k = 0; k < 5; ++k) i.push_back(Vec3{-static_cast<double>(k), 0, 0});
    auto ev = detect_move_away(track(1, i), track(2, still({1, 0, 0}, 5)));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].mover, 1);
    EXPECT_EQ(ev[0].target, 2);
    EXPECT_EQ(ev[0].t_end - ev[0].t_start, 5000);
    EXPECT_DOUBLE_EQ(ev[0].mean_dv, -1.0);
    EXPECT_DOUBLE_EQ(ev[0].mean_projection, -1.0);
}

TEST(MoveAway, OutsideBand) {
    auto i = synthetic(1, {0, 0, 0}, std::vector<Vec3>(5, heading(120, 1.0)));
    auto j = synthetic(2, {1, 0, 0}, std::vector<Vec3>(5, Vec3{}));
    EXPECT_TRUE(detect_move_away(i, j).empty());
}

TEST(MoveAway, SlowMoverUndefined) {
    auto i = synthetic(1, {0, 0, 0}, std::vector<Vec3>(5, Vec3{-0.1, 0, 0}));
    auto j = synthetic(2, {1, 0, 0}, std::vector<Vec3>(5, Vec3{}));
    EXPECT_TRUE(detect_move_away(i, j).empty());
}

TEST(MoveAway, BandIsClosed) {
    auto j = synthetic(2, {1, 0, 0}, std::vector<Vec3>(3, Vec3{}));
    auto at = [&](double deg) { return detect_move_away(synthetic(1, {0, 0, 0}, std::vector<Vec3>(3, heading(deg, 1.0))), j); };
    EXPECT_EQ(at(180).size(), 1u);
    EXPECT_EQ(at(135).size(), 1u);
    EXPECT_TRUE(at(133).empty());
}

TEST(MoveAway, MinimumLength) {
    std::vector<Vec3> v(6, Vec3{});
    v[2] = {-1, 0, 0};
    auto j = synthetic(2, {1, 0, 0}, std::vector<Vec3>(6, Vec3{}));
    EXPECT_TRUE(detect_move_away(synthetic(1, {0, 0, 0}, v), j).empty());
    v[3] = {-1, 0, 0};
    EXPECT_EQ(detect_move_away(synthetic(1, {0, 0, 0}, v), j).size(), 1u);
}

TEST(MoveAway, DisplacementAfterRest) {
    std::vector<Vec3> v(10, Vec3{});
    for (int k = 0; k < 5; ++k) v.push_back({-1, 0, 0});
    auto i = synthetic(1, {0, 0, 0}, v);
    auto j = synthetic(2, {1, 0, 0}, std::vector<Vec3>(15, Vec3{}));
    auto ev = detect_move_away(i, j);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, MoveAwayKind::displacement);
    EXPECT_EQ(classify_move_away(ev[0], i), MoveAwayKind::displacement);
}

TEST(MoveAway, WithdrawalWhenWalking) {
    std::vector<Vec3> v(10, Vec3{0, 0.15, 0});
    for (int k = 0; k < 5; ++k) v.push_back({-1, 0, 0});
    auto i = synthetic(1, {0, 0, 0}, v);
    auto ev = detect_move_away(i, synthetic(2, {1, 0, 0}, std::vector<Vec3>(15, Vec3{})));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, MoveAwayKind::withdrawal);
    EXPECT_EQ(classify_move_away(ev[0], i), MoveAwayKind::withdrawal);
}

TEST(MoveAway, ShortRestIsWithdrawal) {
    std::vector<Vec3> v(7, Vec3{0, 0.15, 0});
    for (int k = 0; k < 3; ++k) v.push_back(Vec3{});
    for (int k = 0; k < 5; ++k) v.push_back({-1, 0, 0});
    auto i = synthetic(1, {0, 0, 0}, v);
    auto ev = detect_move_away(i, synthetic(2, {1, 0, 0}, std::vector<Vec3>(15, Vec3{})));
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].kind, MoveAwayKind::withdrawal);
}

TEST(MoveAway, ProximityGate) {
    MoveAwayParams p;
    p.proximity_gate = 0.5;
    auto i = synthetic(1, {0, 0, 0}, std::vector<Vec3>(4, Vec3{-1, 0, 0}));
    EXPECT_TRUE(detect_move_away(i, synthetic(2, {1, 0, 0}, std::vector<Vec3>(4, Vec3{})), p).empty());
    EXPECT_EQ(detect_move_away(i, synthetic(2, {0.4, 0, 0}, std::vector<Vec3>(4, Vec3{})), p).size(), 1u);
}

TEST(Chase, ChaserHeadsAtFleeingPartner) {
    const double off = std::acos(0.95) * 180.0 / M_PI;
    auto a = synthetic(1, {0, 0, 0}, std::vector<Vec3>(3, heading(off, 1.2)));
    auto b = synthetic(2, {0.8, 0, 0}, std::vector<Vec3>(3, heading(off, 1.2)));
    auto ev = detect_chase(a, b);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0], (ChaseEvent{1, 2, 0, 3000}));
    ev = detect_chase(b, a);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].chaser, 1);
}

TEST(Chase, StationaryPartner) {
    auto a = synthetic(1, {0, 0, 0}, std::vector<Vec3>(3, heading(0, 1.2)));
    auto b = synthetic(2, {0.8, 0, 0}, std::vector<Vec3>(3, Vec3{}));
    EXPECT_TRUE(detect_chase(a, b).empty());
}

TEST(Chase, ParallelRunners) {
    auto a = synthetic(1, {0, 0, 0}, std::vector<Vec3>(3, heading(90, 1.2)));
    auto b = synthetic(2, {0.8, 0, 0}, std::vector<Vec3>(3, heading(90, 1.2)));
    EXPECT_TRUE(detect_chase(a, b).empty());
}

TEST(Attack, SuddenRiseTowardTarget) {
    const double off = std::acos(0.9) * 180.0 / M_PI;
    auto a = synthetic(1, {0, 0, 0}, {heading(off, 0.02), heading(off, 1.4), heading(off, 1.6), Vec3{}});
    auto b = synthetic(2, {1, 0, 0}, std::vector<Vec3>(4, Vec3{}));
    auto ev = detect_attack(a, b);
    ASSERT_EQ(ev.size(), 1u);
    EXPECT_EQ(ev[0].t_onset, 1000);
    EXPECT_GE(ev[0].peak_speed, 1.4);
    EXPECT_DOUBLE_EQ(ev[0].peak_speed, 1.6);
}

TEST(Attack, RiseAwayFromTarget) {
    const double off = 180.0 - std::acos(0.9) * 180.0 / M_PI;
    auto a = synthetic(1, {0, 0, 0}, {heading(off, 0.02), heading(off, 1.4)});
    auto b = synthetic(2, {1, 0, 0}, std::vector<Vec3>(2, Vec3{}));
    EXPECT_TRUE(detect_attack(a, b).empty());
}

TEST(Attack, GradualRise) {
    std::vector<Vec3> v;
    for (int k = 0; k <= 10; ++k) v.push_back(heading(0, 0.02 + 0.138 * k));
    auto a = synthetic(1, {0, 0, 0}, v);
    auto b = synthetic(2, {1, 0, 0}, std::vector<Vec3>(v.size(), Vec3{}));
    EXPECT_TRUE(detect_attack(a, b).empty());
}

TEST(Params, Validation) {
    EXPECT_THROW((GroomingParams{0.0, 60, 2}).validate(), ConfigError);
    EXPECT_THROW((MoveAwayParams{-0.5, -0.7, 2, std::nullopt, 5}).validate(), ConfigError);
    EXPECT_THROW(MoveAwayDetector(1, 1, 1000), ConfigError);
    EXPECT_THROW((ChaseParams{1, 1.5, 1.5, 2}).validate(), ConfigError);
    EXPECT_THROW((AttackParams{1, 2, 0.7, 1.5}).validate(), ConfigError);
}
