#include <gtest/gtest.h>

#include <cmath>

#include "troopnet/kinematics.hpp"

using namespace troopnet;

namespace {
KinematicTrack kin(std::vector<std::optional<Vec3>> s) {
    FusedTrack t;
    t.samples = std::move(s);
    return compute_velocity(t);
}
}  // namespace

TEST(Velocity, CentralDifference) {
    auto k = kin({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{2, 0, 0}});
    EXPECT_EQ(k.samples[1].vel, (Vec3{1, 0, 0}));
    EXPECT_EQ(k.samples[1].speed, 1.0);
}

TEST(Velocity, OneSidedAtEnds) {
    auto k = kin({Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{2, 0, 0}});
    EXPECT_EQ(k.samples[0].vel, (Vec3{1, 0, 0}));
    EXPECT_EQ(k.samples[2].vel, (Vec3{1, 0, 0}));
    EXPECT_TRUE(k.samples[0].valid);
}

TEST(Velocity, IsolatedSampleInvalid) {
    auto k = kin({std::nullopt, Vec3{1, 0, 0}, std::nullopt});
    EXPECT_FALSE(k.samples[1].valid);
    EXPECT_FALSE(k.samples[0].valid);
}

TEST(Velocity, UsesSamplePeriod) {
    FusedTrack t;
    t.dt = 500;
    t.samples = {Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{2, 0, 0}};
    auto k = compute_velocity(t);
    EXPECT_EQ(k.samples[1].vel.x, 2.0);
    EXPECT_EQ(k.samples[2].t, 1000);
}

TEST(Stationary, ThresholdIsStrict) {
    KinematicTrack t;
    for (double s : {0.01, 0.02, 0.3, 0.05}) {
        KinematicSample k;
        k.valid = true;
        k.speed = s;
        t.samples.push_back(k);
    }
    t.samples.push_back(KinematicSample{});
    auto f = flag_stationary(t, 0.05);
    EXPECT_TRUE(f.samples[0].stationary);
    EXPECT_TRUE(f.samples[1].stationary);
    EXPECT_FALSE(f.samples[2].stationary);
    EXPECT_FALSE(f.samples[3].stationary);
    EXPECT_FALSE(f.samples[4].stationary);
}

TEST(Stationary, WindowNeedsWholeHistorySlow) {
    KinematicTrack t;
    for (int k = 0; k < 6; ++k) {
        KinematicSample s;
        s.t = k * 1000;
        s.valid = true;
        s.speed = k == 1 ? 0.5 : 0.0;
        t.samples.push_back(s);
    }
    auto f = flag_stationary(t, 0.05, 2.0);
    EXPECT_TRUE(f.samples[0].stationary);
    EXPECT_FALSE(f.samples[1].stationary);
    EXPECT_FALSE(f.samples[2].stationary);
    EXPECT_FALSE(f.samples[3].stationary);
    EXPECT_TRUE(f.samples[4].stationary);
}

TEST(Bearing, UnitVectors) {
    EXPECT_EQ(*bearing({0, 0, 0}, {2, 0, 0}), (Vec3{1, 0, 0}));
    auto b = *bearing({0, 0, 0}, {1, 1, 0});
    EXPECT_NEAR(b.x, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(b.y, std::sqrt(0.5), 1e-15);
    EXPECT_FALSE(bearing({1, 1, 1}, {1, 1, 1}));
}

TEST(DirectedVelocity, Examples) {
    const Vec3 b{1, 0, 0};
    EXPECT_EQ(directed_velocity({1, 0, 0}, 1.0, b), 1.0);
    EXPECT_EQ(directed_velocity({-2, 0, 0}, 2.0, b), -1.0);
    const Vec3 v{std::cos(3 * M_PI / 4), std::sin(3 * M_PI / 4), 0};
    EXPECT_NEAR(*directed_velocity(v, 1.0, b), -std::sqrt(0.5), 1e-12);
    EXPECT_FALSE(directed_velocity({0.1, 0, 0}, 0.1, b));
    EXPECT_FALSE(directed_velocity({1, 0, 0}, 1.0, std::nullopt));
    EXPECT_TRUE(directed_velocity({0.2, 0, 0}, 0.2, b));
}
