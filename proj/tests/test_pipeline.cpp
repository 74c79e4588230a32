#include <gtest/gtest.h>

#include <algorithm>

#include "troopnet/io.hpp"
#include "troopnet/pipeline.hpp"
#include "troopnet/simgen.hpp"

using namespace troopnet;

namespace {

SimulationOutput dataset(std::uint64_t seed) {
    Scenario sc;
    sc.n = 4;
    sc.duration_s = 1800;
    sc.seed = seed;
    sc.grooming.push_back({1, 2, 300, 120, 0.25});
    return simulate(plant_hierarchy(sc, 20.0));
}

CollarMap collars(int n) {
    Scenario sc;
    sc.n = n;
    return CollarMap(collar_entries(sc));
}

}  // namespace

TEST(Analyzer, NoData) {
    Analyzer an(2, PipelineConfig{});
    EXPECT_THROW(an.finish(), NoDataError);
    EXPECT_THROW(analyze_readings({}, collars(2), PipelineConfig{}), NoDataError);
}

TEST(Analyzer, SingleWindowHasNoSpan) {
    Analyzer an(1, PipelineConfig{});
    an.push(1, 0, {1, 1, 1});
    EXPECT_THROW(an.finish(), NoDataError);
}

TEST(Analyzer, RejectsLateReadings) {
    Analyzer an(1, PipelineConfig{});
    an.push(1, 5000, {1, 1, 1});
    EXPECT_THROW(an.push(1, 3000, {1, 1, 1}), OutOfOrderError);
    EXPECT_THROW(an.push(2, 6000, {1, 1, 1}), ConfigError);
}

TEST(Analyzer, ShuffledInputMatchesSorted) {
    auto data = dataset(2);
    auto shuffled = data.readings;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto a = analyze_readings(data.readings, collars(4), PipelineConfig{});
    const auto b = analyze_readings(shuffled, collars(4), PipelineConfig{});
    EXPECT_EQ(a.grooming, b.grooming);
    EXPECT_EQ(a.move_away, b.move_away);
    EXPECT_EQ(a.away_counts, b.away_counts);
}

TEST(Analyzer, ThreadCountDoesNotMatter) {
    auto data = dataset(3);
    PipelineConfig cfg;
    const auto one = analyze_readings(data.readings, collars(4), cfg, 1);
    for (int t : {2, 3, 8}) {
        const auto many = analyze_readings(data.readings, collars(4), cfg, t);
        EXPECT_EQ(events_jsonl(one, cfg), events_jsonl(many, cfg));
        EXPECT_EQ(histograms_csv(one), histograms_csv(many));
        EXPECT_EQ(one.affiliation.values, many.affiliation.values);
    }
}

TEST(Analyzer, MatchesBatchStages) {
    auto data = dataset(4);
    PipelineConfig cfg;
    const auto r = analyze_readings(data.readings, collars(4), cfg);
    auto grouped = apply_collar_map(data.readings, collars(4));
    std::vector<KinematicTrack> kin;
    for (AnimalId a = 1; a <= 4; ++a) {
        auto fused = fill_gaps(fuse_positions(grouped.of(a), cfg.dt_ms, cfg.outlier_k, a), cfg.max_gap);
        kin.push_back(flag_stationary(compute_velocity(fused), cfg.v_stat));
    }
    std::vector<GroomingEvent> g;
    std::vector<MoveAwayEvent> m;
    for (AnimalId i = 1; i <= 4; ++i)
        for (AnimalId j = 1; j <= 4; ++j) {
            if (i == j) continue;
            if (i < j) {
                auto e = detect_grooming(kin[i - 1], kin[j - 1], cfg.grooming());
                g.insert(g.end(), e.begin(), e.end());
            }
            auto e = detect_move_away(kin[i - 1], kin[j - 1], cfg.move_away(), cfg.v_min);
            m.insert(m.end(), e.begin(), e.end());
            EXPECT_EQ(dv_histogram(kin[i - 1], kin[j - 1], cfg.bins, cfg.v_min), r.histogram(i, j));
        }
    sort_canonical(g);
    sort_canonical(m);
    EXPECT_EQ(g, r.grooming);
    EXPECT_EQ(m, r.move_away);
    EXPECT_FALSE(r.grooming.empty());
    EXPECT_FALSE(r.move_away.empty());
}

TEST(Analyzer, SampleCountMode) {
    auto data = dataset(5);
    PipelineConfig events, samples;
    samples.count_mode = CountMode::samples;
    const auto e = analyze_readings(data.readings, collars(4), events);
    const auto s = analyze_readings(data.readings, collars(4), samples);
    for (AnimalId i = 1; i <= 4; ++i)
        for (AnimalId j = 1; j <= 4; ++j) EXPECT_GE(s.away_counts(i, j), e.away_counts(i, j) * 2);
}

TEST(Analyzer, SpanAndCounts) {
    auto data = dataset(6);
    const auto r = analyze_readings(data.readings, collars(4), PipelineConfig{});
    EXPECT_EQ(r.ticks, 1800u);
    EXPECT_EQ(r.readings, data.readings.size());
    EXPECT_DOUBLE_EQ(r.span_days, 1799.0 / 86400.0);
    EXPECT_EQ(r.histograms.size(), 12u);
    EXPECT_EQ(r.heatmaps.size(), 4u);
}

TEST(Analyzer, UnknownTagPolicy) {
    std::vector<TagReading> rs{{"T01", 0, {1, 1, 0}}, {"T99", 0, {1, 1, 0}}, {"T01", 5000, {1, 1, 0}}};
    PipelineConfig cfg;
    EXPECT_NO_THROW(analyze_readings(rs, collars(1), cfg));
    cfg.unknown_tag_policy = UnknownTagPolicy::strict;
    EXPECT_THROW(analyze_readings(rs, collars(1), cfg), ConfigError);
}
