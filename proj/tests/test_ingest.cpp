#include <gtest/gtest.h>

#include <sstream>

#include "troopnet/ingest.hpp"

using namespace troopnet;

TEST(ReadingsCsv, ParsesWellFormedLine) {
    auto p = parse_readings("T01,1696000000000,1.25,0.80,0.55\n");
    ASSERT_EQ(p.readings.size(), 1u);
    EXPECT_EQ(p.readings[0], (TagReading{"T01", 1696000000000, {1.25, 0.80, 0.55}}));
    EXPECT_EQ(p.report.accepted, 1u);
    EXPECT_EQ(p.report.rejected, 0u);
}

TEST(ReadingsCsv, RejectsNonFiniteCoordinate) {
    auto p = parse_readings("T01,1696000000000,1.25,NaN,0.55\n");
    EXPECT_TRUE(p.readings.empty());
    ASSERT_EQ(p.report.rejections.size(), 1u);
    EXPECT_EQ(p.report.rejections[0].line, 1u);
    EXPECT_EQ(p.report.rejections[0].reason, "non-finite coordinate");
}

TEST(ReadingsCsv, EmptyInput) {
    auto p = parse_readings("");
    EXPECT_TRUE(p.readings.empty());
    EXPECT_EQ(p.report.accepted, 0u);
    EXPECT_EQ(p.report.rejected, 0u);
}

TEST(ReadingsCsv, RejectionReasons) {
    TagReading r;
    EXPECT_EQ(parse_reading_line("T01,1,2,3", r), "wrong column count");
    EXPECT_EQ(parse_reading_line(",1,2,3,4", r), "empty tag id");
    EXPECT_EQ(parse_reading_line("T01,abc,2,3,4", r), "malformed timestamp");
    EXPECT_EQ(parse_reading_line("T01,-5,2,3,4", r), "negative timestamp");
    EXPECT_EQ(parse_reading_line("T01,5,x,3,4", r), "non-numeric coordinate");
    EXPECT_EQ(parse_reading_line("T01,5,inf,3,4", r), "non-finite coordinate");
    EXPECT_EQ(parse_reading_line("T01, 5 ,+2,3,4\r", r), std::nullopt);
    EXPECT_EQ(r.t, 5);
    EXPECT_EQ(r.pos.x, 2.0);
}

TEST(ReadingsCsv, HeaderAndBlankLines) {
    auto p = parse_readings("tag_id,t_ms,x_m,y_m,z_m\n\nT01,0,1,2,3\n  \nT02,1000,1,2,3", true);
    EXPECT_EQ(p.readings.size(), 2u);
    EXPECT_EQ(p.report.rejected, 0u);
}

TEST(ReadingsCsv, StreamingMatchesInMemory) {
    const std::string text = "T01,0,1,2,3\nbad\nT02,1000,1,2,3\nT03,2000,1,nan,3\n";
    std::istringstream in(text);
    ParseReport report;
    std::vector<TagReading> got;
    for_each_reading(in, false, report, [&](const TagReading& r) { got.push_back(r); });
    auto p = parse_readings(text);
    EXPECT_EQ(got, p.readings);
    EXPECT_EQ(report.accepted, p.report.accepted);
    EXPECT_EQ(report.rejected, 2u);
}

TEST(CollarMap, GroupsByAnimal) {
    CollarMap map({{"T01", 1}, {"T02", 1}}, 2);
    std::vector<TagReading> rs;
    for (int k = 0; k < 10; ++k) {
        rs.push_back({"T01", k * 1000, {}});
        rs.push_back({"T02", k * 1000, {}});
    }
    auto g = apply_collar_map(rs, map);
    EXPECT_EQ(g.of(1).size(), 20u);
    EXPECT_EQ(g.report.per_tag.at("T01"), 10u);
}

TEST(CollarMap, UnknownTagPolicies) {
    CollarMap map({{"T01", 1}});
    std::vector<TagReading> rs{{"T01", 0, {}}, {"T99", 0, {}}};
    auto g = apply_collar_map(rs, map, UnknownTagPolicy::skip);
    EXPECT_EQ(g.report.unknown_dropped, 1u);
    EXPECT_EQ(g.of(1).size(), 1u);
    try {
        apply_collar_map(rs, map, UnknownTagPolicy::strict);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown tag T99"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("reading 2"), std::string::npos);
    }
}

TEST(CollarMap, Validation) {
    EXPECT_THROW(CollarMap(std::vector<std::pair<std::string, AnimalId>>{}), ConfigError);
    EXPECT_THROW(CollarMap({{"T01", 1}, {"T01", 2}}), ConfigError);
    EXPECT_THROW(CollarMap({{"T01", 0}}), ConfigError);
    EXPECT_THROW(CollarMap({{"T01", 2}}), ConfigError);  // animal 1 has no tag
    auto m = parse_collar_map("tag_id,animal_id\nT01,1\nT02,2\n");
    EXPECT_EQ(m.n_animals(), 2);
    EXPECT_EQ(m.lookup("T02"), 2);
    EXPECT_FALSE(m.lookup("T03"));
    EXPECT_THROW(parse_collar_map("T01,1\nT02,x\n"), ConfigError);
}

TEST(Fusion, SymmetricMean) {
    std::vector<Vec3> w{{0.9, 1.0, 0.5}, {1.1, 1.0, 0.5}, {1.0, 0.9, 0.5}, {1.0, 1.1, 0.5}};
    Vec3 f = fuse_window(w, 3.0);
    EXPECT_NEAR(f.x, 1.0, 1e-12);
    EXPECT_NEAR(f.y, 1.0, 1e-12);
    EXPECT_NEAR(f.z, 0.5, 1e-12);
}

TEST(Fusion, RejectsOutlier) {
    std::vector<Vec3> w{{0.9, 1.0, 0.5}, {1.1, 1.0, 0.5}, {1.0, 0.9, 0.5}, {1.0, 1.1, 0.5}, {6.0, 1.0, 0.5}};
    Vec3 f = fuse_window(w, 3.0);
    EXPECT_NEAR(f.x, 1.0, 1e-12);
    EXPECT_NEAR(f.y, 1.0, 1e-12);
}

TEST(Fusion, IdenticalReadingsUseMadFloor) {
    std::vector<Vec3> w(4, Vec3{2.0, 2.0, 0.5});
    EXPECT_EQ(fuse_window(w, 3.0), (Vec3{2.0, 2.0, 0.5}));
}

TEST(Fusion, OrderIndependent) {
    std::vector<Vec3> a{{0.3, 1.0, 0.5}, {1.7, 1.2, 0.4}, {1.0, 0.2, 0.6}, {1.1, 1.1, 0.5}};
    std::vector<Vec3> b{a[2], a[0], a[3], a[1]};
    EXPECT_EQ(fuse_window(a, 3.0), fuse_window(b, 3.0));
}

TEST(Fusion, GapMarkerBetweenWindows) {
    std::vector<TagReading> rs{{"T", 0, {0, 0, 0}}, {"T", 2500, {1, 0, 0}}};
    auto tr = fuse_positions(rs, 1000);
    ASSERT_EQ(tr.size(), 3u);
    EXPECT_TRUE(tr.samples[0]);
    EXPECT_FALSE(tr.samples[1]);
    EXPECT_TRUE(tr.samples[2]);
    EXPECT_EQ(tr.time_at(2), 2000);
}

TEST(Fusion, EmptyAndBadParameters) {
    EXPECT_EQ(fuse_positions({}, 1000).size(), 0u);
    EXPECT_THROW(fuse_positions({}, 0), ConfigError);
    EXPECT_THROW(fuse_positions({}, 1000, 0.0), ConfigError);
}

TEST(Fusion, WindowIndexFloors) {
    EXPECT_EQ(window_index(999, 1000), 0);
    EXPECT_EQ(window_index(1000, 1000), 1);
    EXPECT_EQ(window_index(-1, 1000), -1);
}

namespace {
FusedTrack track_of(std::vector<std::optional<Vec3>> s) {
    FusedTrack t;
    t.samples = std::move(s);
    return t;
}
}  // namespace

TEST(GapFill, InterpolatesBracketedGap) {
    auto out = fill_gaps(track_of({Vec3{0, 0, 0}, std::nullopt, Vec3{2, 0, 0}}), 5);
    ASSERT_TRUE(out.samples[1]);
    EXPECT_EQ(*out.samples[1], (Vec3{1, 0, 0}));
}

TEST(GapFill, LongRunUnchanged) {
    std::vector<std::optional<Vec3>> s{Vec3{0, 0, 0}};
    for (int k = 0; k < 6; ++k) s.push_back(std::nullopt);
    s.push_back(Vec3{7, 0, 0});
    auto out = fill_gaps(track_of(s), 5);
    EXPECT_EQ(out.samples, s);
}

TEST(GapFill, LeadingAndTrailingUnchanged) {
    std::vector<std::optional<Vec3>> s{std::nullopt, Vec3{1, 0, 0}, std::nullopt};
    EXPECT_EQ(fill_gaps(track_of(s), 5).samples, s);
}

TEST(GapFill, ExactlyMaxGap) {
    std::vector<std::optional<Vec3>> s{Vec3{0, 0, 0}, std::nullopt, std::nullopt, Vec3{3, 0, 0}};
    auto out = fill_gaps(track_of(s), 2);
    ASSERT_TRUE(out.samples[2]);
    EXPECT_NEAR(out.samples[2]->x, 2.0, 1e-12);
    EXPECT_EQ(fill_gaps(track_of(s), 1).samples, s);
}
