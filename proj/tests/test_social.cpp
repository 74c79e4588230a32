#include <gtest/gtest.h>

#include "troopnet/social.hpp"

using namespace troopnet;

TEST(Affiliation, SingleEventOverOneDay) {
    std::vector<GroomingEvent> ev{{1, 2, 0, 90000}};
    auto a = build_affiliation(ev, 1.0, 3);
    EXPECT_EQ(a(1, 2), 90.0);
    EXPECT_EQ(a(2, 1), 90.0);
    EXPECT_EQ(a(1, 3), 0.0);
}

TEST(Affiliation, Empty) {
    auto a = build_affiliation({}, 1.0, 3);
    EXPECT_EQ(a.values, Matrix<double>(3, 0.0));
}

TEST(Affiliation, SumsOverSpan) {
    std::vector<GroomingEvent> ev{{1, 2, 0, 60000}, {1, 2, 100000, 220000}};
    EXPECT_EQ(build_affiliation(ev, 2.0, 2)(1, 2), 90.0);
    EXPECT_THROW(build_affiliation(ev, 0.0, 2), ConfigError);
}

TEST(WeightedDegree, RowSums) {
    AffiliationMatrix a{Matrix<double>(3, 0.0), 1.0};
    a.values(1, 2) = a.values(2, 1) = 2;
    a.values(1, 3) = a.values(3, 1) = 3;
    EXPECT_EQ(weighted_degree(a), (std::vector<double>{5, 2, 3}));
    EXPECT_EQ(weighted_degree(AffiliationMatrix{Matrix<double>(2, 0.0), 1.0}), (std::vector<double>{0, 0}));
}

TEST(AwayCounts, Counting) {
    std::vector<MoveAwayEvent> ev;
    for (int k = 0; k < 3; ++k) ev.push_back({1, 2, k * 1000, k * 1000 + 2000});
    ev.push_back({2, 1, 0, 2000});
    auto ta = build_away_counts(ev, 3);
    EXPECT_EQ(ta(1, 2), 3u);
    EXPECT_EQ(ta(2, 1), 1u);
    EXPECT_EQ(build_away_counts({}, 3), AwayCountMatrix(3, 0));
    std::vector<MoveAwayEvent> only{{3, 1, 0, 2000}, {3, 1, 5000, 7000}};
    auto t2 = build_away_counts(only, 3);
    EXPECT_EQ(t2(3, 1), 2u);
    EXPECT_EQ(std::accumulate(t2.raw().begin(), t2.raw().end(), std::uint64_t{0}), 2u);
}

TEST(Hierarchy, RetreaterIsDominated) {
    AwayCountMatrix ta(2, 0);
    ta(1, 2) = 10;
    ta(2, 1) = 3;
    auto h = build_hierarchy(ta);
    EXPECT_EQ(h(2, 1), 1);
    EXPECT_EQ(h(1, 2), 0);
}

TEST(Hierarchy, TiesGiveNoEdge) {
    AwayCountMatrix ta(2, 0);
    ta(1, 2) = ta(2, 1) = 4;
    EXPECT_EQ(build_hierarchy(ta), HierarchyMatrix(2, 0));
    EXPECT_EQ(build_hierarchy(AwayCountMatrix(4, 0)), HierarchyMatrix(4, 0));
}

TEST(Rank, TransitiveTournament) {
    AwayCountMatrix ta(3, 0);
    ta(2, 1) = 1;
    ta(3, 1) = 1;
    ta(3, 2) = 1;
    auto r = rank_order(build_hierarchy(ta), ta);
    EXPECT_EQ(r.order, (std::vector<AnimalId>{1, 2, 3}));
    EXPECT_TRUE(r.is_linear());
}

TEST(Rank, CycleReportedAndTieBroken) {
    AwayCountMatrix ta(3, 0);
    ta(2, 1) = 3;  // 1 -> 2
    ta(3, 2) = 2;  // 2 -> 3
    ta(1, 3) = 1;  // 3 -> 1
    auto r = rank_order(build_hierarchy(ta), ta);
    ASSERT_EQ(r.intransitive.size(), 1u);
    EXPECT_EQ(r.intransitive[0], (std::array<AnimalId, 3>{1, 2, 3}));
    EXPECT_EQ(r.net_retreats, (std::vector<std::int64_t>{2, -1, -1}));
    EXPECT_EQ(r.order, (std::vector<AnimalId>{1, 2, 3}));
    EXPECT_FALSE(r.is_linear());
}

TEST(Rank, EmptyHierarchy) {
    AwayCountMatrix ta(4, 0);
    auto r = rank_order(build_hierarchy(ta), ta);
    EXPECT_EQ(r.order, (std::vector<AnimalId>{1, 2, 3, 4}));
    EXPECT_EQ(r.tied.size(), 6u);
}

TEST(Rank, RecoversPermutation) {
    const std::vector<AnimalId> planted{4, 3, 1, 6, 2, 5};
    AwayCountMatrix ta(6, 0);
    for (std::size_t hi = 0; hi < planted.size(); ++hi)
        for (std::size_t lo = hi + 1; lo < planted.size(); ++lo) ta(planted[lo], planted[hi]) = 5;
    EXPECT_EQ(rank_order(build_hierarchy(ta), ta).order, planted);
}

TEST(Histogram, Binning) {
    DvHistogram h(1, 2, 4);
    for (double v : {-0.95, -0.8, 0.1}) h.add(v);
    EXPECT_EQ(h.counts(), (std::vector<std::uint64_t>{2, 0, 1, 0}));
    h.add(1.0);
    EXPECT_EQ(h.counts()[3], 1u);
    h.add(-1.0);
    h.add(0.0);
    EXPECT_EQ(h.counts(), (std::vector<std::uint64_t>{3, 0, 2, 1}));
    EXPECT_EQ(h.edge(1), -0.5);
}

TEST(Histogram, AllUndefined) {
    DvHistogram h(1, 2, 4);
    for (int k = 0; k < 7; ++k) h.add(std::nullopt);
    EXPECT_EQ(h.defined(), 0u);
    EXPECT_EQ(h.undefined(), 7u);
    EXPECT_EQ(h.scanned(), 7u);
}

TEST(HeatMapGrid, CellOfStationarySamples) {
    std::vector<KinematicSample> s(10);
    for (auto& k : s) {
        k.pos = {1.05, 2.31, 0.5};
        k.valid = k.stationary = true;
    }
    auto h = build_heatmap(s, 1, EnclosureSpec{});
    EXPECT_EQ(h.gx(), 30);
    EXPECT_EQ(h.at(10, 23), 10u);
    EXPECT_EQ(h.total(), 10u);
    EXPECT_EQ(h.max_cell(), 10u);
}

TEST(HeatMapGrid, ClampsAndCorners) {
    HeatMap h(1, EnclosureSpec{});
    EXPECT_EQ(h.cell_of({3.0, 1.0, 0}).first, 29);
    EXPECT_EQ(h.cell_of({0, 0, 0}), (std::pair<int, int>{0, 0}));
    EXPECT_EQ(h.cell_of({-0.2, 5.0, 0}), (std::pair<int, int>{0, 29}));
}

TEST(HeatMapGrid, SkipsMovingSamples) {
    std::vector<KinematicSample> s(3);
    for (auto& k : s) k.valid = true;
    s[0].stationary = true;
    EXPECT_EQ(build_heatmap(s, 1, EnclosureSpec{}).total(), 1u);
    EXPECT_EQ(build_heatmap(s, 1, EnclosureSpec{}, 30, 30, false).total(), 3u);
}

TEST(Overlap, Scores) {
    HeatMap a(1, EnclosureSpec{}), b(2, EnclosureSpec{}), z(3, EnclosureSpec{});
    a.add({0.5, 0.5, 0});
    a.add({1.5, 0.5, 0});
    b.add({2.5, 2.5, 0});
    EXPECT_DOUBLE_EQ(overlap_score(a, a), 1.0);
    EXPECT_EQ(overlap_score(a, b), 0.0);
    EXPECT_EQ(overlap_score(a, z), 0.0);
    EXPECT_THROW(overlap_score(a, HeatMap(4, EnclosureSpec{}, 10, 10)), ConfigError);
}

TEST(MatrixType, OneBasedBounds) {
    Matrix<int> m(2, 0);
    m(2, 1) = 5;
    EXPECT_EQ(m.raw()[2], 5);
    EXPECT_THROW(m(0, 1), std::out_of_range);
    EXPECT_THROW(m(1, 3), std::out_of_range);
}
