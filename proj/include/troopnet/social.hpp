#pragma once

// Aggregation of detected episodes into group-level structure: affiliation
// (tie-strength) matrix, away-count and hierarchy matrices, linear rank
// order, DV histograms and stationary-occupancy heat maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "troopnet/error.hpp"
#include "troopnet/events.hpp"

namespace troopnet {

/// Dense N x N matrix indexed by 1-based animal ids.
template <class T>
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(int n, T fill = T{}) : n_(n), data_(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), fill) {
        if (n < 0) throw ConfigError("matrix dimension must be >= 0");
    }

    int size() const noexcept { return n_; }

    T& operator()(AnimalId i, AnimalId j) { return data_[index(i, j)]; }
    const T& operator()(AnimalId i, AnimalId j) const { return data_[index(i, j)]; }

    std::span<const T> raw() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t index(AnimalId i, AnimalId j) const {
        if (i < 1 || j < 1 || i > n_ || j > n_) throw std::out_of_range("animal id outside matrix");
        return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(j - 1);
    }

    int n_ = 0;
    std::vector<T> data_;
};

/// Tie-strength in seconds of grooming per day of observation.
struct AffiliationMatrix {
    Matrix<double> values;
    double span_days = 0.0;

    int size() const noexcept { return values.size(); }
    double operator()(AnimalId i, AnimalId j) const { return values(i, j); }
};

/// TA(i, j): number of move-away episodes with mover i and target j.
using AwayCountMatrix = Matrix<std::uint64_t>;

/// H(i, j) = 1 iff i dominates j.
using HierarchyMatrix = Matrix<std::uint8_t>;

inline AffiliationMatrix build_affiliation(std::span<const GroomingEvent> events, double span_days, int n) {
    if (!(span_days > 0.0)) throw ConfigError("span_days must be > 0");
    AffiliationMatrix out{Matrix<double>(n, 0.0), span_days};
    Matrix<double> seconds(n, 0.0);
    for (const auto& e : events) {
        if (e.a == e.b) continue;
        seconds(e.a, e.b) += e.duration_s();
    }
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = i + 1; j <= n; ++j) {
            const double v = (seconds(i, j) + seconds(j, i)) / span_days;
            out.values(i, j) = v;
            out.values(j, i) = v;
        }
    return out;
}

inline std::vector<double> weighted_degree(const AffiliationMatrix& a) {
    std::vector<double> deg(static_cast<std::size_t>(a.size()), 0.0);
    for (AnimalId i = 1; i <= a.size(); ++i)
        for (AnimalId j = 1; j <= a.size(); ++j) deg[static_cast<std::size_t>(i - 1)] += a(i, j);
    return deg;
}

inline AwayCountMatrix build_away_counts(std::span<const MoveAwayEvent> events, int n) {
    AwayCountMatrix ta(n, 0);
    for (const auto& e : events)
        if (e.mover != e.target) ++ta(e.mover, e.target);
    return ta;
}

/// i dominates j when j retreats from i strictly more often than the reverse;
/// equal counts give no edge in either direction.
inline HierarchyMatrix build_hierarchy(const AwayCountMatrix& ta) {
    const int n = ta.size();
    HierarchyMatrix h(n, 0);
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = 1; j <= n; ++j)
            if (i != j && ta(j, i) > ta(i, j)) h(i, j) = 1;
    return h;
}

struct RankOrder {
    std::vector<AnimalId> order;                         // most dominant first
    std::vector<int> out_degree;                         // index = id - 1
    std::vector<std::int64_t> net_retreats;              // sum_j TA(j,i) - TA(i,j)
    std::vector<std::array<AnimalId, 3>> intransitive;   // (i, j, k): i>j, j>k, k>i; i smallest
    std::vector<std::pair<AnimalId, AnimalId>> tied;     // i < j, no edge either way

    bool is_linear() const noexcept { return intransitive.empty() && tied.empty(); }
};

inline RankOrder rank_order(const HierarchyMatrix& h, const AwayCountMatrix& ta) {
    const int n = h.size();
    if (ta.size() != n) throw ConfigError("hierarchy and away-count matrices differ in size");
    RankOrder r;
    r.out_degree.assign(static_cast<std::size_t>(n), 0);
    r.net_retreats.assign(static_cast<std::size_t>(n), 0);
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = 1; j <= n; ++j) {
            if (i == j) continue;
            r.out_degree[static_cast<std::size_t>(i - 1)] += h(i, j);
            r.net_retreats[static_cast<std::size_t>(i - 1)] +=
                static_cast<std::int64_t>(ta(j, i)) - static_cast<std::int64_t>(ta(i, j));
        }
    r.order.resize(static_cast<std::size_t>(n));
    std::iota(r.order.begin(), r.order.end(), 1);
    std::sort(r.order.begin(), r.order.end(), [&](AnimalId x, AnimalId y) {
        const auto dx = r.out_degree[static_cast<std::size_t>(x - 1)], dy = r.out_degree[static_cast<std::size_t>(y - 1)];
        if (dx != dy) return dx > dy;
        const auto nx = r.net_retreats[static_cast<std::size_t>(x - 1)], ny = r.net_retreats[static_cast<std::size_t>(y - 1)];
        if (nx != ny) return nx > ny;
        return x < y;
    });
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = i + 1; j <= n; ++j) {
            if (!h(i, j) && !h(j, i)) r.tied.emplace_back(i, j);
            // Each 3-cycle once, written from its smallest member.
            for (AnimalId k = j + 1; k <= n; ++k) {
                if (h(i, j) && h(j, k) && h(k, i)) r.intransitive.push_back({i, j, k});
                if (h(i, k) && h(k, j) && h(j, i)) r.intransitive.push_back({i, k, j});
            }
        }
    return r;
}

// ---------------------------------------------------------------------------

/// Histogram of DV(i, j) over uniform bins on [-1, 1]; bins are [lo, hi)
/// except the last, which also takes 1.0.
class DvHistogram {
public:
    DvHistogram() = default;
    DvHistogram(AnimalId mover, AnimalId target, int bins = 40)
        : mover_(mover), target_(target), counts_(static_cast<std::size_t>(bins), 0) {
        if (bins < 1) throw ConfigError("histogram bins must be >= 1");
    }

    void add(const std::optional<double>& dv) {
        if (!dv) {
            ++undefined_;
            return;
        }
        const int bins = this->bins();
        int k = static_cast<int>(std::floor((*dv + 1.0) * 0.5 * bins));
        k = std::clamp(k, 0, bins - 1);
        ++counts_[static_cast<std::size_t>(k)];
    }

    AnimalId mover() const noexcept { return mover_; }
    AnimalId target() const noexcept { return target_; }
    int bins() const noexcept { return static_cast<int>(counts_.size()); }
    double edge(int k) const noexcept { return -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(bins()); }
    const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
    std::uint64_t undefined() const noexcept { return undefined_; }
    std::uint64_t defined() const noexcept { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }
    std::uint64_t scanned() const noexcept { return defined() + undefined_; }

    friend bool operator==(const DvHistogram&, const DvHistogram&) = default;

private:
    AnimalId mover_ = 0;
    AnimalId target_ = 0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t undefined_ = 0;
};

inline DvHistogram dv_histogram(const KinematicTrack& i, const KinematicTrack& j, int bins = 40, double v_min = 0.2) {
    DvHistogram hist(i.animal, j.animal, bins);
    for_each_aligned(i, j, [&](TimeMs t, const KinematicSample& a, const KinematicSample& b) {
        hist.add(make_pair_tick(t, a, b, v_min).dv_ab);
    });
    return hist;
}

/// 2D occupancy counts over the enclosure floor; z is ignored.
class HeatMap {
public:
    HeatMap() = default;
    HeatMap(AnimalId animal, const EnclosureSpec& enclosure, int gx = 30, int gy = 30)
        : animal_(animal), enclosure_(enclosure), gx_(gx), gy_(gy),
          cells_(static_cast<std::size_t>(std::max(gx, 0)) * static_cast<std::size_t>(std::max(gy, 0)), 0) {
        if (gx < 1 || gy < 1) throw ConfigError("heat-map dimensions must be > 0");
        enclosure.validate();
    }

    /// Cell of a floor position; outside coordinates clamp to the border cell.
    std::pair<int, int> cell_of(const Vec3& p) const {
        auto bin = [](double v, double extent, int g) {
            const double f = std::floor(v * static_cast<double>(g) / extent);
            if (!(f >= 0.0)) return 0;
            if (f >= static_cast<double>(g)) return g - 1;
            return static_cast<int>(f);
        };
        return {bin(p.x, enclosure_.extent_x, gx_), bin(p.y, enclosure_.extent_y, gy_)};
    }

    void add(const Vec3& p) {
        auto [cx, cy] = cell_of(p);
        ++cells_[index(cx, cy)];
        ++total_;
    }

    std::uint64_t at(int cx, int cy) const { return cells_.at(index(cx, cy)); }
    void set(int cx, int cy, std::uint64_t v) {
        total_ = total_ - cells_.at(index(cx, cy)) + v;
        cells_[index(cx, cy)] = v;
    }

    AnimalId animal() const noexcept { return animal_; }
    const EnclosureSpec& enclosure() const noexcept { return enclosure_; }
    int gx() const noexcept { return gx_; }
    int gy() const noexcept { return gy_; }
    std::uint64_t total() const noexcept { return total_; }
    std::span<const std::uint64_t> cells() const noexcept { return cells_; }
    std::uint64_t max_cell() const noexcept {
        return cells_.empty() ? 0 : *std::max_element(cells_.begin(), cells_.end());
    }

private:
    std::size_t index(int cx, int cy) const {
        if (cx < 0 || cy < 0 || cx >= gx_ || cy >= gy_) throw std::out_of_range("heat-map cell out of range");
        return static_cast<std::size_t>(cy) * static_cast<std::size_t>(gx_) + static_cast<std::size_t>(cx);
    }

    AnimalId animal_ = 0;
    EnclosureSpec enclosure_;
    int gx_ = 0;
    int gy_ = 0;
    std::vector<std::uint64_t> cells_;  // row-major, row = y index
    std::uint64_t total_ = 0;
};

inline HeatMap build_heatmap(std::span<const KinematicSample> samples, AnimalId animal, const EnclosureSpec& enclosure,
                             int gx = 30, int gy = 30, bool stationary_only = true) {
    HeatMap map(animal, enclosure, gx, gy);
    for (const auto& s : samples) {
        if (!s.valid || (stationary_only && !s.stationary)) continue;
        map.add(s.pos);
    }
    return map;
}

/// Cosine similarity of two occupancy grids; 0 when either is empty.
inline double overlap_score(const HeatMap& h1, const HeatMap& h2) {
    if (h1.gx() != h2.gx() || h1.gy() != h2.gy() || h1.enclosure().extent_x != h2.enclosure().extent_x ||
        h1.enclosure().extent_y != h2.enclosure().extent_y)
        throw ConfigError("heat maps have different grids");
    double xy = 0.0, xx = 0.0, yy = 0.0;
    const auto a = h1.cells(), b = h2.cells();
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = static_cast<double>(a[k]), y = static_cast<double>(b[k]);
        xy += x * y;
        xx += x * x;
        yy += y * y;
    }
    if (xx == 0.0 || yy == 0.0) return 0.0;
    return std::clamp(xy / (std::sqrt(xx) * std::sqrt(yy)), 0.0, 1.0);
}

}  // namespace troopnet
