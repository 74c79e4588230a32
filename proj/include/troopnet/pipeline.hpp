#pragma once

// Single-pass streaming analysis. Readings are pushed in time order (any
// order inside one dt window); each window is fused, gap-filled, turned
// into kinematic samples and fed tick by tick to every pair detector.
// Pair detection runs in blocks of ticks and may use several threads; each
// pair's detectors see their ticks in order, so results do not depend on
// the thread count.

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "troopnet/config.hpp"
#include "troopnet/events.hpp"
#include "troopnet/ingest.hpp"
#include "troopnet/kinematics.hpp"
#include "troopnet/social.hpp"

namespace troopnet {

/// A reading arrived for a window that has already been closed.
class OutOfOrderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AnalysisResult {
    int n_animals = 0;
    TimeMs dt = 1000;
    TimeMs first_t = 0;  // earliest reading
    TimeMs last_t = 0;   // latest reading
    double span_days = 0.0;
    std::uint64_t ticks = 0;
    std::uint64_t readings = 0;
    std::vector<std::uint64_t> fused_samples;  // non-gap fused ticks, per animal
    std::vector<std::uint64_t> valid_samples;  // kinematically valid ticks, per animal

    std::vector<GroomingEvent> grooming;
    std::vector<MoveAwayEvent> move_away;
    std::vector<ChaseEvent> chases;
    std::vector<AttackEvent> attacks;

    AffiliationMatrix affiliation;
    std::vector<double> weighted_degree;
    AwayCountMatrix away_counts;
    HierarchyMatrix hierarchy;
    RankOrder rank;
    std::vector<DvHistogram> histograms;  // ordered pairs (i, j), i != j, lexicographic
    std::vector<HeatMap> heatmaps;        // per animal
    Matrix<double> overlap;

    const DvHistogram& histogram(AnimalId i, AnimalId j) const {
        for (const auto& h : histograms)
            if (h.mover() == i && h.target() == j) return h;
        throw std::out_of_range("no histogram for pair");
    }
};

class Analyzer {
public:
    static constexpr std::size_t kBlockTicks = 1 << 14;

    Analyzer(int n_animals, PipelineConfig cfg, int threads = 1)
        : n_(n_animals), cfg_(std::move(cfg)), threads_(std::max(1, threads)) {
        if (n_ < 1) throw ConfigError("need at least one animal");
        cfg_.validate();
        animals_.reserve(static_cast<std::size_t>(n_));
        for (AnimalId a = 1; a <= n_; ++a) animals_.emplace_back(a, cfg_);
        for (AnimalId a = 1; a <= n_; ++a)
            for (AnimalId b = a + 1; b <= n_; ++b) pairs_.emplace_back(a, b, cfg_);
        block_.reserve(kBlockTicks * static_cast<std::size_t>(n_));
    }

    void push(AnimalId animal, TimeMs t, const Vec3& pos) {
        if (animal < 1 || animal > n_) throw ConfigError("animal id out of range");
        const TimeMs w = window_index(t, cfg_.dt_ms);
        if (!window_) {
            window_ = w;
            first_t_ = last_t_ = t;
            for (auto& a : animals_) a.next_tick = w;
        } else if (w < *window_) {
            throw OutOfOrderError("reading at t=" + std::to_string(t) + " arrived after its window closed");
        }
        while (*window_ < w) close_window();
        first_t_ = std::min(first_t_, t);
        last_t_ = std::max(last_t_, t);
        ++readings_;
        animals_[static_cast<std::size_t>(animal - 1)].window.push_back(pos);
    }

    AnalysisResult finish() {
        if (!window_) throw NoDataError("no data");
        close_window();
        for (auto& a : animals_) {
            a.filler.finish([&](const std::optional<Vec3>& p) { a.to_velocity(p, cfg_.dt_ms); });
            a.velocity.finish([&](const KinematicSample& s) { a.to_queue(s); });
        }
        drain();
        process_block();
        return collect();
    }

private:
    struct AnimalState {
        AnimalState(AnimalId id, const PipelineConfig& cfg)
            : id(id), filler(cfg.max_gap), velocity(cfg.dt_ms), flagger(cfg.v_stat, cfg.w_stat),
              heatmap(id, cfg.enclosure(), cfg.grid_x, cfg.grid_y) {}

        void to_velocity(const std::optional<Vec3>& p, TimeMs dt) {
            const TimeMs t = next_tick * dt;
            ++next_tick;
            velocity.push(t, p, [&](const KinematicSample& s) { to_queue(s); });
        }

        void to_queue(KinematicSample s) {
            flagger.apply(s);
            queue.push_back(s);
        }

        AnimalId id;
        std::vector<Vec3> window;
        GapFiller filler;
        VelocityEstimator velocity;
        StationaryFlagger flagger;
        std::deque<KinematicSample> queue;
        TimeMs next_tick = 0;
        HeatMap heatmap;
        std::uint64_t fused = 0;
        std::uint64_t valid = 0;
    };

    struct PairState {
        PairState(AnimalId a, AnimalId b, const PipelineConfig& cfg)
            : a(a), b(b), grooming(a, b, cfg.dt_ms, cfg.grooming()), chase(a, b, cfg.dt_ms, cfg.chase()),
              away_ab(a, b, cfg.dt_ms, cfg.move_away()), away_ba(b, a, cfg.dt_ms, cfg.move_away()),
              attack_ab(a, b, cfg.attack()), attack_ba(b, a, cfg.attack()), hist_ab(a, b, cfg.bins),
              hist_ba(b, a, cfg.bins) {}

        void push(const KinematicSample& sa, const KinematicSample& sb, double v_min) {
            const auto tick = make_pair_tick(sa.t, sa, sb, v_min);
            grooming.push(tick);
            chase.push(tick);
            away_ab.push(tick.t, sa, tick.dv_ab, tick.proj_ab, tick.distance);
            away_ba.push(tick.t, sb, tick.dv_ba, tick.proj_ba, tick.distance);
            attack_ab.push(tick.t, sa, tick.dv_ab);
            attack_ba.push(tick.t, sb, tick.dv_ba);
            hist_ab.add(tick.dv_ab);
            hist_ba.add(tick.dv_ba);
        }

        void finish() {
            grooming.finish();
            chase.finish();
            away_ab.finish();
            away_ba.finish();
            attack_ab.finish();
            attack_ba.finish();
        }

        AnimalId a, b;
        GroomingDetector grooming;
        ChaseDetector chase;
        MoveAwayDetector away_ab, away_ba;
        AttackDetector attack_ab, attack_ba;
        DvHistogram hist_ab, hist_ba;
    };

    void close_window() {
        const TimeMs w = *window_;
        for (auto& a : animals_) {
            std::optional<Vec3> fused;
            if (!a.window.empty()) {
                fused = fuse_window(a.window, cfg_.outlier_k);
                a.window.clear();
                ++a.fused;
            }
            a.filler.push(fused, [&](const std::optional<Vec3>& p) { a.to_velocity(p, cfg_.dt_ms); });
        }
        ++ticks_;
        *window_ = w + 1;
        drain();
    }

    void drain() {
        while (std::all_of(animals_.begin(), animals_.end(), [](const AnimalState& a) { return !a.queue.empty(); })) {
            for (auto& a : animals_) {
                block_.push_back(a.queue.front());
                a.queue.pop_front();
            }
            if (block_.size() >= kBlockTicks * static_cast<std::size_t>(n_)) process_block();
        }
    }

    void process_block() {
        const std::size_t n = static_cast<std::size_t>(n_);
        const std::size_t rows = block_.size() / n;
        if (rows == 0) return;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t k = 0; k < n; ++k) {
                const auto& s = block_[r * n + k];
                auto& a = animals_[k];
                if (s.valid) {
                    ++a.valid;
                    if (!cfg_.heatmap_stationary_only || s.stationary) a.heatmap.add(s.pos);
                }
            }
        auto work = [&](std::size_t first, std::size_t stride) {
            for (std::size_t p = first; p < pairs_.size(); p += stride) {
                auto& ps = pairs_[p];
                const std::size_t ia = static_cast<std::size_t>(ps.a - 1), ib = static_cast<std::size_t>(ps.b - 1);
                for (std::size_t r = 0; r < rows; ++r) ps.push(block_[r * n + ia], block_[r * n + ib], cfg_.v_min);
            }
        };
        const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads_), pairs_.size());
        if (workers <= 1) {
            work(0, 1);
        } else {
            std::vector<std::jthread> pool;
            pool.reserve(workers - 1);
            for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work, w, workers);
            work(0, workers);
        }
        block_.clear();
    }

    AnalysisResult collect() {
        AnalysisResult r;
        r.n_animals = n_;
        r.dt = cfg_.dt_ms;
        r.first_t = first_t_;
        r.last_t = last_t_;
        r.ticks = ticks_;
        r.readings = readings_;
        r.span_days = static_cast<double>(last_t_ - first_t_) / 86'400'000.0;
        if (!(r.span_days > 0.0)) throw NoDataError("no data: observation span is zero");

        AwayCountMatrix sample_counts(n_, 0);
        for (auto& p : pairs_) {
            p.finish();
            r.grooming.insert(r.grooming.end(), p.grooming.events.begin(), p.grooming.events.end());
            r.chases.insert(r.chases.end(), p.chase.events.begin(), p.chase.events.end());
            r.move_away.insert(r.move_away.end(), p.away_ab.events.begin(), p.away_ab.events.end());
            r.move_away.insert(r.move_away.end(), p.away_ba.events.begin(), p.away_ba.events.end());
            r.attacks.insert(r.attacks.end(), p.attack_ab.events.begin(), p.attack_ab.events.end());
            r.attacks.insert(r.attacks.end(), p.attack_ba.events.begin(), p.attack_ba.events.end());
            sample_counts(p.a, p.b) = p.away_ab.in_band_samples();
            sample_counts(p.b, p.a) = p.away_ba.in_band_samples();
        }
        sort_canonical(r.grooming);
        sort_canonical(r.move_away);
        sort_canonical(r.chases);
        sort_canonical(r.attacks);

        for (AnimalId i = 1; i <= n_; ++i)
            for (AnimalId j = 1; j <= n_; ++j) {
                if (i == j) continue;
                for (const auto& p : pairs_) {
                    if (p.a == i && p.b == j) r.histograms.push_back(p.hist_ab);
                    if (p.b == i && p.a == j) r.histograms.push_back(p.hist_ba);
                }
            }

        r.affiliation = build_affiliation(r.grooming, r.span_days, n_);
        r.weighted_degree = weighted_degree(r.affiliation);
        r.away_counts = cfg_.count_mode == CountMode::samples ? sample_counts : build_away_counts(r.move_away, n_);
        if (cfg_.include_chase_attack_in_ta) {
            for (const auto& c : r.chases) ++r.away_counts(c.chasee, c.chaser);
            for (const auto& a : r.attacks) ++r.away_counts(a.target, a.attacker);
        }
        r.hierarchy = build_hierarchy(r.away_counts);
        r.rank = rank_order(r.hierarchy, r.away_counts);

        r.overlap = Matrix<double>(n_, 0.0);
        for (auto& a : animals_) {
            r.fused_samples.push_back(a.fused);
            r.valid_samples.push_back(a.valid);
            r.heatmaps.push_back(a.heatmap);
        }
        for (AnimalId i = 1; i <= n_; ++i)
            for (AnimalId j = 1; j <= n_; ++j)
                r.overlap(i, j) = overlap_score(r.heatmaps[static_cast<std::size_t>(i - 1)],
                                                r.heatmaps[static_cast<std::size_t>(j - 1)]);
        return r;
    }

    int n_;
    PipelineConfig cfg_;
    int threads_;
    std::vector<AnimalState> animals_;
    std::vector<PairState> pairs_;
    std::vector<KinematicSample> block_;  // rows of n_ samples, one row per tick
    std::optional<TimeMs> window_;
    TimeMs first_t_ = 0;
    TimeMs last_t_ = 0;
    std::uint64_t ticks_ = 0;
    std::uint64_t readings_ = 0;
};

/// Convenience: analyzes an in-memory reading set in any order.
inline AnalysisResult analyze_readings(std::span<const TagReading> readings, const CollarMap& collars,
                                       const PipelineConfig& cfg, int threads = 1) {
    std::vector<std::pair<TimeMs, std::size_t>> order;
    order.reserve(readings.size());
    for (std::size_t k = 0; k < readings.size(); ++k) order.emplace_back(readings[k].t, k);
    std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    Analyzer analyzer(collars.n_animals(), cfg, threads);
    for (const auto& [t, k] : order) {
        const auto& r = readings[k];
        auto animal = collars.lookup(r.tag_id);
        if (!animal) {
            if (cfg.unknown_tag_policy == UnknownTagPolicy::strict)
                throw ConfigError("unknown tag " + r.tag_id + " (reading " + std::to_string(k + 1) + ")");
            continue;
        }
        analyzer.push(*animal, r.t, r.pos);
    }
    return analyzer.finish();
}

}  // namespace troopnet
