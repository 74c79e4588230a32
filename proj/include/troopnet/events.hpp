#pragma once

// Behavioral episode detectors. Each detector is a single-pass state machine
// over aligned per-tick samples of one animal pair; the batch functions at
// the bottom drive the same machines over whole tracks.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <tuple>
#include <vector>

#include "troopnet/error.hpp"
#include "troopnet/kinematics.hpp"

namespace troopnet {

struct GroomingEvent {
    AnimalId a = 0;  // a < b
    AnimalId b = 0;
    TimeMs t_start = 0;
    TimeMs t_end = 0;  // exclusive

    double duration_s() const noexcept { return static_cast<double>(t_end - t_start) / 1000.0; }
    friend bool operator==(const GroomingEvent&, const GroomingEvent&) = default;
};

enum class MoveAwayKind { withdrawal, displacement };

inline std::string_view to_string(MoveAwayKind k) noexcept {
    return k == MoveAwayKind::displacement ? "displacement" : "withdrawal";
}

struct MoveAwayEvent {
    AnimalId mover = 0;
    AnimalId target = 0;
    TimeMs t_start = 0;
    TimeMs t_end = 0;  // exclusive
    double mean_dv = 0.0;
    double mean_projection = 0.0;  // mean of vel . bearing in m/s, diagnostic only
    MoveAwayKind kind = MoveAwayKind::withdrawal;

    friend bool operator==(const MoveAwayEvent&, const MoveAwayEvent&) = default;
};

struct ChaseEvent {
    AnimalId chaser = 0;
    AnimalId chasee = 0;
    TimeMs t_start = 0;
    TimeMs t_end = 0;  // exclusive

    friend bool operator==(const ChaseEvent&, const ChaseEvent&) = default;
};

struct AttackEvent {
    AnimalId attacker = 0;
    AnimalId target = 0;
    TimeMs t_onset = 0;  // first tick above v_attack
    double peak_speed = 0.0;

    friend bool operator==(const AttackEvent&, const AttackEvent&) = default;
};

struct GroomingParams {
    double d_groom = 0.5;       // m
    double min_duration = 60.0; // s
    double gap_merge = 2.0;     // s

    void validate() const {
        if (!(d_groom > 0.0)) throw ConfigError("d_groom must be > 0");
        if (!(min_duration >= 0.0)) throw ConfigError("min_groom_duration must be >= 0");
        if (!(gap_merge >= 0.0)) throw ConfigError("gap_merge must be >= 0");
    }
};

struct MoveAwayParams {
    double dv_lo = -1.0;
    double dv_hi = -0.7;
    double min_event = 2.0;  // s
    std::optional<double> proximity_gate;  // m; event must start within this distance
    double s_pre = 5.0;  // s of prior stationarity that makes a displacement

    void validate() const {
        if (!(dv_lo >= -1.0 && dv_lo <= dv_hi && dv_hi <= 1.0))
            throw ConfigError("dv band must satisfy -1 <= dv_lo <= dv_hi <= 1");
        if (!(min_event >= 0.0)) throw ConfigError("min_event must be >= 0");
        if (proximity_gate && !(*proximity_gate > 0.0)) throw ConfigError("proximity_gate must be > 0");
        if (!(s_pre >= 0.0)) throw ConfigError("s_pre must be >= 0");
    }
};

struct ChaseParams {
    double v_run = 1.0;    // m/s
    double r_chase = 1.5;  // m
    double dv_align = 0.7;
    double min_duration = 2.0;  // s

    void validate() const {
        if (!(v_run > 0.0)) throw ConfigError("v_run must be > 0");
        if (!(r_chase > 0.0)) throw ConfigError("r_chase must be > 0");
        if (!(dv_align >= 0.0 && dv_align <= 1.0)) throw ConfigError("chase dv_align must be in [0, 1]");
        if (!(min_duration >= 0.0)) throw ConfigError("min_chase_duration must be >= 0");
    }
};

struct AttackParams {
    double v_attack = 1.0;  // m/s
    double tau = 2.0;       // s
    double dv_align = 0.7;
    double v_stat = 0.10;   // m/s, "at rest" before the rise

    void validate() const {
        if (!(v_attack > 0.0)) throw ConfigError("v_attack must be > 0");
        if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
        if (!(dv_align >= -1.0 && dv_align <= 1.0)) throw ConfigError("attack dv_align must be in [-1, 1]");
        if (!(v_stat > 0.0 && v_stat < v_attack)) throw ConfigError("attack v_stat must be in (0, v_attack)");
    }
};

namespace detail {
inline TimeMs to_ms(double seconds) { return static_cast<TimeMs>(std::llround(seconds * 1000.0)); }
}  // namespace detail

/// Everything the pair detectors need about one tick of animals a and b.
struct PairTick {
    TimeMs t = 0;
    const KinematicSample* a = nullptr;
    const KinematicSample* b = nullptr;
    std::optional<double> distance;  // both valid
    std::optional<double> dv_ab;     // a's motion relative to b
    std::optional<double> dv_ba;
    double proj_ab = 0.0;
    double proj_ba = 0.0;
};

inline PairTick make_pair_tick(TimeMs t, const KinematicSample& a, const KinematicSample& b, double v_min) {
    PairTick p;
    p.t = t;
    p.a = &a;
    p.b = &b;
    if (!a.valid || !b.valid) return p;
    p.distance = distance(a.pos, b.pos);
    const auto b_ab = bearing(a.pos, b.pos);
    if (!b_ab) return p;
    const Vec3 b_ba = -*b_ab;
    p.dv_ab = directed_velocity(a.vel, a.speed, b_ab, v_min);
    p.dv_ba = directed_velocity(b.vel, b.speed, b_ba, v_min);
    p.proj_ab = dot(a.vel, *b_ab);
    p.proj_ba = dot(b.vel, b_ba);
    return p;
}

// ---------------------------------------------------------------------------

class GroomingDetector {
public:
    GroomingDetector(AnimalId a, AnimalId b, TimeMs dt, const GroomingParams& p = {})
        : a_(std::min(a, b)), b_(std::max(a, b)), dt_(dt), d_groom_(p.d_groom),
          min_ms_(detail::to_ms(p.min_duration)), merge_ms_(detail::to_ms(p.gap_merge)) {
        p.validate();
    }

    void push(const PairTick& tick) {
        const bool close = tick.distance && *tick.distance <= d_groom_ && tick.a->stationary && tick.b->stationary;
        if (close) {
            if (!run_) run_ = Span{tick.t, tick.t + dt_};
            else run_->end = tick.t + dt_;
        } else if (run_) {
            close_run();
        }
    }

    void finish() {
        if (run_) close_run();
        if (pending_) emit(*pending_);
        pending_.reset();
    }

    std::vector<GroomingEvent> events;

private:
    struct Span { TimeMs start, end; };

    void close_run() {
        if (pending_ && run_->start - pending_->end <= merge_ms_) {
            pending_->end = run_->end;
        } else {
            if (pending_) emit(*pending_);
            pending_ = run_;
        }
        run_.reset();
    }

    void emit(const Span& s) {
        if (s.end - s.start >= min_ms_) events.push_back({a_, b_, s.start, s.end});
    }

    AnimalId a_, b_;
    TimeMs dt_;
    double d_groom_;
    TimeMs min_ms_, merge_ms_;
    std::optional<Span> run_;
    std::optional<Span> pending_;
};

/// Tracks whether the mover was stationary throughout the last s_pre seconds.
class PriorStationarity {
public:
    explicit PriorStationarity(double s_pre) : window_ms_(detail::to_ms(s_pre)) {}

    /// Classification of a move-away starting at t, using samples before t only.
    MoveAwayKind classify(TimeMs t) const {
        const TimeMs from = t - window_ms_;
        const bool any_valid = last_valid_ && *last_valid_ >= from;
        const bool any_moving = last_moving_ && *last_moving_ >= from;
        return any_valid && !any_moving ? MoveAwayKind::displacement : MoveAwayKind::withdrawal;
    }

    void observe(const KinematicSample& s) {
        if (!s.valid) return;
        last_valid_ = s.t;
        if (!s.stationary) last_moving_ = s.t;
    }

private:
    TimeMs window_ms_;
    std::optional<TimeMs> last_valid_;
    std::optional<TimeMs> last_moving_;
};

class MoveAwayDetector {
public:
    MoveAwayDetector(AnimalId mover, AnimalId target, TimeMs dt, const MoveAwayParams& p = {})
        : mover_(mover), target_(target), dt_(dt), p_(p), min_ms_(detail::to_ms(p.min_event)), prior_(p.s_pre) {
        p.validate();
        if (mover == target) throw ConfigError("move-away mover and target must differ");
    }

    /// `self` is the mover's sample; dv/proj are the mover's values toward the target.
    void push(TimeMs t, const KinematicSample& self, const std::optional<double>& dv, double proj,
              const std::optional<double>& dist) {
        const bool in_band = dv && *dv >= p_.dv_lo && *dv <= p_.dv_hi;
        if (in_band) {
            ++in_band_samples_;
            if (!run_) {
                run_.emplace();
                run_->start = t;
                run_->kind = prior_.classify(t);
                run_->gate_ok = !p_.proximity_gate || (dist && *dist <= *p_.proximity_gate);
            }
            run_->end = t + dt_;
            run_->sum_dv += *dv;
            run_->sum_proj += proj;
            ++run_->n;
        } else if (run_) {
            close_run();
        }
        prior_.observe(self);
    }

    void finish() {
        if (run_) close_run();
    }

    /// Number of in-band samples seen, independent of run length.
    std::uint64_t in_band_samples() const noexcept { return in_band_samples_; }

    std::vector<MoveAwayEvent> events;

private:
    struct Run {
        TimeMs start = 0, end = 0;
        double sum_dv = 0.0, sum_proj = 0.0;
        std::uint64_t n = 0;
        MoveAwayKind kind = MoveAwayKind::withdrawal;
        bool gate_ok = true;
    };

    void close_run() {
        if (run_->end - run_->start >= min_ms_ && run_->gate_ok) {
            const double n = static_cast<double>(run_->n);
            events.push_back({mover_, target_, run_->start, run_->end, run_->sum_dv / n, run_->sum_proj / n,
                              run_->kind});
        }
        run_.reset();
    }

    AnimalId mover_, target_;
    TimeMs dt_;
    MoveAwayParams p_;
    TimeMs min_ms_;
    PriorStationarity prior_;
    std::optional<Run> run_;
    std::uint64_t in_band_samples_ = 0;
};

class ChaseDetector {
public:
    ChaseDetector(AnimalId a, AnimalId b, TimeMs dt, const ChaseParams& p = {})
        : a_(a), b_(b), dt_(dt), p_(p), min_ms_(detail::to_ms(p.min_duration)) {
        p.validate();
    }

    void push(const PairTick& tick) {
        AnimalId chaser = 0;
        if (tick.distance && *tick.distance <= p_.r_chase && tick.a->speed > p_.v_run && tick.b->speed > p_.v_run &&
            tick.dv_ab && tick.dv_ba) {
            if (*tick.dv_ab >= p_.dv_align && *tick.dv_ba <= -p_.dv_align) chaser = a_;
            else if (*tick.dv_ba >= p_.dv_align && *tick.dv_ab <= -p_.dv_align) chaser = b_;
        }
        if (run_ && run_->chaser != chaser) close_run();
        if (chaser != 0) {
            if (!run_) run_ = Run{chaser, tick.t, tick.t};
            run_->end = tick.t + dt_;
        }
    }

    void finish() {
        if (run_) close_run();
    }

    std::vector<ChaseEvent> events;

private:
    struct Run { AnimalId chaser; TimeMs start, end; };

    void close_run() {
        if (run_->end - run_->start >= min_ms_) {
            const AnimalId chasee = run_->chaser == a_ ? b_ : a_;
            events.push_back({run_->chaser, chasee, run_->start, run_->end});
        }
        run_.reset();
    }

    AnimalId a_, b_;
    TimeMs dt_;
    ChaseParams p_;
    TimeMs min_ms_;
    std::optional<Run> run_;
};

class AttackDetector {
public:
    AttackDetector(AnimalId attacker, AnimalId target, const AttackParams& p = {})
        : attacker_(attacker), target_(target), p_(p), tau_ms_(detail::to_ms(p.tau)) {
        p.validate();
        if (attacker == target) throw ConfigError("attacker and target must differ");
    }

    void push(TimeMs t, const KinematicSample& self, const std::optional<double>& dv) {
        const bool fast = self.valid && self.speed > p_.v_attack;
        if (fast) {
            if (!prev_fast_) {
                const bool sudden = last_slow_ && t - *last_slow_ <= tau_ms_;
                const bool aimed = dv && *dv >= p_.dv_align;
                if (sudden && aimed) {
                    if (pending_ && t - pending_->t_onset <= tau_ms_) {
                        pending_->peak_speed = std::max(pending_->peak_speed, self.speed);
                    } else {
                        flush();
                        pending_ = AttackEvent{attacker_, target_, t, self.speed};
                    }
                    tracking_ = true;
                }
            } else if (tracking_) {
                pending_->peak_speed = std::max(pending_->peak_speed, self.speed);
            }
            prev_fast_ = true;
        } else {
            prev_fast_ = false;
            tracking_ = false;
            if (self.valid && self.speed < p_.v_stat) last_slow_ = t;
        }
    }

    void finish() { flush(); }

    std::vector<AttackEvent> events;

private:
    void flush() {
        if (pending_) events.push_back(*pending_);
        pending_.reset();
        tracking_ = false;
    }

    AnimalId attacker_, target_;
    AttackParams p_;
    TimeMs tau_ms_;
    bool prev_fast_ = false;
    bool tracking_ = false;
    std::optional<TimeMs> last_slow_;
    std::optional<AttackEvent> pending_;
};

// ---------------------------------------------------------------------------
// Batch drivers over whole tracks

/// Calls f(t, sample_a, sample_b) over the union of both tracks' tick ranges;
/// ticks outside a track see an invalid sample.
template <class F>
void for_each_aligned(const KinematicTrack& a, const KinematicTrack& b, F&& f) {
    if (a.dt != b.dt) throw ConfigError("tracks have different sample periods");
    if (a.samples.empty() && b.samples.empty()) return;
    const TimeMs dt = a.dt;
    if ((a.t0 - b.t0) % dt != 0) throw ConfigError("tracks are not on the same tick grid");
    auto first_tick = [dt](const KinematicTrack& k) { return k.t0 / dt; };
    TimeMs lo = 0, hi = 0;
    bool init = false;
    for (const auto* k : {&a, &b}) {
        if (k->samples.empty()) continue;
        const TimeMs s = first_tick(*k), e = s + static_cast<TimeMs>(k->samples.size());
        lo = init ? std::min(lo, s) : s;
        hi = init ? std::max(hi, e) : e;
        init = true;
    }
    KinematicSample empty_a, empty_b;
    auto at = [&](const KinematicTrack& k, TimeMs tick, KinematicSample& empty) -> const KinematicSample& {
        const TimeMs idx = tick - first_tick(k);
        if (idx < 0 || idx >= static_cast<TimeMs>(k.samples.size())) {
            empty = KinematicSample{};
            empty.t = tick * dt;
            return empty;
        }
        return k.samples[static_cast<std::size_t>(idx)];
    };
    for (TimeMs tick = lo; tick < hi; ++tick) f(tick * dt, at(a, tick, empty_a), at(b, tick, empty_b));
}

inline std::vector<GroomingEvent> detect_grooming(const KinematicTrack& i, const KinematicTrack& j,
                                                  const GroomingParams& p = {}) {
    GroomingDetector det(i.animal, j.animal, i.dt, p);
    for_each_aligned(i, j, [&](TimeMs t, const KinematicSample& a, const KinematicSample& b) {
        det.push(make_pair_tick(t, a, b, 0.2));
    });
    det.finish();
    return std::move(det.events);
}

inline std::vector<MoveAwayEvent> detect_move_away(const KinematicTrack& i, const KinematicTrack& j,
                                                   const MoveAwayParams& p = {}, double v_min = 0.2) {
    MoveAwayDetector det(i.animal, j.animal, i.dt, p);
    for_each_aligned(i, j, [&](TimeMs t, const KinematicSample& a, const KinematicSample& b) {
        const auto tick = make_pair_tick(t, a, b, v_min);
        det.push(t, a, tick.dv_ab, tick.proj_ab, tick.distance);
    });
    det.finish();
    return std::move(det.events);
}

/// Displacement iff the mover has at least one valid sample in
/// [t_start - s_pre, t_start) and all of them are stationary.
inline MoveAwayKind classify_move_away(const MoveAwayEvent& e, const KinematicTrack& mover, double s_pre = 5.0) {
    const TimeMs from = e.t_start - detail::to_ms(s_pre);
    bool any_valid = false;
    for (const auto& s : mover.samples) {
        if (s.t < from || s.t >= e.t_start || !s.valid) continue;
        any_valid = true;
        if (!s.stationary) return MoveAwayKind::withdrawal;
    }
    return any_valid ? MoveAwayKind::displacement : MoveAwayKind::withdrawal;
}

inline std::vector<ChaseEvent> detect_chase(const KinematicTrack& i, const KinematicTrack& j,
                                            const ChaseParams& p = {}, double v_min = 0.2) {
    ChaseDetector det(i.animal, j.animal, i.dt, p);
    for_each_aligned(i, j, [&](TimeMs t, const KinematicSample& a, const KinematicSample& b) {
        det.push(make_pair_tick(t, a, b, v_min));
    });
    det.finish();
    return std::move(det.events);
}

inline std::vector<AttackEvent> detect_attack(const KinematicTrack& i, const KinematicTrack& j,
                                              const AttackParams& p = {}, double v_min = 0.2) {
    AttackDetector det(i.animal, j.animal, p);
    for_each_aligned(i, j, [&](TimeMs t, const KinematicSample& a, const KinematicSample& b) {
        det.push(t, a, make_pair_tick(t, a, b, v_min).dv_ab);
    });
    det.finish();
    return std::move(det.events);
}

// ---------------------------------------------------------------------------
// Canonical order: start time, then animal ids.

inline void sort_canonical(std::vector<GroomingEvent>& v) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return std::tie(x.t_start, x.a, x.b) < std::tie(y.t_start, y.a, y.b);
    });
}
inline void sort_canonical(std::vector<MoveAwayEvent>& v) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return std::tie(x.t_start, x.mover, x.target) < std::tie(y.t_start, y.mover, y.target);
    });
}
inline void sort_canonical(std::vector<ChaseEvent>& v) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return std::tie(x.t_start, x.chaser, x.chasee) < std::tie(y.t_start, y.chaser, y.chasee);
    });
}
inline void sort_canonical(std::vector<AttackEvent>& v) {
    std::sort(v.begin(), v.end(), [](const auto& x, const auto& y) {
        return std::tie(x.t_onset, x.attacker, x.target) < std::tie(y.t_onset, y.attacker, y.target);
    });
}

}  // namespace troopnet
