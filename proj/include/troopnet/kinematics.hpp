#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "troopnet/error.hpp"
#include "troopnet/geometry.hpp"
#include "troopnet/ingest.hpp"

namespace troopnet {

struct KinematicSample {
    TimeMs t = 0;
    Vec3 pos;
    Vec3 vel;
    double speed = 0.0;
    bool stationary = false;
    bool valid = false;  // false where position or velocity is unavailable

    friend bool operator==(const KinematicSample&, const KinematicSample&) = default;
};

struct KinematicTrack {
    AnimalId animal = 0;
    TimeMs t0 = 0;
    TimeMs dt = 1000;
    std::vector<KinematicSample> samples;

    std::size_t size() const noexcept { return samples.size(); }
};

/// Streaming velocity estimator over a uniform timeline. Central difference
/// where both neighbours exist, one-sided next to gaps and at the ends.
/// Emits sample k once sample k+1 (or the end of stream) is known.
class VelocityEstimator {
public:
    explicit VelocityEstimator(TimeMs dt) : dt_s_(static_cast<double>(dt) / 1000.0) {
        if (dt <= 0) throw ConfigError("dt must be > 0 ms");
    }

    template <class Emit>
    void push(TimeMs t, const std::optional<Vec3>& pos, Emit&& emit) {
        if (have_cur_) emit(make(pos));
        prev_ = cur_;
        cur_ = pos;
        cur_t_ = t;
        have_cur_ = true;
    }

    template <class Emit>
    void finish(Emit&& emit) {
        if (have_cur_) emit(make(std::nullopt));
        have_cur_ = false;
        prev_.reset();
        cur_.reset();
    }

private:
    KinematicSample make(const std::optional<Vec3>& next) const {
        KinematicSample s;
        s.t = cur_t_;
        if (!cur_) return s;
        s.pos = *cur_;
        if (prev_ && next) {
            s.vel = (*next - *prev_) / (2.0 * dt_s_);
        } else if (next) {
            s.vel = (*next - *cur_) / dt_s_;
        } else if (prev_) {
            s.vel = (*cur_ - *prev_) / dt_s_;
        } else {
            return s;
        }
        s.speed = norm(s.vel);
        s.valid = true;
        return s;
    }

    double dt_s_;
    bool have_cur_ = false;
    TimeMs cur_t_ = 0;
    std::optional<Vec3> prev_;
    std::optional<Vec3> cur_;
};

inline KinematicTrack compute_velocity(const FusedTrack& track) {
    KinematicTrack out;
    out.animal = track.animal;
    out.t0 = track.t0;
    out.dt = track.dt;
    out.samples.reserve(track.size());
    VelocityEstimator est(track.dt);
    auto emit = [&](const KinematicSample& s) { out.samples.push_back(s); };
    for (std::size_t k = 0; k < track.size(); ++k) est.push(track.time_at(k), track.samples[k], emit);
    est.finish(emit);
    return out;
}

/// stationary(t) holds iff the sample is valid and every valid sample in
/// [t - window, t] moves slower than v_stat (strict).
class StationaryFlagger {
public:
    StationaryFlagger(double v_stat = 0.10, double window_s = 0.0)
        : v_stat_(v_stat), window_ms_(static_cast<TimeMs>(std::llround(window_s * 1000.0))) {
        if (!(v_stat > 0.0)) throw ConfigError("v_stat must be > 0");
        if (!(window_s >= 0.0)) throw ConfigError("w_stat must be >= 0");
    }

    void apply(KinematicSample& s) {
        if (!s.valid) {
            s.stationary = false;
            return;
        }
        const bool fast = !(s.speed < v_stat_);
        if (fast) last_fast_ = s.t;
        s.stationary = !fast && (!last_fast_ || *last_fast_ < s.t - window_ms_);
    }

private:
    double v_stat_;
    TimeMs window_ms_;
    std::optional<TimeMs> last_fast_;
};

inline KinematicTrack flag_stationary(KinematicTrack track, double v_stat = 0.10, double w_stat_s = 0.0) {
    StationaryFlagger flagger(v_stat, w_stat_s);
    for (auto& s : track.samples) flagger.apply(s);
    return track;
}

inline constexpr double kMinBearingDistance = 1e-6;

/// Unit vector from pos_i toward pos_j; nullopt when the points (nearly) coincide.
inline std::optional<Vec3> bearing(const Vec3& pos_i, const Vec3& pos_j) {
    const Vec3 d = pos_j - pos_i;
    const double len = norm(d);
    if (!(len >= kMinBearingDistance)) return std::nullopt;
    return d / len;
}

/// Cosine between the mover's direction of motion and the bearing to the
/// other animal: +1 heading straight at it, -1 heading straight away.
/// Undefined below v_min or without a bearing.
inline std::optional<double> directed_velocity(const Vec3& vel, double speed, const std::optional<Vec3>& b,
                                               double v_min = 0.2) {
    if (!b || !(speed >= v_min) || !(speed > 0.0)) return std::nullopt;
    const double c = dot(vel / speed, *b);
    return std::clamp(c, -1.0, 1.0);
}

}  // namespace troopnet
