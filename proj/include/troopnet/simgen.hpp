#pragma once

// Synthetic RTLS datasets with known ground truth.
//
// Animals rest at spots kept at least kMinSeparation apart and move along
// straight segments: random relocations ("wander"), scripted grooming bouts
// and displacement episodes. Each tick every animal emits tags_per_animal
// readings of its true position plus independent Gaussian noise.
//
// Random numbers: std::mt19937_64 (fully specified by the C++ standard),
// uniforms from its top 53 bits, normals by the Marsaglia polar method,
// exponentials by inversion. Planning, hierarchy planting, noise and
// dropouts draw from separate engines seeded with splitmix64(seed + k), so
// a scenario and seed pin the output bytes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <tuple>
#include <utility>
#include <string>
#include <vector>

#include "troopnet/error.hpp"
#include "troopnet/geometry.hpp"
#include "troopnet/ingest.hpp"

namespace troopnet {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    /// Exponential with the given rate (events per unit).
    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct GroomingScript {
    AnimalId a = 0;
    AnimalId b = 0;
    double t_start_s = 0.0;
    double duration_s = 0.0;
    double distance_m = 0.3;
};

struct DisplacementScript {
    AnimalId mover = 0;   // the retreating animal
    AnimalId target = 0;  // the approaching animal
    double t_start_s = 0.0;  // requested start; may be deferred to avoid conflicts
    bool reverse = false;    // against the planted order
};

struct Scenario {
    int n = 6;
    double duration_s = 3600.0;
    TimeMs dt_ms = 1000;
    TimeMs start_ms = 1'696'000'000'000;
    std::vector<AnimalId> planted_order;  // most dominant first; empty = 1..n
    std::vector<GroomingScript> grooming;
    std::vector<DisplacementScript> displacements;
    double displacement_rate = 0.0;  // per hour per adjacent-rank pair; > 0 plants a hierarchy
    double reverse_fraction = 0.2;
    int tags_per_animal = 4;
    double noise_sigma = 0.05;  // m per axis
    std::uint64_t seed = 1;
    EnclosureSpec enclosure;
    double wander_rate = 2.0;       // relocations per hour per animal
    double walk_speed = 0.12;       // m/s, below the default v_min
    double approach_speed = 0.12;   // m/s, creeping moves around displacements
    double depart_speed = 0.8;      // m/s
    double depart_duration_s = 3.0;
    double rest_height = 0.5;       // m
    double dropout = 0.0;           // probability an animal emits no readings in a tick
    bool record_tracks = false;

    static constexpr double kMaxSpeed = 2.0;

    std::vector<AnimalId> order() const {
        if (!planted_order.empty()) return planted_order;
        std::vector<AnimalId> o(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) o[static_cast<std::size_t>(k)] = k + 1;
        return o;
    }

    TimeMs ticks() const { return static_cast<TimeMs>(std::floor(duration_s * 1000.0 / static_cast<double>(dt_ms))); }

    void validate() const {
        if (n < 1) throw ConfigError("scenario field 'n' must be >= 1");
        if (!(duration_s > 0.0)) throw ConfigError("scenario field 'duration_s' must be > 0");
        if (dt_ms <= 0) throw ConfigError("scenario field 'dt_ms' must be > 0");
        if (start_ms < 0 || start_ms % dt_ms != 0)
            throw ConfigError("scenario field 'start_ms' must be a non-negative multiple of dt_ms");
        if (!planted_order.empty()) {
            auto sorted = planted_order;
            std::sort(sorted.begin(), sorted.end());
            for (int k = 0; k < n; ++k)
                if (sorted.size() != static_cast<std::size_t>(n) || sorted[static_cast<std::size_t>(k)] != k + 1)
                    throw ConfigError("scenario field 'planted_order' must be a permutation of 1..n");
        }
        if (tags_per_animal < 1) throw ConfigError("scenario field 'tags_per_animal' must be >= 1");
        if (!(noise_sigma >= 0.0)) throw ConfigError("scenario field 'noise_sigma' must be >= 0");
        if (!(displacement_rate >= 0.0)) throw ConfigError("scenario field 'displacement_rate' must be >= 0");
        if (!(reverse_fraction >= 0.0 && reverse_fraction <= 0.2))
            throw ConfigError("scenario field 'reverse_fraction' must be in [0, 0.2]");
        if (!(wander_rate >= 0.0)) throw ConfigError("scenario field 'wander_rate' must be >= 0");
        for (auto [name, v] : {std::pair{"walk_speed", walk_speed}, std::pair{"approach_speed", approach_speed},
                               std::pair{"depart_speed", depart_speed}})
            if (!(v > 0.0 && v <= kMaxSpeed))
                throw ConfigError(std::string("scenario field '") + name + "' must be in (0, 2] m/s");
        if (!(depart_duration_s > 0.0)) throw ConfigError("scenario field 'depart_duration_s' must be > 0");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("scenario field 'dropout' must be in [0, 1)");
        try {
            enclosure.validate();
        } catch (const ConfigError&) {
            throw ConfigError("scenario field 'enclosure' must have positive extents");
        }
        if (depart_speed * depart_duration_s + 0.4 + 0.3 > std::hypot(enclosure.extent_x, enclosure.extent_y))
            throw ConfigError("scenario field 'depart_duration_s': departure does not fit in the enclosure");

        auto check_id = [&](AnimalId a, const char* field) {
            if (a < 1 || a > n) throw ConfigError(std::string("scenario field '") + field + "' has an animal id outside 1..n");
        };
        for (const auto& g : grooming) {
            check_id(g.a, "grooming");
            check_id(g.b, "grooming");
            if (g.a == g.b) throw ConfigError("scenario field 'grooming': partners must differ");
            if (!(g.duration_s > 0.0)) throw ConfigError("scenario field 'grooming': duration_s must be > 0");
            if (!(g.distance_m >= 0.05 && g.distance_m <= 0.5))
                throw ConfigError("scenario field 'grooming': distance_m must be in [0.05, 0.5]");
            if (g.t_start_s < kGroomLead_s || g.t_start_s + g.duration_s + kGroomLeave_s > duration_s)
                throw ConfigError("scenario field 'grooming': episode must lie within [20 s, duration_s - 15 s]");
        }
        for (std::size_t x = 0; x < grooming.size(); ++x)
            for (std::size_t y = x + 1; y < grooming.size(); ++y) {
                const auto &g = grooming[x], &h = grooming[y];
                const bool shared = g.a == h.a || g.a == h.b || g.b == h.a || g.b == h.b;
                if (!shared) continue;
                const double g0 = g.t_start_s - kGroomLead_s, g1 = g.t_start_s + g.duration_s + kGroomLeave_s;
                const double h0 = h.t_start_s - kGroomLead_s, h1 = h.t_start_s + h.duration_s + kGroomLeave_s;
                if (g0 < h1 && h0 < g1)
                    throw ConfigError("scenario field 'grooming': overlapping episodes for one animal (entries " +
                                      std::to_string(x) + " and " + std::to_string(y) + ")");
            }
        for (const auto& d : displacements) {
            check_id(d.mover, "displacements");
            check_id(d.target, "displacements");
            if (d.mover == d.target) throw ConfigError("scenario field 'displacements': mover and target must differ");
            if (d.t_start_s < 0.0 || d.t_start_s > duration_s)
                throw ConfigError("scenario field 'displacements': t_start_s outside [0, duration_s]");
        }
    }

    static constexpr double kGroomLead_s = 20.0;
    static constexpr double kGroomLeave_s = 15.0;
};

struct GroomingTruth {
    AnimalId a = 0, b = 0;  // a < b
    TimeMs t_start = 0, t_end = 0;  // absolute ms, end exclusive
    double distance_m = 0.0;
};

struct DisplacementTruth {
    AnimalId mover = 0, target = 0;
    TimeMs t_start = 0, t_end = 0;  // the departure interval
    bool reverse = false;
};

struct GroundTruth {
    std::vector<GroomingTruth> grooming;
    std::vector<DisplacementTruth> displacements;
    std::uint64_t dropped_displacements = 0;  // could not be placed before the end
    std::vector<std::vector<Vec3>> tracks;    // per animal per tick, when record_tracks
};

inline std::string tag_id(AnimalId animal, int tag, int tags_per_animal) {
    const int k = (animal - 1) * tags_per_animal + tag + 1;
    std::string s = std::to_string(k);
    if (s.size() < 2) s.insert(0, 1, '0');
    return "T" + s;
}

inline std::vector<std::pair<std::string, AnimalId>> collar_entries(const Scenario& sc) {
    std::vector<std::pair<std::string, AnimalId>> out;
    for (AnimalId a = 1; a <= sc.n; ++a)
        for (int k = 0; k < sc.tags_per_animal; ++k) out.emplace_back(tag_id(a, k, sc.tags_per_animal), a);
    return out;
}

/// Adds Poisson-timed displacement episodes for every (dominant, subordinate)
/// pair of the planted order: the subordinate retreats at
/// base_rate * (1 + rank gap) / 2 per hour, the dominant at reverse_fraction
/// of that rate.
inline Scenario plant_hierarchy(Scenario sc, double base_rate) {
    if (!(base_rate > 0.0)) throw ConfigError("base_rate must be > 0");
    sc.displacement_rate = base_rate;
    Rng rng(splitmix64(sc.seed + 2));
    const auto order = sc.order();
    const double hours = sc.duration_s / 3600.0;
    auto poisson_times = [&](double rate_per_hour, AnimalId mover, AnimalId target, bool reverse) {
        if (!(rate_per_hour > 0.0)) return;
        double t = rng.exponential(rate_per_hour);
        while (t < hours) {
            sc.displacements.push_back({mover, target, t * 3600.0, reverse});
            t += rng.exponential(rate_per_hour);
        }
    };
    for (std::size_t hi = 0; hi < order.size(); ++hi)
        for (std::size_t lo = hi + 1; lo < order.size(); ++lo) {
            const double rate = base_rate * (1.0 + static_cast<double>(lo - hi)) / 2.0;
            poisson_times(rate, order[lo], order[hi], false);
            poisson_times(rate * sc.reverse_fraction, order[hi], order[lo], true);
        }
    return sc;
}

namespace detail {

struct Segment {
    TimeMs t0 = 0, t1 = 0;  // relative ms; position p0 at t0 moving linearly to p1 at t1
    Vec3 p0, p1;

    Vec3 at(TimeMs t) const {
        if (t1 <= t0 || t >= t1) return p1;
        if (t <= t0) return p0;
        const double f = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
        return p0 + (p1 - p0) * f;
    }
};

inline constexpr double kMinSeparation = 0.8;  // m between resting spots of different animals
inline constexpr double kMargin = 0.15;        // m from the walls
inline constexpr double kBystanderCos = -0.75;  // nobody squarely behind a retreat
inline constexpr double kDisplacementSeparation = 0.65;

class Planner {
public:
    explicit Planner(const Scenario& sc)
        : sc_(sc), dt_(sc.dt_ms), horizon_(sc.ticks() * sc.dt_ms), rng_(splitmix64(sc.seed + 1)),
          paths_(static_cast<std::size_t>(sc.n)), spot_(static_cast<std::size_t>(sc.n)),
          free_at_(static_cast<std::size_t>(sc.n), 0), reservations_(static_cast<std::size_t>(sc.n)),
          failed_at_(static_cast<std::size_t>(sc.n) * static_cast<std::size_t>(sc.n), -1) {}

    GroundTruth run() {
        for (AnimalId a = 1; a <= sc_.n; ++a) {
            const auto obs = obstacles({a}, 0);
            spot(a) = find_spot([&](const Vec3& p) { return clear_of(p, obs); }).value_or(roomiest_spot(obs));
            path(a).push_back({0, 0, spot(a), spot(a)});
        }

        for (std::size_t g = 0; g < sc_.grooming.size(); ++g) {
            const auto& s = sc_.grooming[g];
            const TimeMs r0 = round_up(to_ms(s.t_start_s - Scenario::kGroomLead_s));
            const TimeMs r1 = round_up(to_ms(s.t_start_s + s.duration_s + Scenario::kGroomLeave_s));
            reservations_[idx(s.a)].push_back({r0, r1});
            reservations_[idx(s.b)].push_back({r0, r1});
            agenda_.push({r0, 0, g});
        }
        for (std::size_t d = 0; d < sc_.displacements.size(); ++d)
            agenda_.push({round_up(to_ms(sc_.displacements[d].t_start_s)), 1, d});
        if (sc_.wander_rate > 0.0) {
            const double hours = sc_.duration_s / 3600.0;
            for (AnimalId a = 1; a <= sc_.n; ++a) {
                double t = rng_.exponential(sc_.wander_rate);
                while (t < hours) {
                    wanders_.push_back({a, round_up(to_ms(t * 3600.0))});
                    agenda_.push({wanders_.back().t, 2, wanders_.size() - 1});
                    t += rng_.exponential(sc_.wander_rate);
                }
            }
        }

        while (!agenda_.empty()) {
            const Item item = agenda_.top();
            agenda_.pop();
            switch (item.kind) {
                case 0: plan_grooming(sc_.grooming[item.index]); break;
                case 1: plan_displacement(item); break;
                default: plan_wander(item.index); break;
            }
        }
        for (AnimalId a = 1; a <= sc_.n; ++a) rest_until(a, horizon_);

        std::sort(truth_.grooming.begin(), truth_.grooming.end(),
                  [](const auto& x, const auto& y) { return std::tie(x.t_start, x.a, x.b) < std::tie(y.t_start, y.a, y.b); });
        std::sort(truth_.displacements.begin(), truth_.displacements.end(), [](const auto& x, const auto& y) {
            return std::tie(x.t_start, x.mover, x.target) < std::tie(y.t_start, y.mover, y.target);
        });
        return std::move(truth_);
    }

    std::vector<std::vector<Segment>> take_paths() { return std::move(paths_); }

private:
    struct Item {
        TimeMs t;
        int kind;  // 0 grooming, 1 displacement, 2 wander
        std::size_t index;
        bool operator>(const Item& o) const { return std::tie(t, kind, index) > std::tie(o.t, o.kind, o.index); }
    };
    struct Wander { AnimalId animal; TimeMs t; };
    struct Interval { TimeMs begin, end; };

    static std::size_t idx(AnimalId a) { return static_cast<std::size_t>(a - 1); }
    std::vector<Segment>& path(AnimalId a) { return paths_[idx(a)]; }
    Vec3& spot(AnimalId a) { return spot_[idx(a)]; }
    TimeMs& free_at(AnimalId a) { return free_at_[idx(a)]; }

    static TimeMs to_ms(double s) { return static_cast<TimeMs>(std::llround(s * 1000.0)); }
    TimeMs round_up(TimeMs t) const { return ((t + dt_ - 1) / dt_) * dt_; }

    /// Ticks needed to cover `dist` at no more than `speed` (at least one).
    TimeMs ticks_for(double dist, double speed) const {
        const double secs = dist / speed;
        return std::max<TimeMs>(1, static_cast<TimeMs>(std::ceil(secs * 1000.0 / static_cast<double>(dt_) - 1e-9)));
    }

    Vec3 position_at(AnimalId a, TimeMs t) const {
        const auto& p = paths_[idx(a)];
        for (auto it = p.rbegin(); it != p.rend(); ++it)
            if (it->t0 <= t) return it->at(t);
        return p.front().p0;
    }

    /// Current and planned positions of everyone not excluded.
    std::vector<Vec3> obstacles(std::initializer_list<AnimalId> exclude, TimeMs now) const {
        std::vector<Vec3> out;
        for (AnimalId o = 1; o <= sc_.n; ++o) {
            if (std::find(exclude.begin(), exclude.end(), o) != exclude.end()) continue;
            const auto& path = paths_[idx(o)];
            if (path.empty()) continue;
            out.push_back(position_at(o, now));
            // Every place already planned for later (bout positions, final spot).
            for (auto it = path.rbegin(); it != path.rend() && it->t1 > now; ++it) out.push_back(it->p1);
            out.push_back(spot_[idx(o)]);
        }
        return out;
    }

    static bool clear_of(const Vec3& p, const std::vector<Vec3>& obs, double separation = kMinSeparation) {
        for (const auto& x : obs)
            if (distance(p, x) < separation) return false;
        return true;
    }

    static bool clear_of_bystanders(const Vec3& ps, const Vec3& u, double len, const std::vector<Vec3>& obs) {
        constexpr int kSteps = 8;
        for (const auto& x : obs)
            for (int k = 0; k <= kSteps; ++k) {
                const Vec3 p = ps + u * (len * k / kSteps);
                const double d = distance(x, p);
                if (d < 1e-9 || dot(u, x - p) / d < kBystanderCos) return false;
            }
        return true;
    }

    bool inside(const Vec3& p) const {
        return p.x >= kMargin && p.y >= kMargin && p.x <= sc_.enclosure.extent_x - kMargin &&
               p.y <= sc_.enclosure.extent_y - kMargin;
    }

    Vec3 random_spot() {
        const double x = rng_.uniform(kMargin, sc_.enclosure.extent_x - kMargin);
        const double y = rng_.uniform(kMargin, sc_.enclosure.extent_y - kMargin);
        return {x, y, sc_.rest_height};
    }

    static constexpr double kPi = 3.14159265358979323846;

    Vec3 random_direction() {
        const double a = rng_.uniform(0.0, 2.0 * kPi);
        return {std::cos(a), std::sin(a), 0.0};
    }

    template <class Ok>
    std::optional<Vec3> find_spot(Ok&& ok, int tries = 500) {
        for (int k = 0; k < tries; ++k) {
            const Vec3 p = random_spot();
            if (ok(p)) return p;
        }
        return std::nullopt;
    }

    /// Candidate with the largest clearance, for when nothing satisfies the rules.
    Vec3 roomiest_spot(const std::vector<Vec3>& obs, int tries = 200) {
        Vec3 best = random_spot();
        double best_d = -1.0;
        for (int k = 0; k < tries; ++k) {
            const Vec3 p = k == 0 ? best : random_spot();
            double d = std::numeric_limits<double>::infinity();
            for (const auto& x : obs) d = std::min(d, distance(p, x));
            if (d > best_d) {
                best_d = d;
                best = p;
            }
        }
        return best;
    }

    void rest_until(AnimalId a, TimeMs t) {
        if (t > free_at(a)) {
            path(a).push_back({free_at(a), t, spot(a), spot(a)});
            free_at(a) = t;
        }
    }

    void move(AnimalId a, TimeMs begin, const Vec3& target, TimeMs ticks) {
        rest_until(a, begin);
        const TimeMs end = begin + ticks * dt_;
        path(a).push_back({begin, end, spot(a), target});
        spot(a) = target;
        free_at(a) = end;
    }

    bool conflicts(AnimalId a, TimeMs begin, TimeMs end, TimeMs& resume) const {
        for (const auto& r : reservations_[idx(a)])
            if (r.begin < end && begin < r.end) {
                resume = std::max(resume, r.end);
                return true;
            }
        return false;
    }

    // The mover of a grooming pair covers its last 0.64 m in and first 0.64 m
    // out with alternating short and long steps: central-difference speed is
    // 0.15 m/s on every tick outside the bout (clear of both the stationarity
    // threshold and v_min) and 0.02 m/s on the first and last bout tick.
    static constexpr double kZig[5] = {0.04, 0.26, 0.04, 0.26, 0.04};
    static constexpr double kZigRun = 0.64;
    static constexpr TimeMs kZigTicks = 5;

    void zig(AnimalId a, TimeMs begin, const Vec3& u) {
        Vec3 p = spot(a);
        for (TimeMs k = 0; k < kZigTicks; ++k) {
            p = p + u * kZig[k];
            move(a, begin + k * dt_, p, 1);
        }
    }

    void plan_grooming(const GroomingScript& s) {
        const TimeMs t_start = round_up(to_ms(s.t_start_s));
        const TimeMs t_end = t_start + round_up(to_ms(s.duration_s));
        const TimeMs lead = round_up(to_ms(Scenario::kGroomLead_s));
        const double walk = std::min(sc_.walk_speed, 0.5);
        const TimeMs now = t_start - lead;

        const auto obs = obstacles({s.a, s.b}, now);
        // a walks to a waiting point w behind its place, then steps in towards b.
        Vec3 pa, pb, w, u;
        auto place = [&] {
            pa = random_spot();
            u = random_direction();
            pb = pa + u * s.distance_m;
            w = pa - u * kZigRun;
            return inside(pb) && inside(w) && clear_of(pa, obs) && clear_of(pb, obs) && clear_of(w, obs);
        };
        bool found = false;
        for (int tries = 0; tries < 2000 && !found; ++tries) {
            if (!place()) continue;
            const double da = distance(position_at(s.a, now), w), db = distance(position_at(s.b, now), pb);
            found = (da >= 1.0 && db >= 1.0) || tries > 1500;
        }
        if (!found) {
            do {
                pa = roomiest_spot(obs);
                u = random_direction();
                pb = pa + u * s.distance_m;
                w = pa - u * kZigRun;
            } while (!inside(pb) || !inside(w));
        }
        const TimeMs lead_ticks = lead / dt_;
        const TimeMs nb = std::min(ticks_for(distance(spot(s.b), pb), walk), lead_ticks - 10);
        move(s.b, t_start - (8 + nb) * dt_, pb, nb);
        const TimeMs na = std::min(ticks_for(distance(spot(s.a), w), walk), lead_ticks - kZigTicks - 2);
        move(s.a, t_start - (kZigTicks + na) * dt_, w, na);
        zig(s.a, t_start - kZigTicks * dt_, u);

        const TimeMs leave = t_end - dt_;
        rest_until(s.a, leave);
        zig(s.a, leave, u * -1.0);
        const TimeMs b_leave = leave + kZigTicks * dt_;
        rest_until(s.b, b_leave);
        const TimeMs leave_ticks = round_up(to_ms(Scenario::kGroomLeave_s)) / dt_ - 2;
        for (AnimalId animal : {s.a, s.b}) {
            const AnimalId other = animal == s.a ? s.b : s.a;
            const Vec3 from = spot(animal);
            const auto others = obstacles({animal, other}, b_leave);
            const Vec3 target = find_spot([&](const Vec3& p) {
                                    return clear_of(p, others) && distance(p, from) >= 1.0 && distance(p, from) <= 1.6 &&
                                           distance(p, spot(other)) >= 2.0 * kMinSeparation;
                                }).value_or(roomiest_spot(obstacles({animal}, b_leave)));
            move(animal, b_leave, target, std::min(ticks_for(distance(from, target), walk), leave_ticks - kZigTicks));
        }
        truth_.grooming.push_back({std::min(s.a, s.b), std::max(s.a, s.b), sc_.start_ms + t_start,
                                   sc_.start_ms + t_end, s.distance_m});
    }

    void plan_displacement(const Item& item) {
        const auto& s = sc_.displacements[item.index];
        const AnimalId sub = s.mover, dom = s.target;
        const TimeMs begin = std::max({item.t, free_at(sub), free_at(dom)});
        if (begin >= horizon_) {
            ++truth_.dropped_displacements;
            return;
        }
        if (begin > item.t) {  // plan in time order so reservations are honoured
            agenda_.push({begin, 1, item.index});
            return;
        }
        auto defer = [&] {
            // Retry once the scene has changed: the next time someone stops moving.
            TimeMs next = begin + round_up(to_ms(30.0));
            for (TimeMs f : free_at_)
                if (f > begin) next = std::min(next, f);
            agenda_.push({next, 1, item.index});
        };
        const std::size_t pair_key = idx(sub) * static_cast<std::size_t>(sc_.n) + idx(dom);
        if (failed_at_[pair_key] == begin) {  // same pair, same scene: would fail again
            defer();
            return;
        }
        const double depart_len = sc_.depart_speed * sc_.depart_duration_s;
        constexpr double kApproach = 0.4;
        Vec3 ps, u;
        bool found = false;
        constexpr double sep = kDisplacementSeparation;
        const auto obs = obstacles({sub, dom}, begin);
        for (int tries = 0; tries < 100 && !found; ++tries) {
            // Heading first, then a start point drawn from the region where the
            // whole approach-and-departure line fits inside the walls.
            u = random_direction();
            const double lo_x = kMargin + std::max(kApproach * u.x, -depart_len * u.x);
            const double hi_x = sc_.enclosure.extent_x - kMargin - std::max(-kApproach * u.x, depart_len * u.x);
            const double lo_y = kMargin + std::max(kApproach * u.y, -depart_len * u.y);
            const double hi_y = sc_.enclosure.extent_y - kMargin - std::max(-kApproach * u.y, depart_len * u.y);
            if (lo_x > hi_x || lo_y > hi_y) continue;
            ps = {rng_.uniform(lo_x, hi_x), rng_.uniform(lo_y, hi_y), sc_.rest_height};
            const Vec3 pd = ps - u * kApproach, pe = ps + u * depart_len;
            found = clear_of(ps, obs, sep) && clear_of(pd, obs, sep) && clear_of(pe, obs, sep) &&
                    clear_of_bystanders(ps, u, depart_len, obs);
        }
        if (!found) {
            failed_at_[pair_key] = begin;
            defer();
            return;
        }
        const Vec3 pd = ps - u * kApproach, pe = ps + u * depart_len;
        const TimeMs n_sub = ticks_for(distance(spot(sub), ps), sc_.approach_speed);
        const TimeMs n_dom = ticks_for(distance(spot(dom), pd), sc_.approach_speed);
        const TimeMs n_dep = ticks_for(depart_len, sc_.depart_speed);
        const TimeMs settled = begin + n_sub * dt_ + round_up(to_ms(7.0));  // > s_pre of stillness
        const TimeMs arrive = std::max(settled, begin + n_dom * dt_);
        const TimeMs done = arrive + n_dep * dt_ + 2 * dt_;
        // Afterwards the subordinate drifts off the wall so sites stay available.
        const Vec3 settle = find_spot([&](const Vec3& p) {
                                return clear_of(p, obs) && distance(p, pd) >= kMinSeparation && distance(p, pe) <= 1.5;
                            }).value_or(pe);
        const TimeMs n_settle = ticks_for(distance(pe, settle), sc_.walk_speed);
        const TimeMs settled_at = done + n_settle * dt_ + dt_;

        TimeMs resume = 0;
        const bool c1 = conflicts(sub, begin, settled_at, resume);
        const bool c2 = conflicts(dom, begin, done, resume);
        if (c1 || c2) {
            agenda_.push({resume, 1, item.index});
            return;
        }
        if (settled_at > horizon_) {
            ++truth_.dropped_displacements;
            return;
        }
        move(sub, begin, ps, n_sub);
        move(dom, arrive - n_dom * dt_, pd, n_dom);
        rest_until(sub, arrive);
        move(sub, arrive, pe, n_dep);
        move(sub, done, settle, n_settle);
        rest_until(sub, settled_at);
        rest_until(dom, done);
        truth_.displacements.push_back(
            {sub, dom, sc_.start_ms + arrive, sc_.start_ms + arrive + n_dep * dt_, s.reverse});
    }

    void plan_wander(std::size_t index) {
        Wander& w = wanders_[index];
        const TimeMs begin = std::max(w.t, free_at(w.animal));
        if (begin >= horizon_) return;
        if (begin > w.t) {
            w.t = begin;
            agenda_.push({begin, 2, index});
            return;
        }
        const Vec3 from = spot(w.animal);
        const auto obs = obstacles({w.animal}, begin);
        const auto found = find_spot([&](const Vec3& p) { return clear_of(p, obs); });
        if (!found) return;
        const Vec3 target = *found;
        const TimeMs n = ticks_for(distance(from, target), sc_.walk_speed);
        const TimeMs done = begin + n * dt_ + dt_;
        TimeMs resume = 0;
        if (done > horizon_ || conflicts(w.animal, begin, done, resume)) return;
        move(w.animal, begin, target, n);
        rest_until(w.animal, done);
    }

    const Scenario& sc_;
    TimeMs dt_;
    TimeMs horizon_;
    Rng rng_;
    std::vector<std::vector<Segment>> paths_;
    std::vector<Vec3> spot_;
    std::vector<TimeMs> free_at_;
    std::vector<std::vector<Interval>> reservations_;
    std::vector<TimeMs> failed_at_;  // per (sub, dom): last time no site was found
    std::vector<Wander> wanders_;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> agenda_;
    GroundTruth truth_;
};

}  // namespace detail

/// Planned motion for a scenario; emit() streams its tag readings.
class Simulation {
public:
    explicit Simulation(const Scenario& sc) : sc_(sc) {
        sc_.validate();
        detail::Planner planner(sc_);
        truth_ = planner.run();
        paths_ = planner.take_paths();
    }

    const Scenario& scenario() const noexcept { return sc_; }
    const GroundTruth& truth() const noexcept { return truth_; }

    /// True position of `animal` at tick k.
    Vec3 true_position(AnimalId animal, TimeMs k) const {
        const auto& p = paths_[static_cast<std::size_t>(animal - 1)];
        const TimeMs t = k * sc_.dt_ms;
        auto it = std::upper_bound(p.begin(), p.end(), t, [](TimeMs v, const detail::Segment& s) { return v < s.t0; });
        if (it != p.begin()) --it;
        return it->at(t);
    }

    /// Calls sink(animal, tag_index, t_ms, pos) in time order, then animal, then tag.
    template <class Sink>
    void emit(Sink&& sink) const {
        Rng noise(splitmix64(sc_.seed + 3));
        Rng drops(splitmix64(sc_.seed + 4));
        const TimeMs ticks = sc_.ticks();
        std::vector<std::size_t> cursor(static_cast<std::size_t>(sc_.n), 0);
        for (TimeMs k = 0; k < ticks; ++k) {
            const TimeMs t_rel = k * sc_.dt_ms;
            const TimeMs t = sc_.start_ms + t_rel;
            for (AnimalId a = 1; a <= sc_.n; ++a) {
                const auto& p = paths_[static_cast<std::size_t>(a - 1)];
                auto& c = cursor[static_cast<std::size_t>(a - 1)];
                while (c + 1 < p.size() && p[c + 1].t0 <= t_rel) ++c;
                const Vec3 truth = p[c].at(t_rel);
                if (sc_.dropout > 0.0 && drops.uniform() < sc_.dropout) continue;
                for (int tag = 0; tag < sc_.tags_per_animal; ++tag) {
                    Vec3 pos = truth;
                    if (sc_.noise_sigma > 0.0) {
                        pos.x += sc_.noise_sigma * noise.normal();
                        pos.y += sc_.noise_sigma * noise.normal();
                        pos.z += sc_.noise_sigma * noise.normal();
                    }
                    sink(a, tag, t, pos);
                }
            }
        }
    }

    std::vector<std::vector<Vec3>> true_tracks() const {
        std::vector<std::vector<Vec3>> out(static_cast<std::size_t>(sc_.n));
        for (AnimalId a = 1; a <= sc_.n; ++a)
            for (TimeMs k = 0; k < sc_.ticks(); ++k) out[static_cast<std::size_t>(a - 1)].push_back(true_position(a, k));
        return out;
    }

private:
    Scenario sc_;
    GroundTruth truth_;
    std::vector<std::vector<detail::Segment>> paths_;
};

struct SimulationOutput {
    std::vector<TagReading> readings;
    GroundTruth truth;
};

/// Materializes all readings in memory. Use Simulation::emit for long runs.
inline SimulationOutput simulate(const Scenario& sc) {
    Simulation sim(sc);
    SimulationOutput out;
    out.truth = sim.truth();
    if (sc.record_tracks) out.truth.tracks = sim.true_tracks();
    std::vector<std::string> tags;
    for (const auto& [tag, animal] : collar_entries(sc)) tags.push_back(tag);
    sim.emit([&](AnimalId a, int tag, TimeMs t, const Vec3& pos) {
        out.readings.push_back({tags[static_cast<std::size_t>((a - 1) * sc.tags_per_animal + tag)], t, pos});
    });
    return out;
}

}  // namespace troopnet
