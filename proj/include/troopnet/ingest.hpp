#pragma once

// Tag-reading ingest: CSV parsing, tag-to-animal mapping, and fusion of the
// multi-tag collar readings into one uniform-rate track per animal.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "troopnet/error.hpp"
#include "troopnet/geometry.hpp"

namespace troopnet {

using TimeMs = std::int64_t;
using AnimalId = int;  // 1..N

struct TagReading {
    std::string tag_id;
    TimeMs t = 0;
    Vec3 pos;

    friend bool operator==(const TagReading&, const TagReading&) = default;
};

struct EnclosureSpec {
    double extent_x = 3.0;
    double extent_y = 3.0;
    double extent_z = 3.0;

    void validate() const {
        if (!(extent_x > 0.0) || !(extent_y > 0.0) || !(extent_z > 0.0))
            throw ConfigError("enclosure extents must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Readings CSV: tag_id,t_ms,x_m,y_m,z_m

struct RejectedLine {
    std::uint64_t line = 0;
    std::string reason;
};

struct ParseReport {
    std::uint64_t accepted = 0;
    std::uint64_t rejected = 0;
    std::vector<RejectedLine> rejections;  // first `kMaxListed` only

    static constexpr std::size_t kMaxListed = 1000;

    void reject(std::uint64_t line, std::string reason) {
        ++rejected;
        if (rejections.size() < kMaxListed) rejections.push_back({line, std::move(reason)});
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <std::size_t N>
inline std::size_t split_fields(std::string_view line, std::array<std::string_view, N>& fields) {
    std::size_t n = 0;
    while (true) {
        auto comma = line.find(',');
        auto tok = line.substr(0, comma);
        if (n < N) fields[n] = trim(tok);
        ++n;
        if (comma == std::string_view::npos) break;
        line.remove_prefix(comma + 1);
    }
    return n;
}

inline bool parse_number(std::string_view s, double& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

inline bool parse_number(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace detail

/// Parses one readings line. Returns the rejection reason, or nullopt on success.
inline std::optional<std::string> parse_reading_line(std::string_view line, TagReading& out) {
    std::array<std::string_view, 5> f;
    if (detail::split_fields(line, f) != 5) return "wrong column count";
    if (f[0].empty()) return "empty tag id";
    std::int64_t t = 0;
    if (!detail::parse_number(f[1], t)) return "malformed timestamp";
    if (t < 0) return "negative timestamp";
    double c[3];
    for (int k = 0; k < 3; ++k) {
        if (!detail::parse_number(f[2 + k], c[k])) return "non-numeric coordinate";
        if (!std::isfinite(c[k])) return "non-finite coordinate";
    }
    out.tag_id.assign(f[0]);
    out.t = t;
    out.pos = {c[0], c[1], c[2]};
    return std::nullopt;
}

/// Streams readings from `in`, calling `sink(const TagReading&)` for each
/// accepted line in file order. Blank lines are ignored.
template <class Sink>
void for_each_reading(std::istream& in, bool skip_header, ParseReport& report, Sink&& sink) {
    std::string line;
    TagReading r;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_header && line_no == 1) continue;
        if (detail::trim(line).empty()) continue;
        if (auto why = parse_reading_line(line, r)) {
            report.reject(line_no, std::move(*why));
            continue;
        }
        ++report.accepted;
        sink(static_cast<const TagReading&>(r));
    }
}

struct ParsedReadings {
    std::vector<TagReading> readings;
    ParseReport report;
};

inline ParsedReadings parse_readings(std::string_view text, bool skip_header = false) {
    ParsedReadings out;
    std::uint64_t line_no = 0;
    TagReading r;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (skip_header && line_no == 1) continue;
        if (detail::trim(line).empty()) continue;
        if (auto why = parse_reading_line(line, r)) {
            out.report.reject(line_no, std::move(*why));
            continue;
        }
        ++out.report.accepted;
        out.readings.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Collar map

struct TransparentHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

class CollarMap {
public:
    CollarMap() = default;

    /// Builds and validates a map from (tag_id, animal_id) pairs.
    CollarMap(const std::vector<std::pair<std::string, AnimalId>>& entries, int expected_tags_per_animal = 4)
        : expected_tags_(expected_tags_per_animal) {
        if (entries.empty()) throw ConfigError("collar map is empty");
        for (const auto& [tag, animal] : entries) {
            if (tag.empty()) throw ConfigError("collar map: empty tag id");
            if (animal < 1) throw ConfigError("collar map: animal id must be >= 1 (tag " + tag + ")");
            auto [it, inserted] = index_.emplace(tag, animal);
            if (!inserted && it->second != animal)
                throw ConfigError("collar map: tag " + tag + " maps to more than one animal");
            n_animals_ = std::max(n_animals_, animal);
        }
        tags_per_animal_.assign(static_cast<std::size_t>(n_animals_), 0);
        for (const auto& [tag, animal] : index_) ++tags_per_animal_[static_cast<std::size_t>(animal - 1)];
        for (int a = 1; a <= n_animals_; ++a)
            if (tags_per_animal_[static_cast<std::size_t>(a - 1)] == 0)
                throw ConfigError("collar map: animal " + std::to_string(a) + " has no tag");
    }

    std::optional<AnimalId> lookup(std::string_view tag) const {
        auto it = index_.find(tag);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    int n_animals() const noexcept { return n_animals_; }
    int expected_tags_per_animal() const noexcept { return expected_tags_; }
    int tags_of(AnimalId a) const { return tags_per_animal_.at(static_cast<std::size_t>(a - 1)); }
    std::size_t size() const noexcept { return index_.size(); }

private:
    std::unordered_map<std::string, AnimalId, TransparentHash, std::equal_to<>> index_;
    std::vector<int> tags_per_animal_;
    int n_animals_ = 0;
    int expected_tags_ = 4;
};

/// Collar CSV: `tag_id,animal_id` per line. A first line whose animal column is
/// not an integer is treated as a header.
inline CollarMap parse_collar_map(std::string_view text, int expected_tags_per_animal = 4) {
    std::vector<std::pair<std::string, AnimalId>> entries;
    std::uint64_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::array<std::string_view, 2> f;
        if (detail::split_fields(line, f) != 2)
            throw ConfigError("collar map line " + std::to_string(line_no) + ": wrong column count");
        std::int64_t id = 0;
        if (!detail::parse_number(f[1], id)) {
            if (entries.empty()) continue;  // header
            throw ConfigError("collar map line " + std::to_string(line_no) + ": malformed animal id");
        }
        entries.emplace_back(std::string(f[0]), static_cast<AnimalId>(id));
    }
    return CollarMap(entries, expected_tags_per_animal);
}

enum class UnknownTagPolicy { skip, strict };

struct CollarReport {
    std::map<std::string, std::uint64_t> per_tag;
    std::uint64_t unknown_dropped = 0;
};

struct GroupedReadings {
    std::vector<std::vector<TagReading>> by_animal;  // index = animal_id - 1
    CollarReport report;

    const std::vector<TagReading>& of(AnimalId a) const { return by_animal.at(static_cast<std::size_t>(a - 1)); }
};

inline GroupedReadings apply_collar_map(std::span<const TagReading> readings, const CollarMap& map,
                                        UnknownTagPolicy policy = UnknownTagPolicy::skip) {
    GroupedReadings out;
    out.by_animal.resize(static_cast<std::size_t>(map.n_animals()));
    std::uint64_t ordinal = 0;
    for (const auto& r : readings) {
        ++ordinal;
        auto animal = map.lookup(r.tag_id);
        if (!animal) {
            if (policy == UnknownTagPolicy::strict)
                throw ConfigError("unknown tag " + r.tag_id + " (reading " + std::to_string(ordinal) + ")");
            ++out.report.unknown_dropped;
            continue;
        }
        ++out.report.per_tag[r.tag_id];
        out.by_animal[static_cast<std::size_t>(*animal - 1)].push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fusion

/// Uniform-rate track; sample k sits at t0 + k*dt, nullopt marks a gap.
struct FusedTrack {
    AnimalId animal = 0;
    TimeMs t0 = 0;
    TimeMs dt = 1000;
    std::vector<std::optional<Vec3>> samples;

    TimeMs time_at(std::size_t k) const noexcept { return t0 + static_cast<TimeMs>(k) * dt; }
    std::size_t size() const noexcept { return samples.size(); }
    friend bool operator==(const FusedTrack&, const FusedTrack&) = default;
};

/// Windows are anchored at multiples of dt since the epoch, so tracks of
/// different animals share one tick grid.
constexpr TimeMs window_index(TimeMs t, TimeMs dt) noexcept {
    TimeMs q = t / dt;
    if (t % dt != 0 && t < 0) --q;
    return q;
}

inline constexpr double kMadFloor = 0.01;

namespace detail {

inline double median_of_sorted(std::span<const double> v) {
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Robust mean of one window of readings: component-wise median, then drop
/// every reading farther than outlier_k * max(MAD, 0.01 m) from it, where MAD
/// is the median of the reading-to-median distances; average the rest.
/// The result does not depend on the order of `points` (it is sorted in place).
inline Vec3 fuse_window(std::span<Vec3> points, double outlier_k) {
    if (points.empty()) throw std::invalid_argument("fuse_window: empty window");
    std::sort(points.begin(), points.end(), [](const Vec3& a, const Vec3& b) {
        if (a.x != b.x) return a.x < b.x;
        if (a.y != b.y) return a.y < b.y;
        return a.z < b.z;
    });
    if (points.size() == 1) return points[0];

    const std::size_t n = points.size();
    constexpr std::size_t kInline = 16;
    std::array<double, kInline> small{};
    std::vector<double> big;
    std::span<double> scratch;
    if (n <= kInline) {
        scratch = std::span<double>(small.data(), n);
    } else {
        big.resize(n);
        scratch = big;
    }

    Vec3 med;
    auto component_median = [&](auto get) {
        for (std::size_t i = 0; i < n; ++i) scratch[i] = get(points[i]);
        std::sort(scratch.begin(), scratch.end());
        return detail::median_of_sorted(scratch);
    };
    med.x = component_median([](const Vec3& p) { return p.x; });
    med.y = component_median([](const Vec3& p) { return p.y; });
    med.z = component_median([](const Vec3& p) { return p.z; });

    for (std::size_t i = 0; i < n; ++i) scratch[i] = distance(points[i], med);
    std::array<double, kInline> dist_small{};
    std::vector<double> dist_big;
    std::span<double> dist;
    if (n <= kInline) {
        std::copy(scratch.begin(), scratch.end(), dist_small.begin());
        dist = std::span<double>(dist_small.data(), n);
    } else {
        dist_big.assign(scratch.begin(), scratch.end());
        dist = dist_big;
    }
    std::sort(scratch.begin(), scratch.end());
    const double mad = std::max(detail::median_of_sorted(scratch), kMadFloor);
    const double limit = outlier_k * mad;

    Vec3 sum;
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (dist[i] > limit) continue;
        sum += points[i];
        ++kept;
    }
    if (kept == 0) return med;  // only reachable with outlier_k < 1
    return sum / static_cast<double>(kept);
}

inline void validate_fusion_params(TimeMs dt, double outlier_k) {
    if (dt <= 0) throw ConfigError("dt must be > 0 ms");
    if (!(outlier_k > 0.0)) throw ConfigError("outlier_k must be > 0");
}

/// Fuses one animal's readings (any order) into a track on the dt grid.
inline FusedTrack fuse_positions(std::span<const TagReading> readings, TimeMs dt = 1000, double outlier_k = 3.0,
                                 AnimalId animal = 0) {
    validate_fusion_params(dt, outlier_k);
    FusedTrack track;
    track.animal = animal;
    track.dt = dt;
    if (readings.empty()) return track;

    std::vector<std::pair<TimeMs, Vec3>> keyed;
    keyed.reserve(readings.size());
    for (const auto& r : readings) keyed.emplace_back(window_index(r.t, dt), r.pos);
    std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    const TimeMs first = keyed.front().first;
    const TimeMs last = keyed.back().first;
    track.t0 = first * dt;
    track.samples.assign(static_cast<std::size_t>(last - first + 1), std::nullopt);

    std::vector<Vec3> window;
    for (std::size_t i = 0; i < keyed.size();) {
        std::size_t j = i;
        window.clear();
        while (j < keyed.size() && keyed[j].first == keyed[i].first) window.push_back(keyed[j++].second);
        track.samples[static_cast<std::size_t>(keyed[i].first - first)] = fuse_window(window, outlier_k);
        i = j;
    }
    return track;
}

// ---------------------------------------------------------------------------
// Gap filling

/// Streaming gap filler. Runs of at most max_gap gaps with a position on
/// both sides become linear interpolations; everything else passes through.
/// Output lags input by at most max_gap + 1 samples.
class GapFiller {
public:
    explicit GapFiller(int max_gap = 5) : max_gap_(max_gap) {
        if (max_gap < 0) throw ConfigError("max_gap must be >= 0");
    }

    template <class Emit>
    void push(const std::optional<Vec3>& s, Emit&& emit) {
        if (!s) {
            if (!last_ || pending_ >= max_gap_) {
                flush_pending(emit);
                emit(std::optional<Vec3>{});
            } else {
                ++pending_;
            }
            return;
        }
        if (pending_ > 0) {
            const double span = static_cast<double>(pending_ + 1);
            for (int m = 1; m <= pending_; ++m) {
                const double f = static_cast<double>(m) / span;
                emit(std::optional<Vec3>(*last_ + (*s - *last_) * f));
            }
            pending_ = 0;
        }
        last_ = s;
        emit(s);
    }

    template <class Emit>
    void finish(Emit&& emit) {
        flush_pending(emit);
    }

private:
    template <class Emit>
    void flush_pending(Emit& emit) {
        for (; pending_ > 0; --pending_) emit(std::optional<Vec3>{});
        // A run longer than max_gap breaks the bracket.
        last_.reset();
    }

    int max_gap_;
    int pending_ = 0;
    std::optional<Vec3> last_;
};

inline FusedTrack fill_gaps(const FusedTrack& track, int max_gap = 5) {
    GapFiller filler(max_gap);
    FusedTrack out = track;
    out.samples.clear();
    out.samples.reserve(track.samples.size());
    auto emit = [&](const std::optional<Vec3>& s) { out.samples.push_back(s); };
    for (const auto& s : track.samples) filler.push(s, emit);
    filler.finish(emit);
    return out;
}

}  // namespace troopnet
