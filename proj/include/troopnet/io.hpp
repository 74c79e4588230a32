#pragma once

// File formats: matrix CSV, DOT graphs, heat-map CSV/PGM, event JSONL, rank
// report, scenario JSON and ground-truth JSONL.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "troopnet/config.hpp"
#include "troopnet/format.hpp"
#include "troopnet/pipeline.hpp"
#include "troopnet/simgen.hpp"
#include "troopnet/social.hpp"

namespace troopnet {

/// Streams into `path.tmp` and renames onto `path` on commit(). Dropping an
/// uncommitted writer removes the temp file.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::filesystem::path path) : path_(std::move(path)), tmp_(path_) {
        tmp_ += ".tmp";
        out_.open(tmp_, std::ios::binary | std::ios::trunc);
        if (!out_) throw ConfigError("cannot open " + tmp_.string() + " for writing");
        buffer_.reserve(kFlushAt + 256);
    }
    AtomicFileWriter(const AtomicFileWriter&) = delete;
    AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;
    ~AtomicFileWriter() {
        if (!committed_) {
            out_.close();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }

    std::string& buffer() noexcept { return buffer_; }
    void maybe_flush() {
        if (buffer_.size() >= kFlushAt) flush();
    }

    void commit() {
        flush();
        out_.close();
        if (!out_) throw ConfigError("write failed: " + tmp_.string());
        std::error_code ec;
        std::filesystem::rename(tmp_, path_, ec);
        if (ec) throw ConfigError("cannot rename into " + path_.string());
        committed_ = true;
    }

private:
    static constexpr std::size_t kFlushAt = 1 << 20;
    void flush() {
        out_.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
        buffer_.clear();
    }

    std::filesystem::path path_, tmp_;
    std::ofstream out_;
    std::string buffer_;
    bool committed_ = false;
};

// --- matrices ---------------------------------------------------------------

template <class T>
std::string matrix_csv(const Matrix<T>& m) {
    std::string s;
    const int n = m.size();
    for (AnimalId j = 1; j <= n; ++j) {
        if (j > 1) s += ',';
        append_int(s, j);
    }
    s += '\n';
    for (AnimalId i = 1; i <= n; ++i) {
        for (AnimalId j = 1; j <= n; ++j) {
            if (j > 1) s += ',';
            if constexpr (std::is_floating_point_v<T>) append_double(s, m(i, j));
            else append_int(s, static_cast<std::int64_t>(m(i, j)));
        }
        s += '\n';
    }
    return s;
}

/// Reads a matrix CSV: a header of N animal ids 1..N, then N rows of N values.
inline Matrix<double> parse_matrix_csv(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    bool header_seen = false;
    int n = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> values;
        while (true) {
            const auto comma = line.find(',');
            double v = 0.0;
            if (!detail::parse_number(detail::trim(line.substr(0, comma)), v))
                throw ConfigError("matrix CSV line " + std::to_string(line_no) + ": non-numeric value");
            values.push_back(v);
            if (comma == std::string_view::npos) break;
            line = line.substr(comma + 1);
        }
        if (!header_seen) {
            header_seen = true;
            n = static_cast<int>(values.size());
            for (int k = 0; k < n; ++k)
                if (values[static_cast<std::size_t>(k)] != k + 1)
                    throw ConfigError("matrix CSV header must list animal ids 1..N");
            continue;
        }
        if (values.size() != static_cast<std::size_t>(n))
            throw ConfigError("matrix CSV line " + std::to_string(line_no) + ": expected " + std::to_string(n) + " values");
        rows.push_back(std::move(values));
    }
    if (!header_seen) throw ConfigError("matrix CSV is empty");
    if (rows.size() != static_cast<std::size_t>(n)) throw ConfigError("matrix CSV is not square");
    Matrix<double> m(n, 0.0);
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = 1; j <= n; ++j) m(i, j) = rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    return m;
}

// --- graphs -------------------------------------------------------------------

/// Undirected graph with an edge i -- j for every A(i, j) > min_weight, i < j.
inline std::string affiliation_dot(const Matrix<double>& a, double min_weight = 0.0) {
    const int n = a.size();
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = 1; j <= n; ++j)
            if (a(i, j) != a(j, i))
                throw ConfigError("affiliation matrix is not symmetric at (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
    std::string s = "graph affiliation {\n";
    for (AnimalId i = 1; i <= n; ++i) {
        s += "  ";
        append_int(s, i);
        s += ";\n";
    }
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = i + 1; j <= n; ++j) {
            const double w = a(i, j);
            if (!(w > 0.0) || w < min_weight) continue;
            s += "  ";
            append_int(s, i);
            s += " -- ";
            append_int(s, j);
            s += " [weight=";
            append_double(s, w);
            s += "];\n";
        }
    s += "}\n";
    return s;
}

/// Directed graph with an edge i -> j iff H(i, j) = 1 (i dominates j).
inline std::string hierarchy_dot(const Matrix<double>& h) {
    const int n = h.size();
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = 1; j <= n; ++j) {
            const double v = h(i, j);
            if (v != 0.0 && v != 1.0)
                throw ConfigError("hierarchy matrix is not binary at (" + std::to_string(i) + "," + std::to_string(j) + ")");
            if (v == 1.0 && (i == j || h(j, i) == 1.0))
                throw ConfigError("hierarchy matrix has a self or mutual edge at (" + std::to_string(i) + "," +
                                  std::to_string(j) + ")");
        }
    std::string s = "digraph hierarchy {\n";
    for (AnimalId i = 1; i <= n; ++i) {
        s += "  ";
        append_int(s, i);
        s += ";\n";
    }
    for (AnimalId i = 1; i <= n; ++i)
        for (AnimalId j = 1; j <= n; ++j)
            if (h(i, j) == 1.0) {
                s += "  ";
                append_int(s, i);
                s += " -> ";
                append_int(s, j);
                s += ";\n";
            }
    s += "}\n";
    return s;
}

template <class T>
Matrix<double> to_double(const Matrix<T>& m) {
    Matrix<double> out(m.size(), 0.0);
    for (AnimalId i = 1; i <= m.size(); ++i)
        for (AnimalId j = 1; j <= m.size(); ++j) out(i, j) = static_cast<double>(m(i, j));
    return out;
}

// --- heat maps ------------------------------------------------------------------

/// gy rows of gx counts; row k holds y index k.
inline std::string heatmap_csv(const HeatMap& h) {
    std::string s;
    for (int y = 0; y < h.gy(); ++y) {
        for (int x = 0; x < h.gx(); ++x) {
            if (x > 0) s += ',';
            append_int(s, static_cast<std::int64_t>(h.at(x, y)));
        }
        s += '\n';
    }
    return s;
}

/// Counts grid from heatmap_csv output; rows = y.
inline std::vector<std::vector<std::uint64_t>> parse_heatmap_csv(std::string_view text) {
    std::vector<std::vector<std::uint64_t>> rows;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = detail::trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::uint64_t> row;
        while (true) {
            const auto comma = line.find(',');
            std::int64_t v = 0;
            if (!detail::parse_number(detail::trim(line.substr(0, comma)), v) || v < 0)
                throw ConfigError("heat-map CSV line " + std::to_string(line_no) + ": expected a non-negative integer");
            row.push_back(static_cast<std::uint64_t>(v));
            if (comma == std::string_view::npos) break;
            line = line.substr(comma + 1);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError("heat-map CSV line " + std::to_string(line_no) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("heat-map CSV is empty");
    return rows;
}

/// Plain PGM (P2); maxval is the largest count, or 1 for an all-zero grid.
inline std::string heatmap_pgm(const std::vector<std::vector<std::uint64_t>>& rows) {
    std::uint64_t maxval = 0;
    for (const auto& r : rows)
        for (auto v : r) maxval = std::max(maxval, v);
    if (maxval == 0) maxval = 1;
    std::string s = "P2\n";
    append_int(s, static_cast<std::int64_t>(rows.empty() ? 0 : rows.front().size()));
    s += ' ';
    append_int(s, static_cast<std::int64_t>(rows.size()));
    s += '\n';
    append_int(s, static_cast<std::int64_t>(maxval));
    s += '\n';
    for (const auto& r : rows) {
        for (std::size_t x = 0; x < r.size(); ++x) {
            if (x > 0) s += ' ';
            append_int(s, static_cast<std::int64_t>(r[x]));
        }
        s += '\n';
    }
    return s;
}

inline std::string heatmap_pgm(const HeatMap& h) { return heatmap_pgm(parse_heatmap_csv(heatmap_csv(h))); }

// --- analysis outputs ---------------------------------------------------------

// The output directory is left out so a rerun into another directory is byte-identical.
inline nlohmann::ordered_json recorded_params(const PipelineConfig& cfg) {
    auto j = to_json(cfg);
    j.erase("out");
    return j;
}

inline std::string events_jsonl(const AnalysisResult& r, const PipelineConfig& cfg) {
    std::string s;
    nlohmann::ordered_json head;
    head["record"] = "header";
    head["n_animals"] = r.n_animals;
    head["first_t_ms"] = r.first_t;
    head["last_t_ms"] = r.last_t;
    head["params"] = recorded_params(cfg);
    s += head.dump();
    s += '\n';
    for (const auto& e : r.grooming) {
        s += R"({"record":"grooming","a":)";
        append_int(s, e.a);
        s += R"(,"b":)";
        append_int(s, e.b);
        s += R"(,"t_start_ms":)";
        append_int(s, e.t_start);
        s += R"(,"t_end_ms":)";
        append_int(s, e.t_end);
        s += R"(,"duration_s":)";
        append_double(s, e.duration_s());
        s += "}\n";
    }
    for (const auto& e : r.move_away) {
        s += R"({"record":"move_away","mover":)";
        append_int(s, e.mover);
        s += R"(,"target":)";
        append_int(s, e.target);
        s += R"(,"t_start_ms":)";
        append_int(s, e.t_start);
        s += R"(,"t_end_ms":)";
        append_int(s, e.t_end);
        s += R"(,"mean_dv":)";
        append_double(s, e.mean_dv);
        s += R"(,"mean_projection":)";
        append_double(s, e.mean_projection);
        s += R"(,"kind":")";
        s += to_string(e.kind);
        s += "\"}\n";
    }
    for (const auto& e : r.chases) {
        s += R"({"record":"chase","chaser":)";
        append_int(s, e.chaser);
        s += R"(,"chasee":)";
        append_int(s, e.chasee);
        s += R"(,"t_start_ms":)";
        append_int(s, e.t_start);
        s += R"(,"t_end_ms":)";
        append_int(s, e.t_end);
        s += "}\n";
    }
    for (const auto& e : r.attacks) {
        s += R"({"record":"attack","attacker":)";
        append_int(s, e.attacker);
        s += R"(,"target":)";
        append_int(s, e.target);
        s += R"(,"t_onset_ms":)";
        append_int(s, e.t_onset);
        s += R"(,"peak_speed":)";
        append_double(s, e.peak_speed);
        s += "}\n";
    }
    return s;
}

inline nlohmann::ordered_json rank_json(const RankOrder& r) {
    nlohmann::ordered_json j;
    j["order"] = r.order;
    j["linear"] = r.is_linear();
    j["out_degree"] = r.out_degree;
    j["net_retreats"] = r.net_retreats;
    auto triads = nlohmann::ordered_json::array();
    for (const auto& t : r.intransitive) triads.push_back({t[0], t[1], t[2]});
    j["intransitive"] = triads;
    auto tied = nlohmann::ordered_json::array();
    for (const auto& [a, b] : r.tied) tied.push_back({a, b});
    j["tied"] = tied;
    return j;
}

/// One row per ordered pair: mover,target,undefined,c0..c{bins-1}.
inline std::string histograms_csv(const AnalysisResult& r) {
    std::string s = "mover,target,undefined";
    const int bins = r.histograms.empty() ? 0 : r.histograms.front().bins();
    for (int k = 0; k < bins; ++k) {
        s += ",[";
        append_double(s, r.histograms.front().edge(k));
        s += ';';
        append_double(s, r.histograms.front().edge(k + 1));
        s += k + 1 == bins ? "]" : ")";
    }
    s += '\n';
    for (const auto& h : r.histograms) {
        append_int(s, h.mover());
        s += ',';
        append_int(s, h.target());
        s += ',';
        append_int(s, static_cast<std::int64_t>(h.undefined()));
        for (auto c : h.counts()) {
            s += ',';
            append_int(s, static_cast<std::int64_t>(c));
        }
        s += '\n';
    }
    return s;
}

inline nlohmann::ordered_json summary_json(const AnalysisResult& r) {
    nlohmann::ordered_json j;
    j["n_animals"] = r.n_animals;
    j["span_days"] = r.span_days;
    j["readings"] = r.readings;
    j["ticks"] = r.ticks;
    j["events"] = {{"grooming", r.grooming.size()},
                   {"move_away", r.move_away.size()},
                   {"chase", r.chases.size()},
                   {"attack", r.attacks.size()}};
    j["rank_order"] = r.rank.order;
    j["linear"] = r.rank.is_linear();
    return j;
}

/// Writes every analysis artifact into `dir` (created if needed).
inline void write_analysis(const std::filesystem::path& dir, const AnalysisResult& r, const PipelineConfig& cfg) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "events.jsonl", events_jsonl(r, cfg));
    write_file_atomic(dir / "affiliation.csv", matrix_csv(r.affiliation.values));
    write_file_atomic(dir / "away_counts.csv", matrix_csv(r.away_counts));
    write_file_atomic(dir / "hierarchy.csv", matrix_csv(r.hierarchy));
    write_file_atomic(dir / "overlap.csv", matrix_csv(r.overlap));
    write_file_atomic(dir / "rank.json", rank_json(r.rank).dump(2) + "\n");
    write_file_atomic(dir / "dv_histograms.csv", histograms_csv(r));
    write_file_atomic(dir / "affiliation.dot", affiliation_dot(r.affiliation.values, cfg.min_weight));
    write_file_atomic(dir / "hierarchy.dot", hierarchy_dot(to_double(r.hierarchy)));
    for (const auto& h : r.heatmaps) {
        const std::string stem = "heatmap_" + std::to_string(h.animal());
        write_file_atomic(dir / (stem + ".csv"), heatmap_csv(h));
        write_file_atomic(dir / (stem + ".pgm"), heatmap_pgm(h));
    }
    write_file_atomic(dir / "config.resolved", recorded_params(cfg).dump(2) + "\n");
}

// --- scenarios and ground truth -------------------------------------------------

namespace detail {

template <class T>
void scenario_field(const nlohmann::json& v, const std::string& key, T& out) {
    try {
        out = v.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("scenario field '" + key + "' has the wrong type");
    }
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    Scenario sc;
    using detail::scenario_field;
    for (const auto& [key, v] : j.items()) {
        if (key == "n") scenario_field(v, key, sc.n);
        else if (key == "duration_s") scenario_field(v, key, sc.duration_s);
        else if (key == "dt_ms") scenario_field(v, key, sc.dt_ms);
        else if (key == "start_ms") scenario_field(v, key, sc.start_ms);
        else if (key == "planted_order") scenario_field(v, key, sc.planted_order);
        else if (key == "displacement_rate") scenario_field(v, key, sc.displacement_rate);
        else if (key == "reverse_fraction") scenario_field(v, key, sc.reverse_fraction);
        else if (key == "tags_per_animal") scenario_field(v, key, sc.tags_per_animal);
        else if (key == "noise_sigma") scenario_field(v, key, sc.noise_sigma);
        else if (key == "seed") scenario_field(v, key, sc.seed);
        else if (key == "wander_rate") scenario_field(v, key, sc.wander_rate);
        else if (key == "walk_speed") scenario_field(v, key, sc.walk_speed);
        else if (key == "approach_speed") scenario_field(v, key, sc.approach_speed);
        else if (key == "depart_speed") scenario_field(v, key, sc.depart_speed);
        else if (key == "depart_duration_s") scenario_field(v, key, sc.depart_duration_s);
        else if (key == "rest_height") scenario_field(v, key, sc.rest_height);
        else if (key == "dropout") scenario_field(v, key, sc.dropout);
        else if (key == "enclosure") {
            if (!v.is_object()) throw ConfigError("scenario field 'enclosure' must be an object");
            for (const auto& [k, e] : v.items()) {
                if (k == "x") scenario_field(e, "enclosure.x", sc.enclosure.extent_x);
                else if (k == "y") scenario_field(e, "enclosure.y", sc.enclosure.extent_y);
                else if (k == "z") scenario_field(e, "enclosure.z", sc.enclosure.extent_z);
                else throw ConfigError("unknown scenario key 'enclosure." + k + "'");
            }
        } else if (key == "grooming") {
            if (!v.is_array()) throw ConfigError("scenario field 'grooming' must be an array");
            for (const auto& g : v) {
                GroomingScript s;
                if (!g.is_object()) throw ConfigError("scenario field 'grooming' entries must be objects");
                for (const auto& [k, e] : g.items()) {
                    if (k == "a") scenario_field(e, "grooming.a", s.a);
                    else if (k == "b") scenario_field(e, "grooming.b", s.b);
                    else if (k == "t_start_s") scenario_field(e, "grooming.t_start_s", s.t_start_s);
                    else if (k == "duration_s") scenario_field(e, "grooming.duration_s", s.duration_s);
                    else if (k == "distance_m") scenario_field(e, "grooming.distance_m", s.distance_m);
                    else throw ConfigError("unknown scenario key 'grooming." + k + "'");
                }
                sc.grooming.push_back(s);
            }
        } else if (key == "displacements") {
            if (!v.is_array()) throw ConfigError("scenario field 'displacements' must be an array");
            for (const auto& d : v) {
                DisplacementScript s;
                if (!d.is_object()) throw ConfigError("scenario field 'displacements' entries must be objects");
                for (const auto& [k, e] : d.items()) {
                    if (k == "mover") scenario_field(e, "displacements.mover", s.mover);
                    else if (k == "target") scenario_field(e, "displacements.target", s.target);
                    else if (k == "t_start_s") scenario_field(e, "displacements.t_start_s", s.t_start_s);
                    else if (k == "reverse") scenario_field(e, "displacements.reverse", s.reverse);
                    else throw ConfigError("unknown scenario key 'displacements." + k + "'");
                }
                sc.displacements.push_back(s);
            }
        } else {
            throw ConfigError("unknown scenario key '" + key + "'");
        }
    }
    return sc;
}

inline Scenario parse_scenario(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline std::string collars_csv(const Scenario& sc) {
    std::string s = "tag_id,animal_id\n";
    for (const auto& [tag, animal] : collar_entries(sc)) {
        s += tag;
        s += ',';
        append_int(s, animal);
        s += '\n';
    }
    return s;
}

inline std::string truth_jsonl(const GroundTruth& t) {
    std::string s;
    for (const auto& g : t.grooming) {
        nlohmann::ordered_json j;
        j["record"] = "grooming";
        j["a"] = g.a;
        j["b"] = g.b;
        j["t_start_ms"] = g.t_start;
        j["t_end_ms"] = g.t_end;
        j["distance_m"] = g.distance_m;
        s += j.dump() + "\n";
    }
    for (const auto& d : t.displacements) {
        nlohmann::ordered_json j;
        j["record"] = "displacement";
        j["mover"] = d.mover;
        j["target"] = d.target;
        j["t_start_ms"] = d.t_start;
        j["t_end_ms"] = d.t_end;
        j["reverse"] = d.reverse;
        s += j.dump() + "\n";
    }
    return s;
}

inline void append_reading(std::string& s, std::string_view tag, TimeMs t, const Vec3& p) {
    s += tag;
    s += ',';
    append_int(s, t);
    s += ',';
    append_double(s, p.x);
    s += ',';
    append_double(s, p.y);
    s += ',';
    append_double(s, p.z);
    s += '\n';
}

}  // namespace troopnet
