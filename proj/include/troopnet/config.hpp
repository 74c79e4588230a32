#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "troopnet/error.hpp"
#include "troopnet/events.hpp"
#include "troopnet/ingest.hpp"

namespace troopnet {

enum class CountMode { events, samples };

/// Every tunable of the analysis pipeline. JSON keys are the field names.
struct PipelineConfig {
    // ingest
    TimeMs dt_ms = 1000;
    double outlier_k = 3.0;
    int max_gap = 5;
    int expected_tags_per_animal = 4;
    UnknownTagPolicy unknown_tag_policy = UnknownTagPolicy::skip;
    bool header = false;
    // kinematics
    double v_stat = 0.10;
    double w_stat = 0.0;
    double v_min = 0.2;
    // grooming
    double d_groom = 0.5;
    double min_groom_duration = 60.0;
    double gap_merge = 2.0;
    // move-away
    double dv_lo = -1.0;
    double dv_hi = -0.7;
    double min_event = 2.0;
    std::optional<double> proximity_gate;
    double s_pre = 5.0;
    CountMode count_mode = CountMode::events;
    bool include_chase_attack_in_ta = false;
    // chase / attack
    double v_run = 1.0;
    double r_chase = 1.5;
    double chase_dv_align = 0.7;
    double min_chase_duration = 2.0;
    double v_attack = 1.0;
    double attack_tau = 2.0;
    double attack_dv_align = 0.7;
    // aggregation
    int grid_x = 30;
    int grid_y = 30;
    bool heatmap_stationary_only = true;
    int bins = 40;
    double enclosure_x = 3.0;
    double enclosure_y = 3.0;
    double enclosure_z = 3.0;
    double min_weight = 0.0;  // affiliation DOT display filter
    // paths
    std::string readings;
    std::string collars;
    std::string out;

    GroomingParams grooming() const { return {d_groom, min_groom_duration, gap_merge}; }
    MoveAwayParams move_away() const { return {dv_lo, dv_hi, min_event, proximity_gate, s_pre}; }
    ChaseParams chase() const { return {v_run, r_chase, chase_dv_align, min_chase_duration}; }
    AttackParams attack() const { return {v_attack, attack_tau, attack_dv_align, v_stat}; }
    EnclosureSpec enclosure() const { return {enclosure_x, enclosure_y, enclosure_z}; }

    void validate() const {
        validate_fusion_params(dt_ms, outlier_k);
        if (max_gap < 0) throw ConfigError("max_gap must be >= 0");
        if (expected_tags_per_animal < 1) throw ConfigError("expected_tags_per_animal must be >= 1");
        if (!(v_stat > 0.0)) throw ConfigError("v_stat must be > 0");
        if (!(w_stat >= 0.0)) throw ConfigError("w_stat must be >= 0");
        if (!(v_min > 0.0)) throw ConfigError("v_min must be > 0");
        grooming().validate();
        move_away().validate();
        chase().validate();
        attack().validate();
        enclosure().validate();
        if (grid_x < 1 || grid_y < 1) throw ConfigError("grid_x and grid_y must be >= 1");
        if (bins < 1) throw ConfigError("bins must be >= 1");
        if (!(min_weight >= 0.0)) throw ConfigError("min_weight must be >= 0");
    }
};

namespace detail {

template <class T>
void read_field(const nlohmann::json& j, const std::string& key, T& out) {
    try {
        out = j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config field '" + key + "' has the wrong type");
    }
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const PipelineConfig& c) {
    nlohmann::ordered_json j;
    j["dt_ms"] = c.dt_ms;
    j["outlier_k"] = c.outlier_k;
    j["max_gap"] = c.max_gap;
    j["expected_tags_per_animal"] = c.expected_tags_per_animal;
    j["unknown_tag_policy"] = c.unknown_tag_policy == UnknownTagPolicy::strict ? "strict" : "skip";
    j["header"] = c.header;
    j["v_stat"] = c.v_stat;
    j["w_stat"] = c.w_stat;
    j["v_min"] = c.v_min;
    j["d_groom"] = c.d_groom;
    j["min_groom_duration"] = c.min_groom_duration;
    j["gap_merge"] = c.gap_merge;
    j["dv_lo"] = c.dv_lo;
    j["dv_hi"] = c.dv_hi;
    j["min_event"] = c.min_event;
    j["proximity_gate"] = c.proximity_gate ? nlohmann::ordered_json(*c.proximity_gate) : nlohmann::ordered_json();
    j["s_pre"] = c.s_pre;
    j["count_mode"] = c.count_mode == CountMode::samples ? "samples" : "events";
    j["include_chase_attack_in_ta"] = c.include_chase_attack_in_ta;
    j["v_run"] = c.v_run;
    j["r_chase"] = c.r_chase;
    j["chase_dv_align"] = c.chase_dv_align;
    j["min_chase_duration"] = c.min_chase_duration;
    j["v_attack"] = c.v_attack;
    j["attack_tau"] = c.attack_tau;
    j["attack_dv_align"] = c.attack_dv_align;
    j["grid_x"] = c.grid_x;
    j["grid_y"] = c.grid_y;
    j["heatmap_stationary_only"] = c.heatmap_stationary_only;
    j["bins"] = c.bins;
    j["enclosure_x"] = c.enclosure_x;
    j["enclosure_y"] = c.enclosure_y;
    j["enclosure_z"] = c.enclosure_z;
    j["min_weight"] = c.min_weight;
    j["readings"] = c.readings;
    j["collars"] = c.collars;
    j["out"] = c.out;
    return j;
}

/// Overlays the keys present in `j` onto `base`. Unknown keys are errors.
inline PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig c = {}) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        using detail::read_field;
        if (key == "dt_ms") read_field(v, key, c.dt_ms);
        else if (key == "outlier_k") read_field(v, key, c.outlier_k);
        else if (key == "max_gap") read_field(v, key, c.max_gap);
        else if (key == "expected_tags_per_animal") read_field(v, key, c.expected_tags_per_animal);
        else if (key == "unknown_tag_policy") {
            std::string s;
            read_field(v, key, s);
            if (s == "skip") c.unknown_tag_policy = UnknownTagPolicy::skip;
            else if (s == "strict") c.unknown_tag_policy = UnknownTagPolicy::strict;
            else throw ConfigError("config field 'unknown_tag_policy' must be skip or strict");
        }
        else if (key == "header") read_field(v, key, c.header);
        else if (key == "v_stat") read_field(v, key, c.v_stat);
        else if (key == "w_stat") read_field(v, key, c.w_stat);
        else if (key == "v_min") read_field(v, key, c.v_min);
        else if (key == "d_groom") read_field(v, key, c.d_groom);
        else if (key == "min_groom_duration") read_field(v, key, c.min_groom_duration);
        else if (key == "gap_merge") read_field(v, key, c.gap_merge);
        else if (key == "dv_lo") read_field(v, key, c.dv_lo);
        else if (key == "dv_hi") read_field(v, key, c.dv_hi);
        else if (key == "min_event") read_field(v, key, c.min_event);
        else if (key == "proximity_gate") {
            if (v.is_null()) c.proximity_gate.reset();
            else {
                double g = 0.0;
                read_field(v, key, g);
                c.proximity_gate = g;
            }
        }
        else if (key == "s_pre") read_field(v, key, c.s_pre);
        else if (key == "count_mode") {
            std::string s;
            read_field(v, key, s);
            if (s == "events") c.count_mode = CountMode::events;
            else if (s == "samples") c.count_mode = CountMode::samples;
            else throw ConfigError("config field 'count_mode' must be events or samples");
        }
        else if (key == "include_chase_attack_in_ta") read_field(v, key, c.include_chase_attack_in_ta);
        else if (key == "v_run") read_field(v, key, c.v_run);
        else if (key == "r_chase") read_field(v, key, c.r_chase);
        else if (key == "chase_dv_align") read_field(v, key, c.chase_dv_align);
        else if (key == "min_chase_duration") read_field(v, key, c.min_chase_duration);
        else if (key == "v_attack") read_field(v, key, c.v_attack);
        else if (key == "attack_tau") read_field(v, key, c.attack_tau);
        else if (key == "attack_dv_align") read_field(v, key, c.attack_dv_align);
        else if (key == "grid_x") read_field(v, key, c.grid_x);
        else if (key == "grid_y") read_field(v, key, c.grid_y);
        else if (key == "heatmap_stationary_only") read_field(v, key, c.heatmap_stationary_only);
        else if (key == "bins") read_field(v, key, c.bins);
        else if (key == "enclosure_x") read_field(v, key, c.enclosure_x);
        else if (key == "enclosure_y") read_field(v, key, c.enclosure_y);
        else if (key == "enclosure_z") read_field(v, key, c.enclosure_z);
        else if (key == "min_weight") read_field(v, key, c.min_weight);
        else if (key == "readings") read_field(v, key, c.readings);
        else if (key == "collars") read_field(v, key, c.collars);
        else if (key == "out") read_field(v, key, c.out);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

inline PipelineConfig parse_config(std::string_view text, PipelineConfig base = {}) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j, std::move(base));
}

}  // namespace troopnet
