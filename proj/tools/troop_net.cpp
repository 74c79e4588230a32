// troop-net: simulate, analyze and export social structure from tag readings.
//
// Exit codes: 0 success, 2 configuration or validation failure, 3 no usable data.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "troopnet/config.hpp"
#include "troopnet/error.hpp"
#include "troopnet/format.hpp"
#include "troopnet/io.hpp"
#include "troopnet/pipeline.hpp"
#include "troopnet/simgen.hpp"

namespace fs = std::filesystem;
using namespace troopnet;

namespace {

struct Globals {
    std::string config;
    int threads = 1;
    std::string out;
};

int cmd_simulate(const Globals& g, const std::string& scenario_path, std::optional<std::uint64_t> seed) {
    if (!fs::exists(scenario_path)) throw ConfigError("scenario file not found: " + scenario_path);
    Scenario sc = parse_scenario(read_file(scenario_path));
    if (seed) sc.seed = *seed;
    if (g.out.empty()) throw ConfigError("--out is required");
    sc.validate();
    if (sc.displacement_rate > 0.0) sc = plant_hierarchy(sc, sc.displacement_rate);

    const fs::path dir = g.out;
    fs::create_directories(dir);
    Simulation sim(sc);
    std::vector<std::string> tags;
    for (const auto& [tag, animal] : collar_entries(sc)) tags.push_back(tag);

    AtomicFileWriter readings(dir / "readings.csv");
    std::uint64_t count = 0;
    sim.emit([&](AnimalId a, int tag, TimeMs t, const Vec3& p) {
        append_reading(readings.buffer(), tags[static_cast<std::size_t>((a - 1) * sc.tags_per_animal + tag)], t, p);
        readings.maybe_flush();
        ++count;
    });
    readings.commit();
    write_file_atomic(dir / "collars.csv", collars_csv(sc));
    write_file_atomic(dir / "truth.jsonl", truth_jsonl(sim.truth()));

    nlohmann::ordered_json m;
    m["command"] = "simulate";
    m["seed"] = sc.seed;
    m["animals"] = sc.n;
    m["ticks"] = sc.ticks();
    m["readings"] = count;
    m["grooming_episodes"] = sim.truth().grooming.size();
    m["displacement_episodes"] = sim.truth().displacements.size();
    m["dropped_displacements"] = sim.truth().dropped_displacements;
    std::cout << m.dump() << '\n';
    return 0;
}

AnalysisResult analyze_stream(const PipelineConfig& cfg, const CollarMap& collars, int threads, ParseReport& report) {
    std::ifstream in(cfg.readings, std::ios::binary);
    if (!in) throw ConfigError("file not found: " + cfg.readings);
    Analyzer analyzer(collars.n_animals(), cfg, threads);
    std::uint64_t ordinal = 0;
    for_each_reading(in, cfg.header, report, [&](const TagReading& r) {
        ++ordinal;
        auto animal = collars.lookup(r.tag_id);
        if (!animal) {
            if (cfg.unknown_tag_policy == UnknownTagPolicy::strict)
                throw ConfigError("unknown tag " + r.tag_id + " (reading " + std::to_string(ordinal) + ")");
            return;
        }
        analyzer.push(*animal, r.t, r.pos);
    });
    return analyzer.finish();
}

int cmd_analyze(const Globals& g, PipelineConfig cfg) {
    if (!g.out.empty()) cfg.out = g.out;
    if (cfg.readings.empty()) throw ConfigError("readings path is required (--readings or config 'readings')");
    if (cfg.collars.empty()) throw ConfigError("collars path is required (--collars or config 'collars')");
    if (cfg.out.empty()) throw ConfigError("--out is required");
    cfg.validate();
    const CollarMap collars = parse_collar_map(read_file(cfg.collars), cfg.expected_tags_per_animal);

    ParseReport report;
    AnalysisResult result;
    try {
        result = analyze_stream(cfg, collars, g.threads, report);
    } catch (const OutOfOrderError&) {
        // Not time ordered: fall back to an in-memory sort.
        auto parsed = parse_readings(read_file(cfg.readings), cfg.header);
        report = parsed.report;
        if (parsed.readings.empty()) throw NoDataError("no data");
        result = analyze_readings(parsed.readings, collars, cfg, g.threads);
    }
    write_analysis(cfg.out, result, cfg);
    auto summary = summary_json(result);
    summary["rejected_lines"] = report.rejected;
    std::cout << summary.dump() << '\n';
    return 0;
}

int cmd_export_graph(const Globals& g, const std::string& matrix, const std::string& kind, double min_weight) {
    if (g.out.empty()) throw ConfigError("--out is required");
    const auto m = parse_matrix_csv(read_file(matrix));
    std::string dot;
    if (kind == "affiliation") dot = affiliation_dot(m, min_weight);
    else if (kind == "hierarchy") dot = hierarchy_dot(m);
    else throw ConfigError("--kind must be affiliation or hierarchy");
    fs::path out = g.out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, dot);
    return 0;
}

int cmd_export_heatmap(const Globals& g, const std::string& heatmap) {
    if (g.out.empty()) throw ConfigError("--out is required");
    const auto rows = parse_heatmap_csv(read_file(heatmap));
    fs::path out = g.out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_file_atomic(out, heatmap_pgm(rows));
    return 0;
}

int cmd_report(const std::string& dir_arg) {
    const fs::path dir = dir_arg;
    nlohmann::json rank;
    try {
        rank = nlohmann::json::parse(read_file(dir / "rank.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("rank.json: ") + e.what());
    }
    const auto a = parse_matrix_csv(read_file(dir / "affiliation.csv"));
    const auto ta = parse_matrix_csv(read_file(dir / "away_counts.csv"));
    std::string s = "rank order (most dominant first):";
    for (const auto& id : rank.at("order")) s += " " + std::to_string(id.get<int>());
    s += rank.at("linear").get<bool>() ? "\nhierarchy is linear\n" : "\nhierarchy is not linear\n";
    for (const auto& t : rank.at("intransitive"))
        s += "  intransitive triad " + t.dump() + "\n";
    for (const auto& t : rank.at("tied")) s += "  tied pair " + t.dump() + "\n";
    s += "affiliation (s/day), strongest partner per animal:\n";
    for (AnimalId i = 1; i <= a.size(); ++i) {
        AnimalId best = 0;
        double w = 0.0;
        double degree = 0.0;
        for (AnimalId j = 1; j <= a.size(); ++j) {
            degree += a(i, j);
            if (a(i, j) > w) {
                w = a(i, j);
                best = j;
            }
        }
        s += "  " + std::to_string(i) + ": degree " + format_double(degree);
        if (best) s += ", partner " + std::to_string(best) + " (" + format_double(w) + ")";
        s += "\n";
    }
    s += "move-aways (mover row, target column):\n";
    for (AnimalId i = 1; i <= ta.size(); ++i) {
        s += " ";
        for (AnimalId j = 1; j <= ta.size(); ++j) s += " " + format_double(ta(i, j));
        s += "\n";
    }
    std::cout << s;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"troop-net: social structure from RTLS tag readings"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON config file (flat keys)");
    app.add_option("--threads", g.threads, "worker threads for pair detection")->check(CLI::Range(1, 1024));
    app.add_option("--out", g.out, "output directory (or file for export commands)");

    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset with ground truth")->fallthrough();
    std::string scenario;
    std::optional<std::uint64_t> seed;
    sim->add_option("--scenario", scenario, "scenario JSON")->required();
    sim->add_option("--seed", seed, "overrides the scenario seed");

    auto* ana = app.add_subcommand("analyze", "run the full pipeline")->fallthrough();
    std::string readings, collars, count_mode;
    bool header = false, chase_attack = false;
    std::optional<double> ana_min_weight;
    ana->add_option("--readings", readings, "readings CSV");
    ana->add_option("--collars", collars, "collar map CSV");
    ana->add_flag("--header", header, "skip one header line in the readings CSV");
    ana->add_option("--count-mode", count_mode, "events or samples")->check(CLI::IsMember({"events", "samples"}));
    ana->add_option("--min-weight", ana_min_weight, "hide affiliation edges below this weight in DOT output");
    ana->add_flag("--include-chase-attack", chase_attack, "count chases and attacks as move-aways");

    auto* graph = app.add_subcommand("export-graph", "matrix CSV to DOT")->fallthrough();
    std::string matrix, kind;
    double min_weight = 0.0;
    graph->add_option("--matrix", matrix, "matrix CSV")->required();
    graph->add_option("--kind", kind, "affiliation or hierarchy")->required();
    graph->add_option("--min-weight", min_weight, "hide affiliation edges below this weight");

    auto* heat = app.add_subcommand("export-heatmap", "heat-map CSV to PGM")->fallthrough();
    std::string heatmap;
    heat->add_option("--heatmap", heatmap, "heat-map CSV")->required();

    auto* rep = app.add_subcommand("report", "human-readable summary of an analysis directory")->fallthrough();
    std::string report_dir;
    rep->add_option("--in", report_dir, "analysis output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        PipelineConfig cfg;
        if (!g.config.empty()) cfg = parse_config(read_file(g.config));
        if (sim->parsed()) return cmd_simulate(g, scenario, seed);
        if (ana->parsed()) {
            if (!readings.empty()) cfg.readings = readings;
            if (!collars.empty()) cfg.collars = collars;
            if (header) cfg.header = true;
            if (!count_mode.empty()) cfg.count_mode = count_mode == "samples" ? CountMode::samples : CountMode::events;
            if (ana_min_weight) cfg.min_weight = *ana_min_weight;
            if (chase_attack) cfg.include_chase_attack_in_ta = true;
            return cmd_analyze(g, cfg);
        }
        if (graph->parsed()) return cmd_export_graph(g, matrix, kind, min_weight);
        if (heat->parsed()) return cmd_export_heatmap(g, heatmap);
        if (rep->parsed()) return cmd_report(report_dir);
    } catch (const NoDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
