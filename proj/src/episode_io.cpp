#include "matf/episode_io.hpp"

#include <fstream>

#include <json.hpp>

namespace matf::data {

using nlohmann::json;

namespace {

json scene_to_json(const SceneContext& s) {
    return json{{"h", s.H},
                {"w", s.W},
                {"c", s.C},
                {"origin", s.origin},
                {"meters_per_cell", s.meters_per_cell},
                {"channels", s.channel_semantics},
                {"grid", s.grid}};
}

SceneContext scene_from_json(const json& j) {
    SceneContext s;
    s.H = j.at("h");
    s.W = j.at("w");
    s.C = j.at("c");
    s.origin = j.at("origin");
    s.meters_per_cell = j.at("meters_per_cell");
    s.channel_semantics = j.at("channels").get<std::vector<std::string>>();
    s.grid = j.at("grid").get<std::vector<double>>();
    s.validate();
    return s;
}

}  // namespace

void write_episodes(const std::string& path, const std::vector<Episode>& episodes) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << json{{"format", "matf-episodes"}, {"version", kEpisodeFormatVersion}}.dump() << "\n";
    for (const auto& e : episodes) {
        json agents = json::array();
        for (const auto& a : e.agents)
            agents.push_back({{"id", a.agent_id},
                              {"past", a.past},
                              {"future", a.future},
                              {"anchor", a.anchor}});
        json rec{{"t", e.T},
                 {"tp", e.Tp},
                 {"dt", e.dt},
                 {"unit", to_string(e.unit)},
                 {"anchor_centered", e.anchor_centered},
                 {"scene", scene_to_json(e.scene)},
                 {"agents", agents}};
        out << rec.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

std::vector<Episode> read_episodes(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file");
    json header = json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "matf-episodes")
        throw ParseError(path + ": not a matf episode file");
    if (header.value("version", -1) != kEpisodeFormatVersion)
        throw ParseError(path + ": unsupported episode format version");

    std::vector<Episode> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded())
            throw ParseError(path + ":" + std::to_string(lineno) + ": bad JSON record");
        Episode e;
        e.T = rec.at("t");
        e.Tp = rec.at("tp");
        e.dt = rec.at("dt");
        e.unit = unit_from_string(rec.at("unit"));
        e.anchor_centered = rec.at("anchor_centered");
        e.scene = scene_from_json(rec.at("scene"));
        for (const auto& ja : rec.at("agents")) {
            EpisodeAgent a;
            a.agent_id = ja.at("id");
            a.past = ja.at("past").get<std::vector<Vec2>>();
            a.future = ja.at("future").get<std::vector<Vec2>>();
            a.anchor = ja.at("anchor");
            e.agents.push_back(std::move(a));
        }
        e.validate();
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace matf::data
