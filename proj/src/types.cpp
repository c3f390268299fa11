#include "matf/types.hpp"

#include <cmath>

namespace matf {

std::string to_string(Unit u) { return u == Unit::meters ? "meters" : "pixels"; }

Unit unit_from_string(const std::string& s) {
    if (s == "meters") return Unit::meters;
    if (s == "pixels") return Unit::pixels;
    throw ConfigError("unknown unit: " + s);
}

void AgentTrack::validate() const {
    for (std::size_t i = 0; i < timesteps.size(); ++i) {
        const auto& tp = timesteps[i];
        if (!std::isfinite(tp.p[0]) || !std::isfinite(tp.p[1]))
            throw DataError("track " + agent_id + ": non-finite position");
        if (i > 0 && tp.step != timesteps[i - 1].step + 1)
            throw DataError("track " + agent_id + ": steps not consecutive");
    }
}

void SceneContext::validate() const {
    if (H < 1 || W < 1 || C < 1) throw DataError("scene: empty dims");
    if (!(meters_per_cell > 0.0)) throw DataError("scene: meters_per_cell must be > 0");
    if (grid.size() != static_cast<std::size_t>(H) * W * C)
        throw DataError("scene: grid size mismatch");
    for (double v : grid)
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            throw DataError("scene: grid value outside [0,1]");
}

void Episode::validate() const {
    scene.validate();
    if (T < 2 || Tp < 1 || !(dt > 0.0)) throw DataError("episode: bad T/T'/dt");
    for (const auto& a : agents) {
        if (a.past.size() != static_cast<std::size_t>(T) ||
            a.future.size() != static_cast<std::size_t>(Tp))
            throw DataError("episode: agent " + a.agent_id + " wrong segment lengths");
        const Vec2 expect_last = anchor_centered ? Vec2{0.0, 0.0} : a.anchor;
        if (a.past.back()[0] != expect_last[0] || a.past.back()[1] != expect_last[1])
            throw DataError("episode: agent " + a.agent_id + " anchor != last past position");
        for (const auto& seg : {a.past, a.future})
            for (const auto& p : seg)
                if (!std::isfinite(p[0]) || !std::isfinite(p[1]))
                    throw DataError("episode: non-finite position");
        world_to_grid(a.anchor, scene);  // throws if anchor is out of bounds
    }
}

void DatasetSpec::validate() const {
    if (T < 2) throw ConfigError("dataset spec: T must be >= 2");
    if (Tp < 1) throw ConfigError("dataset spec: T' must be >= 1");
    if (stride < 1) throw ConfigError("dataset spec: stride must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("dataset spec: dt must be > 0");
}

std::pair<int, int> world_to_grid(const Vec2& p, const SceneContext& scene) {
    return world_to_grid_scaled(p, scene, 1);
}

std::pair<int, int> world_to_grid_scaled(const Vec2& p, const SceneContext& scene, int down) {
    const double cell = scene.meters_per_cell * down;
    const int r = static_cast<int>(std::floor((p[0] - scene.origin[0]) / cell));
    const int c = static_cast<int>(std::floor((p[1] - scene.origin[1]) / cell));
    const int H = scene.H / down, W = scene.W / down;
    if (r < 0 || r >= H || c < 0 || c >= W)
        throw PlacementError("world_to_grid: cell (" + std::to_string(r) + "," +
                             std::to_string(c) + ") outside " + std::to_string(H) + "x" +
                             std::to_string(W) + " grid");
    return {r, c};
}

}  // namespace matf
