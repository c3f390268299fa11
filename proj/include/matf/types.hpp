#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "matf/errors.hpp"

namespace matf {

using Vec2 = std::array<double, 2>;

enum class Unit { meters, pixels };

std::string to_string(Unit u);
Unit unit_from_string(const std::string& s);

struct TrackPoint {
    std::int64_t step = 0;
    Vec2 p{0.0, 0.0};
};

struct AgentTrack {
    std::string agent_id;
    std::vector<TrackPoint> timesteps;  // strictly increasing, consecutive steps
    Unit unit = Unit::meters;

    void validate() const;
};

struct SceneContext {
    int H = 0, W = 0, C = 0;
    std::vector<double> grid;  // HWC, values in [0,1]
    Vec2 origin{0.0, 0.0};
    double meters_per_cell = 1.0;
    std::vector<std::string> channel_semantics;

    double at(int r, int c, int ch) const {
        return grid[(static_cast<std::size_t>(r) * W + c) * C + ch];
    }
    double& at(int r, int c, int ch) {
        return grid[(static_cast<std::size_t>(r) * W + c) * C + ch];
    }
    void validate() const;
};

struct EpisodeAgent {
    std::string agent_id;
    std::vector<Vec2> past;    // T positions
    std::vector<Vec2> future;  // T' positions
    Vec2 anchor{0.0, 0.0};     // equals past.back() (in world coordinates)
};

struct Episode {
    SceneContext scene;
    std::vector<EpisodeAgent> agents;
    int T = 0, Tp = 0;
    double dt = 1.0;
    Unit unit = Unit::meters;
    bool anchor_centered = false;  // true after normalize_episode(anchor_centered)

    void validate() const;
};

enum class SourceKind { ethucy_text, synthetic, episode_file };
enum class Normalization { none, anchor_centered };

struct DatasetSpec {
    SourceKind source = SourceKind::synthetic;
    int T = 8, Tp = 12;
    double dt = 0.4;
    int stride = 1;
    Normalization normalization = Normalization::anchor_centered;

    void validate() const;
};

// cell = floor((p - origin) / meters_per_cell), first coordinate -> row.
// Throws PlacementError when the cell falls outside [0,H)x[0,W).
std::pair<int, int> world_to_grid(const Vec2& p, const SceneContext& scene);

// Same mapping at a coarser resolution (H/s x W/s cells of size s*meters_per_cell).
std::pair<int, int> world_to_grid_scaled(const Vec2& p, const SceneContext& scene, int down);

}  // namespace matf
