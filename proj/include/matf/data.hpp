#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matf/types.hpp"

namespace matf::data {

// Whitespace-separated records: frame_id agent_id x y. Steps are frame_id
// divided by the constant frame stride (gcd of observed frame deltas).
std::vector<AgentTrack> load_ethucy_text(const std::string& path, Unit unit = Unit::meters);

// Sliding windows of length T+T' at the given stride; an episode keeps the
// agents observed over every step of its window. Agents whose anchor falls
// outside the scene are dropped with a warning. Windows with no agents left
// are dropped.
std::vector<Episode> segment_episodes(const std::vector<AgentTrack>& tracks,
                                      const SceneContext& scene, const DatasetSpec& spec);

Episode normalize_episode(const Episode& e, Normalization mode);
Episode denormalize_episode(const Episode& e);

enum class SynthKind { const_velocity, curved_lane, avoidance_pair, bimodal_exit, obstacle_field };

SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind k);

struct OracleInfo {
    SynthKind kind;
    // Closed-form ground-truth future for one agent of one episode. For
    // bimodal_exit, mode 0 is "straight" and mode 1 is "exit"; other kinds
    // have a single mode.
    int n_modes = 1;
    std::vector<Vec2> predict(const Episode& e, int agent_idx, int mode = 0) const;
};

struct SynthOptions {
    int grid = 32;          // scene raster H = W
    double extent_m = 16.0; // scene covers extent_m x extent_m
    int T = 6, Tp = 6;
    double dt = 0.4;
};

std::pair<std::vector<Episode>, OracleInfo> synth_scenarios(SynthKind kind, int n_episodes,
                                                            std::uint64_t seed,
                                                            const SynthOptions& opt = {});

// Documented seed-splitting scheme: child = splitmix64(master ^ tag).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace matf::data
