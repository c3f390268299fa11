#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "matf/autodiff.hpp"
#include "matf/types.hpp"

namespace matf::model {

enum class VariantKind { lstm_only, single_agent_scene, multi_agent, multi_agent_scene };

VariantKind variant_from_string(const std::string& s);
std::string to_string(VariantKind v);

struct ModelConfig {
    int T = 6, Tp = 6;
    double dt = 0.4;
    int d_agent = 16;    // agent state vector width; also C_fused (residual add)
    int c_scene = 8;     // scene feature channels
    int c_in = 3;        // raw scene channels
    int grid = 32;       // fused map H' = W'
    int unet_depth = 2;  // down/up levels
    int unet_width = 16;
    int d_noise = 8;
    int hidden = 32;      // LSTM hidden width
    int scene_down = 1;   // s: scene raster is (grid*s) x (grid*s)

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Named parameter tensors with persistent gradients.
struct ParamStore {
    std::map<std::string, ad::Var> params;

    ad::Var add(const std::string& name, Tensor init);
    const ad::Var& at(const std::string& name) const;
    void zero_grad();
    std::size_t total_size() const;
};

ad::Var lstm_step(const ad::Var& w_ih, const ad::Var& w_hh, const ad::Var& b,
                  const ad::Var& x, ad::Var& h, ad::Var& c);

// The MATF network (generator side; deterministic when z = 0).
class MatfNet {
public:
    MatfNet(ModelConfig cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // past must hold exactly T anchor-relative positions
    ad::Var encode_agent(const std::vector<Vec2>& past_rel) const;
    // scene raster must be (grid*s)^2; returns [grid, grid, c_scene]
    ad::Var encode_scene(const SceneContext& scene) const;
    // agent block (element-wise max on collisions) ++ scene channels
    ad::Var build_mat(const std::vector<ad::Var>& vectors,
                      const std::vector<std::pair<int, int>>& cells,
                      const ad::Var& scene_feat) const;
    // U-Net over the MAT; spatial dims preserved
    ad::Var fuse(const ad::Var& mat) const;
    // z has d_noise entries; returns [Tp, 2] anchor-relative positions
    ad::Var decode_agent(const ad::Var& final_vec, const Tensor& z) const;

    struct Forward {
        std::vector<ad::Var> trajectories;          // per agent, [Tp,2], anchor-relative
        std::vector<std::pair<int, int>> cells;      // fused-map placement per agent
    };
    // z_per_agent empty means z = 0 for every agent (deterministic mode)
    Forward forward(const Episode& e, VariantKind variant,
                    const std::vector<Tensor>& z_per_agent = {}) const;

    long fuse_invocations() const { return fuse_count_; }
    void reset_fuse_count() { fuse_count_ = 0; }

    // fused-map placement cell of a world position
    std::pair<int, int> placement_cell(const Vec2& p, const SceneContext& scene) const;

private:
    ModelConfig cfg_;
    ParamStore params_;
    mutable long fuse_count_ = 0;
};

// Classifier sharing the MATF encoding trunk; scores each agent's future.
class Discriminator {
public:
    Discriminator(ModelConfig cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    // futures_rel: one [Tp,2] anchor-relative trajectory per agent (Var so G
    // gradients can flow through). Scores are clamped to (1e-7, 1-1e-7).
    std::vector<ad::Var> score(const Episode& e,
                               const std::vector<ad::Var>& futures_rel) const;

    // copy trunk parameters from a trained deterministic net where shapes match
    void init_from(const MatfNet& net);

private:
    ModelConfig cfg_;
    ParamStore params_;
};

inline constexpr double kScoreClamp = 1e-7;

// --- checkpoints ---
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    std::string kind;  // "deterministic" | "generator" | "discriminator"
    ModelConfig config;
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> meta;  // optimizer settings, seeds, ...
};

void save_checkpoint(const std::string& path, const std::string& kind,
                     const ModelConfig& cfg, const ParamStore& params,
                     const std::map<std::string, std::string>& meta = {});
Checkpoint load_checkpoint(const std::string& path);

// loads tensors into an existing store; throws ConfigError on any mismatch
void restore_params(ParamStore& store, const Checkpoint& ck);

}  // namespace matf::model
