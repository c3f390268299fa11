#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matf/data.hpp"
#include "matf/metrics.hpp"
#include "matf/model.hpp"
#include "matf/training.hpp"

namespace matf::harness {

// Flat key=value config; '#' starts a comment. CLI flags override file values.
struct Config {
    std::map<std::string, std::string> values;

    static Config load(const std::string& path);
    void set(const std::string& k, const std::string& v);
    bool has(const std::string& k) const { return values.count(k) > 0; }
    std::string get(const std::string& k, const std::string& dflt) const;
    int get_int(const std::string& k, int dflt) const;
    double get_double(const std::string& k, double dflt) const;

    // rejects keys outside the documented set, naming the offender
    void validate_keys() const;

    model::ModelConfig model_config() const;
    training::TrainConfig train_config(std::uint64_t seed) const;
};

std::uint64_t fnv1a_file(const std::string& path);

std::string make_run_dir(const std::string& explicit_out, std::uint64_t seed);

// --- commands; each returns the run/output directory it wrote ---

struct PrepareOptions {
    std::string source = "synthetic";  // synthetic | ethucy | episodes
    std::string kind = "const_velocity";
    int n_episodes = 100;
    std::uint64_t seed = 0;
    std::string input_path;  // for ethucy / episodes
    std::string out_path;    // episode file to write
    int T = 6, Tp = 6;
    double dt = 0.4;
    int stride = 1;
    int grid = 32;
    double extent = 16.0;
    std::string normalization = "none";  // stored episodes stay in world coords by default
};
std::string cmd_prepare(const PrepareOptions& opt);

struct TrainOptions {
    std::string data_path;
    std::string variant = "multi_agent_scene";  // lstm|single_agent_scene|multi_agent|multi_agent_scene|gan
    std::string config_path;                    // optional
    std::vector<std::pair<std::string, std::string>> overrides;
    std::uint64_t seed = 0;
    std::string out_dir;       // empty -> timestamped run dir
    std::string init_from;     // deterministic checkpoint, required for gan
};
std::string cmd_train(const TrainOptions& opt);

struct EvalOptions {
    std::string checkpoint_path;
    std::string data_path;
    int samples = 0;  // 0 -> deterministic, N -> best-of-N stochastic
    std::uint64_t seed = 0;
    bool plot = false;
    int plot_episodes = 4;
    int plot_samples = 100;
    std::string variant;  // override; default from checkpoint meta
    std::string out_dir;
};
std::string cmd_eval(const EvalOptions& opt);

struct AblateOptions {
    std::string data_path;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::uint64_t seed = 0;
    int gan_samples = 20;
    double holdout_fraction = 0.2;
    std::string out_dir;
};
std::string cmd_ablate(const AblateOptions& opt);

struct SweepOptions {
    std::string data_path;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::vector<int> resolutions = {4, 8, 16, 32, 64};
    std::uint64_t seed = 0;
    double holdout_fraction = 0.2;
    std::string out_dir;
};
std::string cmd_sweep_resolution(const SweepOptions& opt);

struct BenchOptions {
    std::vector<int> agent_counts = {8, 16, 32, 64};
    int episodes_per_count = 8;
    int repeats = 3;
    std::uint64_t seed = 0;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
    std::string out_dir;
};
struct BenchResult {
    std::vector<int> agent_counts;
    std::vector<double> mean_ms;
    std::vector<long> fuse_per_episode;
    double loglog_slope = 0.0;
    std::string out_dir;
};
BenchResult cmd_bench_scaling(const BenchOptions& opt);

struct PlotOptions {
    std::string checkpoint_path;
    std::string data_path;
    int episodes = 4;
    int samples = 100;
    std::uint64_t seed = 0;
    std::string variant;
    std::string out_dir;
};
std::string cmd_plot(const PlotOptions& opt);

// nearest-neighbour raster rescale, preserving georeference
SceneContext resample_scene(const SceneContext& s, int new_hw);

// episodes with exactly n constant-velocity agents each (scaling benchmarks)
std::vector<Episode> bench_episodes(int n_agents, int n_episodes, std::uint64_t seed,
                                    const data::SynthOptions& opt);

}  // namespace matf::harness
