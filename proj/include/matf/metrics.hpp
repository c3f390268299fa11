#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "matf/model.hpp"
#include "matf/types.hpp"

namespace matf::metrics {

// One trajectory = T' world (or anchor-relative, as long as preds and gts
// agree) positions. Outer index = agent.
using Traj = std::vector<Vec2>;

// sqrt(mean over agents of squared Euclidean error at step t); t is 1-based.
double rmse_at(const std::vector<Traj>& preds, const std::vector<Traj>& gts, int t);
// mean over agents of Euclidean error at step t.
double mae_at(const std::vector<Traj>& preds, const std::vector<Traj>& gts, int t);
// (ADE, FDE) per the displacement-error definitions.
std::pair<double, double> ade_fde(const std::vector<Traj>& preds, const std::vector<Traj>& gts);
// argmin over samples of summed squared error; ties -> lowest index.
std::pair<std::size_t, double> best_of_n(const std::vector<Traj>& samples, const Traj& gt);

struct Protocol {
    bool stochastic = false;
    int n_samples = 1;       // N for best-of-N
    bool force_zero_noise = false;  // stochastic path with z = 0 (testing)
    std::uint64_t noise_seed = 0;
};

struct EvalReport {
    std::vector<double> rmse;  // length T', index = step-1
    std::vector<double> mae;
    double ade = 0.0, fde = 0.0;
    long n_agents = 0;
    int Tp = 0;
    double dt = 0.0;
    int n_samples = 1;
    std::string unit;
    std::string variant;
};

EvalReport evaluate(const model::MatfNet& net, model::VariantKind variant,
                    const std::vector<Episode>& dataset, const Protocol& protocol);

void write_report_csv(const std::string& path, const EvalReport& r);
std::string report_summary(const EvalReport& r);

}  // namespace matf::metrics
