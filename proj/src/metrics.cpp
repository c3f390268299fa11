#include "matf/metrics.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "matf/data.hpp"
#include "matf/training.hpp"

namespace matf::metrics {

namespace {

void check_pairs(const std::vector<Traj>& preds, const std::vector<Traj>& gts) {
    if (preds.size() != gts.size() || preds.empty())
        throw ShapeError("metrics: need equal non-empty pred/gt agent counts");
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i].size() != gts[i].size() || preds[i].empty())
            throw ShapeError("metrics: trajectory length mismatch");
}

double dist(const Vec2& a, const Vec2& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace

double rmse_at(const std::vector<Traj>& preds, const std::vector<Traj>& gts, int t) {
    check_pairs(preds, gts);
    if (t < 1 || static_cast<std::size_t>(t) > preds[0].size())
        throw ShapeError("rmse_at: step out of range");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = dist(preds[i][t - 1], gts[i][t - 1]);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(preds.size()));
}

double mae_at(const std::vector<Traj>& preds, const std::vector<Traj>& gts, int t) {
    check_pairs(preds, gts);
    if (t < 1 || static_cast<std::size_t>(t) > preds[0].size())
        throw ShapeError("mae_at: step out of range");
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) s += dist(preds[i][t - 1], gts[i][t - 1]);
    return s / static_cast<double>(preds.size());
}

std::pair<double, double> ade_fde(const std::vector<Traj>& preds, const std::vector<Traj>& gts) {
    check_pairs(preds, gts);
    double ade = 0.0, fde = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        double acc = 0.0;
        for (std::size_t t = 0; t < preds[i].size(); ++t) acc += dist(preds[i][t], gts[i][t]);
        ade += acc / static_cast<double>(preds[i].size());
        fde += dist(preds[i].back(), gts[i].back());
    }
    const double n = static_cast<double>(preds.size());
    return {ade / n, fde / n};
}

std::pair<std::size_t, double> best_of_n(const std::vector<Traj>& samples, const Traj& gt) {
    if (samples.empty()) throw InputError("best_of_n: empty sample set");
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].size() != gt.size()) throw ShapeError("best_of_n: length mismatch");
        double s = 0.0;
        for (std::size_t t = 0; t < gt.size(); ++t) {
            const double d = dist(samples[k][t], gt[t]);
            s += d * d;
        }
        if (k == 0 || s < best_score) {
            best = k;
            best_score = s;
        }
    }
    return {best, best_score};
}

namespace {

Traj var_to_traj(const Tensor& t, const Vec2& anchor) {
    Traj out;
    for (int k = 0; k < t.dim(0); ++k) out.push_back({t.at(k, 0) + anchor[0], t.at(k, 1) + anchor[1]});
    return out;
}

}  // namespace

EvalReport evaluate(const model::MatfNet& net, model::VariantKind variant,
                    const std::vector<Episode>& dataset, const Protocol& protocol) {
    EvalReport r;
    if (dataset.empty()) throw InputError("evaluate: empty dataset");
    const auto& cfg = net.config();
    r.Tp = cfg.Tp;
    r.dt = cfg.dt;
    r.n_samples = protocol.stochastic ? protocol.n_samples : 1;
    r.variant = model::to_string(variant);
    r.unit = to_string(dataset[0].unit);
    if (protocol.stochastic && protocol.n_samples < 1)
        throw ConfigError("evaluate: n_samples must be >= 1");

    std::mt19937_64 noise_rng(protocol.noise_seed);
    std::vector<Traj> preds, gts;
    for (const auto& e : dataset) {
        if (e.T != cfg.T || e.Tp != cfg.Tp)
            throw ConfigError("evaluate: dataset protocol does not match checkpoint");
        const Episode world = data::denormalize_episode(e);
        std::vector<Traj> gt_here;
        for (const auto& a : world.agents) gt_here.push_back(a.future);

        if (!protocol.stochastic) {
            auto fwd = net.forward(e, variant);
            for (std::size_t i = 0; i < e.agents.size(); ++i)
                preds.push_back(var_to_traj(fwd.trajectories[i]->val, e.agents[i].anchor));
        } else {
            // N sampled forwards; per-agent best-of-N against ground truth
            std::vector<std::vector<Traj>> samples(e.agents.size());
            for (int k = 0; k < protocol.n_samples; ++k) {
                auto z = training::sample_noise(noise_rng, e.agents.size(), cfg.d_noise);
                if (protocol.force_zero_noise)
                    for (auto& t : z) t.fill(0.0);
                auto fwd = net.forward(e, variant, z);
                for (std::size_t i = 0; i < e.agents.size(); ++i)
                    samples[i].push_back(
                        var_to_traj(fwd.trajectories[i]->val, e.agents[i].anchor));
            }
            for (std::size_t i = 0; i < e.agents.size(); ++i) {
                auto [best, score] = best_of_n(samples[i], gt_here[i]);
                preds.push_back(samples[i][best]);
            }
        }
        for (auto& g : gt_here) gts.push_back(std::move(g));
    }

    r.n_agents = static_cast<long>(preds.size());
    for (int t = 1; t <= r.Tp; ++t) {
        r.rmse.push_back(rmse_at(preds, gts, t));
        r.mae.push_back(mae_at(preds, gts, t));
    }
    auto [ade, fde] = ade_fde(preds, gts);
    r.ade = ade;
    r.fde = fde;
    return r;
}

void write_report_csv(const std::string& path, const EvalReport& r) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "metric,step,value\n";
    for (int t = 1; t <= r.Tp; ++t)
        out << "rmse," << t << "," << fmt(r.rmse[static_cast<std::size_t>(t - 1)]) << "\n";
    for (int t = 1; t <= r.Tp; ++t)
        out << "mae," << t << "," << fmt(r.mae[static_cast<std::size_t>(t - 1)]) << "\n";
    out << "ade,," << fmt(r.ade) << "\n";
    out << "fde,," << fmt(r.fde) << "\n";
    out << "n_agents,," << r.n_agents << "\n";
    out << "n_samples,," << r.n_samples << "\n";
}

std::string report_summary(const EvalReport& r) {
    std::ostringstream os;
    os << "variant=" << r.variant << " unit=" << r.unit << " agents=" << r.n_agents
       << " samples=" << r.n_samples << " T'=" << r.Tp << " dt=" << r.dt << "\n";
    os << "ADE=" << r.ade << " FDE=" << r.fde << "\n";
    os << "per-step MAE:";
    for (double v : r.mae) os << " " << v;
    os << "\n";
    return os.str();
}

}  // namespace matf::metrics
