#include "matf/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "matf/data.hpp"

namespace matf::training {

using ad::Var;
using model::MatfNet;
using model::VariantKind;

Norm norm_from_string(const std::string& s) {
    if (s == "l1" || s == "L1") return Norm::L1;
    if (s == "l2" || s == "L2") return Norm::L2;
    throw ConfigError("unknown reconstruction norm: " + s);
}

GanVariant gan_variant_from_string(const std::string& s) {
    if (s == "saturating") return GanVariant::saturating;
    if (s == "non_saturating") return GanVariant::non_saturating;
    throw ConfigError("unknown gan variant: " + s);
}

Var reconstruction_loss(const Var& pred, const Tensor& gt, Norm norm) {
    if (!pred->val.same_shape(gt)) throw ShapeError("reconstruction_loss: shape mismatch");
    Var diff = ad::sub(pred, ad::constant(gt));
    return norm == Norm::L2 ? ad::sumsq(diff) : ad::sum(ad::abs_(diff));
}

double reconstruction_loss(const Tensor& pred, const Tensor& gt, Norm norm) {
    if (!pred.same_shape(gt)) throw ShapeError("reconstruction_loss: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = pred[i] - gt[i];
        s += norm == Norm::L2 ? d * d : std::abs(d);
    }
    return s;
}

namespace {

void check_scores(const std::vector<double>& s, const char* which) {
    for (double v : s)
        if (!(v > 0.0 && v < 1.0))
            throw DomainError(std::string("gan_losses: ") + which + " score outside (0,1)");
}

}  // namespace

std::pair<double, double> gan_losses(const std::vector<double>& d_real,
                                     const std::vector<double>& d_fake, double recon,
                                     GanVariant variant, double lambda) {
    if (d_real.size() != d_fake.size() || d_real.empty())
        throw InputError("gan_losses: score lists must be non-empty and equal length");
    check_scores(d_real, "real");
    check_scores(d_fake, "fake");
    double loss_d = 0.0, adv = 0.0;
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        loss_d -= std::log(d_real[i]) + std::log(1.0 - d_fake[i]);
        adv += variant == GanVariant::saturating ? std::log(1.0 - d_fake[i])
                                                 : -std::log(d_fake[i]);
    }
    return {loss_d, adv + lambda * recon};
}

Var gan_loss_d(const std::vector<Var>& d_real, const std::vector<Var>& d_fake) {
    if (d_real.size() != d_fake.size() || d_real.empty())
        throw InputError("gan_loss_d: score lists must be non-empty and equal length");
    Var acc = ad::constant(Tensor::scalar(0.0));
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        acc = ad::add(acc, ad::log_(d_real[i]));
        acc = ad::add(acc, ad::log_(ad::addc(ad::scale(d_fake[i], -1.0), 1.0)));
    }
    return ad::scale(acc, -1.0);
}

Var gan_loss_g(const std::vector<Var>& d_fake, const Var& recon, GanVariant variant,
               double lambda) {
    if (d_fake.empty()) throw InputError("gan_loss_g: no scores");
    Var acc = ad::constant(Tensor::scalar(0.0));
    for (const auto& s : d_fake) {
        if (variant == GanVariant::saturating)
            acc = ad::add(acc, ad::log_(ad::addc(ad::scale(s, -1.0), 1.0)));
        else
            acc = ad::sub(acc, ad::log_(s));
    }
    return ad::add(acc, ad::scale(recon, lambda));
}

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "epoch,split,loss,value\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g", r.value);
        out << r.epoch << "," << r.split << "," << r.name << "," << buf << "\n";
    }
}

Adam::Adam(model::ParamStore& store, double lr, double beta1, double beta2, double eps)
    : store_(store), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(lr > 0.0)) throw ConfigError("adam: learning rate must be > 0");
    for (const auto& [name, p] : store.params) {
        m_.emplace(name, Tensor(p->val.shape()));
        v_.emplace(name, Tensor(p->val.shape()));
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (auto& [name, p] : store_.params) {
        Tensor& m = m_.at(name);
        Tensor& v = v_.at(name);
        Tensor& g = p->g();
        Tensor& w = p->val;
        for (std::size_t i = 0; i < w.numel(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            w[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

std::vector<Tensor> sample_noise(std::mt19937_64& rng, std::size_t n_agents, int d_noise) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Tensor> out;
    out.reserve(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) {
        Tensor z({d_noise});
        for (std::size_t k = 0; k < z.numel(); ++k) z[k] = gauss(rng);
        out.push_back(std::move(z));
    }
    return out;
}

namespace {

Tensor gt_future_rel(const EpisodeAgent& a, bool centered, int Tp) {
    Tensor gt({Tp, 2});
    for (int t = 0; t < Tp; ++t) {
        gt.at(t, 0) = a.future[static_cast<std::size_t>(t)][0] - (centered ? 0.0 : a.anchor[0]);
        gt.at(t, 1) = a.future[static_cast<std::size_t>(t)][1] - (centered ? 0.0 : a.anchor[1]);
    }
    return gt;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

}  // namespace

DetResult train_deterministic(const std::vector<Episode>& dataset, VariantKind variant,
                              const model::ModelConfig& mcfg, const TrainConfig& tcfg) {
    if (dataset.empty()) throw InputError("train_deterministic: empty dataset");
    if (tcfg.batch < 1 || tcfg.epochs < 1) throw ConfigError("train: batch/epochs must be >= 1");

    DetResult res;
    res.net = std::make_unique<MatfNet>(mcfg, data::split_seed(tcfg.seed, 2));
    std::mt19937_64 order_rng(data::split_seed(tcfg.seed, 1));
    Adam opt(res.net->params(), tcfg.lr);

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        auto idx = epoch_order(dataset.size(), order_rng);
        double epoch_loss = 0.0;
        long epoch_agents = 0;
        for (std::size_t b = 0; b < idx.size(); b += static_cast<std::size_t>(tcfg.batch)) {
            res.net->params().zero_grad();
            std::vector<Var> batch_losses;
            long n_agents = 0;
            for (std::size_t k = b; k < std::min(idx.size(), b + tcfg.batch); ++k) {
                const Episode& e = dataset[idx[k]];
                auto fwd = res.net->forward(e, variant);
                for (std::size_t i = 0; i < e.agents.size(); ++i) {
                    Tensor gt = gt_future_rel(e.agents[i], e.anchor_centered, e.Tp);
                    batch_losses.push_back(
                        reconstruction_loss(fwd.trajectories[i], gt, tcfg.recon_norm));
                    ++n_agents;
                }
            }
            Var total = ad::constant(Tensor::scalar(0.0));
            for (auto& l : batch_losses) total = ad::add(total, l);
            Var loss = ad::scale(total, 1.0 / static_cast<double>(n_agents));
            const double lv = loss->val[0];
            if (!std::isfinite(lv))
                throw Error("train_deterministic: non-finite loss at epoch " +
                            std::to_string(epoch) + " (lr too high or bad data)");
            ad::backward(loss);
            opt.step();
            epoch_loss += lv * static_cast<double>(n_agents);
            epoch_agents += n_agents;
        }
        res.log.push_back({epoch, "train", "recon",
                           epoch_loss / static_cast<double>(epoch_agents)});
    }
    return res;
}

GanResult train_gan(const std::vector<Episode>& dataset, const model::Checkpoint& det_ckpt,
                    const TrainConfig& tcfg) {
    if (dataset.empty()) throw InputError("train_gan: empty dataset");
    const model::ModelConfig mcfg = det_ckpt.config;

    GanResult res;
    res.generator = std::make_unique<MatfNet>(mcfg, data::split_seed(tcfg.seed, 2));
    model::restore_params(res.generator->params(), det_ckpt);
    // The deterministic model was trained with z = 0, so the noise columns of
    // the decoder-init projections carry their (tiny) initial weights and every
    // sample starts out nearly identical. Re-draw them at a usable scale so the
    // discriminator can separate samples by z instead of fighting a dead input.
    if (tcfg.noise_boost > 0.0) {
        std::mt19937_64 boost_rng(data::split_seed(tcfg.seed, 5));
        std::uniform_real_distribution<double> u(-tcfg.noise_boost, tcfg.noise_boost);
        for (const char* name : {"dec_init_h.w", "dec_init_c.w"}) {
            Tensor& w = res.generator->params().at(name)->val;
            for (int r = 0; r < w.dim(0); ++r)
                for (int c = mcfg.d_agent; c < mcfg.d_agent + mcfg.d_noise; ++c)
                    w.at(r, c) = u(boost_rng);
        }
    }
    res.discriminator =
        std::make_unique<model::Discriminator>(mcfg, data::split_seed(tcfg.seed, 4));
    res.discriminator->init_from(*res.generator);

    std::mt19937_64 order_rng(data::split_seed(tcfg.seed, 1));
    std::mt19937_64 noise_rng(data::split_seed(tcfg.seed, 3));
    Adam opt_g(res.generator->params(), tcfg.lr);
    Adam opt_d(res.discriminator->params(), tcfg.lr_d);

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        auto idx = epoch_order(dataset.size(), order_rng);
        double ep_d = 0.0, ep_g = 0.0, ep_recon = 0.0, ep_real = 0.0, ep_fake = 0.0;
        long n_batches = 0, n_scores = 0;
        for (std::size_t b = 0; b < idx.size(); b += static_cast<std::size_t>(tcfg.batch)) {
            const std::size_t hi = std::min(idx.size(), b + tcfg.batch);
            const auto n_eps = static_cast<double>(hi - b);

            // one generator forward per scene; reused by both updates
            struct SceneFwd {
                const Episode* e;
                std::vector<Var> fake;     // attached to G graph
                std::vector<Var> real;     // constants
            };
            std::vector<SceneFwd> scenes;
            for (std::size_t k = b; k < hi; ++k) {
                const Episode& e = dataset[idx[k]];
                auto z = sample_noise(noise_rng, e.agents.size(), mcfg.d_noise);
                auto fwd = res.generator->forward(e, VariantKind::multi_agent_scene, z);
                SceneFwd sf;
                sf.e = &e;
                sf.fake = std::move(fwd.trajectories);
                for (std::size_t i = 0; i < e.agents.size(); ++i)
                    sf.real.push_back(ad::constant(
                        gt_future_rel(e.agents[i], e.anchor_centered, e.Tp)));
                scenes.push_back(std::move(sf));
            }

            // --- D update (generated futures detached) ---
            res.generator->params().zero_grad();
            res.discriminator->params().zero_grad();
            Var d_total = ad::constant(Tensor::scalar(0.0));
            for (auto& sf : scenes) {
                std::vector<Var> fake_det;
                for (auto& f : sf.fake) fake_det.push_back(ad::detach(f));
                auto d_real = res.discriminator->score(*sf.e, sf.real);
                auto d_fake = res.discriminator->score(*sf.e, fake_det);
                d_total = ad::add(d_total, gan_loss_d(d_real, d_fake));
                for (const auto& s : d_real) ep_real += s->val[0];
                for (const auto& s : d_fake) ep_fake += s->val[0];
                n_scores += static_cast<long>(d_real.size());
            }
            Var loss_d = ad::scale(d_total, 1.0 / n_eps);
            if (!std::isfinite(loss_d->val[0]))
                throw Error("train_gan: non-finite discriminator loss");
            ad::backward(loss_d);
            opt_d.step();

            // --- G update (gradient flows through D into the fakes) ---
            res.generator->params().zero_grad();
            res.discriminator->params().zero_grad();
            Var g_total = ad::constant(Tensor::scalar(0.0));
            double recon_val = 0.0;
            for (auto& sf : scenes) {
                auto d_fake = res.discriminator->score(*sf.e, sf.fake);
                Var recon = ad::constant(Tensor::scalar(0.0));
                for (std::size_t i = 0; i < sf.fake.size(); ++i) {
                    Tensor gt = gt_future_rel(sf.e->agents[i], sf.e->anchor_centered, sf.e->Tp);
                    recon = ad::add(recon, reconstruction_loss(sf.fake[i], gt, tcfg.recon_norm));
                }
                recon_val += recon->val[0];
                g_total = ad::add(g_total,
                                  gan_loss_g(d_fake, recon, tcfg.gan_variant, tcfg.lambda));
            }
            Var loss_g = ad::scale(g_total, 1.0 / n_eps);
            if (!std::isfinite(loss_g->val[0]))
                throw Error("train_gan: non-finite generator loss");
            ad::backward(loss_g);
            opt_g.step();

            ep_d += loss_d->val[0];
            ep_g += loss_g->val[0];
            ep_recon += recon_val / n_eps;
            ++n_batches;
        }
        const double nb = static_cast<double>(n_batches);
        res.log.push_back({epoch, "train", "loss_d", ep_d / nb});
        res.log.push_back({epoch, "train", "loss_g", ep_g / nb});
        res.log.push_back({epoch, "train", "recon", ep_recon / nb});
        res.log.push_back({epoch, "train", "d_real", ep_real / static_cast<double>(n_scores)});
        res.log.push_back({epoch, "train", "d_fake", ep_fake / static_cast<double>(n_scores)});
    }
    return res;
}

}  // namespace matf::training
