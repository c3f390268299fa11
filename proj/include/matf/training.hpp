#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "matf/model.hpp"
#include "matf/types.hpp"

namespace matf::training {

enum class Norm { L1, L2 };
enum class GanVariant { saturating, non_saturating };

Norm norm_from_string(const std::string& s);
GanVariant gan_variant_from_string(const std::string& s);

// Sum over future steps of the per-position L2 (squared Euclidean) or L1
// (Manhattan) distance. Graph form for training, plain form for evaluation.
ad::Var reconstruction_loss(const ad::Var& pred, const Tensor& gt, Norm norm);
double reconstruction_loss(const Tensor& pred, const Tensor& gt, Norm norm);

// loss_D = -sum_i [log d_real_i + log(1 - d_fake_i)]
// loss_G = sum_i log(1 - d_fake_i) + lambda*recon          (saturating)
//        = -sum_i log d_fake_i + lambda*recon              (non-saturating)
std::pair<double, double> gan_losses(const std::vector<double>& d_real,
                                     const std::vector<double>& d_fake, double recon,
                                     GanVariant variant, double lambda);
ad::Var gan_loss_d(const std::vector<ad::Var>& d_real, const std::vector<ad::Var>& d_fake);
ad::Var gan_loss_g(const std::vector<ad::Var>& d_fake, const ad::Var& recon,
                   GanVariant variant, double lambda);

struct TrainConfig {
    Norm recon_norm = Norm::L2;
    double lambda = 1.0;
    GanVariant gan_variant = GanVariant::non_saturating;
    double lr = 1e-3;
    double lr_d = 1e-3;
    int batch = 16;
    int epochs = 30;
    // scale for re-drawn noise-input weights at GAN warm start (0 disables);
    // the deterministic phase trains with z = 0, leaving that pathway dead
    double noise_boost = 0.3;
    std::uint64_t seed = 0;
};

struct LossRow {
    int epoch;
    std::string split;
    std::string name;
    double value;
};

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows);

// Adam over a ParamStore; applies accumulated gradients.
class Adam {
public:
    Adam(model::ParamStore& store, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);
    void step();

private:
    model::ParamStore& store_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

struct DetResult {
    std::unique_ptr<model::MatfNet> net;
    std::vector<LossRow> log;
};

DetResult train_deterministic(const std::vector<Episode>& dataset, model::VariantKind variant,
                              const model::ModelConfig& mcfg, const TrainConfig& tcfg);

struct GanResult {
    std::unique_ptr<model::MatfNet> generator;
    std::unique_ptr<model::Discriminator> discriminator;
    std::vector<LossRow> log;
};

GanResult train_gan(const std::vector<Episode>& dataset, const model::Checkpoint& det_ckpt,
                    const TrainConfig& tcfg);

// i.i.d. standard Gaussian noise vectors, one per agent
std::vector<Tensor> sample_noise(std::mt19937_64& rng, std::size_t n_agents, int d_noise);

}  // namespace matf::training
