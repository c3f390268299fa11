// matf: trajectory-prediction pipeline driver.
//
//   matf prepare   build an episode file (synthetic scenarios or ETH/UCY text)
//   matf train     fit a model variant on an episode file
//   matf eval      score a checkpoint (deterministic or best-of-N sampling)
//   matf ablate    train + evaluate every variant and the GAN on one dataset
//   matf sweep-res retrain across scene raster resolutions
//   matf bench     forward-pass scaling vs agent count
//   matf plot      render predictions over the scene raster as PPM images

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matf/harness.hpp"
#include "matf/kernels.hpp"

namespace {

// "--set key=value" repeatable overrides, applied on top of --config
std::vector<std::pair<std::string, std::string>> parse_sets(const std::vector<std::string>& raw) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : raw) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw matf::ConfigError("--set expects key=value, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MATF trajectory prediction"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    // ------------------------------------------------------------ prepare
    matf::harness::PrepareOptions prep;
    auto* c_prep = app.add_subcommand("prepare", "build an episode file");
    c_prep->add_option("--source", prep.source, "synthetic | ethucy | episodes")
        ->capture_default_str();
    c_prep->add_option("--kind", prep.kind,
                       "synthetic scenario: const_velocity | curved_lane | avoidance_pair | "
                       "bimodal_exit | obstacle_field")
        ->capture_default_str();
    c_prep->add_option("-n,--episodes", prep.n_episodes, "episode count (synthetic)")
        ->capture_default_str();
    c_prep->add_option("--seed", prep.seed, "master seed")->capture_default_str();
    c_prep->add_option("--input", prep.input_path, "input file (ethucy / episodes source)");
    c_prep->add_option("--out", prep.out_path, "episode file to write")->required();
    c_prep->add_option("--t", prep.T, "observed steps T")->capture_default_str();
    c_prep->add_option("--tp", prep.Tp, "predicted steps T'")->capture_default_str();
    c_prep->add_option("--dt", prep.dt, "seconds per step")->capture_default_str();
    c_prep->add_option("--stride", prep.stride, "window stride (ethucy)")->capture_default_str();
    c_prep->add_option("--grid", prep.grid, "scene raster cells per side")->capture_default_str();
    c_prep->add_option("--extent", prep.extent, "scene extent in meters (synthetic)")
        ->capture_default_str();
    c_prep->add_option("--normalization", prep.normalization, "none | anchor_centered")
        ->capture_default_str();

    // -------------------------------------------------------------- train
    matf::harness::TrainOptions tr;
    std::vector<std::string> tr_sets;
    auto* c_train = app.add_subcommand("train", "train a model variant");
    c_train->add_option("--data", tr.data_path, "episode file")->required();
    c_train->add_option("--variant", tr.variant,
                        "lstm | single_agent_scene | multi_agent | multi_agent_scene | gan")
        ->capture_default_str();
    c_train->add_option("--config", tr.config_path, "key=value config file");
    c_train->add_option("--set", tr_sets, "config override key=value (repeatable)");
    c_train->add_option("--seed", tr.seed, "master seed")->capture_default_str();
    c_train->add_option("--out", tr.out_dir, "run directory (default: runs/<stamp>-s<seed>)");
    c_train->add_option("--init-from", tr.init_from,
                        "deterministic checkpoint to warm start from (required for gan)");

    // --------------------------------------------------------------- eval
    matf::harness::EvalOptions ev;
    auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    c_eval->add_option("--checkpoint", ev.checkpoint_path, "checkpoint JSON")->required();
    c_eval->add_option("--data", ev.data_path, "episode file")->required();
    c_eval->add_option("--samples", ev.samples, "0 = deterministic, N = best-of-N sampling")
        ->capture_default_str();
    c_eval->add_option("--seed", ev.seed, "master seed (noise)")->capture_default_str();
    c_eval->add_flag("--plot", ev.plot, "also render prediction images");
    c_eval->add_option("--plot-episodes", ev.plot_episodes, "episodes to render")
        ->capture_default_str();
    c_eval->add_option("--plot-samples", ev.plot_samples, "sampled futures per rendered episode")
        ->capture_default_str();
    c_eval->add_option("--variant", ev.variant, "override the checkpoint's variant");
    c_eval->add_option("--out", ev.out_dir, "run directory");

    // ------------------------------------------------------------- ablate
    matf::harness::AblateOptions ab;
    std::vector<std::string> ab_sets;
    auto* c_abl = app.add_subcommand("ablate", "train/evaluate all variants + GAN");
    c_abl->add_option("--data", ab.data_path, "episode file")->required();
    c_abl->add_option("--config", ab.config_path, "key=value config file");
    c_abl->add_option("--set", ab_sets, "config override key=value (repeatable)");
    c_abl->add_option("--seed", ab.seed, "master seed")->capture_default_str();
    c_abl->add_option("--gan-samples", ab.gan_samples, "best-of-N for the GAN row")
        ->capture_default_str();
    c_abl->add_option("--holdout", ab.holdout_fraction, "holdout fraction")
        ->capture_default_str();
    c_abl->add_option("--out", ab.out_dir, "run directory");

    // ---------------------------------------------------------- sweep-res
    matf::harness::SweepOptions sw;
    std::vector<std::string> sw_sets;
    auto* c_sw = app.add_subcommand("sweep-res", "retrain across scene resolutions");
    c_sw->add_option("--data", sw.data_path, "episode file")->required();
    c_sw->add_option("--config", sw.config_path, "key=value config file");
    c_sw->add_option("--set", sw_sets, "config override key=value (repeatable)");
    c_sw->add_option("--resolutions", sw.resolutions, "raster sizes to sweep")
        ->capture_default_str();
    c_sw->add_option("--seed", sw.seed, "master seed")->capture_default_str();
    c_sw->add_option("--holdout", sw.holdout_fraction, "holdout fraction")
        ->capture_default_str();
    c_sw->add_option("--out", sw.out_dir, "run directory");

    // -------------------------------------------------------------- bench
    matf::harness::BenchOptions be;
    std::vector<std::string> be_sets;
    auto* c_be = app.add_subcommand("bench", "forward-pass scaling vs agent count");
    c_be->add_option("--agents", be.agent_counts, "agent counts to time")->capture_default_str();
    c_be->add_option("--episodes", be.episodes_per_count, "episodes per count")
        ->capture_default_str();
    c_be->add_option("--repeats", be.repeats, "timing repeats (best taken)")
        ->capture_default_str();
    c_be->add_option("--seed", be.seed, "master seed")->capture_default_str();
    c_be->add_option("--config", be.config_path, "key=value config file");
    c_be->add_option("--set", be_sets, "config override key=value (repeatable)");
    c_be->add_option("--out", be.out_dir, "run directory");

    // --------------------------------------------------------------- plot
    matf::harness::PlotOptions pl;
    auto* c_pl = app.add_subcommand("plot", "render predictions as PPM images");
    c_pl->add_option("--checkpoint", pl.checkpoint_path, "checkpoint JSON")->required();
    c_pl->add_option("--data", pl.data_path, "episode file")->required();
    c_pl->add_option("--episodes", pl.episodes, "episodes to render")->capture_default_str();
    c_pl->add_option("--samples", pl.samples, "sampled futures per episode")
        ->capture_default_str();
    c_pl->add_option("--seed", pl.seed, "noise seed")->capture_default_str();
    c_pl->add_option("--variant", pl.variant, "override the checkpoint's variant");
    c_pl->add_option("--out", pl.out_dir, "run directory");

    CLI11_PARSE(app, argc, argv);

    try {
        std::string out;
        if (*c_prep) {
            out = matf::harness::cmd_prepare(prep);
        } else if (*c_train) {
            tr.overrides = parse_sets(tr_sets);
            out = matf::harness::cmd_train(tr);
        } else if (*c_eval) {
            out = matf::harness::cmd_eval(ev);
        } else if (*c_abl) {
            ab.overrides = parse_sets(ab_sets);
            out = matf::harness::cmd_ablate(ab);
        } else if (*c_sw) {
            sw.overrides = parse_sets(sw_sets);
            out = matf::harness::cmd_sweep_resolution(sw);
        } else if (*c_be) {
            be.overrides = parse_sets(be_sets);
            auto res = matf::harness::cmd_bench_scaling(be);
            std::printf("loglog_slope %.4f\n", res.loglog_slope);
            out = res.out_dir;
        } else if (*c_pl) {
            out = matf::harness::cmd_plot(pl);
        }
        std::printf("kernels: %s\nwrote: %s\n", matf::kernels::active().name, out.c_str());
        return 0;
    } catch (const matf::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const matf::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
