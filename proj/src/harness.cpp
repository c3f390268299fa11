#include "matf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "matf/episode_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace matf::harness {

using model::MatfNet;
using model::VariantKind;

// ---------------------------------------------------------------- config

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        // model
        "t", "tp", "dt", "d_agent", "c_scene", "c_in", "grid", "unet_depth",
        "unet_width", "d_noise", "hidden", "scene_down",
        // training
        "norm", "lambda", "gan_variant", "lr", "lr_d", "batch", "epochs", "noise_boost",
        // evaluation
        "samples",
    };
    return keys;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r\n");
            const auto b = s.find_last_not_of(" \t\r\n");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& k, const std::string& v) { values[k] = v; }

std::string Config::get(const std::string& k, const std::string& dflt) const {
    auto it = values.find(k);
    return it == values.end() ? dflt : it->second;
}

int Config::get_int(const std::string& k, int dflt) const {
    auto it = values.find(k);
    if (it == values.end()) return dflt;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + k + "': not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& k, double dflt) const {
    auto it = values.find(k);
    if (it == values.end()) return dflt;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + k + "': not a number: " + it->second);
    }
}

void Config::validate_keys() const {
    for (const auto& [k, v] : values)
        if (!known_keys().count(k)) throw ConfigError("unknown config key: '" + k + "'");
}

model::ModelConfig Config::model_config() const {
    validate_keys();
    model::ModelConfig m;
    m.T = get_int("t", m.T);
    m.Tp = get_int("tp", m.Tp);
    m.dt = get_double("dt", m.dt);
    m.d_agent = get_int("d_agent", m.d_agent);
    m.c_scene = get_int("c_scene", m.c_scene);
    m.c_in = get_int("c_in", m.c_in);
    m.grid = get_int("grid", m.grid);
    m.unet_depth = get_int("unet_depth", m.unet_depth);
    m.unet_width = get_int("unet_width", m.unet_width);
    m.d_noise = get_int("d_noise", m.d_noise);
    m.hidden = get_int("hidden", m.hidden);
    m.scene_down = get_int("scene_down", m.scene_down);
    return m;
}

training::TrainConfig Config::train_config(std::uint64_t seed) const {
    validate_keys();
    training::TrainConfig t;
    t.recon_norm = training::norm_from_string(get("norm", "L2"));
    t.lambda = get_double("lambda", t.lambda);
    t.gan_variant = training::gan_variant_from_string(get("gan_variant", "non_saturating"));
    t.lr = get_double("lr", t.lr);
    t.lr_d = get_double("lr_d", t.lr_d);
    t.batch = get_int("batch", t.batch);
    t.epochs = get_int("epochs", t.epochs);
    t.noise_boost = get_double("noise_boost", t.noise_boost);
    t.seed = seed;
    return t;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string make_run_dir(const std::string& explicit_out, std::uint64_t seed) {
    std::string dir = explicit_out;
    if (dir.empty()) {
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&now));
        dir = std::string("runs/") + stamp + "-s" + std::to_string(seed);
    }
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------- helpers

namespace {

json config_echo(const Config& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.values) j[k] = v;
    return j;
}

void write_manifest(const std::string& dir, json manifest) {
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

Config assemble_config(const std::string& config_path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    Config cfg;
    if (!config_path.empty()) cfg = Config::load(config_path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.validate_keys();
    return cfg;
}

// the model's windowing/raster parameters must agree with the dataset
model::ModelConfig fit_to_dataset(model::ModelConfig m, const Config& cfg,
                                  const std::vector<Episode>& eps) {
    if (eps.empty()) throw InputError("dataset has no episodes");
    const Episode& e0 = eps[0];
    if (cfg.has("t") && m.T != e0.T)
        throw ConfigError("config t=" + std::to_string(m.T) + " but dataset has T=" +
                          std::to_string(e0.T));
    if (cfg.has("tp") && m.Tp != e0.Tp)
        throw ConfigError("config tp=" + std::to_string(m.Tp) + " but dataset has T'=" +
                          std::to_string(e0.Tp));
    m.T = e0.T;
    m.Tp = e0.Tp;
    m.dt = e0.dt;
    if (!cfg.has("grid") && !cfg.has("scene_down")) {
        m.grid = e0.scene.H;
        m.scene_down = 1;
    } else if (!cfg.has("scene_down")) {
        if (e0.scene.H % m.grid != 0)
            throw ConfigError("scene raster " + std::to_string(e0.scene.H) +
                              " not divisible by grid " + std::to_string(m.grid));
        m.scene_down = e0.scene.H / m.grid;
    }
    m.c_in = e0.scene.C;
    m.validate();
    return m;
}

VariantKind eval_variant(const model::Checkpoint& ck, const std::string& override_name) {
    if (!override_name.empty()) return model::variant_from_string(override_name);
    auto it = ck.meta.find("variant");
    if (it != ck.meta.end() && it->second != "gan") return model::variant_from_string(it->second);
    return VariantKind::multi_agent_scene;
}

std::pair<std::vector<Episode>, std::vector<Episode>> split_holdout(
    const std::vector<Episode>& eps, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> idx(eps.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(data::split_seed(seed, 7));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_hold = static_cast<std::size_t>(fraction * static_cast<double>(eps.size()));
    std::vector<Episode> train, hold;
    for (std::size_t i = 0; i < idx.size(); ++i)
        (i < n_hold ? hold : train).push_back(eps[idx[i]]);
    if (train.empty() || hold.empty())
        throw InputError("holdout split left an empty partition");
    return {std::move(train), std::move(hold)};
}

// ------------------------------------------------------------- plotting

struct Image {
    int h, w;
    std::vector<unsigned char> px;  // rgb
    Image(int h_, int w_) : h(h_), w(w_), px(static_cast<std::size_t>(h_) * w_ * 3, 0) {}
    void set(int r, int c, unsigned char R, unsigned char G, unsigned char B) {
        if (r < 0 || r >= h || c < 0 || c >= w) return;
        const std::size_t i = (static_cast<std::size_t>(r) * w + c) * 3;
        px[i] = R;
        px[i + 1] = G;
        px[i + 2] = B;
    }
    void save_ppm(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        out << "P6\n" << w << " " << h << "\n255\n";
        out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
    }
};

void draw_line(Image& im, int r0, int c0, int r1, int c1, unsigned char R, unsigned char G,
               unsigned char B) {
    const int dr = std::abs(r1 - r0), dc = std::abs(c1 - c0);
    const int sr = r0 < r1 ? 1 : -1, sc = c0 < c1 ? 1 : -1;
    int err = (dr > dc ? dr : -dc) / 2;
    while (true) {
        im.set(r0, c0, R, G, B);
        if (r0 == r1 && c0 == c1) break;
        const int e2 = err;
        if (e2 > -dr) {
            err -= dc;
            r0 += sr;
        }
        if (e2 < dc) {
            err += dr;
            c0 += sc;
        }
    }
}

struct Rgb {
    unsigned char r, g, b;
};
const Rgb kAgentColors[] = {{230, 60, 60},  {60, 120, 230}, {60, 180, 90}, {230, 160, 40},
                            {170, 80, 200}, {40, 200, 200}, {200, 90, 140}, {140, 140, 60}};

void render_episode(const Episode& world, const std::vector<std::vector<metrics::Traj>>& samples,
                    const std::vector<metrics::Traj>& det, const std::string& path) {
    const auto& s = world.scene;
    const int f = std::max(1, 512 / std::max(s.H, s.W));
    Image im(s.H * f, s.W * f);
    for (int r = 0; r < im.h; ++r)
        for (int c = 0; c < im.w; ++c) {
            const int gr = r / f, gc = c / f;
            double drv = s.C > 0 ? s.at(gr, gc, 0) : 0.0;
            double lane = s.C > 1 ? s.at(gr, gc, 1) : 0.0;
            double obs = s.C > 2 ? s.at(gr, gc, 2) : 0.0;
            auto ch = [](double v) { return static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255); };
            im.set(r, c, ch(0.15 * drv + 0.5 * lane + 0.6 * obs),
                   ch(0.15 * drv + 0.5 * lane), ch(0.15 * drv + 0.5 * lane));
        }
    auto to_px = [&](const Vec2& p) {
        return std::pair<int, int>(
            static_cast<int>((p[0] - s.origin[0]) / s.meters_per_cell * f),
            static_cast<int>((p[1] - s.origin[1]) / s.meters_per_cell * f));
    };
    auto draw_traj = [&](const std::vector<Vec2>& pts, Rgb col) {
        for (std::size_t k = 1; k < pts.size(); ++k) {
            auto [r0, c0] = to_px(pts[k - 1]);
            auto [r1, c1] = to_px(pts[k]);
            draw_line(im, r0, c0, r1, c1, col.r, col.g, col.b);
        }
    };
    for (std::size_t i = 0; i < world.agents.size(); ++i) {
        const Rgb base = kAgentColors[i % std::size(kAgentColors)];
        // sampled futures first (faded), then det prediction, past, gt on top
        if (i < samples.size())
            for (const auto& tr : samples[i])
                draw_traj(tr, {static_cast<unsigned char>(base.r / 2 + 90),
                               static_cast<unsigned char>(base.g / 2 + 90),
                               static_cast<unsigned char>(base.b / 2 + 90)});
        if (i < det.size()) draw_traj(det[i], base);
        draw_traj(world.agents[i].past, base);
        draw_traj(world.agents[i].future, {0, 0, 0});
    }
    im.save_ppm(path);
}

metrics::Traj traj_world(const Tensor& rel, const Vec2& anchor) {
    metrics::Traj out;
    for (int t = 0; t < rel.dim(0); ++t)
        out.push_back({rel.at(t, 0) + anchor[0], rel.at(t, 1) + anchor[1]});
    return out;
}

void render_plots(const MatfNet& net, VariantKind variant, const std::vector<Episode>& eps,
                  int n_episodes, int n_samples, std::uint64_t seed, const std::string& dir) {
    std::mt19937_64 noise_rng(data::split_seed(seed, 3));
    const int n = std::min<int>(n_episodes, static_cast<int>(eps.size()));
    for (int k = 0; k < n; ++k) {
        const Episode& e = eps[static_cast<std::size_t>(k)];
        const Episode world = data::denormalize_episode(e);
        std::vector<std::vector<metrics::Traj>> samples(e.agents.size());
        for (int s = 0; s < n_samples; ++s) {
            auto z = training::sample_noise(noise_rng, e.agents.size(), net.config().d_noise);
            auto fwd = net.forward(e, variant, z);  // all agents in one pass
            for (std::size_t i = 0; i < e.agents.size(); ++i)
                samples[i].push_back(traj_world(fwd.trajectories[i]->val, e.agents[i].anchor));
        }
        auto det_fwd = net.forward(e, variant);
        std::vector<metrics::Traj> det;
        for (std::size_t i = 0; i < e.agents.size(); ++i)
            det.push_back(traj_world(det_fwd.trajectories[i]->val, e.agents[i].anchor));
        render_episode(world, samples, det, dir + "/episode_" + std::to_string(k) + ".ppm");
    }
}

}  // namespace

// ---------------------------------------------------------------- prepare

std::string cmd_prepare(const PrepareOptions& opt) {
    if (opt.out_path.empty()) throw ConfigError("prepare: output path required");
    std::vector<Episode> eps;
    json src_info;

    if (opt.source == "synthetic") {
        data::SynthOptions so;
        so.grid = opt.grid;
        so.extent_m = opt.extent;
        so.T = opt.T;
        so.Tp = opt.Tp;
        so.dt = opt.dt;
        auto [episodes, oracle] =
            data::synth_scenarios(data::synth_kind_from_string(opt.kind), opt.n_episodes,
                                  data::split_seed(opt.seed, 0xD), so);
        eps = std::move(episodes);
        src_info = {{"source", "synthetic"}, {"kind", opt.kind}, {"n", opt.n_episodes}};
    } else if (opt.source == "ethucy") {
        auto tracks = data::load_ethucy_text(opt.input_path);
        // uniform drivable scene covering the track bounding box
        Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
        for (const auto& t : tracks)
            for (const auto& ts : t.timesteps) {
                lo[0] = std::min(lo[0], ts.p[0]);
                lo[1] = std::min(lo[1], ts.p[1]);
                hi[0] = std::max(hi[0], ts.p[0]);
                hi[1] = std::max(hi[1], ts.p[1]);
            }
        SceneContext scene;
        scene.H = scene.W = opt.grid;
        scene.C = 3;
        const double span = std::max({hi[0] - lo[0], hi[1] - lo[1], 1.0});
        scene.meters_per_cell = span * 1.1 / opt.grid;
        scene.origin = {lo[0] - 0.05 * span, lo[1] - 0.05 * span};
        scene.grid.assign(static_cast<std::size_t>(scene.H) * scene.W * scene.C, 0.0);
        scene.channel_semantics = {"drivable", "lane", "obstacle"};
        for (int r = 0; r < scene.H; ++r)
            for (int c = 0; c < scene.W; ++c) scene.at(r, c, 0) = 1.0;

        DatasetSpec spec;
        spec.source = SourceKind::ethucy_text;
        spec.T = opt.T;
        spec.Tp = opt.Tp;
        spec.dt = opt.dt;
        spec.stride = opt.stride;
        eps = data::segment_episodes(tracks, scene, spec);
        src_info = {{"source", "ethucy"},
                    {"input", opt.input_path},
                    {"input_fnv1a", std::to_string(fnv1a_file(opt.input_path))}};
    } else if (opt.source == "episodes") {
        eps = data::read_episodes(opt.input_path);
        src_info = {{"source", "episodes"}, {"input", opt.input_path}};
    } else {
        throw ConfigError("prepare: unknown source '" + opt.source + "'");
    }

    if (opt.normalization == "anchor_centered")
        for (auto& e : eps) e = data::normalize_episode(e, Normalization::anchor_centered);
    else if (opt.normalization != "none")
        throw ConfigError("prepare: unknown normalization '" + opt.normalization + "'");

    for (const auto& e : eps) e.validate();
    data::write_episodes(opt.out_path, eps);

    // dataset summary: counts + duration histogram
    const std::string dir = fs::path(opt.out_path).parent_path().string();
    const std::string summary_path =
        (dir.empty() ? std::string(".") : dir) + "/" +
        fs::path(opt.out_path).stem().string() + "_summary.txt";
    std::map<int, int> agents_hist;
    for (const auto& e : eps) agents_hist[static_cast<int>(e.agents.size())]++;
    std::ofstream sum(summary_path);
    sum << "episodes " << eps.size() << "\n";
    if (!eps.empty())
        sum << "T " << eps[0].T << "\nT' " << eps[0].Tp << "\ndt " << eps[0].dt << "\n"
            << "duration_s " << fmt17((eps[0].T + eps[0].Tp) * eps[0].dt) << "\n";
    sum << "agents_per_episode_histogram\n";
    for (const auto& [n, cnt] : agents_hist) sum << "  " << n << " " << cnt << "\n";

    json manifest{{"command", "prepare"},
                  {"seed", opt.seed},
                  {"source", src_info},
                  {"episodes", eps.size()},
                  {"out", opt.out_path},
                  {"out_fnv1a", std::to_string(fnv1a_file(opt.out_path))}};
    const std::string mdir = dir.empty() ? "." : dir;
    std::ofstream mout(mdir + "/" + fs::path(opt.out_path).stem().string() + "_manifest.json");
    mout << manifest.dump(2) << "\n";
    return opt.out_path;
}

// ------------------------------------------------------------------ train

std::string cmd_train(const TrainOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    Config cfg = assemble_config(opt.config_path, opt.overrides);
    auto eps = data::read_episodes(opt.data_path);
    const std::string dir = make_run_dir(opt.out_dir, opt.seed);

    json manifest{{"command", "train"},
                  {"variant", opt.variant},
                  {"seed", opt.seed},
                  {"config", config_echo(cfg)},
                  {"dataset", {{"path", opt.data_path},
                               {"fnv1a", std::to_string(fnv1a_file(opt.data_path))},
                               {"episodes", eps.size()}}}};

    training::TrainConfig tcfg = cfg.train_config(opt.seed);
    std::vector<training::LossRow> log;

    if (opt.variant == "gan") {
        if (opt.init_from.empty())
            throw ConfigError(
                "train gan: --init-from <deterministic checkpoint> is required (the GAN warm "
                "starts from the trained deterministic model)");
        auto det = model::load_checkpoint(opt.init_from);
        if (det.kind != "deterministic")
            throw ConfigError("train gan: --init-from must be a deterministic checkpoint");
        auto res = training::train_gan(eps, det, tcfg);
        log = std::move(res.log);
        std::map<std::string, std::string> meta{
            {"variant", "gan"},
            {"optimizer", "adam lr=" + fmt17(tcfg.lr) + " lr_d=" + fmt17(tcfg.lr_d)},
            {"lambda", fmt17(tcfg.lambda)},
            {"seed", std::to_string(opt.seed)},
            {"init_from", opt.init_from}};
        model::save_checkpoint(dir + "/generator.json", "generator", res.generator->config(),
                               res.generator->params(), meta);
        model::save_checkpoint(dir + "/discriminator.json", "discriminator",
                               res.discriminator->config(), res.discriminator->params(), meta);
        manifest["checkpoints"] = {dir + "/generator.json", dir + "/discriminator.json"};
    } else {
        const VariantKind variant = model::variant_from_string(opt.variant);
        model::ModelConfig mcfg = fit_to_dataset(cfg.model_config(), cfg, eps);
        auto res = training::train_deterministic(eps, variant, mcfg, tcfg);
        log = std::move(res.log);
        std::map<std::string, std::string> meta{
            {"variant", opt.variant},
            {"optimizer", "adam lr=" + fmt17(tcfg.lr)},
            {"seed", std::to_string(opt.seed)}};
        model::save_checkpoint(dir + "/checkpoint.json", "deterministic", res.net->config(),
                               res.net->params(), meta);
        manifest["checkpoints"] = {dir + "/checkpoint.json"};
    }

    training::write_loss_csv(dir + "/loss.csv", log);
    manifest["loss_csv"] = dir + "/loss.csv";
    manifest["wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
    write_manifest(dir, manifest);
    return dir;
}

// ------------------------------------------------------------------- eval

std::string cmd_eval(const EvalOptions& opt) {
    const auto t0 = std::chrono::steady_clock::now();
    auto ck = model::load_checkpoint(opt.checkpoint_path);
    if (ck.kind == "discriminator")
        throw ConfigError("eval: cannot evaluate a discriminator checkpoint");
    MatfNet net(ck.config, 0);
    model::restore_params(net.params(), ck);
    auto eps = data::read_episodes(opt.data_path);
    const VariantKind variant = eval_variant(ck, opt.variant);

    metrics::Protocol proto;
    proto.stochastic = opt.samples > 0;
    proto.n_samples = std::max(1, opt.samples);
    proto.noise_seed = data::split_seed(opt.seed, 3);

    auto report = metrics::evaluate(net, variant, eps, proto);
    const std::string dir = make_run_dir(opt.out_dir, opt.seed);
    metrics::write_report_csv(dir + "/metrics.csv", report);
    std::ofstream(dir + "/summary.txt") << metrics::report_summary(report);

    if (opt.plot)
        render_plots(net, variant, eps, opt.plot_episodes, opt.plot_samples, opt.seed, dir);

    json manifest{{"command", "eval"},
                  {"checkpoint", opt.checkpoint_path},
                  {"checkpoint_fnv1a", std::to_string(fnv1a_file(opt.checkpoint_path))},
                  {"dataset", {{"path", opt.data_path},
                               {"fnv1a", std::to_string(fnv1a_file(opt.data_path))}}},
                  {"variant", model::to_string(variant)},
                  {"samples", proto.stochastic ? proto.n_samples : 0},
                  {"seed", opt.seed},
                  {"metrics_csv", dir + "/metrics.csv"},
                  {"metrics_fnv1a", std::to_string(fnv1a_file(dir + "/metrics.csv"))},
                  {"ade", report.ade},
                  {"fde", report.fde},
                  {"wall_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count()}};
    write_manifest(dir, manifest);
    return dir;
}

// ----------------------------------------------------------------- ablate

std::string cmd_ablate(const AblateOptions& opt) {
    Config cfg = assemble_config(opt.config_path, opt.overrides);
    auto all = data::read_episodes(opt.data_path);
    auto [train_set, holdout] = split_holdout(all, opt.holdout_fraction, opt.seed);
    const std::string dir = make_run_dir(opt.out_dir, opt.seed);

    model::ModelConfig mcfg = fit_to_dataset(cfg.model_config(), cfg, train_set);
    training::TrainConfig tcfg = cfg.train_config(opt.seed);

    struct Row {
        std::string name;
        metrics::EvalReport rep;
    };
    std::vector<Row> rows;

    std::unique_ptr<MatfNet> mas_net;  // multi_agent_scene net reused for GAN warm start
    for (VariantKind v : {VariantKind::lstm_only, VariantKind::single_agent_scene,
                          VariantKind::multi_agent, VariantKind::multi_agent_scene}) {
        auto res = training::train_deterministic(train_set, v, mcfg, tcfg);
        metrics::Protocol proto;
        rows.push_back({model::to_string(v), metrics::evaluate(*res.net, v, holdout, proto)});
        training::write_loss_csv(dir + "/loss_" + model::to_string(v) + ".csv", res.log);
        if (v == VariantKind::multi_agent_scene) mas_net = std::move(res.net);
    }

    std::map<std::string, std::string> meta{{"variant", "multi_agent_scene"}};
    const std::string det_ck = dir + "/det_multi_agent_scene.json";
    model::save_checkpoint(det_ck, "deterministic", mas_net->config(), mas_net->params(), meta);
    auto gan = training::train_gan(train_set, model::load_checkpoint(det_ck), tcfg);
    training::write_loss_csv(dir + "/loss_gan.csv", gan.log);
    metrics::Protocol gan_proto;
    gan_proto.stochastic = true;
    gan_proto.n_samples = opt.gan_samples;
    gan_proto.noise_seed = data::split_seed(opt.seed, 3);
    rows.push_back({"gan", metrics::evaluate(*gan.generator, VariantKind::multi_agent_scene,
                                             holdout, gan_proto)});

    std::ofstream out(dir + "/ablation.csv");
    out << "variant";
    for (int t = 1; t <= mcfg.Tp; ++t) out << ",mae_" << t;
    out << ",ade,fde\n";
    for (const auto& r : rows) {
        out << r.name;
        for (double v : r.rep.mae) out << "," << fmt17(v);
        out << "," << fmt17(r.rep.ade) << "," << fmt17(r.rep.fde) << "\n";
    }
    out.close();

    json manifest{{"command", "ablate"},
                  {"seed", opt.seed},
                  {"config", config_echo(cfg)},
                  {"dataset", {{"path", opt.data_path},
                               {"fnv1a", std::to_string(fnv1a_file(opt.data_path))}}},
                  {"table", dir + "/ablation.csv"},
                  {"table_fnv1a", std::to_string(fnv1a_file(dir + "/ablation.csv"))}};
    write_manifest(dir, manifest);
    return dir;
}

// -------------------------------------------------------------- sweep-res

SceneContext resample_scene(const SceneContext& s, int new_hw) {
    SceneContext out;
    out.H = out.W = new_hw;
    out.C = s.C;
    out.origin = s.origin;
    out.meters_per_cell = s.meters_per_cell * s.H / new_hw;
    out.channel_semantics = s.channel_semantics;
    out.grid.assign(static_cast<std::size_t>(new_hw) * new_hw * s.C, 0.0);
    for (int r = 0; r < new_hw; ++r)
        for (int c = 0; c < new_hw; ++c) {
            const int sr = std::min(s.H - 1, r * s.H / new_hw);
            const int sc = std::min(s.W - 1, c * s.W / new_hw);
            for (int ch = 0; ch < s.C; ++ch) out.at(r, c, ch) = s.at(sr, sc, ch);
        }
    return out;
}

std::string cmd_sweep_resolution(const SweepOptions& opt) {
    Config cfg = assemble_config(opt.config_path, opt.overrides);
    auto all = data::read_episodes(opt.data_path);
    const std::string dir = make_run_dir(opt.out_dir, opt.seed);

    const int depth = cfg.get_int("unet_depth", 2);
    for (int r : opt.resolutions) {
        if (r <= 0 || (r & (r - 1)) != 0 || r < (1 << depth)) {
            std::ostringstream valid;
            for (int v = 1 << depth; v <= 128; v *= 2) valid << " " << v;
            throw ConfigError("sweep-res: resolution " + std::to_string(r) +
                              " invalid with unet_depth=" + std::to_string(depth) +
                              "; valid:" + valid.str());
        }
    }

    std::ofstream out(dir + "/sweep.csv");
    out << "resolution,ade,fde\n";
    for (int r : opt.resolutions) {
        std::vector<Episode> scaled = all;
        for (auto& e : scaled) e.scene = resample_scene(e.scene, r);
        auto [train_set, holdout] = split_holdout(scaled, opt.holdout_fraction, opt.seed);
        Config c2 = cfg;
        c2.set("grid", std::to_string(r));
        c2.set("scene_down", "1");
        model::ModelConfig mcfg = fit_to_dataset(c2.model_config(), c2, train_set);
        auto res = training::train_deterministic(train_set, VariantKind::multi_agent_scene,
                                                 mcfg, cfg.train_config(opt.seed));
        metrics::Protocol proto;
        auto rep = metrics::evaluate(*res.net, VariantKind::multi_agent_scene, holdout, proto);
        out << r << "," << fmt17(rep.ade) << "," << fmt17(rep.fde) << "\n";
    }
    out.close();

    json manifest{{"command", "sweep-res"},
                  {"seed", opt.seed},
                  {"config", config_echo(cfg)},
                  {"dataset", {{"path", opt.data_path},
                               {"fnv1a", std::to_string(fnv1a_file(opt.data_path))}}},
                  {"table", dir + "/sweep.csv"},
                  {"table_fnv1a", std::to_string(fnv1a_file(dir + "/sweep.csv"))}};
    write_manifest(dir, manifest);
    return dir;
}

// ------------------------------------------------------------------ bench

std::vector<Episode> bench_episodes(int n_agents, int n_episodes, std::uint64_t seed,
                                    const data::SynthOptions& opt) {
    std::mt19937_64 rng(seed);
    std::vector<Episode> out;
    for (int ep = 0; ep < n_episodes; ++ep) {
        auto [eps, oracle] =
            data::synth_scenarios(data::SynthKind::const_velocity, 1, rng(), opt);
        Episode e = std::move(eps[0]);
        // replicate to exactly n agents with jittered anchors
        while (static_cast<int>(e.agents.size()) < n_agents) {
            EpisodeAgent a = e.agents[0];
            const double ox = (static_cast<double>(rng() % 1000) / 1000.0 - 0.5) * 8.0;
            const double oy = (static_cast<double>(rng() % 1000) / 1000.0 - 0.5) * 8.0;
            a.agent_id = "b" + std::to_string(e.agents.size());
            for (auto& p : a.past) {
                p[0] += ox;
                p[1] += oy;
            }
            for (auto& p : a.future) {
                p[0] += ox;
                p[1] += oy;
            }
            a.anchor = a.past.back();
            try {
                world_to_grid(a.anchor, e.scene);
            } catch (const PlacementError&) {
                continue;
            }
            e.agents.push_back(std::move(a));
        }
        e.agents.resize(static_cast<std::size_t>(n_agents));
        out.push_back(std::move(e));
    }
    return out;
}

BenchResult cmd_bench_scaling(const BenchOptions& opt) {
    Config cfg = assemble_config(opt.config_path, opt.overrides);
    BenchResult res;
    res.out_dir = make_run_dir(opt.out_dir, opt.seed);

    data::SynthOptions so;
    so.grid = cfg.get_int("grid", 32);
    model::ModelConfig mcfg = cfg.model_config();
    mcfg.grid = so.grid;
    mcfg.scene_down = 1;
    mcfg.T = so.T;
    mcfg.Tp = so.Tp;
    mcfg.validate();
    MatfNet net(mcfg, data::split_seed(opt.seed, 2));

    std::ofstream out(res.out_dir + "/bench.csv");
    out << "n_agents,mean_ms,fuse_invocations_per_episode\n";
    for (int n : opt.agent_counts) {
        auto eps = bench_episodes(n, opt.episodes_per_count, data::split_seed(opt.seed, 0xD), so);
        // warm-up pass, then timed repeats
        net.forward(eps[0], VariantKind::multi_agent_scene);
        net.reset_fuse_count();
        double best_ms = 1e300;
        for (int rep = 0; rep < opt.repeats; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            for (const auto& e : eps) net.forward(e, VariantKind::multi_agent_scene);
            const double ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count() /
                              static_cast<double>(eps.size());
            best_ms = std::min(best_ms, ms);
        }
        const long fuse_per_ep =
            net.fuse_invocations() / (static_cast<long>(eps.size()) * opt.repeats);
        net.reset_fuse_count();
        res.agent_counts.push_back(n);
        res.mean_ms.push_back(best_ms);
        res.fuse_per_episode.push_back(fuse_per_ep);
        out << n << "," << fmt17(best_ms) << "," << fuse_per_ep << "\n";
    }

    // least-squares slope of log(time) vs log(n)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto m = static_cast<double>(res.agent_counts.size());
    for (std::size_t i = 0; i < res.agent_counts.size(); ++i) {
        const double x = std::log(static_cast<double>(res.agent_counts[i]));
        const double y = std::log(res.mean_ms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    res.loglog_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    out << "loglog_slope," << fmt17(res.loglog_slope) << ",\n";
    out.close();

    json manifest{{"command", "bench"},
                  {"seed", opt.seed},
                  {"agent_counts", res.agent_counts},
                  {"loglog_slope", res.loglog_slope},
                  {"table", res.out_dir + "/bench.csv"}};
    write_manifest(res.out_dir, manifest);
    return res;
}

// ------------------------------------------------------------------- plot

std::string cmd_plot(const PlotOptions& opt) {
    auto ck = model::load_checkpoint(opt.checkpoint_path);
    if (ck.kind == "discriminator") throw ConfigError("plot: needs a generator checkpoint");
    MatfNet net(ck.config, 0);
    model::restore_params(net.params(), ck);
    auto eps = data::read_episodes(opt.data_path);
    const std::string dir = make_run_dir(opt.out_dir, opt.seed);
    render_plots(net, eval_variant(ck, opt.variant), eps, opt.episodes, opt.samples, opt.seed,
                 dir);
    json manifest{{"command", "plot"},
                  {"checkpoint", opt.checkpoint_path},
                  {"dataset", opt.data_path},
                  {"episodes", opt.episodes},
                  {"samples", opt.samples},
                  {"seed", opt.seed}};
    write_manifest(dir, manifest);
    return dir;
}

}  // namespace matf::harness
