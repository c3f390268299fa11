#include "matf/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace matf::model {

using ad::Var;
using nlohmann::json;

VariantKind variant_from_string(const std::string& s) {
    if (s == "lstm") return VariantKind::lstm_only;
    if (s == "single_agent_scene") return VariantKind::single_agent_scene;
    if (s == "multi_agent") return VariantKind::multi_agent;
    if (s == "multi_agent_scene") return VariantKind::multi_agent_scene;
    throw ConfigError("unknown variant: " + s +
                      " (expected lstm|single_agent_scene|multi_agent|multi_agent_scene)");
}

std::string to_string(VariantKind v) {
    switch (v) {
        case VariantKind::lstm_only: return "lstm";
        case VariantKind::single_agent_scene: return "single_agent_scene";
        case VariantKind::multi_agent: return "multi_agent";
        case VariantKind::multi_agent_scene: return "multi_agent_scene";
    }
    throw ConfigError("bad VariantKind");
}

namespace {

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace

void ModelConfig::validate() const {
    if (T < 2 || Tp < 1 || !(dt > 0.0)) throw ConfigError("model config: bad T/T'/dt");
    if (d_agent < 1 || c_scene < 1 || c_in < 1 || unet_width < 1 || d_noise < 1 || hidden < 1)
        throw ConfigError("model config: widths must be >= 1");
    if (!is_pow2(grid) || grid < (1 << unet_depth))
        throw ConfigError("model config: grid must be a power of two >= 2^unet_depth (got " +
                          std::to_string(grid) + ")");
    if (!is_pow2(scene_down)) throw ConfigError("model config: scene_down must be a power of two");
    if (unet_depth < 0) throw ConfigError("model config: unet_depth must be >= 0");
}

Var ParamStore::add(const std::string& name, Tensor init) {
    auto [it, fresh] = params.emplace(name, ad::leaf(std::move(init)));
    if (!fresh) throw ConfigError("duplicate parameter: " + name);
    return it->second;
}

const Var& ParamStore::at(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw ConfigError("missing parameter: " + name);
    return it->second;
}

void ParamStore::zero_grad() {
    for (auto& [name, p] : params) p->g().fill(0.0);
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params) n += p->val.numel();
    return n;
}

namespace {

struct Init {
    std::mt19937_64 rng;
    explicit Init(std::uint64_t seed) : rng(seed) {}

    Tensor uniform(std::vector<int> shape, int fan_in) {
        Tensor t(std::move(shape));
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            t[i] = a * (2.0 * u - 1.0);
        }
        return t;
    }
};

void add_lstm(ParamStore& ps, Init& init, const std::string& prefix, int in, int hidden) {
    ps.add(prefix + ".w_ih", init.uniform({4 * hidden, in}, in));
    ps.add(prefix + ".w_hh", init.uniform({4 * hidden, hidden}, hidden));
    Tensor b({4 * hidden});
    for (int i = hidden; i < 2 * hidden; ++i) b[i] = 1.0;  // forget-gate bias
    ps.add(prefix + ".b", std::move(b));
}

void add_conv(ParamStore& ps, Init& init, const std::string& prefix, int cout, int k, int cin) {
    ps.add(prefix + ".w", init.uniform({cout, k, k, cin}, k * k * cin));
    ps.add(prefix + ".b", Tensor({cout}));
}

void add_linear(ParamStore& ps, Init& init, const std::string& prefix, int out, int in) {
    ps.add(prefix + ".w", init.uniform({out, in}, in));
    ps.add(prefix + ".b", Tensor({out}));
}

int n_scene_layers(const ModelConfig& cfg) {
    int n = 0;
    for (int s = cfg.scene_down; s > 1; s /= 2) ++n;
    return std::max(1, n);
}

void add_trunk(ParamStore& ps, Init& init, const ModelConfig& cfg, int enc_seq_input) {
    (void)enc_seq_input;
    add_lstm(ps, init, "enc_lstm", 2, cfg.hidden);
    add_linear(ps, init, "enc_proj", cfg.d_agent, cfg.hidden);
    const int nsc = n_scene_layers(cfg);
    for (int i = 0; i < nsc; ++i)
        add_conv(ps, init, "scene" + std::to_string(i), cfg.c_scene, 3,
                 i == 0 ? cfg.c_in : cfg.c_scene);
    const int F = cfg.unet_width;
    for (int l = 0; l <= cfg.unet_depth; ++l)
        add_conv(ps, init, "unet_enc" + std::to_string(l), F, 3,
                 l == 0 ? cfg.d_agent + cfg.c_scene : F);
    for (int l = cfg.unet_depth - 1; l >= 0; --l)
        add_conv(ps, init, "unet_dec" + std::to_string(l), F, 3, 2 * F);
    add_conv(ps, init, "unet_out", cfg.d_agent, 1, F);
}

Var run_enc_lstm(const ParamStore& ps, const ModelConfig& cfg,
                 const std::vector<Vec2>& seq) {
    Var h = ad::constant(Tensor({cfg.hidden}));
    Var c = ad::constant(Tensor({cfg.hidden}));
    const Var& w_ih = ps.at("enc_lstm.w_ih");
    const Var& w_hh = ps.at("enc_lstm.w_hh");
    const Var& b = ps.at("enc_lstm.b");
    for (const auto& p : seq) {
        Var x = ad::constant(Tensor({2}, {p[0], p[1]}));
        lstm_step(w_ih, w_hh, b, x, h, c);
    }
    return ad::affine(ps.at("enc_proj.w"), ps.at("enc_proj.b"), h);
}

Var run_scene_encoder(const ParamStore& ps, const ModelConfig& cfg, const SceneContext& scene) {
    const int want = cfg.grid * cfg.scene_down;
    if (scene.H != want || scene.W != want)
        throw ConfigError("encode_scene: raster " + std::to_string(scene.H) + "x" +
                          std::to_string(scene.W) + " not divisible down to " +
                          std::to_string(cfg.grid) + "x" + std::to_string(cfg.grid) +
                          " (expected " + std::to_string(want) + ")");
    if (scene.C != cfg.c_in) throw ConfigError("encode_scene: channel count mismatch");
    Var x = ad::constant(Tensor({scene.H, scene.W, scene.C}, scene.grid));
    const int nsc = n_scene_layers(cfg);
    const bool downsample = cfg.scene_down > 1;
    for (int i = 0; i < nsc; ++i) {
        const std::string p = "scene" + std::to_string(i);
        x = ad::tanh_(ad::conv2d(x, ps.at(p + ".w"), ps.at(p + ".b"), 3, downsample ? 2 : 1));
    }
    return x;
}

Var run_unet(const ParamStore& ps, const ModelConfig& cfg, const Var& mat) {
    std::vector<Var> skips;
    Var x = mat;
    for (int l = 0; l <= cfg.unet_depth; ++l) {
        if (l > 0) x = ad::avgpool2(x);
        const std::string p = "unet_enc" + std::to_string(l);
        x = ad::tanh_(ad::conv2d(x, ps.at(p + ".w"), ps.at(p + ".b"), 3, 1));
        if (l < cfg.unet_depth) skips.push_back(x);
    }
    for (int l = cfg.unet_depth - 1; l >= 0; --l) {
        const std::string p = "unet_dec" + std::to_string(l);
        x = ad::concat_channels(ad::upsample2(x), skips[static_cast<std::size_t>(l)]);
        x = ad::tanh_(ad::conv2d(x, ps.at(p + ".w"), ps.at(p + ".b"), 3, 1));
    }
    return ad::conv2d(x, ps.at("unet_out.w"), ps.at("unet_out.b"), 1, 1);
}

std::vector<Vec2> anchor_relative(const EpisodeAgent& a, bool already_centered,
                                  const std::vector<Vec2>& seg) {
    if (already_centered) return seg;
    std::vector<Vec2> out;
    out.reserve(seg.size());
    for (const auto& p : seg) out.push_back({p[0] - a.anchor[0], p[1] - a.anchor[1]});
    return out;
}

}  // namespace

Var lstm_step(const Var& w_ih, const Var& w_hh, const Var& b, const Var& x, Var& h, Var& c) {
    const int H = h->val.dim(0);
    Var pre = ad::add(ad::add(ad::matvec(w_ih, x), ad::matvec(w_hh, h)), b);
    Var i = ad::sigmoid_(ad::slice1d(pre, 0, H));
    Var f = ad::sigmoid_(ad::slice1d(pre, H, H));
    Var g = ad::tanh_(ad::slice1d(pre, 2 * H, H));
    Var o = ad::sigmoid_(ad::slice1d(pre, 3 * H, H));
    c = ad::add(ad::mul(f, c), ad::mul(i, g));
    h = ad::mul(o, ad::tanh_(c));
    return h;
}

MatfNet::MatfNet(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    Init init(init_seed);
    add_trunk(params_, init, cfg_, cfg_.T);
    add_linear(params_, init, "dec_init_h", cfg_.hidden, cfg_.d_agent + cfg_.d_noise);
    add_linear(params_, init, "dec_init_c", cfg_.hidden, cfg_.d_agent + cfg_.d_noise);
    add_lstm(params_, init, "dec_lstm", 2, cfg_.hidden);
    add_linear(params_, init, "dec_head", 2, cfg_.hidden);
}

Var MatfNet::encode_agent(const std::vector<Vec2>& past_rel) const {
    if (past_rel.size() != static_cast<std::size_t>(cfg_.T))
        throw ShapeError("encode_agent: expected " + std::to_string(cfg_.T) + " past steps, got " +
                         std::to_string(past_rel.size()));
    return run_enc_lstm(params_, cfg_, past_rel);
}

Var MatfNet::encode_scene(const SceneContext& scene) const {
    return run_scene_encoder(params_, cfg_, scene);
}

Var MatfNet::build_mat(const std::vector<Var>& vectors,
                       const std::vector<std::pair<int, int>>& cells,
                       const Var& scene_feat) const {
    if (vectors.empty()) throw InputError("build_mat: need at least one agent");
    Var agent_block = ad::scatter_max(vectors, cells, cfg_.grid, cfg_.grid);
    return ad::concat_channels(agent_block, scene_feat);
}

Var MatfNet::fuse(const Var& mat) const {
    if (mat->val.dim(0) != cfg_.grid || mat->val.dim(1) != cfg_.grid)
        throw ConfigError("fuse: spatial dims incompatible with config grid");
    ++fuse_count_;
    return run_unet(params_, cfg_, mat);
}

Var MatfNet::decode_agent(const Var& final_vec, const Tensor& z) const {
    if (final_vec->val.numel() != static_cast<std::size_t>(cfg_.d_agent))
        throw ShapeError("decode_agent: final vector width mismatch");
    if (z.numel() != static_cast<std::size_t>(cfg_.d_noise))
        throw ShapeError("decode_agent: noise width mismatch");
    Var fin_z = ad::concat_flat({final_vec, ad::constant(z)}, {cfg_.d_agent + cfg_.d_noise});
    Var h = ad::tanh_(ad::affine(params_.at("dec_init_h.w"), params_.at("dec_init_h.b"), fin_z));
    Var c = ad::tanh_(ad::affine(params_.at("dec_init_c.w"), params_.at("dec_init_c.b"), fin_z));
    const Var& w_ih = params_.at("dec_lstm.w_ih");
    const Var& w_hh = params_.at("dec_lstm.w_hh");
    const Var& b = params_.at("dec_lstm.b");

    Var prev_delta = ad::constant(Tensor({2}));
    Var pos = ad::constant(Tensor({2}));  // anchor-relative origin
    std::vector<Var> steps;
    for (int t = 0; t < cfg_.Tp; ++t) {
        lstm_step(w_ih, w_hh, b, prev_delta, h, c);
        Var delta = ad::affine(params_.at("dec_head.w"), params_.at("dec_head.b"), h);
        pos = ad::add(pos, delta);
        steps.push_back(pos);
        prev_delta = delta;
    }
    return ad::concat_flat(std::move(steps), {cfg_.Tp, 2});
}

std::pair<int, int> MatfNet::placement_cell(const Vec2& p, const SceneContext& scene) const {
    return world_to_grid_scaled(p, scene, cfg_.scene_down);
}

MatfNet::Forward MatfNet::forward(const Episode& e, VariantKind variant,
                                  const std::vector<Tensor>& z_per_agent) const {
    if (e.agents.empty()) throw InputError("forward: episode has no agents");
    if (e.T != cfg_.T || e.Tp != cfg_.Tp)
        throw ConfigError("forward: episode windowing (T=" + std::to_string(e.T) + ",T'=" +
                          std::to_string(e.Tp) + ") does not match model config");
    const std::size_t n = e.agents.size();
    if (!z_per_agent.empty() && z_per_agent.size() != n)
        throw InputError("forward: z count != agent count");
    const Tensor z0({cfg_.d_noise});
    auto z_of = [&](std::size_t i) -> const Tensor& {
        return z_per_agent.empty() ? z0 : z_per_agent[i];
    };

    Forward out;
    for (const auto& a : e.agents) out.cells.push_back(placement_cell(a.anchor, e.scene));

    if (variant == VariantKind::lstm_only) {
        for (std::size_t i = 0; i < n; ++i) {
            Var x = encode_agent(anchor_relative(e.agents[i], e.anchor_centered, e.agents[i].past));
            out.trajectories.push_back(decode_agent(x, z_of(i)));
        }
        return out;
    }

    std::vector<Var> enc(n);
    for (std::size_t i = 0; i < n; ++i)
        enc[i] = encode_agent(anchor_relative(e.agents[i], e.anchor_centered, e.agents[i].past));

    if (variant == VariantKind::single_agent_scene) {
        Var scene_feat = encode_scene(e.scene);
        for (std::size_t i = 0; i < n; ++i) {
            Var mat = build_mat({enc[i]}, {out.cells[i]}, scene_feat);
            Var fused = fuse(mat);
            Var xi = ad::grid_slice(fused, out.cells[i].first, out.cells[i].second);
            out.trajectories.push_back(decode_agent(ad::add(enc[i], xi), z_of(i)));
        }
        return out;
    }

    Var scene_feat = variant == VariantKind::multi_agent
                         ? ad::constant(Tensor({cfg_.grid, cfg_.grid, cfg_.c_scene}))
                         : encode_scene(e.scene);
    Var mat = build_mat(enc, out.cells, scene_feat);
    Var fused = fuse(mat);  // one shared pass for all agents
    for (std::size_t i = 0; i < n; ++i) {
        Var xi = ad::grid_slice(fused, out.cells[i].first, out.cells[i].second);
        out.trajectories.push_back(decode_agent(ad::add(enc[i], xi), z_of(i)));
    }
    return out;
}

// --- discriminator ---

Discriminator::Discriminator(ModelConfig cfg, std::uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    Init init(init_seed);
    add_trunk(params_, init, cfg_, cfg_.T + cfg_.Tp);
    add_linear(params_, init, "dhead1", cfg_.hidden, cfg_.d_agent);
    add_linear(params_, init, "dhead2", 1, cfg_.hidden);
}

std::vector<Var> Discriminator::score(const Episode& e,
                                      const std::vector<Var>& futures_rel) const {
    if (e.agents.empty()) throw InputError("discriminate: episode has no agents");
    if (futures_rel.size() != e.agents.size())
        throw InputError("discriminate: every agent needs a future trajectory");
    const std::size_t n = e.agents.size();

    std::vector<Var> enc(n);
    std::vector<std::pair<int, int>> cells(n);
    const Var& w_ih = params_.at("enc_lstm.w_ih");
    const Var& w_hh = params_.at("enc_lstm.w_hh");
    const Var& b = params_.at("enc_lstm.b");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = e.agents[i];
        if (futures_rel[i]->val.ndim() != 2 ||
            futures_rel[i]->val.dim(0) != cfg_.Tp || futures_rel[i]->val.dim(1) != 2)
            throw InputError("discriminate: future must be T'x2");
        cells[i] = world_to_grid_scaled(a.anchor, e.scene, cfg_.scene_down);
        // past (constants) then future (graph input) through one shared LSTM
        Var h = ad::constant(Tensor({cfg_.hidden}));
        Var c = ad::constant(Tensor({cfg_.hidden}));
        for (const auto& p : anchor_relative(a, e.anchor_centered, a.past)) {
            Var x = ad::constant(Tensor({2}, {p[0], p[1]}));
            lstm_step(w_ih, w_hh, b, x, h, c);
        }
        for (int t = 0; t < cfg_.Tp; ++t) {
            Var x = ad::slice1d(futures_rel[i], 2 * t, 2);
            lstm_step(w_ih, w_hh, b, x, h, c);
        }
        enc[i] = ad::affine(params_.at("enc_proj.w"), params_.at("enc_proj.b"), h);
    }

    Var scene_feat = run_scene_encoder(params_, cfg_, e.scene);
    Var agent_block = ad::scatter_max(enc, cells, cfg_.grid, cfg_.grid);
    Var fused = run_unet(params_, cfg_, ad::concat_channels(agent_block, scene_feat));

    std::vector<Var> scores;
    for (std::size_t i = 0; i < n; ++i) {
        Var xi = ad::grid_slice(fused, cells[i].first, cells[i].second);
        Var fin = ad::add(enc[i], xi);
        Var hid = ad::tanh_(ad::affine(params_.at("dhead1.w"), params_.at("dhead1.b"), fin));
        Var s = ad::sigmoid_(ad::affine(params_.at("dhead2.w"), params_.at("dhead2.b"), hid));
        scores.push_back(ad::clamp_(s, kScoreClamp, 1.0 - kScoreClamp));
    }
    return scores;
}

void Discriminator::init_from(const MatfNet& net) {
    if (!(net.config() == cfg_))
        throw ConfigError("discriminator init_from: config mismatch");
    for (auto& [name, p] : params_.params) {
        auto it = net.params().params.find(name);
        if (it == net.params().params.end()) continue;  // d-head layers stay fresh
        if (!it->second->val.same_shape(p->val)) continue;
        p->val = it->second->val;
    }
}

// --- checkpoints ---

namespace {

json config_to_json(const ModelConfig& c) {
    return json{{"t", c.T},           {"tp", c.Tp},
                {"dt", c.dt},         {"d_agent", c.d_agent},
                {"c_scene", c.c_scene}, {"c_in", c.c_in},
                {"grid", c.grid},     {"unet_depth", c.unet_depth},
                {"unet_width", c.unet_width}, {"d_noise", c.d_noise},
                {"hidden", c.hidden}, {"scene_down", c.scene_down}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.T = j.at("t");
    c.Tp = j.at("tp");
    c.dt = j.at("dt");
    c.d_agent = j.at("d_agent");
    c.c_scene = j.at("c_scene");
    c.c_in = j.at("c_in");
    c.grid = j.at("grid");
    c.unet_depth = j.at("unet_depth");
    c.unet_width = j.at("unet_width");
    c.d_noise = j.at("d_noise");
    c.hidden = j.at("hidden");
    c.scene_down = j.at("scene_down");
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& kind, const ModelConfig& cfg,
                     const ParamStore& params, const std::map<std::string, std::string>& meta) {
    json tensors = json::object();
    for (const auto& [name, p] : params.params) {
        tensors[name] = {{"shape", p->val.shape()},
                         {"data", std::vector<double>(p->val.data(),
                                                      p->val.data() + p->val.numel())}};
    }
    json j{{"format", "matf-checkpoint"},
           {"version", kCheckpointVersion},
           {"kind", kind},
           {"config", config_to_json(cfg)},
           {"meta", meta},
           {"params", tensors}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump();
    if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || j.value("format", "") != "matf-checkpoint")
        throw ParseError(path + ": not a matf checkpoint");
    if (j.value("version", -1) != kCheckpointVersion)
        throw ConfigError(path + ": unsupported checkpoint version");
    Checkpoint ck;
    ck.kind = j.at("kind");
    ck.config = config_from_json(j.at("config"));
    ck.config.validate();
    for (const auto& [name, t] : j.at("params").items()) {
        ck.tensors.emplace(name, Tensor(t.at("shape").get<std::vector<int>>(),
                                        t.at("data").get<std::vector<double>>()));
    }
    if (j.contains("meta"))
        ck.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return ck;
}

void restore_params(ParamStore& store, const Checkpoint& ck) {
    if (ck.tensors.size() != store.params.size())
        throw ConfigError("checkpoint: parameter set mismatch");
    for (auto& [name, p] : store.params) {
        auto it = ck.tensors.find(name);
        if (it == ck.tensors.end()) throw ConfigError("checkpoint: missing tensor " + name);
        if (!it->second.same_shape(p->val))
            throw ConfigError("checkpoint: shape mismatch for " + name);
        p->val = it->second;
    }
}

}  // namespace matf::model
