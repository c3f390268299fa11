#include "matf/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace matf::data {

namespace {

// Scenario constants shared by the generators and the closed-form oracle.
constexpr double kDodgeAmp = 1.5;       // lateral deviation amplitude, meters
constexpr double kExitAngle = 0.6109;   // 35 degrees, radians
constexpr double kObstacleRadius = 0.8;
constexpr double kObstacleOffset = 0.5; // lateral obstacle-center offset
constexpr double kObstacleAhead = 1.5;  // obstacle center ahead of anchor
constexpr int kChDrivable = 0, kChLane = 1, kChObstacle = 2;

double uni(std::mt19937_64& rng, double lo, double hi) {
    // 53-bit uniform; stable across standard libraries
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

Vec2 rotate(const Vec2& v, double ang) {
    const double c = std::cos(ang), s = std::sin(ang);
    return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t tag) {
    std::uint64_t z = master ^ tag;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<AgentTrack> load_ethucy_text(const std::string& path, Unit unit) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    struct Rec {
        std::int64_t frame;
        double x, y;
    };
    std::map<std::string, std::vector<Rec>> by_agent;
    std::vector<std::string> agent_order;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        double frame, x, y;
        std::string id;
        if (!(ls >> frame >> id >> x >> y))
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 numeric fields");
        std::string extra;
        if (ls >> extra)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 4 fields");
        if (!std::isfinite(frame) || !std::isfinite(x) || !std::isfinite(y))
            throw ParseError(path + ":" + std::to_string(lineno) + ": non-finite value");
        auto [it, fresh] = by_agent.try_emplace(id);
        if (fresh) agent_order.push_back(id);
        it->second.push_back({static_cast<std::int64_t>(std::llround(frame)), x, y});
    }

    // constant frame stride = gcd of all per-agent frame deltas
    std::int64_t stride = 0;
    for (const auto& [id, recs] : by_agent) {
        for (std::size_t i = 1; i < recs.size(); ++i) {
            const std::int64_t d = recs[i].frame - recs[i - 1].frame;
            if (d <= 0)
                throw DataError("agent " + id + ": non-monotonic frames");
            stride = std::gcd(stride, d);
        }
    }
    if (stride == 0) stride = 1;

    std::vector<AgentTrack> out;
    for (const auto& [id, recs] : by_agent) {
        AgentTrack t;
        t.agent_id = id;
        t.unit = unit;
        for (const auto& r : recs)
            t.timesteps.push_back({r.frame / stride, {r.x, r.y}});
        t.validate();  // rejects gaps after stride division
        out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end(), [](const AgentTrack& a, const AgentTrack& b) {
        // numeric when possible, lexicographic otherwise
        char* ea = nullptr;
        char* eb = nullptr;
        const double na = std::strtod(a.agent_id.c_str(), &ea);
        const double nb = std::strtod(b.agent_id.c_str(), &eb);
        if (*ea == '\0' && *eb == '\0' && na != nb) return na < nb;
        return a.agent_id < b.agent_id;
    });
    return out;
}

std::vector<Episode> segment_episodes(const std::vector<AgentTrack>& tracks,
                                      const SceneContext& scene, const DatasetSpec& spec) {
    spec.validate();
    scene.validate();
    std::vector<Episode> out;
    if (tracks.empty()) return out;

    std::int64_t lo = tracks[0].timesteps.front().step;
    std::int64_t hi = tracks[0].timesteps.back().step;
    for (const auto& t : tracks) {
        if (t.timesteps.empty()) continue;
        lo = std::min(lo, t.timesteps.front().step);
        hi = std::max(hi, t.timesteps.back().step);
    }
    const int win = spec.T + spec.Tp;

    for (std::int64_t w = lo; w + win - 1 <= hi; w += spec.stride) {
        Episode e;
        e.scene = scene;
        e.T = spec.T;
        e.Tp = spec.Tp;
        e.dt = spec.dt;
        for (const auto& t : tracks) {
            if (t.timesteps.empty()) continue;
            e.unit = t.unit;
            if (t.timesteps.front().step > w || t.timesteps.back().step < w + win - 1) continue;
            EpisodeAgent a;
            a.agent_id = t.agent_id;
            const std::size_t off = static_cast<std::size_t>(w - t.timesteps.front().step);
            for (int k = 0; k < spec.T; ++k) a.past.push_back(t.timesteps[off + k].p);
            for (int k = 0; k < spec.Tp; ++k)
                a.future.push_back(t.timesteps[off + spec.T + k].p);
            a.anchor = a.past.back();
            try {
                world_to_grid(a.anchor, scene);
            } catch (const PlacementError&) {
                std::cerr << "warning: dropping agent " << a.agent_id << " at window " << w
                          << " (anchor outside scene)\n";
                continue;
            }
            e.agents.push_back(std::move(a));
        }
        if (!e.agents.empty()) out.push_back(std::move(e));
    }
    return out;
}

Episode normalize_episode(const Episode& e, Normalization mode) {
    if (mode == Normalization::none) return e;
    if (e.anchor_centered) return e;
    Episode out = e;
    for (auto& a : out.agents) {
        for (auto& p : a.past) {
            p[0] -= a.anchor[0];
            p[1] -= a.anchor[1];
        }
        for (auto& p : a.future) {
            p[0] -= a.anchor[0];
            p[1] -= a.anchor[1];
        }
    }
    out.anchor_centered = true;
    return out;
}

Episode denormalize_episode(const Episode& e) {
    if (!e.anchor_centered) return e;
    Episode out = e;
    for (auto& a : out.agents) {
        for (auto& p : a.past) {
            p[0] += a.anchor[0];
            p[1] += a.anchor[1];
        }
        for (auto& p : a.future) {
            p[0] += a.anchor[0];
            p[1] += a.anchor[1];
        }
    }
    out.anchor_centered = false;
    return out;
}

SynthKind synth_kind_from_string(const std::string& s) {
    if (s == "const_velocity") return SynthKind::const_velocity;
    if (s == "curved_lane") return SynthKind::curved_lane;
    if (s == "avoidance_pair") return SynthKind::avoidance_pair;
    if (s == "bimodal_exit") return SynthKind::bimodal_exit;
    if (s == "obstacle_field") return SynthKind::obstacle_field;
    throw ConfigError("unknown synthetic kind: " + s);
}

std::string to_string(SynthKind k) {
    switch (k) {
        case SynthKind::const_velocity: return "const_velocity";
        case SynthKind::curved_lane: return "curved_lane";
        case SynthKind::avoidance_pair: return "avoidance_pair";
        case SynthKind::bimodal_exit: return "bimodal_exit";
        case SynthKind::obstacle_field: return "obstacle_field";
    }
    throw ConfigError("bad SynthKind");
}

namespace {

SceneContext blank_scene(const SynthOptions& opt) {
    SceneContext s;
    s.H = s.W = opt.grid;
    s.C = 3;
    s.meters_per_cell = opt.extent_m / opt.grid;
    s.origin = {-opt.extent_m / 2.0, -opt.extent_m / 2.0};
    s.grid.assign(static_cast<std::size_t>(s.H) * s.W * s.C, 0.0);
    s.channel_semantics = {"drivable", "lane", "obstacle"};
    for (int r = 0; r < s.H; ++r)
        for (int c = 0; c < s.W; ++c) s.at(r, c, kChDrivable) = 1.0;
    return s;
}

Vec2 cell_center(const SceneContext& s, int r, int c) {
    return {s.origin[0] + (r + 0.5) * s.meters_per_cell,
            s.origin[1] + (c + 0.5) * s.meters_per_cell};
}

void paint_disk(SceneContext& s, int ch, const Vec2& center, double radius) {
    for (int r = 0; r < s.H; ++r)
        for (int c = 0; c < s.W; ++c) {
            const Vec2 p = cell_center(s, r, c);
            const double dx = p[0] - center[0], dy = p[1] - center[1];
            if (dx * dx + dy * dy <= radius * radius) s.at(r, c, ch) = 1.0;
        }
}

void paint_segment(SceneContext& s, int ch, const Vec2& a, const Vec2& b, double halfwidth) {
    const double vx = b[0] - a[0], vy = b[1] - a[1];
    const double len2 = vx * vx + vy * vy;
    for (int r = 0; r < s.H; ++r)
        for (int c = 0; c < s.W; ++c) {
            const Vec2 p = cell_center(s, r, c);
            double t = len2 > 0 ? ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            const double dx = p[0] - (a[0] + t * vx), dy = p[1] - (a[1] + t * vy);
            if (dx * dx + dy * dy <= halfwidth * halfwidth) s.at(r, c, ch) = 1.0;
        }
}

bool in_bounds(const SceneContext& s, const Vec2& p, double margin) {
    return p[0] >= s.origin[0] + margin &&
           p[0] <= s.origin[0] + s.H * s.meters_per_cell - margin &&
           p[1] >= s.origin[1] + margin &&
           p[1] <= s.origin[1] + s.W * s.meters_per_cell - margin;
}

EpisodeAgent make_agent(const std::string& id, const std::vector<Vec2>& pts, int T) {
    EpisodeAgent a;
    a.agent_id = id;
    a.past.assign(pts.begin(), pts.begin() + T);
    a.future.assign(pts.begin() + T, pts.end());
    a.anchor = a.past.back();
    return a;
}

// lateral ramp used by avoidance/obstacle deviations: j in 1..Tp
double ramp(int j, int Tp) { return static_cast<double>(j) / Tp; }

}  // namespace

std::vector<Vec2> OracleInfo::predict(const Episode& e, int agent_idx, int mode) const {
    const EpisodeAgent& a = e.agents[static_cast<std::size_t>(agent_idx)];
    const Vec2 anchor = a.anchor;
    const Vec2 prev = {a.past[a.past.size() - 2][0] + (e.anchor_centered ? a.anchor[0] : 0.0),
                       a.past[a.past.size() - 2][1] + (e.anchor_centered ? a.anchor[1] : 0.0)};
    Vec2 v = {(anchor[0] - prev[0]) / e.dt, (anchor[1] - prev[1]) / e.dt};
    std::vector<Vec2> out;

    switch (kind) {
        case SynthKind::const_velocity: {
            for (int j = 1; j <= e.Tp; ++j)
                out.push_back({anchor[0] + j * e.dt * v[0], anchor[1] + j * e.dt * v[1]});
            break;
        }
        case SynthKind::curved_lane: {
            // infer per-step turn angle from the last three past points
            const Vec2 pp = {a.past[a.past.size() - 3][0] + (e.anchor_centered ? a.anchor[0] : 0.0),
                             a.past[a.past.size() - 3][1] + (e.anchor_centered ? a.anchor[1] : 0.0)};
            const Vec2 v0 = {prev[0] - pp[0], prev[1] - pp[1]};
            const Vec2 v1 = {anchor[0] - prev[0], anchor[1] - prev[1]};
            const double ang = std::atan2(v0[0] * v1[1] - v0[1] * v1[0],
                                          v0[0] * v1[0] + v0[1] * v1[1]);
            Vec2 step = v1, p = anchor;
            for (int j = 1; j <= e.Tp; ++j) {
                step = rotate(step, ang);
                p = {p[0] + step[0], p[1] + step[1]};
                out.push_back(p);
            }
            break;
        }
        case SynthKind::avoidance_pair: {
            const int other = 1 - agent_idx;
            const double own_lat = anchor[1];
            const double other_lat = e.agents[static_cast<std::size_t>(other)].anchor[1];
            const double side = other_lat - own_lat >= 0.0 ? -1.0 : 1.0;
            for (int j = 1; j <= e.Tp; ++j)
                out.push_back({anchor[0] + j * e.dt * v[0],
                               anchor[1] + side * kDodgeAmp * ramp(j, e.Tp)});
            break;
        }
        case SynthKind::bimodal_exit: {
            const Vec2 dir = mode == 0 ? v : rotate(v, -kExitAngle);
            for (int j = 1; j <= e.Tp; ++j)
                out.push_back({anchor[0] + j * e.dt * dir[0], anchor[1] + j * e.dt * dir[1]});
            break;
        }
        case SynthKind::obstacle_field: {
            // centroid of the obstacle channel gives the blocked side
            double wsum = 0.0, lat = 0.0;
            for (int r = 0; r < e.scene.H; ++r)
                for (int c = 0; c < e.scene.W; ++c) {
                    const double w = e.scene.at(r, c, kChObstacle);
                    wsum += w;
                    lat += w * cell_center(e.scene, r, c)[1];
                }
            const double side = wsum > 0 && lat / wsum >= anchor[1] ? -1.0 : 1.0;
            for (int j = 1; j <= e.Tp; ++j)
                out.push_back({anchor[0] + j * e.dt * v[0],
                               anchor[1] + side * kDodgeAmp * ramp(j, e.Tp)});
            break;
        }
    }
    return out;
}

std::pair<std::vector<Episode>, OracleInfo> synth_scenarios(SynthKind kind, int n_episodes,
                                                            std::uint64_t seed,
                                                            const SynthOptions& opt) {
    if (n_episodes < 1) throw InputError("synth_scenarios: n_episodes must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<Episode> out;
    out.reserve(static_cast<std::size_t>(n_episodes));
    const int total = opt.T + opt.Tp;
    const double margin = 0.75;

    auto straight = [&](const Vec2& start, const Vec2& v, int n) {
        std::vector<Vec2> pts;
        for (int k = 0; k < n; ++k)
            pts.push_back({start[0] + k * opt.dt * v[0], start[1] + k * opt.dt * v[1]});
        return pts;
    };

    for (int ep = 0; ep < n_episodes; ++ep) {
        Episode e;
        e.T = opt.T;
        e.Tp = opt.Tp;
        e.dt = opt.dt;
        e.scene = blank_scene(opt);

        switch (kind) {
            case SynthKind::const_velocity: {
                const int n_agents = 1 + static_cast<int>(rng() % 2);
                for (int i = 0; i < n_agents; ++i) {
                    for (int tries = 0; tries < 256; ++tries) {
                        const double speed = uni(rng, 0.8, 1.6);
                        const double ang = uni(rng, 0.0, 2.0 * M_PI);
                        const Vec2 v = {speed * std::cos(ang), speed * std::sin(ang)};
                        const Vec2 start = {uni(rng, -3.0, 3.0), uni(rng, -3.0, 3.0)};
                        auto pts = straight(start, v, opt.T);
                        // future is exactly anchor + j*dt*v
                        const Vec2 anchor = pts.back();
                        for (int j = 1; j <= opt.Tp; ++j)
                            pts.push_back({anchor[0] + j * opt.dt * v[0],
                                           anchor[1] + j * opt.dt * v[1]});
                        if (!in_bounds(e.scene, pts.front(), margin) ||
                            !in_bounds(e.scene, pts.back(), margin))
                            continue;
                        e.agents.push_back(make_agent("a" + std::to_string(i), pts, opt.T));
                        break;
                    }
                }
                break;
            }
            case SynthKind::curved_lane: {
                const double R = uni(rng, 2.5, 4.5);
                const double sign = rng() % 2 ? 1.0 : -1.0;
                const double speed = uni(rng, 0.9, 1.4);
                const double omega = sign * speed / R;
                const double th0 = uni(rng, 0.0, 2.0 * M_PI);
                const Vec2 center = {uni(rng, -1.5, 1.5), uni(rng, -1.5, 1.5)};
                std::vector<Vec2> pts;
                for (int k = 0; k < total; ++k) {
                    const double th = th0 + omega * k * opt.dt;
                    pts.push_back({center[0] + R * std::cos(th), center[1] + R * std::sin(th)});
                }
                if (!in_bounds(e.scene, pts.front(), margin) ||
                    !in_bounds(e.scene, pts.back(), margin)) {
                    --ep;  // resample; rng state advanced, so this terminates
                    continue;
                }
                // render the lane as a chain of short segments along the full arc
                for (std::size_t k = 1; k < pts.size(); ++k)
                    paint_segment(e.scene, kChLane, pts[k - 1], pts[k],
                                  e.scene.meters_per_cell);
                e.agents.push_back(make_agent("a0", pts, opt.T));
                break;
            }
            case SynthKind::avoidance_pair: {
                const double speed = uni(rng, 1.3, 1.7);
                const double eps = (rng() % 2 ? 1.0 : -1.0) * uni(rng, 0.3, 0.5);
                const double x0 = -speed * opt.dt * (opt.T - 1) - uni(rng, 0.0, 0.4);
                const double xb = -x0 + uni(rng, 0.0, 0.4);
                // A: centered lane, dodge direction readable only from B
                std::vector<Vec2> pa = straight({x0, 0.0}, {speed, 0.0}, opt.T);
                std::vector<Vec2> pb = straight({xb, eps}, {-speed, 0.0}, opt.T);
                const double side_a = eps >= 0.0 ? -1.0 : 1.0;
                for (int j = 1; j <= opt.Tp; ++j) {
                    pa.push_back({pa[opt.T - 1][0] + j * opt.dt * speed,
                                  side_a * kDodgeAmp * ramp(j, opt.Tp)});
                    pb.push_back({pb[opt.T - 1][0] - j * opt.dt * speed,
                                  eps - side_a * kDodgeAmp * ramp(j, opt.Tp)});
                }
                e.agents.push_back(make_agent("a0", pa, opt.T));
                e.agents.push_back(make_agent("a1", pb, opt.T));
                break;
            }
            case SynthKind::bimodal_exit: {
                const double speed = 1.5 + uni(rng, -0.1, 0.1);
                const double x_exit = 0.5;
                const Vec2 v = {speed, 0.0};
                const Vec2 start = {x_exit - (opt.T - 1) * opt.dt * speed + uni(rng, -0.2, 0.2),
                                    0.0};
                std::vector<Vec2> pts = straight(start, v, opt.T);
                const bool exit_branch = (rng() % 2) == 1;
                const Vec2 dir = exit_branch ? rotate(v, -kExitAngle) : v;
                const Vec2 anchor = pts.back();
                for (int j = 1; j <= opt.Tp; ++j)
                    pts.push_back({anchor[0] + j * opt.dt * dir[0],
                                   anchor[1] + j * opt.dt * dir[1]});
                // both branches rendered from the nominal exit point
                const double reach = (opt.Tp + 1) * opt.dt * speed;
                paint_segment(e.scene, kChLane, {x_exit - 6.0, 0.0}, {x_exit + reach, 0.0},
                              e.scene.meters_per_cell);
                const Vec2 bdir = rotate({1.0, 0.0}, -kExitAngle);
                paint_segment(e.scene, kChLane, {x_exit, 0.0},
                              {x_exit + reach * bdir[0], reach * bdir[1]},
                              e.scene.meters_per_cell);
                e.agents.push_back(make_agent("a0", pts, opt.T));
                break;
            }
            case SynthKind::obstacle_field: {
                const double speed = uni(rng, 1.3, 1.7);
                const Vec2 start = {-speed * opt.dt * (opt.T - 1) - uni(rng, 0.0, 0.4), 0.0};
                std::vector<Vec2> pts = straight(start, {speed, 0.0}, opt.T);
                const double side_obs = rng() % 2 ? 1.0 : -1.0;
                const Vec2 obs = {pts.back()[0] + kObstacleAhead, side_obs * kObstacleOffset};
                paint_disk(e.scene, kChObstacle, obs, kObstacleRadius);
                const Vec2 anchor = pts.back();
                for (int j = 1; j <= opt.Tp; ++j)
                    pts.push_back({anchor[0] + j * opt.dt * speed,
                                   -side_obs * kDodgeAmp * ramp(j, opt.Tp)});
                e.agents.push_back(make_agent("a0", pts, opt.T));
                break;
            }
        }
        if (e.agents.empty()) {
            --ep;
            continue;
        }
        e.validate();
        out.push_back(std::move(e));
    }
    OracleInfo oracle;
    oracle.kind = kind;
    oracle.n_modes = kind == SynthKind::bimodal_exit ? 2 : 1;
    return {std::move(out), oracle};
}

}  // namespace matf::data
