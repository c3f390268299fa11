#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "matf/metrics.hpp"

using namespace matf;
using metrics::Traj;

namespace {

// Brute-force re-implementations, written straight off the definitions and
// kept deliberately separate from the library code paths.

double oracle_err(const Vec2& p, const Vec2& g) {
    const double dx = p[0] - g[0], dy = p[1] - g[1];
    return std::sqrt(dx * dx + dy * dy);
}

double oracle_rmse(const std::vector<Traj>& p, const std::vector<Traj>& g, int t) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = oracle_err(p[i][static_cast<std::size_t>(t - 1)],
                                    g[i][static_cast<std::size_t>(t - 1)]);
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(p.size()));
}

double oracle_mae(const std::vector<Traj>& p, const std::vector<Traj>& g, int t) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        s += oracle_err(p[i][static_cast<std::size_t>(t - 1)],
                        g[i][static_cast<std::size_t>(t - 1)]);
    return s / static_cast<double>(p.size());
}

double oracle_ade(const std::vector<Traj>& p, const std::vector<Traj>& g) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double per_agent = 0.0;
        for (std::size_t t = 0; t < p[i].size(); ++t) per_agent += oracle_err(p[i][t], g[i][t]);
        total += per_agent / static_cast<double>(p[i].size());
    }
    return total / static_cast<double>(p.size());
}

double oracle_fde(const std::vector<Traj>& p, const std::vector<Traj>& g) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += oracle_err(p[i].back(), g[i].back());
    return total / static_cast<double>(p.size());
}

std::vector<Traj> random_trajs(std::mt19937_64& rng, std::size_t n_agents, std::size_t len) {
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::vector<Traj> out(n_agents);
    for (auto& tr : out)
        for (std::size_t t = 0; t < len; ++t) tr.push_back({u(rng), u(rng)});
    return out;
}

}  // namespace

TEST_CASE("hand-worked single values") {
    // one agent, one step, offset (3,4): every metric is 5
    std::vector<Traj> p{{{3.0, 4.0}}}, g{{{0.0, 0.0}}};
    CHECK(metrics::rmse_at(p, g, 1) == doctest::Approx(5.0));
    CHECK(metrics::mae_at(p, g, 1) == doctest::Approx(5.0));
    auto [ade, fde] = metrics::ade_fde(p, g);
    CHECK(ade == doctest::Approx(5.0));
    CHECK(fde == doctest::Approx(5.0));

    // two agents, errors 5 and 0: MAE averages, RMSE averages squares
    std::vector<Traj> p2{{{3.0, 4.0}}, {{1.0, 1.0}}}, g2{{{0.0, 0.0}}, {{1.0, 1.0}}};
    CHECK(metrics::mae_at(p2, g2, 1) == doctest::Approx(2.5));
    CHECK(metrics::rmse_at(p2, g2, 1) == doctest::Approx(std::sqrt(25.0 / 2.0)));

    // one agent, two steps, errors 0.5 then 5
    std::vector<Traj> p3{{{0.3, 0.4}, {3.0, 4.0}}}, g3{{{0.0, 0.0}, {0.0, 0.0}}};
    auto [ade3, fde3] = metrics::ade_fde(p3, g3);
    CHECK(ade3 == doctest::Approx((0.5 + 5.0) / 2.0));
    CHECK(fde3 == doctest::Approx(5.0));
}

TEST_CASE("best_of_n argmin and tie breaking") {
    Traj gt{{0.0, 0.0}, {1.0, 0.0}};
    std::vector<Traj> samples{
        {{2.0, 0.0}, {3.0, 0.0}},  // sse 4 + 4 = 8
        {{0.5, 0.0}, {1.5, 0.0}},  // sse 0.25 + 0.25 = 0.5
        {{0.5, 0.0}, {1.5, 0.0}},  // identical: tie must keep index 1
    };
    auto [idx, score] = metrics::best_of_n(samples, gt);
    CHECK(idx == 1);
    CHECK(score == doctest::Approx(0.5));
    CHECK_THROWS_AS(metrics::best_of_n({}, gt), InputError);
}

TEST_CASE("oracle equivalence on random instances") {
    std::mt19937_64 rng(42);
    for (int it = 0; it < 100; ++it) {
        const std::size_t n = 1 + rng() % 7, len = 1 + rng() % 12;
        auto p = random_trajs(rng, n, len);
        auto g = random_trajs(rng, n, len);
        for (int t = 1; t <= static_cast<int>(len); ++t) {
            CHECK(std::abs(metrics::rmse_at(p, g, t) - oracle_rmse(p, g, t)) < 1e-9);
            CHECK(std::abs(metrics::mae_at(p, g, t) - oracle_mae(p, g, t)) < 1e-9);
        }
        auto [ade, fde] = metrics::ade_fde(p, g);
        CHECK(std::abs(ade - oracle_ade(p, g)) < 1e-9);
        CHECK(std::abs(fde - oracle_fde(p, g)) < 1e-9);
    }
}

TEST_CASE("agent permutation and rigid translation invariance") {
    std::mt19937_64 rng(17);
    auto p = random_trajs(rng, 5, 8);
    auto g = random_trajs(rng, 5, 8);
    const double rmse = metrics::rmse_at(p, g, 3);
    auto [ade, fde] = metrics::ade_fde(p, g);

    std::vector<std::size_t> perm{4, 2, 0, 3, 1};
    std::vector<Traj> pp, gp;
    for (std::size_t i : perm) {
        pp.push_back(p[i]);
        gp.push_back(g[i]);
    }
    CHECK(metrics::rmse_at(pp, gp, 3) == doctest::Approx(rmse));
    auto [ade_p, fde_p] = metrics::ade_fde(pp, gp);
    CHECK(ade_p == doctest::Approx(ade));
    CHECK(fde_p == doctest::Approx(fde));

    const Vec2 shift{13.5, -2.25};
    auto pt = p;
    auto gt = g;
    for (auto& tr : pt)
        for (auto& q : tr) {
            q[0] += shift[0];
            q[1] += shift[1];
        }
    for (auto& tr : gt)
        for (auto& q : tr) {
            q[0] += shift[0];
            q[1] += shift[1];
        }
    auto [ade_t, fde_t] = metrics::ade_fde(pt, gt);
    CHECK(ade_t == doctest::Approx(ade).epsilon(1e-12));
    CHECK(fde_t == doctest::Approx(fde).epsilon(1e-12));
}

TEST_CASE("shape errors") {
    std::vector<Traj> p{{{0.0, 0.0}}}, g{{{0.0, 0.0}, {1.0, 1.0}}};
    CHECK_THROWS_AS(metrics::rmse_at(p, g, 1), ShapeError);
    CHECK_THROWS_AS(metrics::mae_at({}, {}, 1), ShapeError);
    std::vector<Traj> ok{{{0.0, 0.0}}};
    CHECK_THROWS_AS(metrics::rmse_at(ok, ok, 2), ShapeError);
    CHECK_THROWS_AS(metrics::rmse_at(ok, ok, 0), ShapeError);
}
