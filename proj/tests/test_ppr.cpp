#include <doctest.h>

#include <cmath>

#include "linkrr/error.hpp"
#include "linkrr/ppr.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace linkrr;
using testutil::make_graph;

TEST_CASE("ppr config is validated") {
    auto g = make_graph(2, {{0, 1}});
    PprConfig bad;
    bad.alpha = 0.0;
    CHECK_THROWS_AS(personalized_pagerank(g, 0, bad), Error);
    bad = PprConfig{};
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(personalized_pagerank(g, 0, bad), Error);
    CHECK_THROWS_AS(personalized_pagerank(g, 7, PprConfig{}), Error);
}

TEST_CASE("isolated source keeps all mass") {
    auto g = make_graph(3, {{1, 2}});
    auto scores = personalized_pagerank(g, 0, PprConfig{});
    CHECK(scores.support() == 1);
    CHECK(scores.at(0) == doctest::Approx(1.0));
}

TEST_CASE("two-node chain matches the closed form") {
    // Alternating walk: pi(source) = alpha / (1 - (1-alpha)^2).
    auto g = make_graph(2, {{0, 1}});
    PprConfig cfg;
    cfg.epsilon = 1e-12;
    auto scores = personalized_pagerank(g, 0, cfg);
    const double expected = cfg.alpha / (1.0 - (1.0 - cfg.alpha) * (1.0 - cfg.alpha));
    CHECK(scores.at(0) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(scores.at(1) == doctest::Approx(1.0 - expected).epsilon(1e-9));
    CHECK(std::abs(expected - 0.54054054054) < 1e-9);
}

TEST_CASE("push approximation tracks the dense fixed point") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto g = testutil::random_graph(12, 0.3, 1000 + seed);
        PprConfig cfg;
        cfg.epsilon = 1e-10;
        for (NodeId s = 0; s < g.node_count(); ++s) {
            auto approx = personalized_pagerank(g, s, cfg);
            auto exact = oracle::dense_ppr(g, s, cfg.alpha);
            for (NodeId v = 0; v < g.node_count(); ++v) {
                CHECK(std::abs(approx.at(v) - exact[v]) < 1e-7);
            }
        }
    }
}

TEST_CASE("ppr mass never exceeds one") {
    auto g = testutil::random_graph(30, 0.15, 9);
    PprConfig cfg;
    for (NodeId s = 0; s < 30; s += 5) {
        auto scores = personalized_pagerank(g, s, cfg);
        CHECK(scores.sum() <= 1.0 + 1e-12);
        for (const auto& [v, p] : scores.scores) CHECK(p >= 0.0);
    }
}

TEST_CASE("cache computes each source once and returns stable references") {
    auto g = make_graph(4, {{0, 1}, {1, 2}, {2, 3}});
    PprCache cache(g, PprConfig{});
    const auto& a = cache.get(1);
    const auto& b = cache.get(1);
    CHECK(&a == &b);
    CHECK(cache.size() == 1);
    cache.get(2);
    CHECK(cache.size() == 2);
}

TEST_CASE("context selection applies the near/far thresholds") {
    // Star around 0 plus an edge 1-2: every neighbor of both endpoints is
    // "near" and clears eta_near; distant nodes would need eta_far = 1.
    auto g = make_graph(6, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {4, 5}});
    PprConfig cfg;
    cfg.epsilon = 1e-9;
    auto pa = personalized_pagerank(g, 1, cfg);
    auto pb = personalized_pagerank(g, 2, cfg);
    auto ctx = select_context_nodes(g, 1, 2, pa, pb, cfg);

    CHECK(std::find(ctx.begin(), ctx.end(), NodeId{1}) == ctx.end());
    CHECK(std::find(ctx.begin(), ctx.end(), NodeId{2}) == ctx.end());
    CHECK(std::find(ctx.begin(), ctx.end(), NodeId{0}) != ctx.end());
    // Node 5 is two hops from both endpoints, so eta_far applies and excludes it.
    CHECK(std::find(ctx.begin(), ctx.end(), NodeId{5}) == ctx.end());
    CHECK(std::is_sorted(ctx.begin(), ctx.end()));

    // With eta_near above every score, the near side empties out too.
    PprConfig strict = cfg;
    strict.eta_near = 0.99;
    auto none = select_context_nodes(g, 1, 2, pa, pb, strict);
    CHECK(none.empty());
}

TEST_CASE("rpe feature map and swap symmetry") {
    RpeConfig cfg;
    auto v = relative_positional_encoding(0.25, 0.5, cfg);
    CHECK(v[0] == doctest::Approx(0.25));
    CHECK(v[1] == doctest::Approx(0.5));
    CHECK(v[2] == doctest::Approx(0.75));
    CHECK(v[3] == doctest::Approx(0.125));
    CHECK(v[4] == doctest::Approx(std::log1p(0.25)));
    CHECK(v[5] == doctest::Approx(std::log1p(0.5)));

    auto w = relative_positional_encoding(0.5, 0.25, cfg);
    CHECK(w[0] == v[1]);
    CHECK(w[1] == v[0]);
    CHECK(w[2] == v[2]);
    CHECK(w[3] == v[3]);
    CHECK(w[4] == v[5]);
    CHECK(w[5] == v[4]);

    CHECK_THROWS_AS(relative_positional_encoding(-0.1, 0.5, cfg), Error);
    CHECK_THROWS_AS(relative_positional_encoding(0.1, std::nan(""), cfg), Error);
}
