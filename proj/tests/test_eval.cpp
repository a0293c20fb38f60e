#include <doctest.h>

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "linkrr/error.hpp"
#include "linkrr/eval.hpp"
#include "linkrr/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace linkrr;
using nlohmann::json;

namespace {

RankedList list_with_rank(std::size_t rank) {
    RankedList r;
    r.rank_of_positive = rank;
    r.provider_calls = 10;
    return r;
}

struct PlantedFixture {
    TextAttributedGraph graph;
    EdgeSplit split;

    PlantedFixture() {
        graph = load_graph_jsonl(testutil::fixture_path("planted_nodes.jsonl"),
                                 testutil::fixture_path("planted_edges.jsonl"));
        split = load_split(testutil::fixture_path("planted_split.json"));
    }
};

}  // namespace

TEST_CASE("metrics match a brute-force recomputation") {
    Rng rng(77);
    std::vector<RankedList> ranked;
    std::vector<std::size_t> ranks;
    for (int i = 0; i < 200; ++i) {
        std::size_t r = rng.below(10) == 0 ? kRankInfinity : 1 + rng.below(40);
        ranked.push_back(list_with_rank(r));
        ranks.push_back(r);
    }
    auto report = compute_metrics(ranked, 10);
    auto want = oracle::brute_metrics(ranks, 10);
    CHECK(report.mrr == doctest::Approx(want.mrr).epsilon(1e-12));
    CHECK(report.hits_at_1 == doctest::Approx(want.hits_at_1).epsilon(1e-12));
    CHECK(report.hits_at_k == doctest::Approx(want.hits_at_k).epsilon(1e-12));
    CHECK(report.k == 10);
    CHECK(report.reranker_calls == 2000);
    CHECK(report.ranks == ranks);
}

TEST_CASE("an unranked positive contributes zero reciprocal rank") {
    auto report = compute_metrics({list_with_rank(kRankInfinity), list_with_rank(1)}, 5);
    CHECK(report.mrr == doctest::Approx(0.5));
    CHECK(report.hits_at_1 == doctest::Approx(0.5));
    CHECK_THROWS_AS(compute_metrics({}, 5), Error);
}

TEST_CASE("candidate sampling excludes every known neighbor") {
    // 0 connects to 1,2 (train) and 3 (test); 4..29 free negatives.
    std::vector<Edge> train = {{0, 1}, {0, 2}, {10, 11}};
    std::vector<Edge> test = {{0, 3}};
    auto g = testutil::make_graph(30, [&] {
        std::vector<Edge> all = train;
        all.insert(all.end(), test.begin(), test.end());
        return all;
    }());
    EdgeSplit split;
    split.train = train;
    split.test = test;

    auto cs = sample_candidate_set(g, split, 0, 3, 10, 42);
    CHECK(cs.candidates.size() == 10);
    CHECK(cs.source == 0);
    REQUIRE(cs.positive.has_value());
    CHECK(*cs.positive == 3);

    std::set<NodeId> seen(cs.candidates.begin(), cs.candidates.end());
    CHECK(seen.size() == 10);
    CHECK(seen.count(0) == 0);
    CHECK(seen.count(1) == 0);
    CHECK(seen.count(2) == 0);
    CHECK(seen.count(3) == 1);

    auto again = sample_candidate_set(g, split, 0, 3, 10, 42);
    CHECK(again.candidates == cs.candidates);
    auto reshuffled = sample_candidate_set(g, split, 0, 3, 10, 43);
    CHECK(reshuffled.candidates != cs.candidates);

    CHECK_THROWS_AS(sample_candidate_set(g, split, 0, 4, 10, 1), Error);   // not a test neighbor
    CHECK_THROWS_AS(sample_candidate_set(g, split, 0, 3, 30, 1), Error);   // larger than the graph
    CHECK_THROWS_AS(sample_candidate_set(g, split, 0, 3, 28, 1), Error);   // negatives run out
}

TEST_CASE("report json segregates timing and uses null for unranked") {
    EvalReport report;
    report.mrr = 0.5;
    report.hits_at_1 = 0.25;
    report.hits_at_k = 0.75;
    report.k = 10;
    report.ranks = {1, kRankInfinity, 4};
    report.provider_errors = 1;
    report.reranker_calls = 30;
    report.protocol.total_candidates = 150;
    report.protocol.retrieved = 30;
    report.protocol.num_pairs = 3;
    report.protocol.seed = 9;
    report.pair_seconds = {0.1, 0.2, 0.3};
    report.total_seconds = 0.6;

    auto doc = json::parse(report_to_json(report));
    CHECK(doc["schema_version"] == 1);
    CHECK(doc["mrr"] == doctest::Approx(0.5));
    CHECK(doc["protocol"]["N_C"] == 150);
    CHECK(doc["protocol"]["n_C"] == 30);
    CHECK(doc["protocol"]["seed"] == 9);
    REQUIRE(doc["ranks"].size() == 3);
    CHECK(doc["ranks"][0] == 1);
    CHECK(doc["ranks"][1].is_null());
    CHECK(doc["provider_errors"] == 1);
    CHECK(doc["reranker_calls"] == 30);
    REQUIRE(doc.contains("timing"));
    CHECK(doc["timing"]["total_seconds"] == doctest::Approx(0.6));
    CHECK(doc["timing"]["pair_seconds"].size() == 3);
    // Timing never leaks outside its key.
    doc.erase("timing");
    CHECK(doc.dump().find("seconds") == std::string::npos);

    testutil::TempDir dir;
    save_report(report, dir.file("report.json"));
    auto reparsed = json::parse(testutil::read_file(dir.file("report.json")));
    CHECK(reparsed["mrr"] == doctest::Approx(0.5));
}

TEST_CASE("protocol validation") {
    EvalProtocol p;
    p.num_pairs = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = EvalProtocol{};
    p.retrieved = p.total_candidates + 1;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("experiments are deterministic modulo timing") {
    PlantedFixture fx;
    EvalProtocol protocol;
    protocol.total_candidates = 40;
    protocol.num_pairs = 8;
    protocol.seed = 5;

    PipelineConfig config;
    config.pairwise.train.epochs = 30;

    auto strip = [](const EvalReport& r) {
        auto doc = json::parse(report_to_json(r));
        doc.erase("timing");
        return doc.dump();
    };

    auto a = run_experiment(fx.graph, fx.split, protocol, config);
    auto b = run_experiment(fx.graph, fx.split, protocol, config);
    CHECK(strip(a) == strip(b));
    CHECK(a.ranks.size() == 8);
    CHECK(a.reranker_calls == 8 * 40);

    auto parallel_config = config;
    parallel_config.workers = 4;
    auto c = run_experiment(fx.graph, fx.split, protocol, parallel_config);
    CHECK(strip(a) == strip(c));

    // Timing is still recorded, it just lives outside the deterministic part.
    CHECK(a.pair_seconds.size() == 8);
    CHECK(a.total_seconds > 0.0);
}

TEST_CASE("retrieval stage caps reranker calls at n_C per pair") {
    PlantedFixture fx;
    EvalProtocol protocol;
    protocol.total_candidates = 60;
    protocol.retrieved = 12;
    protocol.num_pairs = 6;
    protocol.seed = 2;

    PipelineConfig config;
    config.pairwise.train.epochs = 30;

    auto report = run_experiment(fx.graph, fx.split, protocol, config);
    CHECK(report.reranker_calls == 6 * 12);
    CHECK(report.ranks.size() == 6);
    for (auto r : report.ranks) {
        if (r != kRankInfinity) CHECK(r <= 12);
    }
}

TEST_CASE("run_experiment validates the provider name") {
    PlantedFixture fx;
    EvalProtocol protocol;
    protocol.total_candidates = 20;
    protocol.num_pairs = 2;
    PipelineConfig config;
    config.provider = "nonsense";
    CHECK_THROWS_AS(run_experiment(fx.graph, fx.split, protocol, config), Error);
}
