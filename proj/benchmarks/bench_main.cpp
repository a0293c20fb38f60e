#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "linkrr/graph.hpp"
#include "linkrr/microdecoder.hpp"
#include "linkrr/ppr.hpp"
#include "linkrr/retrieval.hpp"
#include "linkrr/rng.hpp"

using namespace linkrr;

namespace {

TextAttributedGraph bench_graph(std::size_t n, double p, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> ids, texts;
    std::vector<Edge> edges;
    const char* vocab[] = {"graph", "node", "link", "text", "edge", "query",
                           "token", "rank", "score", "index", "path", "cache"};
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back("n" + std::to_string(i));
        std::string text;
        for (int w = 0; w < 6; ++w) {
            if (w) text += ' ';
            text += vocab[rng.below(12)];
        }
        texts.push_back(text);
    }
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (rng.unit() < p) edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
    return TextAttributedGraph::from_parts(ids, texts, edges);
}

void BM_PprPush(benchmark::State& state) {
    auto graph = bench_graph(static_cast<std::size_t>(state.range(0)), 0.02, 7);
    PprConfig cfg;
    cfg.epsilon = 1e-6;
    NodeId source = 0;
    for (auto _ : state) {
        auto scores = personalized_pagerank(graph, source, cfg);
        benchmark::DoNotOptimize(scores.sum());
        source = (source + 1) % graph.node_count();
    }
}
BENCHMARK(BM_PprPush)->Arg(200)->Arg(1000);

void BM_Bm25TopK(benchmark::State& state) {
    auto graph = bench_graph(static_cast<std::size_t>(state.range(0)), 0.01, 11);
    std::vector<std::string> docs;
    for (NodeId v = 0; v < graph.node_count(); ++v) docs.push_back(graph.text(v));
    auto index = Bm25Index::build(docs, 1.2, 0.75);
    std::vector<NodeId> pool(graph.node_count());
    for (NodeId v = 0; v < graph.node_count(); ++v) pool[v] = v;
    for (auto _ : state) {
        auto hits = index.topk("graph link score", pool, 30);
        benchmark::DoNotOptimize(hits.size());
    }
}
BENCHMARK(BM_Bm25TopK)->Arg(1000)->Arg(5000);

void BM_SharedPrefixBatch(benchmark::State& state) {
    MicroDecoderConfig cfg;
    cfg.vocab = 64;
    cfg.dim = 32;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.max_seq = 256;
    MicroDecoder dec(cfg);
    Rng rng(3);
    std::vector<int> prefix(static_cast<std::size_t>(state.range(0)));
    for (auto& t : prefix) t = static_cast<int>(rng.below(cfg.vocab));
    std::vector<std::vector<int>> suffixes(16, std::vector<int>(4));
    for (auto& s : suffixes)
        for (auto& t : s) t = static_cast<int>(rng.below(cfg.vocab));
    for (auto _ : state) {
        auto [logits, rep] = dec.shared_prefix_batch(prefix, suffixes);
        benchmark::DoNotOptimize(logits.size());
        benchmark::DoNotOptimize(rep.cached_ops);
    }
}
BENCHMARK(BM_SharedPrefixBatch)->Arg(64)->Arg(128);

void BM_NaiveBatch(benchmark::State& state) {
    MicroDecoderConfig cfg;
    cfg.vocab = 64;
    cfg.dim = 32;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.max_seq = 256;
    MicroDecoder dec(cfg);
    Rng rng(3);
    std::vector<int> prefix(static_cast<std::size_t>(state.range(0)));
    for (auto& t : prefix) t = static_cast<int>(rng.below(cfg.vocab));
    std::vector<std::vector<int>> suffixes(16, std::vector<int>(4));
    for (auto& s : suffixes)
        for (auto& t : s) t = static_cast<int>(rng.below(cfg.vocab));
    for (auto _ : state) {
        for (const auto& suffix : suffixes) {
            auto full = prefix;
            full.insert(full.end(), suffix.begin(), suffix.end());
            auto out = dec.forward_logits(full);
            benchmark::DoNotOptimize(out.logits.size());
        }
    }
}
BENCHMARK(BM_NaiveBatch)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
