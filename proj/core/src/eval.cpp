#include "linkrr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "linkrr/error.hpp"
#include "linkrr/pairwise.hpp"
#include "linkrr/rng.hpp"
#include "linkrr/scorers.hpp"

namespace linkrr {

using json = nlohmann::json;

void EvalProtocol::validate() const {
    if (num_pairs == 0) throw Error("eval", "num_pairs must be >= 1");
    if (total_candidates == 0) throw Error("eval", "total candidate count must be >= 1");
    if (retrieved > total_candidates) throw Error("eval", "n_C cannot exceed N_C");
}

CandidateSet sample_candidate_set(const TextAttributedGraph& graph,
                                  const EdgeSplit& split,
                                  NodeId source,
                                  NodeId positive,
                                  std::size_t total,
                                  std::uint64_t seed) {
    if (!graph.contains(source) || !graph.contains(positive)) {
        throw Error("eval", "pair endpoint out of range");
    }
    if (graph.node_count() <= total) throw Error("eval", "graph has too few nodes for the candidate count");

    std::unordered_set<NodeId> forbidden{source};
    bool positive_is_test_neighbor = false;
    for (const Edge& e : split.train) {
        if (e.u == source) forbidden.insert(e.v);
        if (e.v == source) forbidden.insert(e.u);
    }
    for (const Edge& e : split.test) {
        if (e.u == source) forbidden.insert(e.v);
        if (e.v == source) forbidden.insert(e.u);
        if ((e.u == source && e.v == positive) || (e.v == source && e.u == positive)) {
            positive_is_test_neighbor = true;
        }
    }
    if (!positive_is_test_neighbor) throw Error("eval", "positive is not a held-out test neighbor of source");

    const std::size_t eligible = graph.node_count() - forbidden.size();
    if (eligible < total - 1) throw Error("eval", "insufficient negatives for the candidate count");

    Rng rng(seed);
    CandidateSet set;
    set.source = source;
    std::unordered_set<NodeId> chosen;
    while (set.candidates.size() < total - 1) {
        const auto v = static_cast<NodeId>(rng.below(graph.node_count()));
        if (forbidden.count(v) || chosen.count(v)) continue;
        chosen.insert(v);
        set.candidates.push_back(v);
    }
    set.candidates.push_back(positive);
    rng.shuffle(set.candidates);
    set.positive = positive;
    set.provenance.assign(set.candidates.size(), Provenance::sampled);
    set.validate();
    return set;
}

EvalReport compute_metrics(const std::vector<RankedList>& ranked, std::size_t k) {
    if (ranked.empty()) throw Error("eval", "no ranked lists to aggregate");
    EvalReport report;
    report.k = k;
    double mrr = 0.0;
    std::size_t h1 = 0, hk = 0;
    for (const RankedList& list : ranked) {
        report.ranks.push_back(list.rank_of_positive);
        report.provider_errors += list.provider_errors;
        report.reranker_calls += list.provider_calls;
        if (list.rank_of_positive != kRankInfinity) {
            mrr += 1.0 / static_cast<double>(list.rank_of_positive);
            if (list.rank_of_positive <= 1) ++h1;
            if (list.rank_of_positive <= k) ++hk;
        }
    }
    const auto n = static_cast<double>(ranked.size());
    report.mrr = mrr / n;
    report.hits_at_1 = static_cast<double>(h1) / n;
    report.hits_at_k = static_cast<double>(hk) / n;
    return report;
}

std::string report_to_json(const EvalReport& report) {
    json doc;
    doc["schema_version"] = 1;
    doc["protocol"] = {{"N_C", report.protocol.total_candidates},
                       {"n_C", report.protocol.retrieved},
                       {"num_pairs", report.protocol.num_pairs},
                       {"seed", report.protocol.seed},
                       {"icl_k", report.protocol.icl_k}};
    doc["mrr"] = report.mrr;
    doc["hits_at_1"] = report.hits_at_1;
    doc["hits_at_k"] = report.hits_at_k;
    doc["k"] = report.k;
    json ranks = json::array();
    for (std::size_t r : report.ranks) {
        if (r == kRankInfinity) {
            ranks.push_back(nullptr);
        } else {
            ranks.push_back(r);
        }
    }
    doc["ranks"] = std::move(ranks);
    doc["provider_errors"] = report.provider_errors;
    doc["reranker_calls"] = report.reranker_calls;
    doc["timing"] = {{"pair_seconds", report.pair_seconds}, {"total_seconds", report.total_seconds}};
    return doc.dump(2) + "\n";
}

void save_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("eval", "cannot write file: " + path);
    out << report_to_json(report);
}

EvalReport run_experiment(const TextAttributedGraph& graph,
                          const EdgeSplit& split,
                          const EvalProtocol& protocol,
                          const PipelineConfig& config,
                          LogitProvider* provider) {
    protocol.validate();
    config.validate();
    if (split.test.empty()) throw Error("eval", "split has no test edges");
    if (protocol.num_pairs > split.test.size()) {
        throw Error("eval", "num_pairs exceeds the number of test edges");
    }

    const auto t0 = std::chrono::steady_clock::now();
    const TextAttributedGraph train_view = edge_subgraph(graph, split.train);

    std::unique_ptr<LogitProvider> owned;
    if (!provider) {
        if (config.provider == "heuristic") {
            CombinerParams params =
                train_combiner(train_view, split.train, config.pairwise, config.ppr, config.rpe);
            owned = std::make_unique<HeuristicProvider>(train_view, std::move(params), config.ppr,
                                                        config.rpe, config.pairwise);
        } else if (config.provider == "remote") {
            owned = std::make_unique<RemoteProvider>(config.remote);
        } else {
            throw Error("eval", "unknown provider: " + config.provider);
        }
        provider = owned.get();
    }

    std::vector<std::size_t> indices(split.test.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    Rng pair_rng(mix_seed(protocol.seed, 0x70616972ULL));
    const std::vector<std::size_t> picked = pair_rng.sample(indices, protocol.num_pairs);

    Bm25Index index = Bm25Index::build(
        [&] {
            std::vector<std::string> docs;
            docs.reserve(graph.node_count());
            for (NodeId v = 0; v < graph.node_count(); ++v) docs.push_back(graph.text(v));
            return docs;
        }(),
        config.retrieval.k1, config.retrieval.b);
    TemplateQueryGenerator generator(train_view, mix_seed(protocol.seed, 0x71756572ULL));

    std::vector<RankedList> ranked(picked.size());
    std::vector<double> pair_seconds(picked.size(), 0.0);
    std::atomic<std::size_t> cursor{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t j = cursor.fetch_add(1);
            if (j >= picked.size()) return;
            try {
                const auto pair_start = std::chrono::steady_clock::now();
                const Edge edge = split.test[picked[j]];
                const NodeId source = edge.u;
                const NodeId positive = edge.v;
                const std::uint64_t pair_seed = mix_seed(protocol.seed, j);

                CandidateSet candidates = sample_candidate_set(graph, split, source, positive,
                                                               protocol.total_candidates, pair_seed);
                if (protocol.retrieved > 0) {
                    const QuerySet queries = generate_queries(
                        source, generator, config.retrieval.n_groups, config.retrieval.group_size);
                    candidates = retrieve_candidates(train_view, index, source, queries, candidates,
                                                     protocol.retrieved, config.retrieval.beta);
                }
                const IclExamples examples = select_icl_examples(train_view, split, source, protocol.icl_k,
                                                                 mix_seed(pair_seed, 0x69636cULL));
                ranked[j] = rerank_candidates(*provider, train_view, source, candidates, examples,
                                              positive, config.rerank);
                pair_seconds[j] =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - pair_start).count();
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(config.workers, 1);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    EvalReport report = compute_metrics(ranked, 10);
    report.protocol = protocol;
    report.pair_seconds = std::move(pair_seconds);
    report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

}  // namespace linkrr
