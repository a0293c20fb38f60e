#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "linkrr/config.hpp"
#include "linkrr/graph.hpp"
#include "linkrr/rerank.hpp"
#include "linkrr/retrieval.hpp"

namespace linkrr {

class LogitProvider;

struct EvalProtocol {
    std::size_t total_candidates = 150;  // N_C
    std::size_t retrieved = 0;           // n_C; 0 disables the retrieval stage
    std::size_t num_pairs = 200;
    std::uint64_t seed = 1;
    std::size_t icl_k = 2;
    void validate() const;
};

// positive must be a held-out test neighbor of source; negatives are drawn
// uniformly, without duplicates, from nodes that are neither the source nor
// any train/test neighbor of it.
CandidateSet sample_candidate_set(const TextAttributedGraph& graph,
                                  const EdgeSplit& split,
                                  NodeId source,
                                  NodeId positive,
                                  std::size_t total,
                                  std::uint64_t seed);

struct EvalReport {
    double mrr = 0.0;
    double hits_at_1 = 0.0;
    double hits_at_k = 0.0;
    std::size_t k = 10;
    std::vector<std::size_t> ranks;  // kRankInfinity marks an unranked positive
    std::size_t provider_errors = 0;
    std::size_t reranker_calls = 0;
    EvalProtocol protocol;
    std::vector<double> pair_seconds;  // timing only; segregated on save
    double total_seconds = 0.0;
};

EvalReport compute_metrics(const std::vector<RankedList>& ranked, std::size_t k);

// JSON with a schema_version field; wall-clock numbers live under the
// "timing" key so deterministic runs compare byte-identical without it.
void save_report(const EvalReport& report, const std::string& path);
std::string report_to_json(const EvalReport& report);

// Samples num_pairs test edges, then per pair: candidate sampling,
// optional retrieval, ICL selection, rerank. Structural features and
// prompts come from the train-edge view of the graph.
EvalReport run_experiment(const TextAttributedGraph& graph,
                          const EdgeSplit& split,
                          const EvalProtocol& protocol,
                          const PipelineConfig& config,
                          LogitProvider* provider = nullptr);

}  // namespace linkrr
