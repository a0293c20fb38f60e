#pragma once

#include <array>
#include <cstddef>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "linkrr/config.hpp"
#include "linkrr/graph.hpp"

namespace linkrr {

// Sparse personalized PageRank vector for one source node.
struct PprScores {
    std::unordered_map<NodeId, double> scores;

    double at(NodeId v) const {
        auto it = scores.find(v);
        return it == scores.end() ? 0.0 : it->second;
    }
    std::size_t support() const { return scores.size(); }
    double sum() const;
};

// Forward-push approximation. Residual mass per node stays below
// epsilon * degree(node), so the l1 error is bounded by epsilon * 2|E|.
// An isolated source gets the exact answer {source: 1.0}.
PprScores personalized_pagerank(const TextAttributedGraph& graph, NodeId source, const PprConfig& config);

// Thread-safe memo of PPR vectors keyed by source node.
class PprCache {
public:
    explicit PprCache(const TextAttributedGraph& graph, PprConfig config)
        : graph_(graph), config_(config) {}

    const PprScores& get(NodeId source);
    std::size_t size() const;
    const PprConfig& config() const { return config_; }

private:
    const TextAttributedGraph& graph_;
    PprConfig config_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<NodeId, PprScores> cache_;
};

// Context node set for a pair: nodes whose PPR from BOTH endpoints clears the
// threshold. One-hop neighbors of either endpoint use eta_near; everything
// else uses eta_far. Sorted ascending, excludes a and b themselves.
std::vector<NodeId> select_context_nodes(const TextAttributedGraph& graph,
                                         NodeId a,
                                         NodeId b,
                                         const PprScores& ppr_a,
                                         const PprScores& ppr_b,
                                         const PprConfig& config);

using RpeVector = std::array<double, 6>;

// Feature map of the PPR pair (p, q) = (ppr(a,u), ppr(b,u)):
//   [p, q, p + q, p * q, log(1 + p), log(1 + q)]
// Swapping p and q permutes coordinates (1,2) and (5,6) and fixes the rest.
RpeVector relative_positional_encoding(double p, double q, const RpeConfig& config);

}  // namespace linkrr
