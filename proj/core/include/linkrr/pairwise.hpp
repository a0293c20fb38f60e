#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "linkrr/config.hpp"
#include "linkrr/graph.hpp"
#include "linkrr/ppr.hpp"

namespace linkrr {

struct HeuristicFeatures {
    std::size_t common_neighbors = 0;
    double adamic_adar = 0.0;
    double katz_truncated = 0.0;
    double ppr_ab = 0.0;
    double ppr_ba = 0.0;

    std::array<double, 5> as_array() const {
        return {static_cast<double>(common_neighbors), adamic_adar, katz_truncated, ppr_ab, ppr_ba};
    }
};

HeuristicFeatures heuristic_features(const TextAttributedGraph& graph,
                                     NodeId a,
                                     NodeId b,
                                     const PprScores& ppr_a,
                                     const PprScores& ppr_b,
                                     const PairwiseConfig& config);

struct ContextContribution {
    NodeId node;
    double weight;
    std::vector<double> encoding;
};

struct PairwiseEncoding {
    std::vector<double> vector;  // length d_p; zero when the context set is empty
    std::vector<ContextContribution> contributions;
    bool empty_context = false;
};

// Stand-in for the attention/projection stack: a linear scorer over
// concat(rpe, node_feats), softmax weights, and a mix matrix applied to
// concat(node_feats, rpe), topped by a logistic head over
// concat(encoding, heuristics).
struct CombinerParams {
    std::size_t d_p = 16;
    std::size_t d_rpe = 6;
    std::size_t d_feat = 3;
    std::vector<double> attention_weights;  // d_rpe + d_feat
    std::vector<double> mix_matrix;         // d_p x (d_rpe + d_feat), row-major
    std::vector<double> logistic_head;      // d_p + 5
    double bias = 0.0;

    std::size_t input_dim() const { return d_rpe + d_feat; }
    std::size_t head_dim() const { return d_p + 5; }
    std::size_t flat_size() const { return input_dim() + d_p * input_dim() + head_dim() + 1; }

    std::vector<double> flatten() const;
    static CombinerParams unflatten(const std::vector<double>& flat,
                                    std::size_t d_p,
                                    std::size_t d_rpe,
                                    std::size_t d_feat);
    static CombinerParams init(const PairwiseConfig& config, const RpeConfig& rpe, std::uint64_t seed);
    void validate() const;
};

void save_params(const CombinerParams& params, const std::string& path);
CombinerParams load_params(const std::string& path);

// [degree(u)/max_degree, ppr(a,u), ppr(b,u)]
std::array<double, 3> node_features(const TextAttributedGraph& graph,
                                    NodeId u,
                                    const PprScores& ppr_a,
                                    const PprScores& ppr_b);

PairwiseEncoding pairwise_encoding(const TextAttributedGraph& graph,
                                   NodeId a,
                                   NodeId b,
                                   const PprScores& ppr_a,
                                   const PprScores& ppr_b,
                                   const CombinerParams& params,
                                   const PprConfig& ppr_config,
                                   const RpeConfig& rpe_config);

// Pre-computed, parameter-independent view of one training pair. Context
// vectors are stored in scoring order, concat(rpe, feats).
struct TrainSample {
    double label = 0.0;
    std::array<double, 5> heuristics{};
    std::vector<std::array<double, 9>> context;
};

struct TrainBatch {
    std::vector<TrainSample> samples;
    std::size_t d_p = 16;
    std::size_t d_rpe = 6;
    std::size_t d_feat = 3;
};

TrainBatch build_train_batch(const TextAttributedGraph& graph,
                             const std::vector<Edge>& train_edges,
                             const PairwiseConfig& config,
                             const PprConfig& ppr_config,
                             const RpeConfig& rpe_config);

// Mean BCE loss and its gradient in flattened-parameter order
// [attention_weights, mix_matrix row-major, logistic_head, bias].
std::pair<double, std::vector<double>> pair_loss_and_grad(const TrainBatch& batch,
                                                          const std::vector<double>& flat_params);

CombinerParams train_combiner(const TextAttributedGraph& graph,
                              const std::vector<Edge>& train_edges,
                              const PairwiseConfig& config,
                              const PprConfig& ppr_config,
                              const RpeConfig& rpe_config);

// Convenience wrapper bundling the graph, a PPR cache, and configs. score()
// returns the logistic-head pre-activation z for a pair.
class PairwiseEncoder {
public:
    PairwiseEncoder(const TextAttributedGraph& graph,
                    PprConfig ppr_config,
                    RpeConfig rpe_config,
                    PairwiseConfig pairwise_config)
        : graph_(graph),
          ppr_config_(ppr_config),
          rpe_config_(rpe_config),
          pairwise_config_(pairwise_config),
          cache_(graph, ppr_config) {}

    HeuristicFeatures heuristics(NodeId a, NodeId b);
    PairwiseEncoding encode(NodeId a, NodeId b, const CombinerParams& params);
    double score(NodeId a, NodeId b, const CombinerParams& params);
    PprCache& ppr_cache() { return cache_; }
    const TextAttributedGraph& graph() const { return graph_; }

private:
    const TextAttributedGraph& graph_;
    PprConfig ppr_config_;
    RpeConfig rpe_config_;
    PairwiseConfig pairwise_config_;
    PprCache cache_;
};

}  // namespace linkrr
