#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "linkrr/config.hpp"
#include "linkrr/graph.hpp"
#include "linkrr/retrieval.hpp"

namespace linkrr {

inline constexpr std::size_t kRankInfinity = std::numeric_limits<std::size_t>::max();

enum class PlaceholderKind { node, pairwise };

struct Placeholder {
    PlaceholderKind kind;
    std::size_t offset;  // byte offset into the full prompt
};

struct PromptParts {
    std::string shared_prefix;
    std::string candidate_suffix;
    std::vector<Placeholder> placeholders;
    std::string full_prompt() const { return shared_prefix + candidate_suffix; }
};

struct IclExamples {
    std::vector<std::pair<NodeId, std::string>> positives;
    std::vector<std::pair<NodeId, std::string>> negatives;
    std::uint64_t seed = 0;
    bool truncated = false;
};

// Positives sampled without replacement from the source's neighbors in the
// split's train edges; negatives uniformly from non-neighbors. k shrinks to
// the available neighbor count (flagged via `truncated`).
IclExamples select_icl_examples(const TextAttributedGraph& graph,
                                const EdgeSplit& split,
                                NodeId source,
                                std::size_t k,
                                std::uint64_t seed);

enum class PromptMode { link_prediction, neighbor_prediction };

// Byte-exact rendering of the pinned templates (prompt_templates.hpp).
// Examples are interleaved positive, negative, positive, ... in link mode.
PromptParts assemble_prompt(const std::string& source_text,
                            const std::string& candidate_text,
                            const IclExamples& examples,
                            PromptMode mode);

// exp(yes) / (exp(yes) + exp(no)), computed stably.
double yes_no_index(double yes_logit, double no_logit);

struct RankedList {
    std::vector<NodeId> ordering;  // descending score
    std::vector<double> scores;    // aligned with ordering, in [0, 1]
    std::size_t rank_of_positive = kRankInfinity;
    std::size_t provider_errors = 0;
    std::size_t provider_calls = 0;
};

class LogitProvider;

// Scores every candidate with a Yes/No index over the shared-prefix prompt
// and sorts descending. Ties go against the positive, then ascending id.
// Provider failures score the candidate last (fail-soft) unless strict.
RankedList rerank_candidates(LogitProvider& provider,
                             const TextAttributedGraph& graph,
                             NodeId source,
                             const CandidateSet& candidates,
                             const IclExamples& examples,
                             std::optional<NodeId> positive,
                             const RerankConfig& config);

}  // namespace linkrr
