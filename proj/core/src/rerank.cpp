#include "linkrr/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "linkrr/error.hpp"
#include "linkrr/prompt_templates.hpp"
#include "linkrr/rng.hpp"
#include "linkrr/scorers.hpp"
#include "linkrr/tokenize.hpp"

namespace linkrr {

IclExamples select_icl_examples(const TextAttributedGraph& graph,
                                const EdgeSplit& split,
                                NodeId source,
                                std::size_t k,
                                std::uint64_t seed) {
    if (!graph.contains(source)) throw Error("rerank", "source node out of range");
    IclExamples out;
    out.seed = seed;
    if (k == 0) return out;
    if (graph.node_count() < 2 * k + 1) {
        throw Error("rerank", "graph too small for " + std::to_string(k) + " example pairs");
    }

    std::vector<NodeId> train_neighbors;
    for (const Edge& e : split.train) {
        if (e.u == source) train_neighbors.push_back(e.v);
        if (e.v == source) train_neighbors.push_back(e.u);
    }
    std::sort(train_neighbors.begin(), train_neighbors.end());
    train_neighbors.erase(std::unique(train_neighbors.begin(), train_neighbors.end()), train_neighbors.end());

    std::size_t take = k;
    if (train_neighbors.size() < k) {
        take = train_neighbors.size();
        out.truncated = true;
    }

    Rng rng(mix_seed(seed, source));
    for (NodeId u : rng.sample(train_neighbors, take)) out.positives.emplace_back(u, graph.text(u));

    std::unordered_set<NodeId> forbidden{source};
    for (NodeId u : graph.neighbors(source)) forbidden.insert(u);
    std::unordered_set<NodeId> chosen;
    while (out.negatives.size() < take) {
        const auto v = static_cast<NodeId>(rng.below(graph.node_count()));
        if (forbidden.count(v) || chosen.count(v)) continue;
        chosen.insert(v);
        out.negatives.emplace_back(v, graph.text(v));
    }
    return out;
}

namespace {

// Renders a template, substituting {text} and recording marker offsets
// relative to `base` plus the position within the rendered block.
std::string render_block(std::string_view tmpl,
                         const std::string& text,
                         std::size_t base,
                         std::vector<Placeholder>* placeholders) {
    std::string block;
    block.reserve(tmpl.size() + text.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.compare(i, prompts::kTextPlaceholder.size(), prompts::kTextPlaceholder) == 0) {
            block += text;
            i += prompts::kTextPlaceholder.size();
            continue;
        }
        if (placeholders && tmpl.compare(i, prompts::kNodeMarker.size(), prompts::kNodeMarker) == 0) {
            placeholders->push_back({PlaceholderKind::node, base + block.size()});
        } else if (placeholders &&
                   tmpl.compare(i, prompts::kPairwiseMarker.size(), prompts::kPairwiseMarker) == 0) {
            placeholders->push_back({PlaceholderKind::pairwise, base + block.size()});
        }
        block += tmpl[i];
        ++i;
    }
    return block;
}

}  // namespace

PromptParts assemble_prompt(const std::string& source_text,
                            const std::string& candidate_text,
                            const IclExamples& examples,
                            PromptMode mode) {
    PromptParts parts;
    const std::string src = sanitize_text(source_text);

    parts.shared_prefix = render_block(prompts::kSourceBlock, src, 0, &parts.placeholders);
    parts.shared_prefix += prompts::kBlockSeparator;

    if (mode == PromptMode::neighbor_prediction) {
        parts.candidate_suffix = prompts::kNeighborQuestion;
        return parts;
    }

    const std::size_t n = std::max(examples.positives.size(), examples.negatives.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (i < examples.positives.size()) {
            parts.shared_prefix += render_block(prompts::kCandidateBlock,
                                                sanitize_text(examples.positives[i].second),
                                                parts.shared_prefix.size(), &parts.placeholders);
            parts.shared_prefix += prompts::kYesAnswer;
            parts.shared_prefix += prompts::kBlockSeparator;
        }
        if (i < examples.negatives.size()) {
            parts.shared_prefix += render_block(prompts::kCandidateBlock,
                                                sanitize_text(examples.negatives[i].second),
                                                parts.shared_prefix.size(), &parts.placeholders);
            parts.shared_prefix += prompts::kNoAnswer;
            parts.shared_prefix += prompts::kBlockSeparator;
        }
    }

    parts.candidate_suffix = render_block(prompts::kCandidateBlock, sanitize_text(candidate_text),
                                          parts.shared_prefix.size(), &parts.placeholders);
    return parts;
}

double yes_no_index(double yes_logit, double no_logit) {
    if (!std::isfinite(yes_logit) || !std::isfinite(no_logit)) {
        throw Error("rerank", "Yes/No index requires finite logits");
    }
    const double m = std::max(yes_logit, no_logit);
    const double ey = std::exp(yes_logit - m);
    const double en = std::exp(no_logit - m);
    return ey / (ey + en);
}

RankedList rerank_candidates(LogitProvider& provider,
                             const TextAttributedGraph& graph,
                             NodeId source,
                             const CandidateSet& candidates,
                             const IclExamples& examples,
                             std::optional<NodeId> positive,
                             const RerankConfig& config) {
    if (candidates.candidates.empty()) throw Error("rerank", "candidate set is empty");
    candidates.validate();

    struct Scored {
        NodeId node;
        double score;
        bool failed;
    };
    std::vector<Scored> scored;
    scored.reserve(candidates.candidates.size());

    RankedList out;
    std::string prefix_bytes;
    for (NodeId cand : candidates.candidates) {
        const PromptParts prompt =
            assemble_prompt(graph.text(source), graph.text(cand), examples, PromptMode::link_prediction);
        if (prefix_bytes.empty()) {
            prefix_bytes = prompt.shared_prefix;
        } else if (prompt.shared_prefix != prefix_bytes) {
            throw Error("rerank", "shared prefix bytes diverged across candidates");
        }
        ++out.provider_calls;
        try {
            const YesNoLogits logits = provider.score(prompt, source, cand);
            if (!std::isfinite(logits.yes) || !std::isfinite(logits.no)) {
                throw ProviderError(ProviderErrorKind::capability, "provider returned non-finite logits");
            }
            scored.push_back({cand, yes_no_index(logits.yes, logits.no), false});
        } catch (const Error&) {
            if (config.strict) throw;
            ++out.provider_errors;
            scored.push_back({cand, 0.0, true});
        }
    }

    std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
        if (a.failed != b.failed) return b.failed;  // failures sink to the bottom
        if (a.score != b.score) return a.score > b.score;
        const bool a_pos = positive && a.node == *positive;
        const bool b_pos = positive && b.node == *positive;
        if (a_pos != b_pos) return b_pos;  // ties go against the positive
        return a.node < b.node;
    });

    out.ordering.reserve(scored.size());
    out.scores.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        out.ordering.push_back(scored[i].node);
        out.scores.push_back(scored[i].score);
        if (positive && scored[i].node == *positive) out.rank_of_positive = i + 1;
    }
    return out;
}

}  // namespace linkrr
