#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "linkrr/config.hpp"
#include "linkrr/graph.hpp"

namespace linkrr {

struct ScoredDoc {
    NodeId doc;
    double score;
};

class Bm25Index {
public:
    static Bm25Index build(const std::vector<std::string>& docs, double k1, double b);

    // idf(t) = ln(1 + (D - df + 0.5)/(df + 0.5)); 0 for unseen terms.
    double idf(const std::string& term) const;
    double score(NodeId doc, const std::string& query) const;

    // Descending score, ties by ascending id, pool members only. Documents
    // with score 0 are never returned.
    std::vector<ScoredDoc> topk(const std::string& query, const std::vector<NodeId>& pool, std::size_t k) const;

    std::size_t doc_count() const { return doc_lengths_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    std::size_t doc_frequency(const std::string& term) const;

private:
    std::unordered_map<std::string, std::vector<std::pair<NodeId, double>>> postings_;  // sorted by doc
    std::vector<double> doc_lengths_;
    double avg_doc_length_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
};

struct QuerySet {
    std::vector<std::string> queries;
    std::vector<std::size_t> groups;     // group index per query
    std::string diversity = "template";  // template | grouped | sampled
    std::size_t substituted = 0;         // empty completions replaced by source text
};

class QueryGenerator {
public:
    virtual ~QueryGenerator() = default;
    virtual QuerySet generate(NodeId source, std::size_t n_groups, std::size_t group_size) = 0;
};

// Deterministic offline generator: emits the source text, the source text
// with its most frequent term removed (ties to the lexicographically
// smallest term), then sampled train-neighbor texts, cycling to pad.
class TemplateQueryGenerator : public QueryGenerator {
public:
    TemplateQueryGenerator(const TextAttributedGraph& graph, std::uint64_t seed)
        : graph_(graph), seed_(seed) {}

    QuerySet generate(NodeId source, std::size_t n_groups, std::size_t group_size) override;

private:
    const TextAttributedGraph& graph_;
    std::uint64_t seed_;
};

QuerySet generate_queries(NodeId source, QueryGenerator& generator, std::size_t n_groups, std::size_t group_size);

enum class Provenance { near, far, sampled };

struct CandidateSet {
    NodeId source = 0;
    std::vector<NodeId> candidates;
    std::optional<NodeId> positive;  // set only when present among candidates
    std::vector<Provenance> provenance;
    void validate() const;
};

// Scores each pool node by its max BM25 score over the queries, then takes
// floor(beta*n_C) from pool nodes within two hops of the source and the rest
// from the others, backfilling either side's shortfall.
CandidateSet retrieve_candidates(const TextAttributedGraph& graph,
                                 const Bm25Index& index,
                                 NodeId source,
                                 const QuerySet& queries,
                                 const CandidateSet& pool,
                                 std::size_t n_c,
                                 double beta);

}  // namespace linkrr
