#include "linkrr/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "linkrr/error.hpp"
#include "linkrr/rng.hpp"
#include "linkrr/tokenize.hpp"

namespace linkrr {

Bm25Index Bm25Index::build(const std::vector<std::string>& docs, double k1, double b) {
    if (docs.empty()) throw Error("retrieval", "BM25 index needs at least one document");
    if (!(k1 >= 0.0) || !(b >= 0.0) || b > 1.0) throw Error("retrieval", "invalid BM25 parameters");

    Bm25Index index;
    index.k1_ = k1;
    index.b_ = b;
    index.doc_lengths_.resize(docs.size(), 0.0);

    std::map<std::string, std::vector<std::pair<NodeId, double>>> postings;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto tokens = tokenize(docs[d]);
        index.doc_lengths_[d] = static_cast<double>(tokens.size());
        std::map<std::string, double> tf;
        for (const auto& t : tokens) tf[t] += 1.0;
        for (const auto& [term, count] : tf) postings[term].emplace_back(static_cast<NodeId>(d), count);
    }
    double total = 0.0;
    for (double len : index.doc_lengths_) total += len;
    index.avg_doc_length_ = total / static_cast<double>(docs.size());
    for (auto& [term, list] : postings) index.postings_.emplace(term, std::move(list));
    return index;
}

std::size_t Bm25Index::doc_frequency(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(const std::string& term) const {
    const auto df = static_cast<double>(doc_frequency(term));
    const auto d = static_cast<double>(doc_count());
    return std::log(1.0 + (d - df + 0.5) / (df + 0.5));
}

namespace {

std::vector<std::string> unique_terms(const std::string& query) {
    auto terms = tokenize(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
}

}  // namespace

double Bm25Index::score(NodeId doc, const std::string& query) const {
    if (doc >= doc_count()) throw Error("retrieval", "document id out of range");
    double total = 0.0;
    for (const auto& term : unique_terms(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto& list = it->second;
        auto pos = std::lower_bound(list.begin(), list.end(), doc,
                                    [](const auto& entry, NodeId d) { return entry.first < d; });
        if (pos == list.end() || pos->first != doc) continue;
        const double tf = pos->second;
        const double norm = k1_ * (1.0 - b_ + b_ * doc_lengths_[doc] / avg_doc_length_);
        total += idf(term) * tf * (k1_ + 1.0) / (tf + norm);
    }
    return total;
}

std::vector<ScoredDoc> Bm25Index::topk(const std::string& query,
                                       const std::vector<NodeId>& pool,
                                       std::size_t k) const {
    if (k == 0) throw Error("retrieval", "k must be >= 1");
    std::unordered_set<NodeId> pool_set(pool.begin(), pool.end());

    std::unordered_map<NodeId, double> scores;
    for (const auto& term : unique_terms(query)) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const double term_idf = idf(term);
        for (const auto& [doc, tf] : it->second) {
            if (!pool_set.count(doc)) continue;
            const double norm = k1_ * (1.0 - b_ + b_ * doc_lengths_[doc] / avg_doc_length_);
            scores[doc] += term_idf * tf * (k1_ + 1.0) / (tf + norm);
        }
    }

    std::vector<ScoredDoc> out;
    out.reserve(scores.size());
    for (const auto& [doc, s] : scores) {
        if (s > 0.0) out.push_back({doc, s});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

QuerySet TemplateQueryGenerator::generate(NodeId source, std::size_t n_groups, std::size_t group_size) {
    if (!graph_.contains(source)) throw Error("retrieval", "source node out of range");
    const std::size_t total = n_groups * group_size;
    if (total == 0) throw Error("retrieval", "query count must be positive");

    const std::string source_text = sanitize_text(graph_.text(source));

    auto tokens = tokenize(graph_.text(source));
    std::string reduced = source_text;
    if (!tokens.empty()) {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : tokens) ++counts[t];
        std::string top = counts.begin()->first;
        std::size_t best = counts.begin()->second;
        for (const auto& [term, c] : counts) {
            if (c > best) {
                best = c;
                top = term;
            }
        }
        std::string joined;
        for (const auto& t : tokens) {
            if (t == top) continue;
            if (!joined.empty()) joined += ' ';
            joined += t;
        }
        if (!joined.empty()) reduced = joined;
    }

    std::vector<std::string> base{source_text, reduced};
    if (total > 2) {
        Rng rng(mix_seed(seed_, source));
        const auto nbrs = graph_.neighbors(source);
        std::vector<NodeId> pool(nbrs.begin(), nbrs.end());
        const std::size_t want = std::min(total - 2, pool.size());
        for (NodeId u : rng.sample(pool, want)) base.push_back(sanitize_text(graph_.text(u)));
    }

    QuerySet qs;
    qs.queries.reserve(total);
    qs.groups.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        qs.queries.push_back(base[i % base.size()]);
        qs.groups.push_back(i / group_size);
    }
    return qs;
}

QuerySet generate_queries(NodeId source, QueryGenerator& generator, std::size_t n_groups, std::size_t group_size) {
    if (n_groups == 0 || group_size == 0) throw Error("retrieval", "n_groups and group_size must be positive");
    QuerySet qs = generator.generate(source, n_groups, group_size);
    if (qs.queries.size() != n_groups * group_size || qs.groups.size() != qs.queries.size()) {
        throw Error("retrieval", "generator returned a malformed query set");
    }
    return qs;
}

void CandidateSet::validate() const {
    std::unordered_set<NodeId> seen;
    for (NodeId c : candidates) {
        if (c == source) throw Error("retrieval", "candidate set contains the source");
        if (!seen.insert(c).second) throw Error("retrieval", "duplicate candidate");
    }
    if (positive && !seen.count(*positive)) throw Error("retrieval", "declared positive missing from candidates");
    if (!provenance.empty() && provenance.size() != candidates.size()) {
        throw Error("retrieval", "provenance length mismatch");
    }
}

CandidateSet retrieve_candidates(const TextAttributedGraph& graph,
                                 const Bm25Index& index,
                                 NodeId source,
                                 const QuerySet& queries,
                                 const CandidateSet& pool,
                                 std::size_t n_c,
                                 double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw Error("retrieval", "beta must lie in [0, 1]");
    if (n_c == 0) throw Error("retrieval", "n_C must be >= 1");
    if (n_c > pool.candidates.size()) throw Error("retrieval", "n_C exceeds the candidate pool size");
    pool.validate();

    std::unordered_map<NodeId, double> best;
    for (NodeId c : pool.candidates) best[c] = 0.0;
    for (const auto& q : queries.queries) {
        for (const auto& [doc, s] : index.topk(q, pool.candidates, pool.candidates.size())) {
            best[doc] = std::max(best[doc], s);
        }
    }

    std::unordered_set<NodeId> near_set;
    for (NodeId u : within_k_hops(graph, source, 2)) near_set.insert(u);

    std::vector<NodeId> near, far;
    for (NodeId c : pool.candidates) (near_set.count(c) ? near : far).push_back(c);
    auto by_score = [&](NodeId a, NodeId b) {
        if (best[a] != best[b]) return best[a] > best[b];
        return a < b;
    };
    std::sort(near.begin(), near.end(), by_score);
    std::sort(far.begin(), far.end(), by_score);

    const std::size_t want_near = static_cast<std::size_t>(beta * static_cast<double>(n_c));
    std::size_t take_near = std::min(want_near, near.size());
    std::size_t take_far = std::min(n_c - want_near, far.size());
    // Backfill whichever side fell short from the other, by score order.
    if (take_near + take_far < n_c) {
        const std::size_t missing = n_c - take_near - take_far;
        if (take_near < near.size()) {
            take_near = std::min(near.size(), take_near + missing);
        } else {
            take_far = std::min(far.size(), take_far + missing);
        }
    }

    CandidateSet out;
    out.source = source;
    std::vector<std::pair<NodeId, Provenance>> picked;
    picked.reserve(n_c);
    for (std::size_t i = 0; i < take_near; ++i) picked.emplace_back(near[i], Provenance::near);
    for (std::size_t i = 0; i < take_far; ++i) picked.emplace_back(far[i], Provenance::far);
    std::sort(picked.begin(), picked.end(), [&](const auto& a, const auto& b) {
        if (best[a.first] != best[b.first]) return best[a.first] > best[b.first];
        return a.first < b.first;
    });
    for (const auto& [node, tag] : picked) {
        out.candidates.push_back(node);
        out.provenance.push_back(tag);
    }
    if (pool.positive &&
        std::find(out.candidates.begin(), out.candidates.end(), *pool.positive) != out.candidates.end()) {
        out.positive = pool.positive;
    }
    out.validate();
    return out;
}

}  // namespace linkrr
