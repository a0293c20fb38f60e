#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace linkrr {

using NodeId = std::uint32_t;

// Undirected edge stored with the smaller endpoint first.
struct Edge {
    NodeId u = 0;
    NodeId v = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

struct IngestStats {
    std::size_t self_loops_dropped = 0;
    std::size_t duplicate_edges_dropped = 0;
};

// Immutable text-attributed graph: dense node ids, per-node text, and a
// CSR adjacency (symmetric, deduplicated, sorted, no self-loops). Safe to
// share read-only across threads; mutation only via rebuild.
class TextAttributedGraph {
public:
    TextAttributedGraph() = default;

    // Builds from parts, dropping self-loops and parallel edges (counted in
    // stats). Edge endpoints must be < node count.
    static TextAttributedGraph from_parts(std::vector<std::string> original_ids,
                                          std::vector<std::string> texts,
                                          const std::vector<Edge>& edges,
                                          IngestStats* stats = nullptr);

    std::size_t node_count() const { return texts_.size(); }
    std::size_t edge_count() const { return flat_adjacency_.size() / 2; }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {flat_adjacency_.data() + offsets_[v], flat_adjacency_.data() + offsets_[v + 1]};
    }
    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
    std::size_t max_degree() const { return max_degree_; }

    const std::string& text(NodeId v) const { return texts_[v]; }
    const std::string& original_id(NodeId v) const { return original_ids_[v]; }
    std::optional<NodeId> find(std::string_view original_id) const;

    bool has_edge(NodeId u, NodeId v) const;
    bool contains(NodeId v) const { return v < node_count(); }

    // Canonical edge list, sorted ascending.
    std::vector<Edge> edges() const;

private:
    std::vector<std::string> original_ids_;
    std::vector<std::string> texts_;
    std::vector<std::size_t> offsets_;      // node_count()+1 entries
    std::vector<NodeId> flat_adjacency_;    // 2*edge_count() entries
    std::size_t max_degree_ = 0;
};

// JSONL ingestion per the documented file formats: node lines carry
// {"id": str, "text": str}, edge lines carry {"src": str, "dst": str}.
// Malformed lines raise a parse error naming the file and line number;
// unknown edge endpoints raise a validation error.
TextAttributedGraph load_graph_jsonl(const std::string& nodes_path,
                                     const std::string& edges_path,
                                     IngestStats* stats = nullptr);

// Canonical single-file graph artifact (JSON), as written by `linkrr ingest`.
void save_graph(const TextAttributedGraph& graph, const std::string& path);
TextAttributedGraph load_graph(const std::string& path);

struct EdgeSplit {
    std::vector<Edge> train;
    std::vector<Edge> valid;
    std::vector<Edge> test;
    std::uint64_t seed = 0;
};

// Deterministic seeded split. Ratios must be positive and sum to 1 (1e-9).
// Validation and test sizes are floor(ratio * |E|); the remainder goes to
// train.
EdgeSplit split_edges(const TextAttributedGraph& graph,
                      std::array<double, 3> ratios,
                      std::uint64_t seed);

void save_split(const EdgeSplit& split, const std::string& path);
EdgeSplit load_split(const std::string& path);

// Nodes at shortest-path distance exactly k from v (v excluded), sorted.
std::vector<NodeId> k_hop_neighbors(const TextAttributedGraph& graph, NodeId v, int k);

// Nodes at distance 1..k from v (v excluded), sorted. Used for the
// distance-based candidate grouping in retrieval.
std::vector<NodeId> within_k_hops(const TextAttributedGraph& graph, NodeId v, int k);

// Same nodes and texts, adjacency restricted to the given edges. The eval
// pipeline uses this to keep held-out edges invisible to structural scoring.
TextAttributedGraph edge_subgraph(const TextAttributedGraph& graph, const std::vector<Edge>& edges);

// Per-node sorted neighbor lists for an edge subset (e.g. train edges only).
std::vector<std::vector<NodeId>> build_adjacency(std::size_t node_count, const std::vector<Edge>& edges);

}  // namespace linkrr
