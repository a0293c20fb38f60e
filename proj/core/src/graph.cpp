#include "linkrr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "linkrr/error.hpp"
#include "linkrr/rng.hpp"

namespace linkrr {

namespace {

using json = nlohmann::json;

constexpr int kGraphSchemaVersion = 1;

json parse_jsonl_line(const std::string& line, const std::string& path, std::size_t line_no) {
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        throw Error("graph_core", path + ":" + std::to_string(line_no) + ": malformed JSON line");
    }
    return obj;
}

std::string require_string(const json& obj, const char* key, const std::string& path, std::size_t line_no) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error("graph_core",
                    path + ":" + std::to_string(line_no) + ": missing string field '" + std::string(key) + "'");
    }
    return it->get<std::string>();
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("graph_core", "cannot open file: " + path);
    return in;
}

}  // namespace

TextAttributedGraph TextAttributedGraph::from_parts(std::vector<std::string> original_ids,
                                                    std::vector<std::string> texts,
                                                    const std::vector<Edge>& edges,
                                                    IngestStats* stats) {
    if (original_ids.size() != texts.size()) {
        throw Error("graph_core", "node id and text counts differ");
    }
    const std::size_t n = texts.size();

    IngestStats local;
    std::vector<Edge> canon;
    canon.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.u >= n || e.v >= n) {
            throw Error("graph_core", "edge endpoint out of range: (" + std::to_string(e.u) + ", " +
                                          std::to_string(e.v) + ")");
        }
        if (e.u == e.v) {
            ++local.self_loops_dropped;
            continue;
        }
        canon.push_back(make_edge(e.u, e.v));
    }
    std::sort(canon.begin(), canon.end());
    const auto last = std::unique(canon.begin(), canon.end());
    local.duplicate_edges_dropped = static_cast<std::size_t>(canon.end() - last);
    canon.erase(last, canon.end());
    if (stats) *stats = local;

    TextAttributedGraph g;
    g.original_ids_ = std::move(original_ids);
    g.texts_ = std::move(texts);

    std::vector<std::size_t> degree(n, 0);
    for (const Edge& e : canon) {
        ++degree[e.u];
        ++degree[e.v];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + degree[v];
    g.flat_adjacency_.resize(2 * canon.size());

    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const Edge& e : canon) {
        g.flat_adjacency_[cursor[e.u]++] = e.v;
        g.flat_adjacency_[cursor[e.v]++] = e.u;
    }
    for (std::size_t v = 0; v < n; ++v) {
        auto begin = g.flat_adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v]);
        auto end = g.flat_adjacency_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[v + 1]);
        std::sort(begin, end);
        g.max_degree_ = std::max(g.max_degree_, degree[v]);
    }
    return g;
}

std::optional<NodeId> TextAttributedGraph::find(std::string_view original_id) const {
    for (std::size_t i = 0; i < original_ids_.size(); ++i) {
        if (original_ids_[i] == original_id) return static_cast<NodeId>(i);
    }
    return std::nullopt;
}

bool TextAttributedGraph::has_edge(NodeId u, NodeId v) const {
    if (u >= node_count() || v >= node_count()) return false;
    const auto adj = neighbors(u);
    return std::binary_search(adj.begin(), adj.end(), v);
}

std::vector<Edge> TextAttributedGraph::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count());
    for (NodeId u = 0; u < node_count(); ++u) {
        for (NodeId v : neighbors(u)) {
            if (u < v) out.push_back({u, v});
        }
    }
    return out;
}

TextAttributedGraph load_graph_jsonl(const std::string& nodes_path,
                                     const std::string& edges_path,
                                     IngestStats* stats) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    std::unordered_map<std::string, NodeId> id_map;

    {
        std::ifstream in = open_or_throw(nodes_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json obj = parse_jsonl_line(line, nodes_path, line_no);
            std::string id = require_string(obj, "id", nodes_path, line_no);
            std::string text = require_string(obj, "text", nodes_path, line_no);
            if (!id_map.emplace(id, static_cast<NodeId>(ids.size())).second) {
                throw Error("graph_core", nodes_path + ":" + std::to_string(line_no) + ": duplicate node id '" + id + "'");
            }
            ids.push_back(std::move(id));
            texts.push_back(std::move(text));
        }
    }

    std::vector<Edge> edges;
    {
        std::ifstream in = open_or_throw(edges_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            json obj = parse_jsonl_line(line, edges_path, line_no);
            std::string src = require_string(obj, "src", edges_path, line_no);
            std::string dst = require_string(obj, "dst", edges_path, line_no);
            auto su = id_map.find(src);
            auto sv = id_map.find(dst);
            if (su == id_map.end()) {
                throw Error("graph_core",
                            edges_path + ":" + std::to_string(line_no) + ": unknown edge endpoint '" + src + "'");
            }
            if (sv == id_map.end()) {
                throw Error("graph_core",
                            edges_path + ":" + std::to_string(line_no) + ": unknown edge endpoint '" + dst + "'");
            }
            edges.push_back({su->second, sv->second});
        }
    }

    return TextAttributedGraph::from_parts(std::move(ids), std::move(texts), edges, stats);
}

void save_graph(const TextAttributedGraph& graph, const std::string& path) {
    json doc;
    doc["schema_version"] = kGraphSchemaVersion;
    json ids = json::array();
    json texts = json::array();
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        ids.push_back(graph.original_id(v));
        texts.push_back(graph.text(v));
    }
    doc["ids"] = std::move(ids);
    doc["texts"] = std::move(texts);
    json edges = json::array();
    for (const Edge& e : graph.edges()) edges.push_back(json::array({e.u, e.v}));
    doc["edges"] = std::move(edges);

    std::ofstream out(path);
    if (!out) throw Error("graph_core", "cannot write file: " + path);
    out << doc.dump() << '\n';
}

TextAttributedGraph load_graph(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("ids") || !doc.contains("edges")) {
        throw Error("graph_core", "not a graph file: " + path);
    }
    std::vector<std::string> ids = doc.at("ids").get<std::vector<std::string>>();
    std::vector<std::string> texts = doc.at("texts").get<std::vector<std::string>>();
    std::vector<Edge> edges;
    for (const auto& e : doc.at("edges")) {
        edges.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    }
    return TextAttributedGraph::from_parts(std::move(ids), std::move(texts), edges);
}

EdgeSplit split_edges(const TextAttributedGraph& graph, std::array<double, 3> ratios, std::uint64_t seed) {
    for (double r : ratios) {
        if (!(r > 0.0)) throw Error("graph_core", "split ratios must all be positive");
    }
    const double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9) throw Error("graph_core", "split ratios must sum to 1");

    std::vector<Edge> edges = graph.edges();
    if (edges.empty()) throw Error("graph_core", "cannot split a graph with no edges");

    const std::size_t e = edges.size();
    const auto n_valid = static_cast<std::size_t>(ratios[1] * static_cast<double>(e));
    const auto n_test = static_cast<std::size_t>(ratios[2] * static_cast<double>(e));
    const std::size_t n_train = e - n_valid - n_test;  // remainder goes to train

    Rng rng(seed);
    rng.shuffle(edges);

    EdgeSplit split;
    split.seed = seed;
    split.train.assign(edges.begin(), edges.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.valid.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train),
                       edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
    split.test.assign(edges.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), edges.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.valid.begin(), split.valid.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

namespace {

json edges_to_json(const std::vector<Edge>& edges) {
    json arr = json::array();
    for (const Edge& e : edges) arr.push_back(json::array({e.u, e.v}));
    return arr;
}

std::vector<Edge> edges_from_json(const json& arr) {
    std::vector<Edge> out;
    for (const auto& e : arr) out.push_back({e.at(0).get<NodeId>(), e.at(1).get<NodeId>()});
    return out;
}

}  // namespace

void save_split(const EdgeSplit& split, const std::string& path) {
    json doc;
    doc["schema_version"] = kGraphSchemaVersion;
    doc["seed"] = split.seed;
    doc["train"] = edges_to_json(split.train);
    doc["valid"] = edges_to_json(split.valid);
    doc["test"] = edges_to_json(split.test);
    std::ofstream out(path);
    if (!out) throw Error("graph_core", "cannot write file: " + path);
    out << doc.dump() << '\n';
}

EdgeSplit load_split(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("train")) {
        throw Error("graph_core", "not a split file: " + path);
    }
    EdgeSplit split;
    split.seed = doc.value("seed", 0ULL);
    split.train = edges_from_json(doc.at("train"));
    split.valid = edges_from_json(doc.at("valid"));
    split.test = edges_from_json(doc.at("test"));
    return split;
}

namespace {

// BFS layering up to depth k; returns per-node distance (SIZE_MAX = unreached).
std::vector<std::size_t> bfs_distances(const TextAttributedGraph& graph, NodeId v, int k) {
    std::vector<std::size_t> dist(graph.node_count(), static_cast<std::size_t>(-1));
    dist[v] = 0;
    std::vector<NodeId> frontier{v};
    for (int depth = 1; depth <= k && !frontier.empty(); ++depth) {
        std::vector<NodeId> next;
        for (NodeId u : frontier) {
            for (NodeId w : graph.neighbors(u)) {
                if (dist[w] == static_cast<std::size_t>(-1)) {
                    dist[w] = static_cast<std::size_t>(depth);
                    next.push_back(w);
                }
            }
        }
        frontier = std::move(next);
    }
    return dist;
}

}  // namespace

std::vector<NodeId> k_hop_neighbors(const TextAttributedGraph& graph, NodeId v, int k) {
    if (!graph.contains(v)) throw Error("graph_core", "node out of range");
    if (k < 1) throw Error("graph_core", "k must be >= 1");
    const auto dist = bfs_distances(graph, v, k);
    std::vector<NodeId> out;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        if (u != v && dist[u] == static_cast<std::size_t>(k)) out.push_back(u);
    }
    return out;
}

std::vector<NodeId> within_k_hops(const TextAttributedGraph& graph, NodeId v, int k) {
    if (!graph.contains(v)) throw Error("graph_core", "node out of range");
    if (k < 1) throw Error("graph_core", "k must be >= 1");
    const auto dist = bfs_distances(graph, v, k);
    std::vector<NodeId> out;
    for (NodeId u = 0; u < graph.node_count(); ++u) {
        if (u != v && dist[u] <= static_cast<std::size_t>(k)) out.push_back(u);
    }
    return out;
}

TextAttributedGraph edge_subgraph(const TextAttributedGraph& graph, const std::vector<Edge>& edges) {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    ids.reserve(graph.node_count());
    texts.reserve(graph.node_count());
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        ids.push_back(graph.original_id(v));
        texts.push_back(graph.text(v));
    }
    return TextAttributedGraph::from_parts(std::move(ids), std::move(texts), edges);
}

std::vector<std::vector<NodeId>> build_adjacency(std::size_t node_count, const std::vector<Edge>& edges) {
    std::vector<std::vector<NodeId>> adj(node_count);
    for (const Edge& e : edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    for (auto& list : adj) std::sort(list.begin(), list.end());
    return adj;
}

}  // namespace linkrr
