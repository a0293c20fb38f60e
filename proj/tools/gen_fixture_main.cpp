// Generates the planted-structure fixture used by the acceptance suite:
// 25 dense communities of 20 nodes with community-private vocabularies,
// sparse inter-community edges, and test edges picked by triangle closure so
// that every held-out pair keeps at least two common neighbors in the train
// graph (their supporting edges are protected from later selection).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "linkrr/graph.hpp"
#include "linkrr/rng.hpp"

namespace {

using linkrr::Edge;
using linkrr::NodeId;

constexpr std::size_t kCommunities = 25;
constexpr std::size_t kCommunitySize = 20;
constexpr std::size_t kNodes = kCommunities * kCommunitySize;
constexpr std::size_t kVocabPerCommunity = 12;
constexpr std::size_t kWordsPerNode = 6;
constexpr double kIntraEdgeProb = 0.35;
constexpr std::size_t kInterEdges = 250;
constexpr std::size_t kTestEdges = 220;

std::size_t community_of(NodeId v) { return v / kCommunitySize; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Planted fixture generator"};
    std::string out_dir = "fixtures";
    std::uint64_t seed = 42;
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--seed", seed, "generation seed");
    CLI11_PARSE(app, argc, argv);

    linkrr::Rng rng(seed);

    std::vector<std::string> ids(kNodes);
    std::vector<std::string> texts(kNodes);
    for (NodeId v = 0; v < kNodes; ++v) {
        ids[v] = "n" + std::to_string(v);
        const std::size_t c = community_of(v);
        std::string text;
        for (std::size_t w = 0; w < kWordsPerNode; ++w) {
            if (w) text += ' ';
            text += "c" + std::to_string(c) + "w" + std::to_string(rng.below(kVocabPerCommunity));
        }
        texts[v] = text;
    }

    std::set<Edge> edges;
    std::vector<Edge> intra;
    for (std::size_t c = 0; c < kCommunities; ++c) {
        const NodeId base = static_cast<NodeId>(c * kCommunitySize);
        for (NodeId a = base; a < base + kCommunitySize; ++a) {
            for (NodeId b = a + 1; b < base + kCommunitySize; ++b) {
                if (rng.unit() < kIntraEdgeProb) {
                    const Edge e = linkrr::make_edge(a, b);
                    edges.insert(e);
                    intra.push_back(e);
                }
            }
        }
    }
    std::size_t added = 0;
    while (added < kInterEdges) {
        const auto u = static_cast<NodeId>(rng.below(kNodes));
        const auto v = static_cast<NodeId>(rng.below(kNodes));
        if (u == v || community_of(u) == community_of(v)) continue;
        if (edges.insert(linkrr::make_edge(u, v)).second) ++added;
    }

    std::vector<std::set<NodeId>> adj(kNodes);
    for (const Edge& e : edges) {
        adj[e.u].insert(e.v);
        adj[e.v].insert(e.u);
    }

    rng.shuffle(intra);
    std::set<Edge> protected_edges;
    std::set<Edge> test_set;
    for (const Edge& e : intra) {
        if (test_set.size() == kTestEdges) break;
        if (protected_edges.count(e)) continue;
        std::vector<NodeId> common;
        const auto& small = adj[e.u].size() <= adj[e.v].size() ? adj[e.u] : adj[e.v];
        const auto& large = adj[e.u].size() <= adj[e.v].size() ? adj[e.v] : adj[e.u];
        for (NodeId w : small) {
            if (large.count(w)) common.push_back(w);
        }
        if (common.size() < 2) continue;
        for (std::size_t i = 0; i < 2; ++i) {
            protected_edges.insert(linkrr::make_edge(e.u, common[i]));
            protected_edges.insert(linkrr::make_edge(e.v, common[i]));
        }
        test_set.insert(e);
        adj[e.u].erase(e.v);
        adj[e.v].erase(e.u);
    }
    if (test_set.size() < kTestEdges) {
        std::fprintf(stderr, "only planted %zu test edges\n", test_set.size());
        return 1;
    }

    // Verify the planted support survived.
    for (const Edge& e : test_set) {
        std::size_t cn = 0;
        for (NodeId w : adj[e.u]) cn += adj[e.v].count(w);
        if (cn < 2) {
            std::fprintf(stderr, "test edge lost its support\n");
            return 1;
        }
    }

    linkrr::EdgeSplit split;
    split.seed = seed;
    for (const Edge& e : edges) {
        (test_set.count(e) ? split.test : split.train).push_back(e);
    }

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/planted_nodes.jsonl");
        for (NodeId v = 0; v < kNodes; ++v) {
            out << nlohmann::json{{"id", ids[v]}, {"text", texts[v]}}.dump() << "\n";
        }
    }
    {
        std::ofstream out(out_dir + "/planted_edges.jsonl");
        for (const Edge& e : edges) {
            out << nlohmann::json{{"src", ids[e.u]}, {"dst", ids[e.v]}}.dump() << "\n";
        }
    }
    linkrr::save_split(split, out_dir + "/planted_split.json");

    std::printf("nodes=%zu edges=%zu train=%zu test=%zu\n", kNodes, edges.size(), split.train.size(),
                split.test.size());
    return 0;
}
