#include "linkrr/ppr.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <mutex>

#include "linkrr/error.hpp"

namespace linkrr {

double PprScores::sum() const {
    double s = 0.0;
    for (const auto& [v, p] : scores) s += p;
    return s;
}

PprScores personalized_pagerank(const TextAttributedGraph& graph, NodeId source, const PprConfig& config) {
    config.validate();
    if (!graph.contains(source)) throw Error("ppr", "source node out of range");

    PprScores result;
    if (graph.degree(source) == 0) {
        result.scores[source] = 1.0;
        return result;
    }

    std::unordered_map<NodeId, double> p;
    std::unordered_map<NodeId, double> r;
    r[source] = 1.0;

    std::deque<NodeId> queue{source};
    std::unordered_map<NodeId, bool> queued;
    queued[source] = true;

    const double alpha = config.alpha;
    const double eps = config.epsilon;

    while (!queue.empty()) {
        const NodeId u = queue.front();
        queue.pop_front();
        queued[u] = false;

        const double ru = r[u];
        const auto deg = static_cast<double>(graph.degree(u));
        if (deg == 0.0 || ru <= eps * deg) continue;

        p[u] += alpha * ru;
        r[u] = 0.0;
        const double spread = (1.0 - alpha) * ru / deg;
        for (NodeId v : graph.neighbors(u)) {
            r[v] += spread;
            const auto dv = static_cast<double>(graph.degree(v));
            if (r[v] > eps * dv && !queued[v]) {
                queued[v] = true;
                queue.push_back(v);
            }
        }
    }

    result.scores = std::move(p);
    return result;
}

const PprScores& PprCache::get(NodeId source) {
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(source);
        if (it != cache_.end()) return it->second;
    }
    PprScores fresh = personalized_pagerank(graph_, source, config_);
    std::unique_lock lock(mutex_);
    return cache_.try_emplace(source, std::move(fresh)).first->second;
}

std::size_t PprCache::size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

std::vector<NodeId> select_context_nodes(const TextAttributedGraph& graph,
                                         NodeId a,
                                         NodeId b,
                                         const PprScores& ppr_a,
                                         const PprScores& ppr_b,
                                         const PprConfig& config) {
    config.validate();
    if (!graph.contains(a) || !graph.contains(b)) throw Error("ppr", "pair endpoint out of range");

    std::unordered_map<NodeId, bool> near;
    for (NodeId u : graph.neighbors(a)) near[u] = true;
    for (NodeId u : graph.neighbors(b)) near[u] = true;

    std::vector<NodeId> out;
    for (const auto& [u, pa] : ppr_a.scores) {
        if (u == a || u == b) continue;
        const double pb = ppr_b.at(u);
        if (pb == 0.0) continue;
        const double eta = near.count(u) ? config.eta_near : config.eta_far;
        if (pa >= eta && pb >= eta) out.push_back(u);
    }
    std::sort(out.begin(), out.end());
    return out;
}

RpeVector relative_positional_encoding(double p, double q, const RpeConfig& config) {
    config.validate();
    if (p < 0.0 || q < 0.0 || !std::isfinite(p) || !std::isfinite(q)) {
        throw Error("ppr", "RPE inputs must be finite and non-negative");
    }
    return {p, q, p + q, p * q, std::log1p(p), std::log1p(q)};
}

}  // namespace linkrr
